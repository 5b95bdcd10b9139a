#include "hjbflow/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hjbflow {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void parse_fail(const std::string& path, int line,
                             const std::string& what) {
  throw NumericError("failed to parse " + path + ":" + std::to_string(line) +
                     ": " + what);
}

}  // namespace

OutputScaling Dataset::compute_output_scaling() const {
  HJBFLOW_REQUIRE(!empty(), "cannot compute scaling of an empty dataset");
  OutputScaling s;
  double vmax = 0.0;
  for (double v : values_) vmax = std::max(vmax, std::abs(v));
  double lmax = 0.0;
  for (double l : costate_data_) lmax = std::max(lmax, std::abs(l));
  s.v_scale = vmax > 0.0 ? vmax : 1.0;
  s.lambda_scale = lmax > 0.0 ? lmax : 1.0;
  s.valid = true;
  return s;
}

void Dataset::append_trajectory(const TrajectoryData& traj, std::int64_t traj_id) {
  HJBFLOW_REQUIRE(traj.states.rows() == state_dim_,
                  "trajectory dimension does not match dataset");
  const int count =
      mode_ == DatasetMode::kInitialTimeOnly ? 1 : traj.sample_count();
  for (int k = 0; k < count; ++k) {
    if (!std::isfinite(traj.values[k]) || !traj.states.col(k).allFinite() ||
        !traj.costates.col(k).allFinite()) {
      throw NumericError("non-finite record in trajectory");
    }
    times_.push_back(traj.times[k]);
    values_.push_back(traj.values[k]);
    for (int i = 0; i < state_dim_; ++i) {
      state_data_.push_back(traj.states(i, k));
      costate_data_.push_back(traj.costates(i, k));
    }
    traj_ids_.push_back(traj_id);
  }
}

void Dataset::truncate(std::int64_t max_records) {
  if (size() <= max_records) return;
  const auto n = static_cast<std::size_t>(max_records);
  times_.resize(n);
  values_.resize(n);
  traj_ids_.resize(n);
  state_data_.resize(n * static_cast<std::size_t>(state_dim_));
  costate_data_.resize(n * static_cast<std::size_t>(state_dim_));
}

std::vector<std::int64_t> Dataset::distinct_trajectory_ids() const {
  std::set<std::int64_t> ids(traj_ids_.begin(), traj_ids_.end());
  return {ids.begin(), ids.end()};
}

bool Dataset::shares_trajectory_ids(const Dataset& other) const {
  const auto a = distinct_trajectory_ids();
  const auto b = other.distinct_trajectory_ids();
  std::vector<std::int64_t> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(common));
  return !common.empty();
}

std::int64_t Dataset::max_trajectory_id() const {
  std::int64_t best = -1;
  for (auto id : traj_ids_) best = std::max(best, id);
  return best;
}

void Dataset::save(const std::string& path) const {
  std::ofstream csv(path, std::ios::binary);  // binary: LF line endings
  if (!csv) throw ConfigurationError("cannot open for writing: " + path);

  csv << "t";
  for (int i = 1; i <= state_dim_; ++i) csv << ",x" << i;
  csv << ",V";
  for (int i = 1; i <= state_dim_; ++i) csv << ",lam" << i;
  csv << ",traj\n";

  for (std::int64_t r = 0; r < size(); ++r) {
    csv << format_double(times_[r]);
    for (int i = 0; i < state_dim_; ++i)
      csv << ',' << format_double(state_data_[r * state_dim_ + i]);
    csv << ',' << format_double(values_[r]);
    for (int i = 0; i < state_dim_; ++i)
      csv << ',' << format_double(costate_data_[r * state_dim_ + i]);
    csv << ',' << traj_ids_[r] << '\n';
  }
  if (!csv) throw ConfigurationError("write failed: " + path);

  std::ofstream meta(path + ".meta", std::ios::binary);
  if (!meta) throw ConfigurationError("cannot open for writing: " + path + ".meta");
  meta << "format dataset-meta v1\n";
  meta << "problem " << problem_ << "\n";
  meta << "state_dim " << state_dim_ << "\n";
  meta << "mode " << to_string(mode_) << "\n";
  meta << "records " << size() << "\n";
  meta << "generation_seed " << generation_seed_ << "\n";
  meta << "scaling_valid " << (output_scaling_.valid ? 1 : 0) << "\n";
  if (output_scaling_.valid) {
    meta << "v_scale " << format_double(output_scaling_.v_scale) << "\n";
    meta << "lambda_scale " << format_double(output_scaling_.lambda_scale) << "\n";
  }
}

Dataset Dataset::load(const std::string& path) {
  std::ifstream meta_in(path + ".meta", std::ios::binary);
  if (!meta_in) throw ConfigurationError("missing dataset metadata: " + path + ".meta");

  Dataset ds;
  std::int64_t expected_records = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(meta_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "format") {
      continue;
    } else if (key == "problem") {
      ss >> ds.problem_;
    } else if (key == "state_dim") {
      ss >> ds.state_dim_;
    } else if (key == "mode") {
      std::string mode;
      ss >> mode;
      if (mode == "t0-only") {
        ds.mode_ = DatasetMode::kInitialTimeOnly;
      } else if (mode == "time-dependent") {
        ds.mode_ = DatasetMode::kTimeDependent;
      } else {
        parse_fail(path + ".meta", line_no, "unknown mode '" + mode + "'");
      }
    } else if (key == "records") {
      ss >> expected_records;
    } else if (key == "generation_seed") {
      ss >> ds.generation_seed_;
    } else if (key == "scaling_valid") {
      int v = 0;
      ss >> v;
      ds.output_scaling_.valid = v != 0;
    } else if (key == "v_scale") {
      ss >> ds.output_scaling_.v_scale;
    } else if (key == "lambda_scale") {
      ss >> ds.output_scaling_.lambda_scale;
    }
  }
  if (ds.state_dim_ <= 0) parse_fail(path + ".meta", 0, "missing state_dim");

  std::ifstream csv(path, std::ios::binary);
  if (!csv) throw ConfigurationError("cannot open dataset: " + path);

  const int n = ds.state_dim_;
  const int expected_cols = 2 * n + 3;
  line_no = 0;
  if (!std::getline(csv, line)) parse_fail(path, 1, "empty file");
  ++line_no;
  {
    int cols = 1;
    for (char c : line) cols += (c == ',');
    if (cols != expected_cols) {
      parse_fail(path, line_no,
                 "header has " + std::to_string(cols) + " columns, expected " +
                     std::to_string(expected_cols));
    }
  }

  std::vector<double> fields;
  fields.reserve(expected_cols);
  while (std::getline(csv, line)) {
    ++line_no;
    if (line.empty()) continue;
    fields.clear();
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(p, comma, v);
      if (ec != std::errc{} || ptr != comma) {
        parse_fail(path, line_no, "bad numeric field");
      }
      fields.push_back(v);
      if (comma == end) break;
      p = comma + 1;
    }
    if (static_cast<int>(fields.size()) != expected_cols) {
      parse_fail(path, line_no,
                 "row has " + std::to_string(fields.size()) +
                     " columns, expected " + std::to_string(expected_cols));
    }
    ds.times_.push_back(fields[0]);
    for (int i = 0; i < n; ++i) ds.state_data_.push_back(fields[1 + i]);
    ds.values_.push_back(fields[1 + n]);
    for (int i = 0; i < n; ++i) ds.costate_data_.push_back(fields[2 + n + i]);
    ds.traj_ids_.push_back(static_cast<std::int64_t>(fields[2 * n + 2]));
  }
  if (expected_records >= 0 && ds.size() != expected_records) {
    parse_fail(path, line_no, "record count does not match metadata");
  }
  return ds;
}

Dataset dataset_from_trajectories(const std::vector<TrajectoryData>& trajs,
                                  DatasetMode mode, const std::string& problem,
                                  int state_dim, std::int64_t first_id) {
  Dataset ds(problem, state_dim, mode);
  std::int64_t id = first_id;
  for (const auto& traj : trajs) {
    HJBFLOW_REQUIRE(traj.states.rows() == state_dim,
                    "mixed problems in dataset_from_trajectories");
    ds.append_trajectory(traj, id++);
  }
  return ds;
}

}  // namespace hjbflow
