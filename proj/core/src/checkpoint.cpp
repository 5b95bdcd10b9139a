#include "hjbflow/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace hjbflow {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigurationError("bad checkpoint " + path + ": " + what);
}

void write_vector(std::ofstream& out, const Eigen::Ref<const VectorXd>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out << ' ';
    out << format_double(v[i]);
  }
  out << '\n';
}

}  // namespace

void save_checkpoint(const MlpValueModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot open for writing: " + path);

  const auto& spec = model.spec();
  out << "hjbflow-checkpoint v1\n";
  out << "time_dependent " << (spec.time_dependent ? 1 : 0) << "\n";
  out << "state_dim " << spec.state_dim << "\n";
  out << "final_time " << format_double(spec.final_time) << "\n";
  out << "dims";
  out << ' ' << model.input_dim();
  for (int h : spec.hidden) out << ' ' << h;
  out << " 1\n";
  out << "box_lo ";
  write_vector(out, spec.state_box.lo);
  out << "box_hi ";
  write_vector(out, spec.state_box.hi);
  out << "v_scale " << format_double(model.output_scaling().v_scale) << "\n";
  out << "lambda_scale " << format_double(model.output_scaling().lambda_scale)
      << "\n";
  out << "scaling_valid " << (model.output_scaling().valid ? 1 : 0) << "\n";
  out << "seed " << model.provenance().seed << "\n";
  out << "mu_schedule " << model.provenance().mu_schedule.size();
  for (double mu : model.provenance().mu_schedule) out << ' ' << format_double(mu);
  out << "\n";
  out << "dataset_sizes " << model.provenance().dataset_sizes.size();
  for (auto s : model.provenance().dataset_sizes) out << ' ' << s;
  out << "\n";

  for (int l = 0; l < model.layer_count(); ++l) {
    const MatrixXd& w = model.weights()[l];
    out << "W" << (l + 1) << ' ' << w.rows() << ' ' << w.cols() << "\n";
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      write_vector(out, w.row(r).transpose());
    }
    out << "b" << (l + 1) << ' ' << model.biases()[l].size() << "\n";
    write_vector(out, model.biases()[l]);
  }
  if (!out) throw ConfigurationError("write failed: " + path);
}

MlpValueModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot open checkpoint: " + path);

  std::string line;
  if (!std::getline(in, line) || line != "hjbflow-checkpoint v1") {
    fail(path, "missing format header");
  }

  ModelSpec spec;
  OutputScaling scaling;
  TrainingProvenance provenance;
  std::vector<int> dims;

  auto next_key = [&](const std::string& expected) -> std::istringstream {
    if (!std::getline(in, line)) fail(path, "unexpected end of file");
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key != expected) fail(path, "expected key '" + expected + "', got '" + key + "'");
    return ss;
  };

  {
    auto ss = next_key("time_dependent");
    int flag = 0;
    ss >> flag;
    spec.time_dependent = flag != 0;
  }
  next_key("state_dim") >> spec.state_dim;
  next_key("final_time") >> spec.final_time;
  {
    auto ss = next_key("dims");
    int d;
    while (ss >> d) dims.push_back(d);
    if (dims.size() < 2 || dims.back() != 1) fail(path, "bad dims line");
    spec.hidden.assign(dims.begin() + 1, dims.end() - 1);
  }
  {
    auto ss = next_key("box_lo");
    spec.state_box.lo.resize(spec.state_dim);
    for (int i = 0; i < spec.state_dim; ++i) ss >> spec.state_box.lo[i];
  }
  {
    auto ss = next_key("box_hi");
    spec.state_box.hi.resize(spec.state_dim);
    for (int i = 0; i < spec.state_dim; ++i) ss >> spec.state_box.hi[i];
  }
  next_key("v_scale") >> scaling.v_scale;
  next_key("lambda_scale") >> scaling.lambda_scale;
  {
    auto ss = next_key("scaling_valid");
    int flag = 0;
    ss >> flag;
    scaling.valid = flag != 0;
  }
  next_key("seed") >> provenance.seed;
  {
    auto ss = next_key("mu_schedule");
    std::size_t count = 0;
    ss >> count;
    provenance.mu_schedule.resize(count);
    for (auto& mu : provenance.mu_schedule) ss >> mu;
  }
  {
    auto ss = next_key("dataset_sizes");
    std::size_t count = 0;
    ss >> count;
    provenance.dataset_sizes.resize(count);
    for (auto& s : provenance.dataset_sizes) ss >> s;
  }
  if (spec.input_dim() != dims.front()) fail(path, "dims/state_dim mismatch");

  MlpValueModel model(spec);
  model.set_output_scaling(scaling);
  model.provenance() = provenance;

  for (int l = 0; l < model.layer_count(); ++l) {
    {
      auto ss = next_key("W" + std::to_string(l + 1));
      Eigen::Index rows = 0, cols = 0;
      ss >> rows >> cols;
      MatrixXd& w = model.mutable_weights()[l];
      if (rows != w.rows() || cols != w.cols()) fail(path, "weight shape mismatch");
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) fail(path, "truncated weight block");
        std::istringstream row(line);
        for (Eigen::Index c = 0; c < cols; ++c) {
          if (!(row >> w(r, c))) fail(path, "truncated weight row");
        }
      }
    }
    {
      auto ss = next_key("b" + std::to_string(l + 1));
      Eigen::Index size = 0;
      ss >> size;
      VectorXd& b = model.mutable_biases()[l];
      if (size != b.size()) fail(path, "bias shape mismatch");
      if (!std::getline(in, line)) fail(path, "truncated bias block");
      std::istringstream row(line);
      for (Eigen::Index i = 0; i < size; ++i) {
        if (!(row >> b[i])) fail(path, "truncated bias row");
      }
    }
  }
  // Refresh the finite-parameter flag.
  model.unpack_parameters(model.pack_parameters());
  return model;
}

}  // namespace hjbflow
