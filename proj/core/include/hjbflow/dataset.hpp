#ifndef HJBFLOW_DATASET_HPP
#define HJBFLOW_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hjbflow/trajectory_data.hpp"

namespace hjbflow {

enum class DatasetMode { kInitialTimeOnly, kTimeDependent };

inline const char* to_string(DatasetMode m) {
  return m == DatasetMode::kInitialTimeOnly ? "t0-only" : "time-dependent";
}

// Output scalings shared by a model and the data it was fit to. V is divided
// by a single symmetric bound, and all costate channels share one scalar so
// that lambda = V_x survives scaling up to one global constant.
struct OutputScaling {
  double v_scale = 1.0;
  double lambda_scale = 1.0;
  bool valid = false;
};

// Flattened (t, x, V, lambda) records with provenance. Records belonging to
// one trajectory are stored contiguously and share a trajectory id; train and
// validation sets never share an id.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string problem, int state_dim, DatasetMode mode)
      : problem_(std::move(problem)), state_dim_(state_dim), mode_(mode) {}

  const std::string& problem() const { return problem_; }
  int state_dim() const { return state_dim_; }
  DatasetMode mode() const { return mode_; }
  std::int64_t size() const { return static_cast<std::int64_t>(times_.size()); }
  bool empty() const { return times_.empty(); }

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }
  // n x N column-per-record views over contiguous storage.
  Eigen::Map<const MatrixXd> states() const {
    return {state_data_.data(), state_dim_, size()};
  }
  Eigen::Map<const MatrixXd> costates() const {
    return {costate_data_.data(), state_dim_, size()};
  }
  const std::vector<std::int64_t>& trajectory_ids() const { return traj_ids_; }

  std::uint64_t generation_seed() const { return generation_seed_; }
  void set_generation_seed(std::uint64_t seed) { generation_seed_ = seed; }

  const OutputScaling& output_scaling() const { return output_scaling_; }
  void set_output_scaling(const OutputScaling& s) { output_scaling_ = s; }
  // Computes the symmetric output bounds from this set's own records. Only
  // ever call on a training split.
  OutputScaling compute_output_scaling() const;

  // Appends all records of a trajectory (or only its t = 0 record in
  // t0-only mode) under the given id.
  void append_trajectory(const TrajectoryData& traj, std::int64_t traj_id);
  // Drops records from the end until at most max_records remain; keeps whole
  // leading runs intact.
  void truncate(std::int64_t max_records);

  std::vector<std::int64_t> distinct_trajectory_ids() const;
  bool shares_trajectory_ids(const Dataset& other) const;
  std::int64_t max_trajectory_id() const;

  void save(const std::string& path) const;
  static Dataset load(const std::string& path);

 private:
  friend Dataset dataset_from_trajectories(const std::vector<TrajectoryData>&,
                                           DatasetMode, const std::string&,
                                           int, std::int64_t);
  std::string problem_;
  int state_dim_ = 0;
  DatasetMode mode_ = DatasetMode::kInitialTimeOnly;
  std::uint64_t generation_seed_ = 0;
  OutputScaling output_scaling_;

  std::vector<double> times_;
  std::vector<double> values_;
  std::vector<double> state_data_;    // column-major n x N
  std::vector<double> costate_data_;  // column-major n x N
  std::vector<std::int64_t> traj_ids_;
};

// Builds a dataset from converged trajectories of a single problem.
// t0-only mode keeps one record per trajectory; time-dependent mode keeps all
// mesh samples. Trajectory ids are assigned first_id, first_id + 1, ...
Dataset dataset_from_trajectories(const std::vector<TrajectoryData>& trajs,
                                  DatasetMode mode, const std::string& problem,
                                  int state_dim, std::int64_t first_id = 0);

}  // namespace hjbflow

#endif  // HJBFLOW_DATASET_HPP
