#ifndef HJBFLOW_VALUE_NET_HPP
#define HJBFLOW_VALUE_NET_HPP

#include <atomic>
#include <cstdint>
#include <vector>

#include "hjbflow/dataset.hpp"

namespace hjbflow {

// Architecture and input span of a value model. The input is [t; x] scaled
// per dimension to [-1, 1] (x only when time_dependent is false).
struct ModelSpec {
  std::vector<int> hidden = {64, 64, 64};
  bool time_dependent = false;
  int state_dim = 0;
  double final_time = 0.0;
  Box state_box;

  int input_dim() const { return state_dim + (time_dependent ? 1 : 0); }
};

struct TrainingProvenance {
  std::uint64_t seed = 0;
  std::vector<double> mu_schedule;
  std::vector<std::int64_t> dataset_sizes;
};

// Feedforward tanh network modeling the value function, with affine input
// scaling and symmetric output scalings for V and the costate channels.
// Forward evaluation and the exact input gradient are closed-form reverse
// mode; no finite differences anywhere.
class MlpValueModel {
 public:
  MlpValueModel() = default;
  explicit MlpValueModel(const ModelSpec& spec);  // zero parameters

  MlpValueModel(const MlpValueModel& other);
  MlpValueModel& operator=(const MlpValueModel& other);

  const ModelSpec& spec() const { return spec_; }
  int input_dim() const { return spec_.input_dim(); }
  int layer_count() const { return static_cast<int>(weights_.size()); }
  const std::vector<MatrixXd>& weights() const { return weights_; }
  const std::vector<VectorXd>& biases() const { return biases_; }
  std::vector<MatrixXd>& mutable_weights() { return weights_; }
  std::vector<VectorXd>& mutable_biases() { return biases_; }

  const OutputScaling& output_scaling() const { return output_scaling_; }
  void set_output_scaling(const OutputScaling& s) { output_scaling_ = s; }
  TrainingProvenance& provenance() { return provenance_; }
  const TrainingProvenance& provenance() const { return provenance_; }

  Eigen::Index parameter_count() const;
  VectorXd pack_parameters() const;
  void unpack_parameters(const Eigen::Ref<const VectorXd>& theta);
  bool parameters_finite() const { return params_finite_; }

  // Scaled input column [t~; x~] (or [x~]).
  VectorXd scale_input(double t, const Eigen::Ref<const VectorXd>& x) const;
  // Inverse of the input scaling, for round-trip checks.
  VectorXd unscale_input(const Eigen::Ref<const VectorXd>& input) const;

  // Unscaled V(t, x). For a t0-only model the time argument is ignored
  // (moving-horizon evaluation).
  double value(double t, const Eigen::Ref<const VectorXd>& x) const;
  // Exact gradient of value() with respect to x (not t).
  VectorXd value_gradient(double t, const Eigen::Ref<const VectorXd>& x) const;
  void value_and_gradient(double t, const Eigen::Ref<const VectorXd>& x,
                          double& value_out, VectorXd& gradient_out) const;

  // Batched evaluation over records; columns are samples.
  void predict(const std::vector<double>& times, const MatrixXd& states,
               VectorXd& values_out, MatrixXd& gradients_out) const;
  // |V_x(0, x)| per column, used for candidate ranking.
  VectorXd gradient_norms_at_t0(const MatrixXd& states) const;

  long extrapolation_events() const { return extrapolation_events_.load(); }

 private:
  friend class LossEvaluator;
  void require_valid() const;
  VectorXd raw_forward_gradient(const VectorXd& input, double& raw_value) const;

  ModelSpec spec_;
  std::vector<MatrixXd> weights_;
  std::vector<VectorXd> biases_;
  OutputScaling output_scaling_;
  TrainingProvenance provenance_;
  bool params_finite_ = true;
  mutable std::atomic<long> extrapolation_events_{0};
};

// Deterministic fan-based uniform initialization (biases zero).
MlpValueModel init_params(std::uint64_t seed, const ModelSpec& spec);

struct LossReport {
  double total = 0.0;
  double loss_v = 0.0;
  double loss_lambda = 0.0;
  double mu = 0.0;
  VectorXd gradient;  // d total / d theta, packed like pack_parameters()
};

// Scaled copies of a dataset's records, laid out for batched evaluation.
struct TrainingBatch {
  MatrixXd inputs;         // d_in x N, scaled
  VectorXd value_targets;  // N, scaled by v_scale
  MatrixXd lambda_targets; // n x N, scaled by lambda_scale

  Eigen::Index size() const { return value_targets.size(); }
  TrainingBatch subset(const std::vector<int>& indices) const;
};

TrainingBatch prepare_training_batch(const MlpValueModel& model,
                                     const Dataset& data);

// loss = loss_V + mu * loss_lambda with
//   loss_V      = 1/N sum (V~ - V_NN)^2          (scaled V space)
//   loss_lambda = 1/N sum |lambda~ - V_NN_x~|^2  (scaled lambda space)
// and the exact parameter gradient through both terms, including the
// second-order propagation through the input-gradient graph. Sample chunks
// are reduced pairwise in a fixed order, so results are independent of the
// worker count.
LossReport physics_informed_loss(const MlpValueModel& model,
                                 const TrainingBatch& batch, double mu,
                                 int workers = 1);
LossReport physics_informed_loss(const MlpValueModel& model, const Dataset& data,
                                 double mu, int workers = 1);

// Per-sample gradients d loss_i / d theta (no 1/N factor), one column per
// requested record; feeds the adaptive trainer's variance estimate.
MatrixXd per_sample_loss_gradients(const MlpValueModel& model,
                                   const TrainingBatch& batch, double mu,
                                   const std::vector<int>& indices);

}  // namespace hjbflow

#endif  // HJBFLOW_VALUE_NET_HPP
