#include "hjbflow/value_net.hpp"

#include <cmath>

#include "hjbflow/parallel.hpp"
#include "hjbflow/rng.hpp"

namespace hjbflow {

namespace {
constexpr double kExtrapolationSlack = 0.1;
constexpr Eigen::Index kChunk = 8192;
}  // namespace

MlpValueModel::MlpValueModel(const ModelSpec& spec) : spec_(spec) {
  HJBFLOW_REQUIRE(spec.state_dim > 0, "model needs a state dimension");
  HJBFLOW_REQUIRE(spec.state_box.dim() == spec.state_dim,
                  "scaling box does not match the state dimension");
  std::vector<int> dims;
  dims.push_back(spec.input_dim());
  for (int h : spec.hidden) dims.push_back(h);
  dims.push_back(1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    weights_.emplace_back(MatrixXd::Zero(dims[l + 1], dims[l]));
    biases_.emplace_back(VectorXd::Zero(dims[l + 1]));
  }
}

MlpValueModel::MlpValueModel(const MlpValueModel& other)
    : spec_(other.spec_),
      weights_(other.weights_),
      biases_(other.biases_),
      output_scaling_(other.output_scaling_),
      provenance_(other.provenance_),
      params_finite_(other.params_finite_),
      extrapolation_events_(other.extrapolation_events_.load()) {}

MlpValueModel& MlpValueModel::operator=(const MlpValueModel& other) {
  if (this == &other) return *this;
  spec_ = other.spec_;
  weights_ = other.weights_;
  biases_ = other.biases_;
  output_scaling_ = other.output_scaling_;
  provenance_ = other.provenance_;
  params_finite_ = other.params_finite_;
  extrapolation_events_.store(other.extrapolation_events_.load());
  return *this;
}

Eigen::Index MlpValueModel::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += weights_[l].size() + biases_[l].size();
  }
  return n;
}

VectorXd MlpValueModel::pack_parameters() const {
  VectorXd theta(parameter_count());
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    theta.segment(k, weights_[l].size()) =
        Eigen::Map<const VectorXd>(weights_[l].data(), weights_[l].size());
    k += weights_[l].size();
    theta.segment(k, biases_[l].size()) = biases_[l];
    k += biases_[l].size();
  }
  return theta;
}

void MlpValueModel::unpack_parameters(const Eigen::Ref<const VectorXd>& theta) {
  HJBFLOW_REQUIRE(theta.size() == parameter_count(), "parameter size mismatch");
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::Map<VectorXd>(weights_[l].data(), weights_[l].size()) =
        theta.segment(k, weights_[l].size());
    k += weights_[l].size();
    biases_[l] = theta.segment(k, biases_[l].size());
    k += biases_[l].size();
  }
  params_finite_ = theta.allFinite();
}

void MlpValueModel::require_valid() const {
  if (!params_finite_) {
    throw NumericError("value model parameters are not finite (corrupt model)");
  }
}

VectorXd MlpValueModel::scale_input(double t,
                                    const Eigen::Ref<const VectorXd>& x) const {
  HJBFLOW_REQUIRE(x.size() == spec_.state_dim, "state dimension mismatch");
  VectorXd input(input_dim());
  int off = 0;
  if (spec_.time_dependent) {
    input[0] = 2.0 * t / spec_.final_time - 1.0;
    off = 1;
  }
  const auto& box = spec_.state_box;
  for (int i = 0; i < spec_.state_dim; ++i) {
    input[off + i] = 2.0 * (x[i] - box.lo[i]) / (box.hi[i] - box.lo[i]) - 1.0;
  }
  if ((input.array().abs() > 1.0 + kExtrapolationSlack).any()) {
    extrapolation_events_.fetch_add(1, std::memory_order_relaxed);
  }
  return input;
}

VectorXd MlpValueModel::unscale_input(
    const Eigen::Ref<const VectorXd>& input) const {
  HJBFLOW_REQUIRE(input.size() == input_dim(), "input dimension mismatch");
  VectorXd out(input.size());
  int off = 0;
  if (spec_.time_dependent) {
    out[0] = 0.5 * (input[0] + 1.0) * spec_.final_time;
    off = 1;
  }
  const auto& box = spec_.state_box;
  for (int i = 0; i < spec_.state_dim; ++i) {
    out[off + i] =
        box.lo[i] + 0.5 * (input[off + i] + 1.0) * (box.hi[i] - box.lo[i]);
  }
  return out;
}

VectorXd MlpValueModel::raw_forward_gradient(const VectorXd& input,
                                             double& raw_value) const {
  const auto layers = weights_.size();
  std::vector<VectorXd> acts(layers);
  VectorXd a = input;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    a = ((weights_[l] * a + biases_[l]).array().tanh()).matrix();
    acts[l] = a;
  }
  raw_value = (weights_[layers - 1] * a + biases_[layers - 1])[0];

  VectorXd bar = weights_[layers - 1].transpose().col(0);
  for (std::size_t l = layers - 1; l-- > 0;) {
    bar.array() *= 1.0 - acts[l].array().square();
    bar = weights_[l].transpose() * bar;
  }
  return bar;  // gradient of the raw output w.r.t. the scaled input
}

double MlpValueModel::value(double t, const Eigen::Ref<const VectorXd>& x) const {
  require_valid();
  VectorXd a = scale_input(t, x);
  const auto layers = weights_.size();
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    a = ((weights_[l] * a + biases_[l]).array().tanh()).matrix();
  }
  const double raw = (weights_[layers - 1] * a + biases_[layers - 1])[0];
  return output_scaling_.v_scale * raw;
}

VectorXd MlpValueModel::value_gradient(double t,
                                       const Eigen::Ref<const VectorXd>& x) const {
  require_valid();
  double raw = 0.0;
  const VectorXd bar = raw_forward_gradient(scale_input(t, x), raw);
  const int off = spec_.time_dependent ? 1 : 0;
  const auto& box = spec_.state_box;
  VectorXd grad(spec_.state_dim);
  for (int i = 0; i < spec_.state_dim; ++i) {
    grad[i] = output_scaling_.v_scale * bar[off + i] * 2.0 /
              (box.hi[i] - box.lo[i]);
  }
  return grad;
}

void MlpValueModel::value_and_gradient(double t,
                                       const Eigen::Ref<const VectorXd>& x,
                                       double& value_out,
                                       VectorXd& gradient_out) const {
  require_valid();
  double raw = 0.0;
  const VectorXd bar = raw_forward_gradient(scale_input(t, x), raw);
  value_out = output_scaling_.v_scale * raw;
  const int off = spec_.time_dependent ? 1 : 0;
  const auto& box = spec_.state_box;
  gradient_out.resize(spec_.state_dim);
  for (int i = 0; i < spec_.state_dim; ++i) {
    gradient_out[i] = output_scaling_.v_scale * bar[off + i] * 2.0 /
                      (box.hi[i] - box.lo[i]);
  }
}

void MlpValueModel::predict(const std::vector<double>& times,
                            const MatrixXd& states, VectorXd& values_out,
                            MatrixXd& gradients_out) const {
  require_valid();
  const auto count = states.cols();
  HJBFLOW_REQUIRE(static_cast<Eigen::Index>(times.size()) == count,
                  "times/states size mismatch");
  values_out.resize(count);
  gradients_out.resize(spec_.state_dim, count);
  VectorXd grad;
  for (Eigen::Index j = 0; j < count; ++j) {
    double v;
    value_and_gradient(times[j], states.col(j), v, grad);
    values_out[j] = v;
    gradients_out.col(j) = grad;
  }
}

VectorXd MlpValueModel::gradient_norms_at_t0(const MatrixXd& states) const {
  require_valid();
  const auto count = states.cols();
  const int n = spec_.state_dim;
  const auto& box = spec_.state_box;
  VectorXd chain(n);
  for (int i = 0; i < n; ++i) {
    chain[i] = output_scaling_.v_scale * 2.0 / (box.hi[i] - box.lo[i]);
  }

  VectorXd norms(count);
  const auto layers = weights_.size();
  for (Eigen::Index begin = 0; begin < count; begin += kChunk) {
    const Eigen::Index len = std::min(kChunk, count - begin);
    MatrixXd inputs(input_dim(), len);
    if (spec_.time_dependent) inputs.row(0).setConstant(-1.0);  // t = 0 scaled
    const int off = spec_.time_dependent ? 1 : 0;
    for (int i = 0; i < n; ++i) {
      inputs.row(off + i) =
          (2.0 * (states.row(i).segment(begin, len).array() - box.lo[i]) /
               (box.hi[i] - box.lo[i]) -
           1.0)
              .matrix();
    }

    std::vector<MatrixXd> acts(layers);
    MatrixXd a = inputs;
    for (std::size_t l = 0; l + 1 < layers; ++l) {
      a = ((weights_[l] * a).colwise() + biases_[l]).array().tanh().matrix();
      acts[l] = a;
    }
    MatrixXd bar = weights_[layers - 1].transpose().replicate(1, len);
    for (std::size_t l = layers - 1; l-- > 0;) {
      bar.array() *= 1.0 - acts[l].array().square();
      bar = weights_[l].transpose() * bar;
    }
    norms.segment(begin, len) =
        (chain.asDiagonal() * bar.middleRows(off, n)).colwise().norm();
  }
  return norms;
}

MlpValueModel init_params(std::uint64_t seed, const ModelSpec& spec) {
  MlpValueModel model(spec);
  Rng rng(seed);
  // Layer by layer, weights drawn row-major; biases stay zero.
  for (auto& w : model.mutable_weights()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = rng.uniform(-bound, bound);
      }
    }
  }
  return model;
}

TrainingBatch TrainingBatch::subset(const std::vector<int>& indices) const {
  TrainingBatch out;
  out.inputs.resize(inputs.rows(), static_cast<Eigen::Index>(indices.size()));
  out.value_targets.resize(static_cast<Eigen::Index>(indices.size()));
  out.lambda_targets.resize(lambda_targets.rows(),
                            static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int i = indices[k];
    out.inputs.col(static_cast<Eigen::Index>(k)) = inputs.col(i);
    out.value_targets[static_cast<Eigen::Index>(k)] = value_targets[i];
    out.lambda_targets.col(static_cast<Eigen::Index>(k)) = lambda_targets.col(i);
  }
  return out;
}

TrainingBatch prepare_training_batch(const MlpValueModel& model,
                                     const Dataset& data) {
  HJBFLOW_REQUIRE(!data.empty(), "empty dataset");
  HJBFLOW_REQUIRE(data.state_dim() == model.spec().state_dim,
                  "dataset/model dimension mismatch");
  HJBFLOW_REQUIRE(model.output_scaling().valid,
                  "model output scaling must be set before batch preparation");
  const bool timed = model.spec().time_dependent;
  HJBFLOW_REQUIRE(
      timed == (data.mode() == DatasetMode::kTimeDependent),
      "dataset mode does not match the model's time_dependent flag");

  const auto count = data.size();
  const int n = data.state_dim();
  const auto& box = model.spec().state_box;

  TrainingBatch batch;
  batch.inputs.resize(model.input_dim(), count);
  batch.value_targets.resize(count);
  batch.lambda_targets.resize(n, count);

  const int off = timed ? 1 : 0;
  const auto states = data.states();
  const auto costates = data.costates();
  for (Eigen::Index j = 0; j < count; ++j) {
    if (timed) {
      batch.inputs(0, j) = 2.0 * data.times()[j] / model.spec().final_time - 1.0;
    }
    for (int i = 0; i < n; ++i) {
      batch.inputs(off + i, j) =
          2.0 * (states(i, j) - box.lo[i]) / (box.hi[i] - box.lo[i]) - 1.0;
    }
    batch.value_targets[j] = data.values()[j] / model.output_scaling().v_scale;
    batch.lambda_targets.col(j) =
        costates.col(j) / model.output_scaling().lambda_scale;
  }
  return batch;
}

// Shared workspace for one chunk of the physics-informed loss: forward pass,
// exact input gradients, a forward (tangent) sweep in the residual direction,
// and the adjoint of the combined graph. The tangent trick turns the
// second-order term c^T d(V_x)/d(theta) into a first-order derivative of a
// directional derivative, so no Hessian is ever formed.
class LossEvaluator {
 public:
  LossEvaluator(const MlpValueModel& model, double mu)
      : model_(model), mu_(mu) {
    const auto& box = model.spec().state_box;
    const int n = model.spec().state_dim;
    alpha_.resize(n);
    for (int i = 0; i < n; ++i) {
      alpha_[i] = model.output_scaling().v_scale * 2.0 /
                  ((box.hi[i] - box.lo[i]) * model.output_scaling().lambda_scale);
    }
    offset_ = model.spec().time_dependent ? 1 : 0;
  }

  struct ChunkResult {
    double sum_sq_v = 0.0;
    double sum_sq_lambda = 0.0;
    std::vector<MatrixXd> weight_grads;
    std::vector<VectorXd> bias_grads;
  };

  // weight_scale multiplies the per-sample adjoint seeds; 2/N for the batch
  // mean, 2 for raw per-sample gradients.
  ChunkResult evaluate(const Eigen::Ref<const MatrixXd>& inputs,
                       const Eigen::Ref<const VectorXd>& v_targets,
                       const Eigen::Ref<const MatrixXd>& lambda_targets,
                       double weight_scale) const {
    const auto& weights = model_.weights_;
    const auto& biases = model_.biases_;
    const auto layers = weights.size();
    const auto b = inputs.cols();
    const int n = model_.spec().state_dim;
    const MatrixXd input_block = inputs;

    // Forward.
    std::vector<MatrixXd> acts(layers);  // acts[l] holds A_{l+1}
    MatrixXd a = input_block;
    for (std::size_t l = 0; l + 1 < layers; ++l) {
      a = ((weights[l] * a).colwise() + biases[l]).array().tanh().matrix();
      acts[l] = a;
    }
    Eigen::RowVectorXd y =
        (weights[layers - 1] * a).row(0).array() + biases[layers - 1][0];

    // Input gradients for every sample.
    MatrixXd bar = weights[layers - 1].transpose().replicate(1, b);
    for (std::size_t l = layers - 1; l-- > 0;) {
      bar.array() *= 1.0 - acts[l].array().square();
      bar = weights[l].transpose() * bar;
    }

    // Residuals in scaled spaces.
    Eigen::RowVectorXd e = y - v_targets.transpose();
    MatrixXd lambda_res =
        (alpha_.asDiagonal() * bar.middleRows(offset_, n)) - lambda_targets;

    ChunkResult result;
    result.sum_sq_v = e.squaredNorm();
    result.sum_sq_lambda = lambda_res.squaredNorm();

    // Tangent sweep in the direction that seeds the gradient-loss adjoint.
    MatrixXd tangent = MatrixXd::Zero(input_block.rows(), b);
    tangent.middleRows(offset_, n) =
        alpha_.asDiagonal() * (mu_ * weight_scale * lambda_res);

    std::vector<MatrixXd> tz(layers);  // pre-activation tangents
    std::vector<MatrixXd> tacts(layers);
    MatrixXd tcur = tangent;
    for (std::size_t l = 0; l + 1 < layers; ++l) {
      tz[l] = weights[l] * tcur;
      tcur = (1.0 - acts[l].array().square()).matrix().cwiseProduct(tz[l]);
      tacts[l] = tcur;
    }

    // Adjoint of the combined (primal + tangent) graph.
    result.weight_grads.resize(layers);
    result.bias_grads.resize(layers);

    MatrixXd zbar = weight_scale * e;       // 1 x b
    MatrixXd tzbar = MatrixXd::Ones(1, b);  // seed of the tangent output
    for (std::size_t l = layers; l-- > 0;) {
      const MatrixXd& a_prev = (l == 0) ? input_block : acts[l - 1];
      const MatrixXd& t_prev = (l == 0) ? tangent : tacts[l - 1];
      result.weight_grads[l] =
          zbar * a_prev.transpose() + tzbar * t_prev.transpose();
      result.bias_grads[l] = zbar.rowwise().sum();
      if (l == 0) break;
      const MatrixXd abar = weights[l].transpose() * zbar;
      const MatrixXd tbar = weights[l].transpose() * tzbar;
      const Eigen::ArrayXXd sig1 = 1.0 - acts[l - 1].array().square();
      zbar = (sig1 * abar.array() +
              (-2.0 * acts[l - 1].array() * sig1) * tz[l - 1].array() *
                  tbar.array())
                 .matrix();
      tzbar = (sig1 * tbar.array()).matrix();
    }
    return result;
  }

  const VectorXd& alpha() const { return alpha_; }
  int offset() const { return offset_; }

 private:
  const MlpValueModel& model_;
  double mu_;
  VectorXd alpha_;
  int offset_;
};

LossReport physics_informed_loss(const MlpValueModel& model,
                                 const TrainingBatch& batch, double mu,
                                 int workers) {
  HJBFLOW_REQUIRE(batch.size() > 0, "empty batch");
  const auto count = batch.size();
  const double inv_n = 1.0 / static_cast<double>(count);
  LossEvaluator evaluator(model, mu);

  const auto chunks = static_cast<int>((count + kChunk - 1) / kChunk);
  std::vector<LossEvaluator::ChunkResult> results(chunks);
  parallel_for_indexed(chunks, workers, [&](int c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunk;
    const Eigen::Index len = std::min(kChunk, count - begin);
    results[c] = evaluator.evaluate(batch.inputs.middleCols(begin, len),
                                    batch.value_targets.segment(begin, len),
                                    batch.lambda_targets.middleCols(begin, len),
                                    2.0 * inv_n);
  });

  LossReport report;
  report.mu = mu;
  const auto layers = model.weights().size();
  std::vector<MatrixXd> wgrad(layers);
  std::vector<VectorXd> bgrad(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    wgrad[l] = MatrixXd::Zero(model.weights()[l].rows(), model.weights()[l].cols());
    bgrad[l] = VectorXd::Zero(model.biases()[l].size());
  }
  for (const auto& r : results) {  // fixed chunk order
    report.loss_v += r.sum_sq_v;
    report.loss_lambda += r.sum_sq_lambda;
    for (std::size_t l = 0; l < layers; ++l) {
      wgrad[l] += r.weight_grads[l];
      bgrad[l] += r.bias_grads[l];
    }
  }
  report.loss_v *= inv_n;
  report.loss_lambda *= inv_n;
  report.total = report.loss_v + mu * report.loss_lambda;

  report.gradient.resize(model.parameter_count());
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    report.gradient.segment(k, wgrad[l].size()) =
        Eigen::Map<const VectorXd>(wgrad[l].data(), wgrad[l].size());
    k += wgrad[l].size();
    report.gradient.segment(k, bgrad[l].size()) = bgrad[l];
    k += bgrad[l].size();
  }
  return report;
}

LossReport physics_informed_loss(const MlpValueModel& model, const Dataset& data,
                                 double mu, int workers) {
  return physics_informed_loss(model, prepare_training_batch(model, data), mu,
                               workers);
}

MatrixXd per_sample_loss_gradients(const MlpValueModel& model,
                                   const TrainingBatch& batch, double mu,
                                   const std::vector<int>& indices) {
  HJBFLOW_REQUIRE(!indices.empty(), "empty index set");
  LossEvaluator evaluator(model, mu);
  MatrixXd grads(model.parameter_count(), static_cast<Eigen::Index>(indices.size()));
  const auto layers = model.weights().size();
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const int i = indices[j];
    const auto r = evaluator.evaluate(batch.inputs.col(i),
                                      batch.value_targets.segment(i, 1),
                                      batch.lambda_targets.col(i), 2.0);
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      grads.col(static_cast<Eigen::Index>(j)).segment(k, r.weight_grads[l].size()) =
          Eigen::Map<const VectorXd>(r.weight_grads[l].data(),
                                     r.weight_grads[l].size());
      k += r.weight_grads[l].size();
      grads.col(static_cast<Eigen::Index>(j)).segment(k, r.bias_grads[l].size()) =
          r.bias_grads[l];
      k += r.bias_grads[l].size();
    }
  }
  return grads;
}

}  // namespace hjbflow
