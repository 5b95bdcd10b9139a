#include "hjbflow/metrics.hpp"

#include <cmath>

namespace hjbflow {

double rmae(const MlpValueModel& model, const Dataset& validation) {
  HJBFLOW_REQUIRE(!validation.empty(), "empty validation set");
  const auto states = validation.states();
  double err = 0.0;
  double denom = 0.0;
  for (Eigen::Index i = 0; i < validation.size(); ++i) {
    const double pred = model.value(validation.times()[i], states.col(i));
    err += std::abs(validation.values()[i] - pred);
    denom += std::abs(validation.values()[i]);
  }
  HJBFLOW_REQUIRE(denom > 0.0, "all validation values are zero");
  return err / denom;
}

double rml2(const MlpValueModel& model, const Dataset& validation) {
  HJBFLOW_REQUIRE(!validation.empty(), "empty validation set");
  const auto states = validation.states();
  const auto costates = validation.costates();
  double err = 0.0;
  double denom = 0.0;
  for (Eigen::Index i = 0; i < validation.size(); ++i) {
    const VectorXd pred =
        model.value_gradient(validation.times()[i], states.col(i));
    err += (costates.col(i) - pred).norm();
    denom += costates.col(i).norm();
  }
  HJBFLOW_REQUIRE(denom > 0.0, "all validation gradients are zero");
  return err / denom;
}

}  // namespace hjbflow
