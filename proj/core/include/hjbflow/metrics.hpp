#ifndef HJBFLOW_METRICS_HPP
#define HJBFLOW_METRICS_HPP

#include "hjbflow/dataset.hpp"
#include "hjbflow/value_net.hpp"

namespace hjbflow {

// Relative mean absolute error of value prediction over a validation set,
// sum |V_i - V_NN(t_i, x_i)| / sum |V_i|, in unscaled space.
double rmae(const MlpValueModel& model, const Dataset& validation);

// Relative mean L2 error of gradient prediction,
// sum |lambda_i - V_NN_x(t_i, x_i)|_2 / sum |lambda_i|_2.
double rml2(const MlpValueModel& model, const Dataset& validation);

}  // namespace hjbflow

#endif  // HJBFLOW_METRICS_HPP
