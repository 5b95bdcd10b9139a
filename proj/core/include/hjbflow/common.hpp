#ifndef HJBFLOW_COMMON_HPP
#define HJBFLOW_COMMON_HPP

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace hjbflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

// Thrown when a caller breaks a documented precondition (wrong dimensions,
// empty batch, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Thrown when an object is constructed with invalid parameters (singular
// weight matrix, N_c < 2, ...).
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a numerical evaluation produces a non-finite result or leaves
// its valid region. Carries the offending component index when known.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, int component = -1)
      : std::runtime_error(what), component_(component) {}
  int component() const { return component_; }

 private:
  int component_;
};

#define HJBFLOW_REQUIRE(cond, msg)            \
  do {                                        \
    if (!(cond)) {                            \
      throw ::hjbflow::ContractViolation(msg); \
    }                                         \
  } while (0)

// Axis-aligned box of initial conditions.
struct Box {
  VectorXd lo;
  VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Eigen::Ref<const VectorXd>& x, double slack = 0.0) const {
    return (x.array() >= lo.array() - slack).all() &&
           (x.array() <= hi.array() + slack).all();
  }
  // Half-diagonal length, used as a blow-up scale for rollouts.
  double radius() const { return 0.5 * (hi - lo).norm(); }
};

}  // namespace hjbflow

#endif  // HJBFLOW_COMMON_HPP
