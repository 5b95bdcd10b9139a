#ifndef HJBFLOW_CHECKPOINT_HPP
#define HJBFLOW_CHECKPOINT_HPP

#include <string>

#include "hjbflow/value_net.hpp"

namespace hjbflow {

// Plain-text checkpoint holding the architecture, all parameters (row-major,
// 17 significant digits), input/output scalings, the time_dependent flag and
// training provenance. A loaded checkpoint reproduces forward outputs
// bit-identically on the writing platform.
void save_checkpoint(const MlpValueModel& model, const std::string& path);
MlpValueModel load_checkpoint(const std::string& path);

}  // namespace hjbflow

#endif  // HJBFLOW_CHECKPOINT_HPP
