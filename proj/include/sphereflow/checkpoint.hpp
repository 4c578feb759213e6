#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sphereflow/flow.hpp"
#include "sphereflow/model.hpp"

namespace sphereflow {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to sample from a trained model.
struct Checkpoint {
  FlowVariant variant{FlowMethod::ICFM, false, false, 1.0};
  std::optional<double> final_norm;  // dataset mean norm used for rescaling
  std::uint64_t seed = 0;
  MlpParams params;
  std::optional<MlpParams> ema;
};

/// SFCK v1 layout (little-endian), see docs/file_formats.md.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);

/// Throws IoError when unreadable and BadCheckpoint on any format violation.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sphereflow
