#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sphereflow {

enum class ErrorKind {
  ZeroVector,
  NonPositiveRadius,
  RadiusMismatch,
  DimensionMismatch,
  AntipodalPoints,
  OffSphere,
  NonFiniteCost,
  TooLarge,
  DegeneratePlan,
  LengthMismatch,
  OddDim,
  ShapeMismatch,
  NonFiniteActivation,
  NonFiniteState,
  EmptyBatch,
  InvalidArgument,
  IoError,
  BadMagic,
  TruncatedFile,
  BadCheckpoint,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// CLI exit-code contract: 1 usage/config, 2 data, 3 numeric.
int exit_code_for(ErrorKind kind);

}  // namespace sphereflow
