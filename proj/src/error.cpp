#include "sphereflow/error.hpp"

namespace sphereflow {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorKind::RadiusMismatch: return "RadiusMismatch";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::AntipodalPoints: return "AntipodalPoints";
    case ErrorKind::OffSphere: return "OffSphere";
    case ErrorKind::NonFiniteCost: return "NonFiniteCost";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::DegeneratePlan: return "DegeneratePlan";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::OddDim: return "OddDim";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::BadCheckpoint: return "BadCheckpoint";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidArgument:
      return 1;
    case ErrorKind::IoError:
    case ErrorKind::BadMagic:
    case ErrorKind::TruncatedFile:
    case ErrorKind::BadCheckpoint:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::LengthMismatch:
    case ErrorKind::EmptyBatch:
    case ErrorKind::ShapeMismatch:
      return 2;
    default:
      return 3;
  }
}

}  // namespace sphereflow
