#include "spectralx/error.hpp"

namespace spectralx {

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "invalid-argument";
    case ErrorKind::kUnsupportedConfiguration:
      return "unsupported-configuration";
    case ErrorKind::kReconstructionContract:
      return "reconstruction-contract";
    case ErrorKind::kGeometryMismatch:
      return "geometry-mismatch";
    case ErrorKind::kFormat:
      return "format";
    case ErrorKind::kDatasetNotFound:
      return "dataset-not-found";
    case ErrorKind::kTrainingDiverged:
      return "training-diverged";
    case ErrorKind::kExternalClassifier:
      return "external-classifier";
    case ErrorKind::kCoverage:
      return "coverage";
    case ErrorKind::kIo:
      return "io";
  }
  return "unknown";
}

}  // namespace spectralx
