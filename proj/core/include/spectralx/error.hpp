#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spectralx {

enum class ErrorKind {
  kInvalidArgument,
  kUnsupportedConfiguration,
  kReconstructionContract,
  kGeometryMismatch,
  kFormat,
  kDatasetNotFound,
  kTrainingDiverged,
  kExternalClassifier,
  kCoverage,
  kIo,
};

// Stable, machine-readable name ("invalid-argument", "dataset-not-found", ...).
std::string_view kind_name(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can emit a
// structured error document.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace spectralx
