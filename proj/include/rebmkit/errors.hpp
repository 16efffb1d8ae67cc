// errors.hpp -- exception types with stable exit codes for the CLI.
#pragma once

#include <stdexcept>
#include <string>

namespace rebmkit {

enum class ErrorCode : int {
  usage = 2,
  config = 3,
  missing_artifact = 4,
  digest_mismatch = 5,
  version_mismatch = 6,
  corrupt_artifact = 7,
  dimension = 8,
  contract = 9,
  precondition = 10,
  training = 11,
  metric = 12,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }
  int exit_code() const { return static_cast<int>(code_); }

 private:
  ErrorCode code_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorCode::config, w) {}
};
struct MissingArtifactError : Error {
  explicit MissingArtifactError(const std::string& w) : Error(ErrorCode::missing_artifact, w) {}
};
struct DigestMismatchError : Error {
  explicit DigestMismatchError(const std::string& w) : Error(ErrorCode::digest_mismatch, w) {}
};
struct VersionMismatchError : Error {
  explicit VersionMismatchError(const std::string& w) : Error(ErrorCode::version_mismatch, w) {}
};
struct CorruptArtifactError : Error {
  explicit CorruptArtifactError(const std::string& w) : Error(ErrorCode::corrupt_artifact, w) {}
};
struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error(ErrorCode::dimension, w) {}
};
struct ContractError : Error {
  explicit ContractError(const std::string& w) : Error(ErrorCode::contract, w) {}
};
struct PreconditionError : Error {
  explicit PreconditionError(const std::string& w) : Error(ErrorCode::precondition, w) {}
};
struct TrainingError : Error {
  explicit TrainingError(const std::string& w) : Error(ErrorCode::training, w) {}
};
struct MetricError : Error {
  explicit MetricError(const std::string& w) : Error(ErrorCode::metric, w) {}
};

}  // namespace rebmkit
