#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace refrain {

enum class ErrorCode {
  kZeroVector,
  kDimensionMismatch,
  kEmptyInput,
  kInvalidArgument,
  kInvalidConfig,
  kInvalidTemperature,
  kEmptyQueue,
  kNumericalFailure,
  kTrainingDiverged,
  kEmptyTitle,
  kInsufficientGallery,
  kScorerError,
  kRankOutOfRange,
  kStoreIncomplete,
  kParseError,
  kDuplicateId,
  kValidationError,
  kProviderUnavailable,
  kProtocolError,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// All engine failures are reported through this exception type; the code is
// the machine-readable part, the message carries context (ids, line numbers).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace refrain
