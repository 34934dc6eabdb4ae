#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace entnet {

enum class ErrorCode {
  kNearZeroNorm,
  kInvalidRate,
  kDoubleBackward,
  kNotScalar,
  kDimensionMismatch,
  kEmptyCorpus,
  kUnknownToken,
  kTooLong,
  kUntiedKeys,
  kOffGrid,
  kMalformedLine,
  kNoBlank,
  kBadCandidateCount,
  kDivergedLoss,
  kEmptyRuns,
  kBadCheckpoint,
  kBadConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace entnet
