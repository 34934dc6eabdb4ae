#include "entnet/error.hpp"

namespace entnet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNearZeroNorm: return "NearZeroNorm";
    case ErrorCode::kInvalidRate: return "InvalidRate";
    case ErrorCode::kDoubleBackward: return "DoubleBackward";
    case ErrorCode::kNotScalar: return "NotScalar";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kUnknownToken: return "UnknownToken";
    case ErrorCode::kTooLong: return "TooLong";
    case ErrorCode::kUntiedKeys: return "UntiedKeys";
    case ErrorCode::kOffGrid: return "OffGrid";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kNoBlank: return "NoBlank";
    case ErrorCode::kBadCandidateCount: return "BadCandidateCount";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kEmptyRuns: return "EmptyRuns";
    case ErrorCode::kBadCheckpoint: return "BadCheckpoint";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace entnet
