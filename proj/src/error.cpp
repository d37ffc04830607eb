#include "rmscope/error.hpp"

namespace rmscope {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kDuplicateKey: return "DuplicateKey";
    case ErrorKind::kNonFiniteScore: return "NonFiniteScore";
    case ErrorKind::kInconsistentHeader: return "InconsistentHeader";
    case ErrorKind::kEmptyVocabulary: return "EmptyVocabulary";
    case ErrorKind::kAmbiguousText: return "AmbiguousText";
    case ErrorKind::kTokenOutOfRange: return "TokenOutOfRange";
    case ErrorKind::kScorerFailure: return "ScorerFailure";
    case ErrorKind::kGradientUnavailable: return "GradientUnavailable";
    case ErrorKind::kDegenerateDistribution: return "DegenerateDistribution";
    case ErrorKind::kKTooLarge: return "KTooLarge";
    case ErrorKind::kRankDeficient: return "RankDeficient";
    case ErrorKind::kInsufficientData: return "InsufficientData";
    case ErrorKind::kNotSymmetric: return "NotSymmetric";
    case ErrorKind::kZeroVariance: return "ZeroVariance";
    case ErrorKind::kTooFewModels: return "TooFewModels";
    case ErrorKind::kEmptyJoin: return "EmptyJoin";
    case ErrorKind::kKeyMismatch: return "KeyMismatch";
    case ErrorKind::kSelfPairing: return "SelfPairing";
    case ErrorKind::kInsufficientOverlap: return "InsufficientOverlap";
    case ErrorKind::kExhausted: return "Exhausted";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message,
             std::optional<std::int64_t> detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      detail_(detail) {}

}  // namespace rmscope
