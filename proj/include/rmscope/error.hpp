#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rmscope {

enum class ErrorKind {
  kParseError,
  kIoError,
  kDuplicateKey,
  kNonFiniteScore,
  kInconsistentHeader,
  kEmptyVocabulary,
  kAmbiguousText,
  kTokenOutOfRange,
  kScorerFailure,
  kGradientUnavailable,
  kDegenerateDistribution,
  kKTooLarge,
  kRankDeficient,
  kInsufficientData,
  kNotSymmetric,
  kZeroVariance,
  kTooFewModels,
  kEmptyJoin,
  kKeyMismatch,
  kSelfPairing,
  kInsufficientOverlap,
  kExhausted,
  kInvalidArgument,
};

std::string_view to_string(ErrorKind kind);

// All library failures surface as this exception. `detail` carries the
// numeric context a caller may need (line number, column index, token id,
// mismatch count), when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::int64_t> detail = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::int64_t> detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::optional<std::int64_t> detail_;
};

}  // namespace rmscope
