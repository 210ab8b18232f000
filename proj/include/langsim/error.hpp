#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace langsim {

enum class ErrorCode {
  kIoFailure,
  kMalformedHeader,
  kDimensionMismatch,
  kNonFiniteValue,
  kRaggedRows,
  kParseFailure,
  kRowSumViolation,
  kProbabilityOutOfRange,
  kDuplicateLanguageCode,
  kInvalidManifest,
  kMissingLanguageFile,
  kInsufficientSamples,
  kNotSymmetric,
  kZeroVector,
  kNumericalFailure,
  kOutOfRange,
  kBandwidthSearchFailure,
  kTooFewPoints,
  kPerplexityOutOfRange,
  kInvalidConfig,
  kMalformedContainer,
  kUnsupportedEncoding,
  kMissingDataChunk,
  kSampleRateMismatch,
  kNonPsdCovariance,
  kOutliersPresent,
  kInvalidSpec,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoFailure: return "io-failure";
    case ErrorCode::kMalformedHeader: return "malformed-header";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kNonFiniteValue: return "non-finite-value";
    case ErrorCode::kRaggedRows: return "ragged-rows";
    case ErrorCode::kParseFailure: return "parse-failure";
    case ErrorCode::kRowSumViolation: return "row-sum-violation";
    case ErrorCode::kProbabilityOutOfRange: return "probability-out-of-range";
    case ErrorCode::kDuplicateLanguageCode: return "duplicate-language-code";
    case ErrorCode::kInvalidManifest: return "invalid-manifest";
    case ErrorCode::kMissingLanguageFile: return "missing-language-file";
    case ErrorCode::kInsufficientSamples: return "insufficient-samples";
    case ErrorCode::kNotSymmetric: return "not-symmetric";
    case ErrorCode::kZeroVector: return "zero-vector";
    case ErrorCode::kNumericalFailure: return "numerical-failure";
    case ErrorCode::kOutOfRange: return "n-out-of-range";
    case ErrorCode::kBandwidthSearchFailure: return "bandwidth-search-failure";
    case ErrorCode::kTooFewPoints: return "too-few-points";
    case ErrorCode::kPerplexityOutOfRange: return "perplexity-out-of-range";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kMalformedContainer: return "malformed-container";
    case ErrorCode::kUnsupportedEncoding: return "unsupported-encoding";
    case ErrorCode::kMissingDataChunk: return "missing-data-chunk";
    case ErrorCode::kSampleRateMismatch: return "sample-rate-mismatch";
    case ErrorCode::kNonPsdCovariance: return "non-psd-covariance";
    case ErrorCode::kOutliersPresent: return "outliers-present";
    case ErrorCode::kInvalidSpec: return "invalid-spec";
  }
  return "unknown";
}

/// Row/column position of an offending cell in a tabular input.
struct Location {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const Location&) const = default;
};

/// Every failure raised by the library. The message is prefixed with the
/// error code name so CLI output stays greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<Location> where = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        where_(where) {}

  ErrorCode code() const noexcept { return code_; }
  const std::optional<Location>& where() const noexcept { return where_; }

 private:
  ErrorCode code_;
  std::optional<Location> where_;
};

}  // namespace langsim
