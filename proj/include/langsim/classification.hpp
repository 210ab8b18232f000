#pragma once

// Misclassification rate and per-language confusion rates from classifier
// probability rows, plus top-k ranking shared by every metric.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "langsim/embedding_store.hpp"
#include "langsim/similarity.hpp"

namespace langsim {

struct ConfusionProfile {
  std::string true_label;
  std::size_t total = 0;
  double overall_mr = 0.0;
  /// Fraction of rows predicted as each language, keyed by code. Includes the
  /// true label's own rate when it is in the vocabulary. Languages never
  /// predicted are absent.
  std::map<std::string, double> per_language;
};

/// Argmax language per row; ties go to the lowest vocabulary index.
inline std::vector<std::string> predict_labels(const ProbabilityMatrix& probs) {
  std::vector<std::string> out;
  out.reserve(probs.size());
  const RowMatrix& rows = probs.rows();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < rows.cols(); ++j)
      if (rows(i, j) > rows(i, best)) best = j;
    out.push_back(probs.vocabulary()[static_cast<std::size_t>(best)]);
  }
  return out;
}

/// `true_label` need not be in the vocabulary; then every row counts as a
/// misclassification.
inline ConfusionProfile confusion_profile(const ProbabilityMatrix& probs, const std::string& true_label) {
  const auto predicted = predict_labels(probs);
  std::map<std::string, std::size_t> counts;
  std::size_t wrong = 0;
  for (const auto& label : predicted) {
    ++counts[label];
    if (label != true_label) ++wrong;
  }
  ConfusionProfile profile;
  profile.true_label = true_label;
  profile.total = predicted.size();
  const double n = static_cast<double>(predicted.size());
  profile.overall_mr = static_cast<double>(wrong) / n;
  for (const auto& [code, c] : counts) profile.per_language[code] = static_cast<double>(c) / n;
  return profile;
}

struct RankedEntry {
  std::string language;
  double value = 0.0;
  std::optional<std::size_t> sample_count_query;
  std::optional<std::size_t> sample_count_target;
};

struct SimilarityReport {
  Metric metric = Metric::kCosine;
  Direction direction = Direction::kDescending;
  std::size_t k = 0;
  std::optional<std::uint64_t> seed;
  std::vector<RankedEntry> entries;

  /// 1-based rank of `code`, if present.
  std::optional<std::size_t> rank_of(std::string_view code) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].language == code) return i + 1;
    return std::nullopt;
  }

  std::vector<std::string> languages() const {
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.language);
    return out;
  }
};

/// First min(k, size) entries ordered by value in `direction`, ties broken
/// by language code.
inline SimilarityReport top_k(std::vector<RankedEntry> entries, Metric metric, std::size_t k,
                              Direction direction, std::optional<std::uint64_t> seed = std::nullopt) {
  if (k < 1) throw Error(ErrorCode::kOutOfRange, "k must be >= 1");
  std::sort(entries.begin(), entries.end(), [direction](const RankedEntry& a, const RankedEntry& b) {
    if (a.value != b.value) return direction == Direction::kAscending ? a.value < b.value : a.value > b.value;
    return a.language < b.language;
  });
  if (entries.size() > k) entries.resize(k);
  return SimilarityReport{metric, direction, k, seed, std::move(entries)};
}

/// Ranks the languages a query was confused with. The true label itself is
/// excluded.
inline SimilarityReport top_k(const ConfusionProfile& profile, std::size_t k,
                              Direction direction = Direction::kDescending) {
  std::vector<RankedEntry> entries;
  for (const auto& [code, rate] : profile.per_language)
    if (code != profile.true_label) entries.push_back({code, rate, std::nullopt, std::nullopt});
  return top_k(std::move(entries), Metric::kMisclassification, k, direction);
}

/// Ranks similarity scores by target language. The report seed is the first
/// recorded subsampling seed, if any.
inline SimilarityReport top_k(const std::vector<SimilarityScore>& scores, std::size_t k,
                              std::optional<Direction> direction = std::nullopt) {
  if (scores.empty()) return SimilarityReport{Metric::kCosine, Direction::kDescending, k, std::nullopt, {}};
  const Metric metric = scores.front().metric;
  std::vector<RankedEntry> entries;
  std::optional<std::uint64_t> seed;
  for (const auto& s : scores) {
    if (s.metric != metric) throw Error(ErrorCode::kInvalidConfig, "cannot rank mixed metrics together");
    entries.push_back({s.target, s.value, s.sample_count_query, s.sample_count_target});
    if (!seed && s.seed) seed = s.seed;
  }
  return top_k(std::move(entries), metric, k, direction.value_or(better_first(metric)), seed);
}

}  // namespace langsim
