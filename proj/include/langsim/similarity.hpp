#pragma once

// Centroid cosine similarity, Frechet distance between Gaussian fits of two
// embedding sets, and count-matched subsampling.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "langsim/embedding_store.hpp"
#include "langsim/error.hpp"
#include "langsim/random.hpp"
#include "langsim/stats.hpp"

namespace langsim {

enum class Metric { kCosine, kFid, kMisclassification };
enum class Direction { kAscending, kDescending };

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kCosine: return "cosine";
    case Metric::kFid: return "fid";
    case Metric::kMisclassification: return "misclassification";
  }
  return "unknown";
}

inline std::string_view to_string(Direction d) {
  return d == Direction::kAscending ? "ascending" : "descending";
}

/// Ranking order in which the best match comes first.
constexpr Direction better_first(Metric m) noexcept {
  return m == Metric::kFid ? Direction::kAscending : Direction::kDescending;
}

struct SimilarityScore {
  std::string query;
  std::string target;
  Metric metric = Metric::kCosine;
  double value = 0.0;
  std::size_t sample_count_query = 0;
  std::size_t sample_count_target = 0;
  std::optional<std::uint64_t> seed;  // set iff subsampling was applied
};

/// (a.b) / (|a| |b|), clamped to [-1, 1].
inline double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "vectors have dims " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0)) throw Error(ErrorCode::kZeroVector, "first argument has zero norm");
  if (!(nb > 0.0)) throw Error(ErrorCode::kZeroVector, "second argument has zero norm");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

namespace detail {

/// |mu_q - mu_t|^2 + Tr(cov_q + cov_t - 2 (cov_q cov_t)^{1/2}).
///
/// The trace of (cov_q cov_t)^{1/2} is taken from the symmetric matrix
/// sqrt(cov_q) cov_t sqrt(cov_q), which is similar to cov_q cov_t and so
/// shares its eigenvalues.
inline double frechet_distance(const Eigen::VectorXd& mu_q, const Eigen::MatrixXd& cov_q,
                               const Eigen::VectorXd& mu_t, const Eigen::MatrixXd& cov_t) {
  if (mu_q.size() != mu_t.size() || cov_q.rows() != mu_q.size() || cov_t.rows() != mu_t.size() ||
      cov_q.cols() != cov_q.rows() || cov_t.cols() != cov_t.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "stats dims " + std::to_string(mu_q.size()) + " and " + std::to_string(mu_t.size()));
  }
  const Eigen::MatrixXd root_q = sqrt_psd(cov_q);
  Eigen::MatrixXd inner = root_q * cov_t * root_q;
  inner = 0.5 * (inner + inner.transpose());
  const double cross = sqrt_psd(inner).trace();

  const double mean_term = (mu_q - mu_t).squaredNorm();
  const double trace_q = cov_q.trace();
  const double trace_t = cov_t.trace();
  const double value = mean_term + trace_q + trace_t - 2.0 * cross;

  const double tolerance = 1e-6 * std::max(1.0, trace_q + trace_t);
  if (!std::isfinite(value)) throw Error(ErrorCode::kNumericalFailure, "FID is not finite");
  if (value < 0.0) {
    if (value < -tolerance) {
      throw Error(ErrorCode::kNumericalFailure,
                  "FID " + std::to_string(value) + " is negative beyond round-off");
    }
    return 0.0;
  }
  return value;
}

}  // namespace detail

inline double fid(const LanguageStats& query, const LanguageStats& target) {
  return detail::frechet_distance(query.mean, query.covariance, target.mean, target.covariance);
}

/// Draws n distinct rows without replacement (partial Fisher-Yates on the
/// row indices, seeded). Selected rows keep their original relative order.
inline EmbeddingSet matched_subsample(const EmbeddingSet& set, std::size_t n, std::uint64_t seed) {
  if (n < 2 || n > set.size()) {
    throw Error(ErrorCode::kOutOfRange,
                "n=" + std::to_string(n) + " outside [2, " + std::to_string(set.size()) + "]");
  }
  std::vector<std::size_t> index(set.size());
  std::iota(index.begin(), index.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(set.size() - i));
    std::swap(index[i], index[j]);
  }
  index.resize(n);
  std::sort(index.begin(), index.end());
  FloatMatrix rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(set.dim()));
  for (std::size_t i = 0; i < n; ++i) rows.row(static_cast<Eigen::Index>(i)) = set.vectors().row(static_cast<Eigen::Index>(index[i]));
  return EmbeddingSet(set.language(), std::move(rows));
}

/// FID after reducing the larger set to the smaller set's size. When both
/// sets already have the same size nothing is subsampled and no seed is
/// recorded.
inline SimilarityScore fid_matched(const EmbeddingSet& query, const EmbeddingSet& target, std::uint64_t seed,
                                   double epsilon_scale = kDefaultEpsilonScale) {
  if (query.size() < 2 || target.size() < 2) {
    throw Error(ErrorCode::kInsufficientSamples, "FID needs at least 2 rows on each side");
  }
  const std::size_t n = std::min(query.size(), target.size());
  SimilarityScore score{query.language(), target.language(), Metric::kFid, 0.0, n, n, std::nullopt};
  LanguageStats sq, st;
  if (query.size() > n) {
    sq = stats_for(matched_subsample(query, n, seed), epsilon_scale);
    st = stats_for(target, epsilon_scale);
    score.seed = seed;
  } else if (target.size() > n) {
    sq = stats_for(query, epsilon_scale);
    st = stats_for(matched_subsample(target, n, seed), epsilon_scale);
    score.seed = seed;
  } else {
    sq = stats_for(query, epsilon_scale);
    st = stats_for(target, epsilon_scale);
  }
  score.value = fid(sq, st);
  return score;
}

/// Cosine between the empirical centroids of two embedding sets.
inline SimilarityScore cosine_centroids(const EmbeddingSet& query, const EmbeddingSet& target) {
  return SimilarityScore{query.language(), target.language(), Metric::kCosine,
                         cosine_similarity(centroid(query), centroid(target)),
                         query.size(), target.size(), std::nullopt};
}

/// Cosine between the query centroid and an externally supplied reference
/// centroid (for example one stored inside a classifier).
inline SimilarityScore cosine_to_reference(const EmbeddingSet& query, std::string target_language,
                                           const Eigen::VectorXd& reference_centroid) {
  return SimilarityScore{query.language(), std::move(target_language), Metric::kCosine,
                         cosine_similarity(centroid(query), reference_centroid),
                         query.size(), 0, std::nullopt};
}

}  // namespace langsim
