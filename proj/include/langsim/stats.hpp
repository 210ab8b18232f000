#pragma once

// Per-language distribution statistics: centroid, unbiased covariance,
// trace-scaled regularization and the PSD matrix square root.

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "langsim/embedding_store.hpp"
#include "langsim/error.hpp"

namespace langsim {

inline constexpr double kDefaultEpsilonScale = 1e-6;
inline constexpr double kSymmetryTolerance = 1e-9;

struct LanguageStats {
  std::string language;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::size_t count = 0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

/// Mean embedding, accumulated in double.
inline Eigen::VectorXd centroid(const EmbeddingSet& set) {
  return set.as_double().colwise().mean().transpose();
}

/// Unbiased sample covariance (divisor N-1), two-pass.
inline Eigen::MatrixXd covariance(const EmbeddingSet& set) {
  if (set.size() < 2) {
    throw Error(ErrorCode::kInsufficientSamples,
                "covariance needs N >= 2, '" + set.language() + "' has " + std::to_string(set.size()));
  }
  const RowMatrix x = set.as_double();
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(set.size() - 1);
  // The product is symmetric in exact arithmetic; make it so bitwise.
  return 0.5 * (cov + cov.transpose());
}

inline double max_asymmetry(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) return INFINITY;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

/// cov + eps*I, eps = epsilon_scale * trace/dim (epsilon_scale itself when
/// the trace is zero).
inline Eigen::MatrixXd regularize(const Eigen::MatrixXd& cov, double epsilon_scale = kDefaultEpsilonScale) {
  const double trace = cov.trace();
  const double eps = trace == 0.0 ? epsilon_scale : epsilon_scale * trace / static_cast<double>(cov.rows());
  Eigen::MatrixXd out = cov;
  out.diagonal().array() += eps;
  return out;
}

/// Symmetric PSD square root via eigendecomposition; negative round-off
/// eigenvalues are clamped to zero.
inline Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  const double asym = max_asymmetry(m);
  if (!(asym <= kSymmetryTolerance)) {
    throw Error(ErrorCode::kNotSymmetric, "max |m - m^T| = " + std::to_string(asym));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalFailure, "symmetric eigendecomposition did not converge");
  }
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd& v = eig.eigenvectors();
  Eigen::MatrixXd s = v * roots.asDiagonal() * v.transpose();
  return 0.5 * (s + s.transpose());
}

inline LanguageStats stats_for(const EmbeddingSet& set, double epsilon_scale = kDefaultEpsilonScale) {
  return LanguageStats{set.language(), centroid(set), regularize(covariance(set), epsilon_scale),
                       set.size()};
}

// Stats cache file: an "EMB1" block holding the mean (1 x dim), an "EMB1"
// block holding the covariance (dim x dim), then the count as uint64
// little-endian. Values are stored as float32.

inline std::vector<std::uint8_t> encode_stats(const LanguageStats& stats) {
  std::vector<std::uint8_t> out;
  detail::put_block(out, stats.mean.transpose().cast<float>());
  detail::put_block(out, stats.covariance.cast<float>());
  detail::put_u64(out, stats.count);
  return out;
}

inline LanguageStats decode_stats(std::span<const std::uint8_t> bytes, std::string language = {}) {
  std::size_t at = 0;
  const FloatMatrix mean = detail::read_block(bytes, at);
  const FloatMatrix cov = detail::read_block(bytes, at);
  if (mean.rows() != 1 || cov.rows() != mean.cols() || cov.cols() != mean.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "stats cache blocks disagree on dim");
  }
  if (bytes.size() != at + 8) throw Error(ErrorCode::kDimensionMismatch, "stats cache has trailing bytes");
  LanguageStats s{std::move(language), mean.row(0).transpose().cast<double>(), cov.cast<double>(),
                  detail::get_u64(bytes, at)};
  if (!s.mean.allFinite() || !s.covariance.allFinite()) {
    throw Error(ErrorCode::kNonFiniteValue, "stats cache holds non-finite values");
  }
  return s;
}

inline void save_stats(const LanguageStats& stats, const std::filesystem::path& path) {
  detail::write_file(path, encode_stats(stats));
}

inline LanguageStats load_stats(const std::filesystem::path& path, std::string language = {}) {
  return decode_stats(detail::read_file(path), std::move(language));
}

}  // namespace langsim
