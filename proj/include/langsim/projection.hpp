#pragma once

// Exact O(N^2) t-SNE for 2D visualization of pooled embedding sets.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "langsim/embedding_store.hpp"
#include "langsim/error.hpp"
#include "langsim/random.hpp"

namespace langsim {

struct ProjectionConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double learning_rate = 200.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iteration = 250;
  std::uint64_t seed = 0;

  /// Checks the configuration against the number of points to embed.
  void validate(std::size_t total_points) const {
    if (total_points < 10) {
      throw Error(ErrorCode::kTooFewPoints, "t-SNE needs at least 10 points, got " + std::to_string(total_points));
    }
    const double bound = (static_cast<double>(total_points) - 1.0) / 3.0;
    if (!(perplexity > 0.0 && perplexity < bound)) {
      throw Error(ErrorCode::kPerplexityOutOfRange,
                  "perplexity " + std::to_string(perplexity) + " must lie in (0, " + std::to_string(bound) +
                      ") for " + std::to_string(total_points) + " points");
    }
    if (iterations < 250) throw Error(ErrorCode::kInvalidConfig, "iterations must be >= 250");
    if (!(learning_rate > 0.0) || !(early_exaggeration >= 1.0)) {
      throw Error(ErrorCode::kInvalidConfig, "learning rate must be > 0 and exaggeration >= 1");
    }
  }
};

struct Projection2D {
  RowMatrix points;  // N x 2
  std::vector<std::string> labels;
  double initial_kl = 0.0;
  double final_kl = 0.0;
  ProjectionConfig config;
};

inline constexpr double kEntropyTolerance = 1e-5;
inline constexpr int kMaxBandwidthSteps = 50;

/// Squared Euclidean distances, computed from coordinate differences so
/// that duplicates are exactly zero and translation does not perturb them.
inline Eigen::MatrixXd squared_distances(const RowMatrix& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (x.row(i) - x.row(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

struct ConditionalAffinities {
  Eigen::MatrixXd p;       // row i: p_{j|i}, zero diagonal, rows sum to 1
  Eigen::VectorXd beta;    // per-row precision 1 / (2 sigma_i^2)
  Eigen::VectorXd entropy; // per-row Shannon entropy in nats
};

/// Per-row Gaussian affinities whose entropy matches log(perplexity) within
/// kEntropyTolerance, found by bracketing and bisecting the precision.
inline ConditionalAffinities conditional_affinities(const RowMatrix& x, double perplexity) {
  const Eigen::Index n = x.rows();
  if (n < 4) throw Error(ErrorCode::kTooFewPoints, "affinities need at least 4 points");
  if (!(perplexity > 0.0 && perplexity < static_cast<double>(n - 1))) {
    throw Error(ErrorCode::kPerplexityOutOfRange,
                "perplexity " + std::to_string(perplexity) + " outside (0, N-1)");
  }
  const Eigen::MatrixXd dist = squared_distances(x);
  const double target = std::log(perplexity);

  ConditionalAffinities out{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  std::vector<double> shifted(static_cast<std::size_t>(n - 1));
  std::vector<double> weight(shifted.size());

  for (Eigen::Index i = 0; i < n; ++i) {
    // Distances to the other points, shifted by their minimum for stability.
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, dist(i, j));
    double mean = 0.0;
    for (Eigen::Index j = 0, k = 0; j < n; ++j) {
      if (j == i) continue;
      shifted[static_cast<std::size_t>(k)] = dist(i, j) - dmin;
      mean += shifted[static_cast<std::size_t>(k++)];
    }
    mean /= static_cast<double>(n - 1);

    double beta = mean > 0.0 ? 1.0 / mean : 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double entropy = 0.0;
    double z = 0.0;
    bool converged = false;
    for (int step = 0; step < kMaxBandwidthSteps; ++step) {
      z = 0.0;
      double weighted = 0.0;
      for (std::size_t k = 0; k < shifted.size(); ++k) {
        weight[k] = std::exp(-beta * shifted[k]);
        z += weight[k];
        weighted += shifted[k] * weight[k];
      }
      entropy = std::log(z) + beta * weighted / z;
      if (std::abs(entropy - target) <= kEntropyTolerance) {
        converged = true;
        break;
      }
      if (entropy > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (lo + hi);
      } else {
        hi = beta;
        beta = 0.5 * (lo + hi);
      }
    }
    if (!converged) {
      throw Error(ErrorCode::kBandwidthSearchFailure,
                  "point " + std::to_string(i) + ": entropy " + std::to_string(entropy) +
                      " did not reach log(perplexity) " + std::to_string(target),
                  Location{static_cast<std::size_t>(i), 0});
    }
    for (Eigen::Index j = 0, k = 0; j < n; ++j) {
      if (j == i) continue;
      out.p(i, j) = weight[static_cast<std::size_t>(k++)] / z;
    }
    out.beta(i) = beta;
    out.entropy(i) = entropy;
  }
  return out;
}

/// Symmetrized joint affinities P = (P_cond + P_cond^T) / (2N).
inline Eigen::MatrixXd pairwise_affinities(const RowMatrix& x, double perplexity) {
  const ConditionalAffinities cond = conditional_affinities(x, perplexity);
  const double scale = 1.0 / (2.0 * static_cast<double>(x.rows()));
  Eigen::MatrixXd p = (cond.p + cond.p.transpose()) * scale;
  return p;
}

namespace detail {

/// Student-t kernel weights w_ij = 1 / (1 + |y_i - y_j|^2), zero diagonal;
/// returns their sum.
inline double student_weights(const RowMatrix& y, Eigen::MatrixXd& w) {
  const Eigen::Index n = y.rows();
  w.setZero(n, n);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dx = y(i, 0) - y(j, 0);
      const double dy = y(i, 1) - y(j, 1);
      const double v = 1.0 / (1.0 + dx * dx + dy * dy);
      w(i, j) = v;
      w(j, i) = v;
      sum += 2.0 * v;
    }
  }
  return sum;
}

}  // namespace detail

/// KL(P || Q) for a 2D layout `y`.
inline double kl_divergence(const Eigen::MatrixXd& p, const RowMatrix& y) {
  Eigen::MatrixXd w;
  const double z = detail::student_weights(y, w);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (i == j || p(i, j) <= 0.0) continue;
      kl += p(i, j) * std::log(p(i, j) * z / w(i, j));
    }
  }
  return std::max(kl, 0.0);
}

/// dKL/dy_i = 4 sum_j (p_ij - q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2).
inline RowMatrix kl_gradient(const Eigen::MatrixXd& p, const RowMatrix& y) {
  Eigen::MatrixXd w;
  const double z = detail::student_weights(y, w);
  const Eigen::Index n = y.rows();
  RowMatrix g = RowMatrix::Zero(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    double gx = 0.0;
    double gy = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double coeff = (p(i, j) - w(i, j) / z) * w(i, j);
      gx += coeff * (y(i, 0) - y(j, 0));
      gy += coeff * (y(i, 1) - y(j, 1));
    }
    g(i, 0) = 4.0 * gx;
    g(i, 1) = 4.0 * gy;
  }
  return g;
}

/// Embeds the pooled sets in 2D by gradient descent with momentum on
/// KL(P || Q). Rows keep the pooled order; labels are the set languages.
inline Projection2D tsne(const std::vector<EmbeddingSet>& pooled, const ProjectionConfig& config) {
  std::size_t total = 0;
  for (const auto& s : pooled) {
    if (s.dim() != pooled.front().dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "pooled sets have different embedding dims");
    }
    total += s.size();
  }
  config.validate(total);

  RowMatrix x(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(pooled.front().dim()));
  Projection2D out;
  out.config = config;
  out.labels.reserve(total);
  Eigen::Index row = 0;
  for (const auto& s : pooled) {
    x.middleRows(row, static_cast<Eigen::Index>(s.size())) = s.as_double();
    row += static_cast<Eigen::Index>(s.size());
    out.labels.insert(out.labels.end(), s.size(), s.language());
  }

  const Eigen::MatrixXd p = pairwise_affinities(x, config.perplexity);
  const Eigen::Index n = x.rows();

  Rng rng(config.seed);
  RowMatrix y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < 2; ++c) y(i, c) = 1e-4 * rng.normal();
  out.initial_kl = kl_divergence(p, y);

  RowMatrix velocity = RowMatrix::Zero(n, 2);
  const Eigen::MatrixXd p_exaggerated = p * config.early_exaggeration;
  for (int it = 0; it < config.iterations; ++it) {
    const bool early = it < config.exaggeration_iterations;
    const double momentum = it < config.momentum_switch_iteration ? config.initial_momentum : config.final_momentum;
    const RowMatrix grad = kl_gradient(early ? p_exaggerated : p, y);
    velocity = momentum * velocity - config.learning_rate * grad;
    y += velocity;
    y.rowwise() -= y.colwise().mean();
  }
  if (!y.allFinite()) throw Error(ErrorCode::kNumericalFailure, "t-SNE layout diverged");
  out.final_kl = kl_divergence(p, y);
  out.points = std::move(y);
  return out;
}

}  // namespace langsim
