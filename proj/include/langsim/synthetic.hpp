#pragma once

// Synthetic embedding catalogs drawn from parameterized Gaussians, with an
// outlier knob, for checking the metric stack against closed-form values.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "langsim/embedding_store.hpp"
#include "langsim/error.hpp"
#include "langsim/random.hpp"
#include "langsim/similarity.hpp"
#include "langsim/stats.hpp"

namespace langsim {

struct ClusterSpec {
  std::string language;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::size_t count = 2;
  double outlier_fraction = 0.0;
  double outlier_scale = 1.0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }

  std::size_t outlier_count() const noexcept {
    return static_cast<std::size_t>(std::floor(outlier_fraction * static_cast<double>(count)));
  }

  void validate() const {
    if (language.empty()) throw Error(ErrorCode::kInvalidSpec, "cluster without language code");
    if (mean.size() < 1) throw Error(ErrorCode::kInvalidSpec, language + ": empty mean");
    if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
      throw Error(ErrorCode::kInvalidSpec, language + ": covariance shape does not match mean");
    }
    if (!mean.allFinite() || !covariance.allFinite()) {
      throw Error(ErrorCode::kInvalidSpec, language + ": non-finite parameters");
    }
    if (count < 2) throw Error(ErrorCode::kInvalidSpec, language + ": count must be >= 2");
    if (!(outlier_fraction >= 0.0 && outlier_fraction < 0.5)) {
      throw Error(ErrorCode::kInvalidSpec, language + ": outlier_fraction must lie in [0, 0.5)");
    }
    if (!(outlier_scale >= 1.0)) throw Error(ErrorCode::kInvalidSpec, language + ": outlier_scale must be >= 1");
    if (max_asymmetry(covariance) > kSymmetryTolerance) {
      throw Error(ErrorCode::kNonPsdCovariance, language + ": covariance is not symmetric");
    }
  }
};

namespace detail {

/// A factor F with F F^T = cov: Cholesky when positive definite, otherwise
/// eigenvectors scaled by root eigenvalues (covers singular PSD input).
inline Eigen::MatrixXd covariance_factor(const ClusterSpec& spec) {
  Eigen::LLT<Eigen::MatrixXd> llt(spec.covariance);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spec.covariance);
  const double floor = -1e-9 * std::max(1.0, std::abs(spec.covariance.trace()));
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < floor) {
    throw Error(ErrorCode::kNonPsdCovariance, spec.language + ": covariance is not positive semidefinite");
  }
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace detail

/// count draws of mean + F z, z ~ N(0, I), from Rng(seed). A random subset
/// of floor(outlier_fraction * count) rows, chosen with the stream
/// derive_seed(seed, 1), has its deviation from the mean multiplied by
/// outlier_scale.
inline EmbeddingSet sample_cluster(const ClusterSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Eigen::MatrixXd factor = detail::covariance_factor(spec);
  const auto n = static_cast<Eigen::Index>(spec.count);
  const auto d = static_cast<Eigen::Index>(spec.dim());

  std::vector<double> scale(spec.count, 1.0);
  if (const std::size_t outliers = spec.outlier_count(); outliers > 0) {
    std::vector<std::size_t> index(spec.count);
    std::iota(index.begin(), index.end(), std::size_t{0});
    Rng pick(derive_seed(seed, 1));
    for (std::size_t i = 0; i < outliers; ++i) {
      std::swap(index[i], index[i + static_cast<std::size_t>(pick.below(spec.count - i))]);
      scale[index[i]] = spec.outlier_scale;
    }
  }

  Rng rng(seed);
  FloatMatrix rows(n, d);
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
    const Eigen::VectorXd x = spec.mean + scale[static_cast<std::size_t>(i)] * (factor * z);
    rows.row(i) = x.transpose().cast<float>();
  }
  return EmbeddingSet(spec.language, std::move(rows));
}

/// Closed-form Frechet distance between the two specified Gaussians.
inline double analytic_fid(const ClusterSpec& a, const ClusterSpec& b) {
  a.validate();
  b.validate();
  if (a.outlier_count() > 0 || b.outlier_count() > 0) {
    throw Error(ErrorCode::kOutliersPresent, "analytic FID holds only for outlier-free specs");
  }
  return detail::frechet_distance(a.mean, a.covariance, b.mean, b.covariance);
}

inline double analytic_cosine(const ClusterSpec& a, const ClusterSpec& b) {
  return cosine_similarity(a.mean, b.mean);
}

/// Samples every cluster (cluster i uses derive_seed(seed, i)), writes
/// `<code>.emb` files and `manifest.tsv` into out_dir.
inline LanguageManifest build_catalog(const std::vector<ClusterSpec>& specs, std::uint64_t seed,
                                      const std::filesystem::path& out_dir, std::string query_language = {}) {
  if (specs.empty()) throw Error(ErrorCode::kInvalidSpec, "no clusters");
  std::set<std::string> seen;
  for (const auto& s : specs) {
    s.validate();
    if (!seen.insert(s.language).second) {
      throw Error(ErrorCode::kDuplicateLanguageCode, "language code '" + s.language + "' repeated in spec");
    }
    if (s.dim() != specs.front().dim()) throw Error(ErrorCode::kInvalidSpec, "clusters have different dims");
  }
  LanguageManifest manifest;
  manifest.query_language = query_language.empty() ? specs.front().language : std::move(query_language);
  manifest.base_dir = out_dir;
  std::filesystem::create_directories(out_dir);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const EmbeddingSet set = sample_cluster(specs[i], derive_seed(seed, i));
    const std::string file = specs[i].language + ".emb";
    save_embeddings(set, out_dir / file);
    manifest.entries.push_back({specs[i].language, file, static_cast<std::uint32_t>(set.size())});
  }
  save_manifest(manifest, out_dir / "manifest.tsv");
  return manifest;
}

/// Cluster list document:
///
///   {"query": "dha",                      // optional, defaults to first
///    "clusters": [{"language": "dha",
///                  "mean": [..],
///                  "covariance": [[..], ..] | "variance": [..] | number,
///                  "count": 2000,
///                  "outlier_fraction": 0.0, "outlier_scale": 1.0}, ..]}
///
/// A bare array of clusters is accepted too. Without a covariance or
/// variance the identity is used.
struct CatalogSpec {
  std::string query_language;
  std::vector<ClusterSpec> clusters;
};

inline CatalogSpec parse_catalog_spec(const nlohmann::json& doc) {
  try {
    CatalogSpec out;
    const nlohmann::json* clusters = &doc;
    if (doc.is_object()) {
      clusters = &doc.at("clusters");
      if (doc.contains("query")) out.query_language = doc.at("query").get<std::string>();
    }
    if (!clusters->is_array()) throw Error(ErrorCode::kInvalidSpec, "clusters must be an array");
    for (const auto& c : *clusters) {
      ClusterSpec s;
      s.language = c.at("language").get<std::string>();
      const auto mean = c.at("mean").get<std::vector<double>>();
      s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
      const auto d = s.mean.size();
      if (c.contains("covariance")) {
        const auto rows = c.at("covariance").get<std::vector<std::vector<double>>>();
        if (static_cast<Eigen::Index>(rows.size()) != d) throw Error(ErrorCode::kInvalidSpec, s.language + ": covariance rows");
        s.covariance.resize(d, d);
        for (Eigen::Index i = 0; i < d; ++i) {
          if (static_cast<Eigen::Index>(rows[i].size()) != d) throw Error(ErrorCode::kInvalidSpec, s.language + ": covariance cols");
          for (Eigen::Index j = 0; j < d; ++j) s.covariance(i, j) = rows[i][j];
        }
      } else if (c.contains("variance") && c.at("variance").is_number()) {
        s.covariance = Eigen::MatrixXd::Identity(d, d) * c.at("variance").get<double>();
      } else if (c.contains("variance")) {
        const auto var = c.at("variance").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(var.size()) != d) throw Error(ErrorCode::kInvalidSpec, s.language + ": variance length");
        s.covariance = Eigen::Map<const Eigen::VectorXd>(var.data(), d).asDiagonal();
      } else {
        s.covariance = Eigen::MatrixXd::Identity(d, d);
      }
      s.count = c.at("count").get<std::size_t>();
      s.outlier_fraction = c.value("outlier_fraction", 0.0);
      s.outlier_scale = c.value("outlier_scale", 1.0);
      s.validate();
      out.clusters.push_back(std::move(s));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, e.what());
  }
}

inline nlohmann::ordered_json to_json(const ClusterSpec& s) {
  nlohmann::ordered_json j;
  j["language"] = s.language;
  j["mean"] = std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size());
  std::vector<std::vector<double>> cov;
  for (Eigen::Index i = 0; i < s.covariance.rows(); ++i) {
    cov.emplace_back();
    for (Eigen::Index k = 0; k < s.covariance.cols(); ++k) cov.back().push_back(s.covariance(i, k));
  }
  j["covariance"] = cov;
  j["count"] = s.count;
  j["outlier_fraction"] = s.outlier_fraction;
  j["outlier_scale"] = s.outlier_scale;
  return j;
}

}  // namespace langsim
