// Acceptance suite: runs each criterion, prints one PASS/FAIL line per
// criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "../test_util.hpp"
#include "langsim/audio.hpp"
#include "langsim/classification.hpp"
#include "langsim/cli.hpp"
#include "langsim/projection.hpp"
#include "langsim/similarity.hpp"
#include "langsim/stats.hpp"
#include "langsim/synthetic.hpp"

namespace {

using namespace langsim;
using langsim::testing::TempDir;
using langsim::testing::random_spd;
using langsim::testing::random_vector;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ClusterSpec make_spec(std::string code, Eigen::VectorXd mean, Eigen::MatrixXd cov, std::size_t count) {
  ClusterSpec s;
  s.language = std::move(code);
  s.mean = std::move(mean);
  s.covariance = std::move(cov);
  s.count = count;
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// 1 -------------------------------------------------------------------------

Verdict fid_self_distance() {
  Verdict v;
  Rng rng(1);
  double worst = 0;
  const std::size_t dims[] = {4, 64, 256};
  for (int i = 0; i < 20; ++i) {
    const std::size_t d = dims[i % 3];
    const LanguageStats s{"s", random_vector(d, rng, 3.0), random_spd(d, 100 + i), 1000};
    worst = std::max(worst, fid(s, s));
  }
  v.require(worst <= 1e-6, fmt("max fid(s, s) = %.3g", worst));
  v.detail = v.pass ? fmt("max fid(s, s) = %.3g over 20 sets", worst) : v.detail;
  return v;
}

// 2 -------------------------------------------------------------------------

Verdict fid_analytic_agreement() {
  Verdict v;
  double worst = 0;
  for (std::uint64_t pair = 0; pair < 5; ++pair) {
    Rng rng(500 + pair);
    const Eigen::MatrixXd ca = random_spd(8, 10 + pair, 0.1, 2.0);
    const Eigen::MatrixXd cb = random_spd(8, 20 + pair, 0.1, 2.0);
    ClusterSpec a = make_spec("a", random_vector(8, rng, 1.5), ca, 0);
    ClusterSpec b = make_spec("b", random_vector(8, rng, 1.5), cb, 0);
    a.count = b.count = 2;
    const double truth = analytic_fid(a, b);

    std::vector<double> medians;
    for (std::size_t n : {200u, 1000u, 5000u}) {
      a.count = b.count = n;
      std::vector<double> errors;
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const double got = fid(stats_for(sample_cluster(a, derive_seed(seed, 2 * pair))),
                               stats_for(sample_cluster(b, derive_seed(seed, 2 * pair + 1))));
        const double rel = std::abs(got - truth) / truth;
        errors.push_back(rel);
        if (n == 5000) {
          worst = std::max(worst, rel);
          v.require(rel <= 0.05, fmt("pair %d seed %d: relative error %.4f at n=5000", int(pair), int(seed), rel));
        }
      }
      medians.push_back(median(errors));
    }
    v.require(medians[1] <= medians[0] && medians[2] <= medians[1],
              fmt("pair %d: median errors %.4f, %.4f, %.4f not non-increasing", int(pair), medians[0], medians[1],
                  medians[2]));
  }
  if (v.pass) v.detail = fmt("worst relative error at n=5000: %.4f", worst);
  return v;
}

// 3 -------------------------------------------------------------------------

Verdict fid_equal_covariance() {
  Verdict v;
  Rng rng(3);
  double worst = 0;
  for (int i = 0; i < 10; ++i) {
    const std::size_t d = 4 + 6 * static_cast<std::size_t>(i);
    const Eigen::MatrixXd sigma = random_spd(d, 300 + i);
    const LanguageStats q{"q", random_vector(d, rng, 2.0), sigma, 100};
    const LanguageStats t{"t", random_vector(d, rng, 2.0), sigma, 100};
    const double expected = (q.mean - t.mean).squaredNorm();
    worst = std::max(worst, std::abs(fid(q, t) - expected) / expected);
  }
  v.require(worst <= 1e-8, fmt("max relative error %.3g", worst));
  if (v.pass) v.detail = fmt("max relative error %.3g", worst);
  return v;
}

// 4 -------------------------------------------------------------------------

Verdict cosine_contract() {
  Verdict v;
  v.require(cosine_similarity(Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 0)) == 1.0, "anchor (1,0),(1,0) != 1");
  v.require(cosine_similarity(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 0.0, "anchor (1,0),(0,1) != 0");
  v.require(std::abs(cosine_similarity(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 0)) - 1 / std::sqrt(2.0)) <= 1e-15,
            "anchor (1,1),(1,0) != 1/sqrt2");
  Rng rng(4);
  double worst_scale = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t d = 1 + rng.below(512);
    const Eigen::VectorXd x = random_vector(d, rng, std::exp(6 * (rng.uniform() - 0.5)));
    const Eigen::VectorXd y = trial % 10 == 0 ? Eigen::VectorXd(x * 2.5) : random_vector(d, rng);
    const double c = cosine_similarity(x, y);
    v.require(c >= -1.0 && c <= 1.0, fmt("out of range: %.17g", c));
    v.require(c == cosine_similarity(y, x), "not symmetric");
    const double a = std::exp(8 * (rng.uniform() - 0.5)), b = std::exp(8 * (rng.uniform() - 0.5));
    worst_scale = std::max(worst_scale, std::abs(cosine_similarity(a * x, b * y) - c));
  }
  v.require(worst_scale <= 1e-12, fmt("scale invariance error %.3g", worst_scale));
  if (v.pass) v.detail = fmt("2000 pairs, max scale error %.3g", worst_scale);
  return v;
}

// 5 -------------------------------------------------------------------------

Verdict confusion_oracle() {
  Verdict v;
  Rng rng(5);
  int oov = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(50), k = 2 + rng.below(9);
    std::vector<std::string> vocab;
    for (std::size_t j = 0; j < k; ++j) vocab.push_back("l" + std::to_string(j));
    RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<double>(rng.below(5));
      if (m.row(i).sum() == 0) m(i, 0) = 1;
      m.row(i) /= m.row(i).sum();
    }
    const ProbabilityMatrix p(vocab, m);
    const bool out_of_vocab = trial % 4 == 0;
    oov += out_of_vocab;
    const std::string truth = out_of_vocab ? "dha" : vocab[rng.below(k)];

    // Naive counting: first maximal column per row.
    std::map<std::string, std::size_t> counts;
    std::size_t wrong = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < m.cols(); ++j)
        if (m(i, j) > m(i, best)) best = j;
      ++counts[vocab[static_cast<std::size_t>(best)]];
      wrong += vocab[static_cast<std::size_t>(best)] != truth;
    }
    std::map<std::string, double> rates;
    for (const auto& [code, c] : counts) rates[code] = static_cast<double>(c) / static_cast<double>(n);

    const ConfusionProfile got = confusion_profile(p, truth);
    v.require(got.per_language == rates, fmt("trial %d: per-language rates differ", trial));
    v.require(got.overall_mr == static_cast<double>(wrong) / static_cast<double>(n),
              fmt("trial %d: overall_mr differs", trial));
    if (out_of_vocab) v.require(got.overall_mr == 1.0, fmt("trial %d: out-of-vocabulary mr != 1", trial));
  }
  if (v.pass) v.detail = fmt("100 matrices (%d out-of-vocabulary) match exactly", oov);
  return v;
}

// 6 and 7 -------------------------------------------------------------------

/// Query at 10 e1; target k at 10 e1 + k e2.
std::vector<ClusterSpec> offset_catalog(std::size_t count) {
  std::vector<ClusterSpec> specs;
  Eigen::VectorXd base = Eigen::VectorXd::Zero(8);
  base(0) = 10;
  specs.push_back(make_spec("qry", base, Eigen::MatrixXd::Identity(8, 8), count));
  for (int k = 1; k <= 10; ++k) {
    Eigen::VectorXd mu = base;
    mu(1) = k;
    specs.push_back(make_spec(fmt("t%02d", k), mu, Eigen::MatrixXd::Identity(8, 8), count));
  }
  return specs;
}

struct CatalogScores {
  SimilarityReport fid;
  SimilarityReport cosine;
};

CatalogScores score_catalog(const std::vector<ClusterSpec>& specs, std::uint64_t seed) {
  TempDir dir;
  const LanguageManifest m = build_catalog(specs, seed, dir.path());
  const EmbeddingSet q = load_language(m, m.query_language);
  std::vector<SimilarityScore> fids, cosines;
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    const EmbeddingSet t = load_language(m, m.entries[i].language);
    fids.push_back(fid_matched(q, t, seed));
    cosines.push_back(cosine_centroids(q, t));
  }
  return {top_k(fids, 10), top_k(cosines, 10)};
}

Verdict ranking_recovery() {
  Verdict v;
  const auto specs = offset_catalog(2000);
  std::vector<std::string> expected;
  for (std::size_t i = 1; i < specs.size(); ++i) expected.push_back(specs[i].language);
  const CatalogScores s = score_catalog(specs, 42);
  v.require(s.fid.languages() == expected, "fid ranking differs from offset order");
  v.require(s.cosine.languages() == expected, "cosine ranking differs from offset order");
  if (v.pass) v.detail = "fid and cosine rankings equal offset order t01..t10";
  return v;
}

Verdict outlier_divergence() {
  Verdict v;
  auto specs = offset_catalog(2000);
  const CatalogScores clean = score_catalog(specs, 42);
  specs[1].outlier_fraction = 0.1;
  specs[1].outlier_scale = 10;
  const CatalogScores noisy = score_catalog(specs, 42);

  const std::size_t fid_before = *clean.fid.rank_of("t01");
  const std::size_t fid_after = *noisy.fid.rank_of("t01");
  const std::size_t cos_before = *clean.cosine.rank_of("t01");
  const std::size_t cos_after = *noisy.cosine.rank_of("t01");
  auto value = [](const SimilarityReport& r, const std::string& code) {
    for (const auto& e : r.entries)
      if (e.language == code) return e.value;
    return std::nan("");
  };
  const double shift = std::abs(value(noisy.cosine, "t01") - value(clean.cosine, "t01"));
  v.require(fid_after > fid_before, fmt("fid rank %zu -> %zu did not worsen", fid_before, fid_after));
  v.require(shift <= 0.02, fmt("cosine shift %.4f > 0.02", shift));
  v.require(cos_after == cos_before, fmt("cosine rank moved %zu -> %zu", cos_before, cos_after));
  v.require(noisy.cosine.languages() == clean.cosine.languages(), "cosine ordering changed");
  v.detail = v.pass ? fmt("fid rank %zu -> %zu, cosine rank %zu -> %zu, cosine shift %.2g", fid_before, fid_after,
                          cos_before, cos_after, shift)
                    : v.detail;
  return v;
}

// 8 -------------------------------------------------------------------------

Verdict tsne_numerics() {
  Verdict v;
  const RowMatrix x = langsim::testing::random_set(10, 5, 81).as_double();
  const Eigen::MatrixXd p10 = pairwise_affinities(x, 2.5);
  const RowMatrix y = langsim::testing::random_set(10, 2, 82).as_double();
  const RowMatrix g = kl_gradient(p10, y);
  double worst = 0;
  for (Eigen::Index i = 0; i < 10; ++i) {
    for (Eigen::Index c = 0; c < 2; ++c) {
      RowMatrix plus = y, minus = y;
      plus(i, c) += 1e-5;
      minus(i, c) -= 1e-5;
      const double fd = (kl_divergence(p10, plus) - kl_divergence(p10, minus)) / 2e-5;
      worst = std::max(worst, std::abs(g(i, c) - fd) / std::max(std::abs(fd), 1e-3));
    }
  }
  v.require(worst <= 1e-4, fmt("gradient relative error %.3g", worst));

  std::vector<EmbeddingSet> sets;
  for (int c = 0; c < 3; ++c) {
    FloatMatrix m = langsim::testing::random_set(30, 8, 90 + c).vectors();
    m.col(c).array() += 10.0f;
    sets.emplace_back(fmt("c%d", c), m);
  }
  std::vector<EmbeddingSet> copy = sets;
  RowMatrix pooled(90, 8);
  for (int c = 0; c < 3; ++c) pooled.middleRows(30 * c, 30) = sets[c].as_double();
  const double psum = pairwise_affinities(pooled, 10).sum();
  v.require(std::abs(psum - 1.0) <= 1e-9, fmt("P sums to %.17g", psum));

  ProjectionConfig config;
  config.perplexity = 10;
  config.seed = 8;
  const Projection2D proj = tsne(sets, config);
  v.require(proj.final_kl < proj.initial_kl, fmt("final KL %.4f >= initial %.4f", proj.final_kl, proj.initial_kl));

  std::size_t pure = 0;
  for (Eigen::Index i = 0; i < 90; ++i) {
    std::vector<std::pair<double, Eigen::Index>> d;
    for (Eigen::Index j = 0; j < 90; ++j)
      if (j != i) d.push_back({(proj.points.row(i) - proj.points.row(j)).squaredNorm(), j});
    std::partial_sort(d.begin(), d.begin() + 5, d.end());
    int same = 0;
    for (int k = 0; k < 5; ++k) same += proj.labels[d[k].second] == proj.labels[i];
    pure += same >= 3;
  }
  const double purity = static_cast<double>(pure) / 90.0;
  v.require(purity >= 0.9, fmt("5-NN purity %.3f", purity));
  if (v.pass) {
    v.detail = fmt("grad err %.2g, |sum P - 1| %.2g, KL %.3f -> %.3f, purity %.3f", worst, std::abs(psum - 1),
                   proj.initial_kl, proj.final_kl, purity);
  }
  return v;
}

// 9 -------------------------------------------------------------------------

AudioClip tone(double seconds, double amplitude, std::uint32_t rate, double hz) {
  AudioClip c;
  c.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  for (std::size_t i = 0; i < n; ++i) c.samples.push_back(amplitude * std::sin(2 * std::numbers::pi * hz * i / rate));
  return c;
}

AudioClip hiss(double seconds, double amplitude, std::uint64_t seed) {
  AudioClip c;
  Rng rng(seed);
  for (auto i = std::llround(seconds * 16000); i > 0; --i) c.samples.push_back(amplitude * (2 * rng.uniform() - 1));
  return c;
}

Verdict audio_pipeline() {
  Verdict v;
  Rng rng(9);

  AudioClip pcm;
  pcm.sample_rate = 16000;
  for (int i = 0; i < 20000; ++i) pcm.samples.push_back(static_cast<std::int16_t>(rng.next_u64()) / 32768.0);
  v.require(parse_wav(encode_wav16(pcm)).samples == pcm.samples, "16-bit round trip not exact");

  const CurationConfig config;
  const std::size_t frame = frame_length(16000, config.frame_ms);
  for (int trial = 0; trial < 10; ++trial) {
    const double lead = 0.2 + rng.uniform(), tail = 0.2 + rng.uniform();
    AudioClip clip = hiss(lead, 1e-4, trial);
    const std::size_t begin = clip.size();
    const AudioClip body = tone(1.0, 0.5, 16000, 300 + 500 * rng.uniform());
    clip.samples.insert(clip.samples.end(), body.samples.begin(), body.samples.end());
    const std::size_t end = clip.size();
    const AudioClip t = hiss(tail, 1e-4, trial + 50);
    clip.samples.insert(clip.samples.end(), t.samples.begin(), t.samples.end());

    const TrimBounds b = trim_bounds(clip, config);
    v.require(std::max(b.begin, begin) - std::min(b.begin, begin) <= frame &&
                  std::max(b.end, end) - std::min(b.end, end) <= frame,
              fmt("trial %d: bounds [%zu, %zu) vs [%zu, %zu)", trial, b.begin, b.end, begin, end));
    const AudioClip once = trim_silence(clip, config);
    v.require(trim_silence(once, config).samples == once.samples, fmt("trial %d: trim not idempotent", trial));
  }

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<AudioClip> clips;
    std::size_t total = 0;
    for (std::size_t i = 0, n = 1 + rng.below(12); i < n; ++i) {
      AudioClip c;
      c.samples.assign(static_cast<std::size_t>(16000 * 15 * rng.uniform()) + 1, 0.1);
      total += c.size();
      clips.push_back(std::move(c));
    }
    std::size_t sum = 0;
    for (const auto& out : concatenate_to_target(clips, config)) {
      const double d = out.clip.duration_s();
      sum += out.clip.size();
      if (!out.flagged_remainder) v.require(d >= 10.0 && d <= 15.0, fmt("trial %d: output of %.3f s", trial, d));
      else v.require(d < 10.0, fmt("trial %d: flagged output of %.3f s", trial, d));
    }
    v.require(sum == total, fmt("trial %d: %zu samples in, %zu out", trial, total, sum));
  }

  const AudioClip sine = resample(tone(2.0, 0.5, 44100, 1000.0), 16000);
  double best_f = 0, best_mag = 0;
  for (double f = 990.0; f <= 1010.0; f += 0.01) {
    std::complex<double> acc = 0;
    for (std::size_t i = 0; i < 16000; ++i) acc += sine.samples[8000 + i] * std::polar(1.0, -2 * std::numbers::pi * f * i / 16000);
    if (std::abs(acc) > best_mag) {
      best_mag = std::abs(acc);
      best_f = f;
    }
  }
  const double amp = 2 * best_mag / 16000;
  v.require(std::abs(best_f - 1000) <= 1.0, fmt("peak at %.2f Hz", best_f));
  v.require(std::abs(amp - 0.5) <= 0.005, fmt("amplitude %.5f", amp));
  if (v.pass) v.detail = fmt("sine peak %.2f Hz, amplitude %.5f (target 0.5)", best_f, amp);
  return v;
}

// 10 ------------------------------------------------------------------------

int cli_failures = 0;

std::string run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  cli_failures += code != 0;
  return std::to_string(code) + "\n" + out.str() + err.str();
}

/// Every regular file under `dir` with its bytes, keyed by relative path.
std::map<std::string, std::vector<std::uint8_t>> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::vector<std::uint8_t>> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[std::filesystem::relative(e.path(), dir).generic_string()] = detail::read_file(e.path());
  }
  return files;
}

Verdict cli_determinism() {
  Verdict v;
  TempDir in;
  // Inputs shared by both runs.
  {
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& s : offset_catalog(120)) clusters.push_back(nlohmann::json(to_json(s)));
    clusters[2]["outlier_fraction"] = 0.1;
    clusters[2]["outlier_scale"] = 5;
    detail::write_text(in / "spec.json", nlohmann::json{{"query", "qry"}, {"clusters", clusters}}.dump());
    detail::write_text(in / "probs.csv", "t01,t02,t03\n0.5,0.3,0.2\n0.2,0.5,0.3\n0.6,0.2,0.2\n");
    std::filesystem::create_directories(in / "wav");
    save_wav16(tone(6.0, 0.3, 44100, 220), in / "wav/a.wav");
    save_wav16(tone(5.0, 0.3, 16000, 330), in / "wav/b.wav");
    save_wav16(tone(3.0, 0.3, 22050, 440), in / "wav/c.wav");
  }

  // Identical flags means identical paths, so every run writes to the same
  // work directory, which is cleared in between.
  TempDir work;
  auto session = [&](const std::string& threads) {
    std::filesystem::remove_all(work.path());
    std::filesystem::create_directories(work.path());
    const std::string w = work.path().string();
    const std::string m = w + "/cat/manifest.tsv";
    std::string log;
    log += run_cli({"synth", (in / "spec.json").string(), "--seed", "7", "--out-dir", w + "/cat"});
    log += run_cli({"similarity", m, "--metric", "fid", "--seed", "3", "--threads", threads, "--out", w + "/fid.json"});
    log += run_cli({"similarity", m, "--metric", "cosine", "--threads", threads, "--out", w + "/cos.json"});
    log += run_cli({"misclass", (in / "probs.csv").string(), "--true-label", "qry", "--out", w + "/mr.json"});
    log += run_cli({"tsne", m, "--langs", "qry,t01,t10", "--perplexity", "20", "--iters", "300", "--seed", "2", "--out",
                    w + "/tsne.csv"});
    log += run_cli({"report", m, (in / "probs.csv").string(), "--seed", "3", "--threads", threads, "--out",
                    w + "/report.json"});
    log += run_cli({"curate", (in / "wav").string(), w + "/curated"});
    return std::make_pair(log, snapshot(work.path()));
  };

  const auto [log_a, files_a] = session("1");
  const auto [log_b, files_b] = session("1");
  const auto [log_c, files_c] = session("4");

  v.require(files_a.size() >= 20, fmt("only %zu output files", files_a.size()));
  v.require(cli_failures == 0, fmt("%d command runs exited nonzero", cli_failures));
  v.require(log_a == log_b, "stdout differs between identical runs");
  v.require(files_a == files_b, "output files differ between identical runs");
  v.require(files_a == files_c, "output files differ between 1 and 4 threads");
  v.require(log_a == log_c, "stdout differs between 1 and 4 threads");
  if (v.pass) v.detail = fmt("7 invocations of 6 commands, %zu files byte-identical across 3 runs (1, 1, 4 threads)", files_a.size());
  return v;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0: no runtime bound
  std::function<Verdict()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "FID self-distance", 5, fid_self_distance},
      {2, "FID analytic agreement", 60, fid_analytic_agreement},
      {3, "FID equal-covariance closed form", 0, fid_equal_covariance},
      {4, "Cosine contract", 0, cosine_contract},
      {5, "Confusion oracle", 0, confusion_oracle},
      {6, "Ranking recovery", 30, ranking_recovery},
      {7, "Outlier divergence", 0, outlier_divergence},
      {8, "t-SNE numerics", 60, tsne_numerics},
      {9, "Audio pipeline", 0, audio_pipeline},
      {10, "Determinism", 0, cli_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && seconds >= c.budget_s) {
      v.pass = false;
      v.detail += fmt(" (over the %.0f s budget)", c.budget_s);
    }
    failures += !v.pass;
    std::printf("[%s] %2d %-34s %7.2f s  %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, seconds, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
