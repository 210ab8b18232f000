#pragma once

// Command implementations behind the `langsim` executable. Kept in a header
// so tests can drive the exact same code path in-process.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "langsim/audio.hpp"
#include "langsim/classification.hpp"
#include "langsim/embedding_store.hpp"
#include "langsim/projection.hpp"
#include "langsim/report.hpp"
#include "langsim/similarity.hpp"
#include "langsim/stats.hpp"
#include "langsim/synthetic.hpp"

namespace langsim::cli {

namespace fs = std::filesystem;

inline constexpr std::size_t kDefaultTopK = 10;

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers and returns the
/// results in index order. Each result depends only on its index, so the
/// output is independent of the thread count.
template <typename Fn>
auto parallel_map(std::size_t n, unsigned threads, Fn fn) -> std::vector<decltype(fn(std::size_t{0}))> {
  using Result = decltype(fn(std::size_t{0}));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::optional<Result>> slots(n);
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) slots[i].emplace(fn(i));
  } else {
    std::vector<std::future<void>> workers;
    const std::size_t stride = std::min<std::size_t>(threads, n);
    for (std::size_t w = 0; w < stride; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < n; i += stride) slots[i].emplace(fn(i));
      }));
    }
    for (auto& f : workers) f.get();  // rethrows the first worker failure
  }
  std::vector<Result> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline std::vector<std::string> split_codes(const std::string& list) {
  std::vector<std::string> out;
  for (auto cell : detail::split(list, ','))
    if (!cell.empty()) out.emplace_back(cell);
  return out;
}

inline void write_output(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  detail::write_text(path, text);
}

/// `<stem>.csv` next to a JSON output path.
inline fs::path csv_mirror(const fs::path& json_path) {
  fs::path p = json_path;
  return p.replace_extension(".csv");
}

/// Target selection: "all", "top:<k>" or a comma-separated list of codes.
struct TargetSelection {
  std::vector<std::string> codes;  // empty: every non-query language
  std::optional<std::size_t> top;

  static TargetSelection parse(const std::string& text) {
    TargetSelection s;
    if (text == "all") return s;
    if (text.starts_with("top:")) {
      const auto k = detail::parse_real<double>(text.substr(4));
      if (!k || *k < 1 || *k != std::floor(*k)) {
        throw Error(ErrorCode::kInvalidConfig, "--against top:<k> needs a positive integer k");
      }
      s.top = static_cast<std::size_t>(*k);
      return s;
    }
    s.codes = split_codes(text);
    if (s.codes.empty()) throw Error(ErrorCode::kInvalidConfig, "--against list is empty");
    return s;
  }

  std::vector<std::string> resolve(const LanguageManifest& m) const {
    if (codes.empty()) {
      std::vector<std::string> all;
      for (const auto& e : m.entries)
        if (e.language != m.query_language) all.push_back(e.language);
      return all;
    }
    for (const auto& c : codes) {
      if (m.find(c) == nullptr) throw Error(ErrorCode::kMissingLanguageFile, "language '" + c + "' not in manifest");
    }
    return codes;
  }
};

/// Reference centroids as CSV rows `<code>,v1,...,vd` (no header).
inline std::map<std::string, Eigen::VectorXd> load_reference_centroids(const fs::path& path) {
  std::map<std::string, Eigen::VectorXd> out;
  const std::string text = detail::read_text(path);
  const auto rows = detail::lines(text);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto cells = detail::split(rows[i], ',');
    if (cells.size() < 2) throw Error(ErrorCode::kParseFailure, "centroid row needs a code and values", Location{i, 0});
    Eigen::VectorXd v(static_cast<Eigen::Index>(cells.size() - 1));
    for (std::size_t j = 1; j < cells.size(); ++j) {
      const auto x = detail::parse_real<double>(cells[j]);
      if (!x || !std::isfinite(*x)) {
        throw Error(ErrorCode::kParseFailure, "bad centroid value at (" + std::to_string(i) + "," + std::to_string(j) + ")",
                    Location{i, j});
      }
      v(static_cast<Eigen::Index>(j - 1)) = *x;
    }
    if (!out.emplace(std::string(cells[0]), std::move(v)).second) {
      throw Error(ErrorCode::kDuplicateLanguageCode, "centroid for '" + std::string(cells[0]) + "' repeated");
    }
  }
  return out;
}

/// Scores the query against each target with one metric. Every pair uses
/// the same subsampling seed so results do not depend on evaluation order.
inline std::vector<SimilarityScore> score_targets(const LanguageManifest& m, const EmbeddingSet& query,
                                                  const std::vector<std::string>& targets, Metric metric,
                                                  std::uint64_t seed, double epsilon_scale, unsigned threads) {
  return parallel_map(targets.size(), threads, [&](std::size_t i) {
    const EmbeddingSet target = load_language(m, targets[i]);
    if (metric == Metric::kFid) return fid_matched(query, target, seed, epsilon_scale);
    return cosine_centroids(query, target);
  });
}

// -- curate -----------------------------------------------------------------

struct CurateOptions {
  std::string in_dir;
  std::string out_dir;
  std::string manifest;  // default <out_dir>/curation_manifest.json
  CurationConfig config;
};

inline int cmd_curate(const CurateOptions& o, std::ostream& out) {
  o.config.validate();
  if (!fs::is_directory(o.in_dir)) throw Error(ErrorCode::kIoFailure, "input directory not found: " + o.in_dir);
  const CurationManifest manifest = curate_directory(o.in_dir, o.out_dir, o.config);
  const fs::path manifest_path = o.manifest.empty() ? fs::path(o.out_dir) / "curation_manifest.json" : fs::path(o.manifest);
  write_output(manifest_path, to_json(manifest).dump(2) + "\n");

  RunReport report{"curate", Json::object(), std::nullopt, Json::object(), {}};
  report.config["in_dir"] = o.in_dir;
  report.config["out_dir"] = o.out_dir;
  report.config["manifest"] = manifest_path.generic_string();
  report.config["curation"] = to_json(o.config);
  report.results["outputs"] = manifest.outputs.size();
  report.results["dropped"] = manifest.dropped.size();
  report.results["errors"] = manifest.errors.size();
  for (const auto& d : manifest.dropped) report.warnings.push_back("dropped silent file " + d);
  for (const auto& e : manifest.errors) report.warnings.push_back("skipped " + e.path + ": " + e.message);
  out << report.dump();
  return 0;
}

// -- similarity -------------------------------------------------------------

struct SimilarityOptions {
  std::string manifest;
  std::string metric = "cosine";
  std::string against = "all";
  std::string centroids;
  std::uint64_t seed = 0;
  double epsilon_scale = kDefaultEpsilonScale;
  std::string out;
  unsigned threads = 1;
};

inline int cmd_similarity(const SimilarityOptions& o, std::ostream& out) {
  const Metric metric = o.metric == "fid" ? Metric::kFid : Metric::kCosine;
  const TargetSelection selection = TargetSelection::parse(o.against);
  const LanguageManifest m = load_manifest(o.manifest);
  const EmbeddingSet query = load_language(m, m.query_language);

  std::vector<SimilarityScore> scores;
  if (!o.centroids.empty()) {
    if (metric != Metric::kCosine) throw Error(ErrorCode::kInvalidConfig, "--centroids applies to cosine only");
    const auto refs = load_reference_centroids(o.centroids);
    std::set<std::string> wanted(selection.codes.begin(), selection.codes.end());
    for (const auto& [code, vec] : refs) {
      if (code == m.query_language || (!wanted.empty() && !wanted.contains(code))) continue;
      scores.push_back(cosine_to_reference(query, code, vec));
    }
  } else {
    scores = score_targets(m, query, selection.resolve(m), metric, o.seed, o.epsilon_scale, o.threads);
  }
  const std::size_t k = selection.top.value_or(std::max<std::size_t>(1, scores.size()));
  const SimilarityReport ranking = top_k(scores, k);

  RunReport report{"similarity", Json::object(), o.seed, Json::object(), {}};
  report.config["manifest"] = o.manifest;
  report.config["metric"] = to_string(metric);
  report.config["against"] = o.against;
  report.config["centroids"] = o.centroids.empty() ? Json(nullptr) : Json(o.centroids);
  report.config["epsilon_scale"] = o.epsilon_scale;
  report.results["query"] = m.query_language;
  report.results["query_count"] = query.size();
  report.results["ranking"] = to_json(ranking);
  if (scores.empty()) report.warnings.push_back("no target languages selected");

  if (o.out.empty()) {
    out << report.dump();
  } else {
    write_output(o.out, report.dump());
    write_output(csv_mirror(o.out), to_csv(ranking));
  }
  return 0;
}

// -- misclass ---------------------------------------------------------------

struct MisclassOptions {
  std::string probs;
  std::string true_label;
  std::size_t top_k = kDefaultTopK;
  std::string out;
};

inline int cmd_misclass(const MisclassOptions& o, std::ostream& out) {
  const ProbabilityMatrix probs = load_probability_matrix(o.probs);
  const ConfusionProfile profile = confusion_profile(probs, o.true_label);
  const SimilarityReport ranking = top_k(profile, o.top_k);

  RunReport report{"misclass", Json::object(), std::nullopt, Json::object(), {}};
  report.config["probs"] = o.probs;
  report.config["true_label"] = o.true_label;
  report.config["top_k"] = o.top_k;
  report.results["profile"] = to_json(profile);
  report.results["ranking"] = to_json(ranking);
  const auto& vocab = probs.vocabulary();
  if (std::find(vocab.begin(), vocab.end(), o.true_label) == vocab.end()) {
    report.warnings.push_back("true label '" + o.true_label + "' is outside the classifier vocabulary");
  }
  if (o.out.empty()) {
    out << report.dump();
  } else {
    write_output(o.out, report.dump());
    write_output(csv_mirror(o.out), to_csv(ranking));
  }
  return 0;
}

// -- tsne -------------------------------------------------------------------

struct TsneOptions {
  std::string manifest;
  std::string langs;  // empty: every manifest entry
  std::string out;    // coordinates CSV; sidecar JSON at <stem>.json
  ProjectionConfig config;
};

inline int cmd_tsne(const TsneOptions& o, std::ostream& out) {
  const LanguageManifest m = load_manifest(o.manifest);
  std::vector<std::string> codes = split_codes(o.langs);
  if (codes.empty())
    for (const auto& e : m.entries) codes.push_back(e.language);
  std::size_t total = 0;
  for (const auto& c : codes) {
    const ManifestEntry* e = m.find(c);
    if (e == nullptr) throw Error(ErrorCode::kMissingLanguageFile, "language '" + c + "' not in manifest");
    total += e->count;
  }
  o.config.validate(total);  // before any optimization work

  std::vector<EmbeddingSet> pooled;
  for (const auto& c : codes) pooled.push_back(load_language(m, c));
  const Projection2D projection = tsne(pooled, o.config);

  fs::path csv_path = o.out;
  fs::path json_path = csv_path;
  json_path.replace_extension(".json");

  RunReport report{"tsne", Json::object(), o.config.seed, Json::object(), {}};
  report.config["manifest"] = o.manifest;
  report.config["langs"] = codes;
  report.config["projection"] = to_json(o.config);
  report.results["points"] = projection.points.rows();
  report.results["initial_kl"] = projection.initial_kl;
  report.results["final_kl"] = projection.final_kl;
  report.results["coordinates"] = csv_path.filename().generic_string();

  write_output(csv_path, to_csv(projection));
  write_output(json_path, report.dump());
  out << report.dump();
  return 0;
}

// -- synth ------------------------------------------------------------------

struct SynthOptions {
  std::string spec;
  std::uint64_t seed = 0;
  std::string out_dir;
};

inline int cmd_synth(const SynthOptions& o, std::ostream& out) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_text(o.spec));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidSpec, o.spec + ": " + e.what());
  }
  const CatalogSpec spec = parse_catalog_spec(doc);
  const LanguageManifest m = build_catalog(spec.clusters, o.seed, o.out_dir, spec.query_language);

  RunReport report{"synth", Json::object(), o.seed, Json::object(), {}};
  report.config["spec"] = o.spec;
  report.config["out_dir"] = o.out_dir;
  Json clusters = Json::array();
  for (const auto& c : spec.clusters) clusters.push_back(to_json(c));
  report.config["clusters"] = std::move(clusters);
  report.results["manifest"] = "manifest.tsv";
  report.results["query"] = m.query_language;
  Json entries = Json::array();
  for (const auto& e : m.entries) entries.push_back(Json{{"language", e.language}, {"path", e.path.generic_string()}, {"count", e.count}});
  report.results["entries"] = std::move(entries);
  write_output(fs::path(o.out_dir) / "synth_report.json", report.dump());
  out << report.dump();
  return 0;
}

// -- report -----------------------------------------------------------------

struct ReportOptions {
  std::string manifest;
  std::string probs;       // optional
  std::string true_label;  // default: manifest query language
  std::size_t top = kDefaultTopK;
  std::uint64_t seed = 0;
  double epsilon_scale = kDefaultEpsilonScale;
  std::string out;
  unsigned threads = 1;
};

/// Languages whose positions differ between two rankings, restricted to the
/// languages both contain.
inline Json rank_disagreements(const SimilarityReport& a, const SimilarityReport& b) {
  Json notes = Json::array();
  std::vector<std::string> shared_a, shared_b;
  for (const auto& e : a.entries)
    if (b.rank_of(e.language)) shared_a.push_back(e.language);
  for (const auto& e : b.entries)
    if (a.rank_of(e.language)) shared_b.push_back(e.language);
  for (std::size_t i = 0; i < shared_a.size(); ++i) {
    const auto pos_b = std::find(shared_b.begin(), shared_b.end(), shared_a[i]) - shared_b.begin();
    if (static_cast<std::size_t>(pos_b) != i) {
      notes.push_back(Json{{"language", shared_a[i]},
                           {to_string(a.metric), i + 1},
                           {to_string(b.metric), static_cast<std::size_t>(pos_b) + 1}});
    }
  }
  return notes;
}

inline int cmd_report(const ReportOptions& o, std::ostream& out) {
  const LanguageManifest m = load_manifest(o.manifest);
  const EmbeddingSet query = load_language(m, m.query_language);
  const std::string true_label = o.true_label.empty() ? m.query_language : o.true_label;
  RunReport report{"report", Json::object(), o.seed, Json::object(), {}};

  const auto all_targets = TargetSelection{}.resolve(m);
  const auto cosine_scores = score_targets(m, query, all_targets, Metric::kCosine, o.seed, o.epsilon_scale, o.threads);
  const SimilarityReport cosine = top_k(cosine_scores, std::max<std::size_t>(1, cosine_scores.size()));

  std::optional<SimilarityReport> misclass;
  Json confusion = nullptr;
  if (!o.probs.empty()) {
    const ProbabilityMatrix probs = load_probability_matrix(o.probs);
    const ConfusionProfile profile = confusion_profile(probs, true_label);
    misclass = top_k(profile, std::max<std::size_t>(1, profile.per_language.size()));
    confusion = Json{{"profile", to_json(profile)}, {"ranking", to_json(*misclass)}};
  }

  // FID targets: the top languages by misclassification when available in
  // the catalog, otherwise the top languages by cosine.
  std::vector<std::string> fid_targets;
  std::string fid_source = "cosine";
  if (misclass) {
    for (const auto& e : misclass->entries) {
      if (fid_targets.size() == o.top) break;
      if (m.find(e.language) != nullptr && e.language != m.query_language) fid_targets.push_back(e.language);
    }
    if (!fid_targets.empty()) {
      fid_source = "misclassification";
    } else {
      report.warnings.push_back("no misclassified language is in the catalog; FID targets taken from cosine ranking");
    }
  }
  if (fid_targets.empty()) {
    for (const auto& e : cosine.entries) {
      if (fid_targets.size() == o.top) break;
      fid_targets.push_back(e.language);
    }
  }
  const auto fid_scores = score_targets(m, query, fid_targets, Metric::kFid, o.seed, o.epsilon_scale, o.threads);
  const SimilarityReport fid_ranking = top_k(fid_scores, std::max<std::size_t>(1, fid_scores.size()));

  report.config["manifest"] = o.manifest;
  report.config["probs"] = o.probs.empty() ? Json(nullptr) : Json(o.probs);
  report.config["true_label"] = true_label;
  report.config["top"] = o.top;
  report.config["epsilon_scale"] = o.epsilon_scale;
  report.results["query"] = m.query_language;
  report.results["cosine"] = to_json(cosine);
  report.results["fid_targets_from"] = fid_source;
  report.results["fid"] = to_json(fid_ranking);
  report.results["confusion"] = confusion;
  Json notes;
  notes["cosine_vs_fid"] = rank_disagreements(cosine, fid_ranking);
  notes["misclassification_vs_cosine"] = misclass ? rank_disagreements(*misclass, cosine) : Json(nullptr);
  notes["misclassification_vs_fid"] = misclass ? rank_disagreements(*misclass, fid_ranking) : Json(nullptr);
  report.results["rank_disagreements"] = std::move(notes);

  if (o.out.empty()) {
    out << report.dump();
  } else {
    write_output(o.out, report.dump());
  }
  return 0;
}

// -- entry point ------------------------------------------------------------

/// Parses `args` (without the program name) and runs one command. Returns
/// the process exit code: 0 on success, 1 on a runtime error, 2 on invalid
/// arguments.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Acoustic similarity between a query language and a catalog of reference languages", "langsim"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  CurateOptions curate;
  auto* c = app.add_subcommand("curate", "Trim, resample and pack WAV recordings into 10-15 s utterances");
  c->add_option("in_dir", curate.in_dir, "Directory of input .wav files")->required();
  c->add_option("out_dir", curate.out_dir, "Directory for packed utterances")->required();
  c->add_option("--manifest", curate.manifest, "Curation manifest path (default <out_dir>/curation_manifest.json)");
  c->add_option("--target-rate", curate.config.target_rate, "Output sample rate in Hz");
  c->add_option("--threshold-db", curate.config.silence_threshold_db, "Silence gate, frame RMS in dBFS");
  c->add_option("--frame-ms", curate.config.frame_ms, "Silence analysis frame length in ms");
  c->add_option("--min-dur", curate.config.min_duration_s, "Minimum utterance duration in s");
  c->add_option("--max-dur", curate.config.max_duration_s, "Maximum utterance duration in s");

  SimilarityOptions sim;
  auto* s = app.add_subcommand("similarity", "Rank catalog languages by cosine or FID similarity to the query");
  s->add_option("manifest", sim.manifest, "Language manifest")->required();
  s->add_option("--metric", sim.metric, "cosine or fid")->check(CLI::IsMember({"cosine", "fid"}));
  s->add_option("--against", sim.against, "all, top:<k>, or comma-separated language codes");
  s->add_option("--centroids", sim.centroids, "CSV of reference centroids '<code>,v1,...' (cosine only)");
  s->add_option("--seed", sim.seed, "Subsampling seed");
  s->add_option("--epsilon", sim.epsilon_scale, "Covariance regularization scale");
  s->add_option("--out", sim.out, "Report JSON path; a ranking CSV is written alongside");
  s->add_option("--threads", sim.threads, "Worker threads (0: all cores); does not affect results");

  MisclassOptions mis;
  auto* mc = app.add_subcommand("misclass", "Misclassification rate and confusion ranking from classifier probabilities");
  mc->add_option("probs_csv", mis.probs, "Probability CSV")->required();
  mc->add_option("--true-label", mis.true_label, "True language code of every row")->required();
  mc->add_option("--top-k", mis.top_k, "Ranking length")->check(CLI::PositiveNumber);
  mc->add_option("--out", mis.out, "Report JSON path; a ranking CSV is written alongside");

  TsneOptions ts;
  auto* t = app.add_subcommand("tsne", "2D t-SNE projection of pooled embedding sets");
  t->add_option("manifest", ts.manifest, "Language manifest")->required();
  t->add_option("--langs", ts.langs, "Comma-separated language codes (default: all)");
  t->add_option("--perplexity", ts.config.perplexity, "Target perplexity");
  t->add_option("--iters", ts.config.iterations, "Gradient descent iterations");
  t->add_option("--learning-rate", ts.config.learning_rate, "Learning rate");
  t->add_option("--exaggeration", ts.config.early_exaggeration, "Early exaggeration factor");
  t->add_option("--seed", ts.config.seed, "Initialization seed");
  t->add_option("--out", ts.out, "Coordinates CSV path; a JSON sidecar is written alongside")->required();

  SynthOptions syn;
  auto* sy = app.add_subcommand("synth", "Generate a synthetic Gaussian embedding catalog");
  sy->add_option("spec_json", syn.spec, "Cluster spec JSON")->required();
  sy->add_option("--seed", syn.seed, "Sampling seed");
  sy->add_option("--out-dir", syn.out_dir, "Output directory")->required();

  ReportOptions rep;
  auto* r = app.add_subcommand("report", "Combined cosine, FID and confusion report");
  r->add_option("manifest", rep.manifest, "Language manifest")->required();
  r->add_option("probs_csv", rep.probs, "Optional probability CSV for the query language");
  r->add_option("--true-label", rep.true_label, "True label for the probability rows (default: manifest query)");
  r->add_option("--top", rep.top, "Number of FID targets")->check(CLI::PositiveNumber);
  r->add_option("--seed", rep.seed, "Subsampling seed");
  r->add_option("--epsilon", rep.epsilon_scale, "Covariance regularization scale");
  r->add_option("--out", rep.out, "Report JSON path");
  r->add_option("--threads", rep.threads, "Worker threads (0: all cores); does not affect results");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*c) return cmd_curate(curate, out);
    if (*s) return cmd_similarity(sim, out);
    if (*mc) return cmd_misclass(mis, out);
    if (*t) return cmd_tsne(ts, out);
    if (*sy) return cmd_synth(syn, out);
    if (*r) return cmd_report(rep, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidConfig ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace langsim::cli
