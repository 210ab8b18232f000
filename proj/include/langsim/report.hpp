#pragma once

// JSON and CSV renderings of results. Field names here are the stable
// output contract of the command-line tool.

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "langsim/audio.hpp"
#include "langsim/classification.hpp"
#include "langsim/projection.hpp"

namespace langsim {

using Json = nlohmann::ordered_json;

/// Shortest decimal form that parses back to the same double.
inline std::string format_real(double v) {
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline Json to_json(const SimilarityReport& r) {
  Json j;
  j["metric"] = to_string(r.metric);
  j["direction"] = to_string(r.direction);
  j["k"] = r.k;
  j["seed"] = r.seed ? Json(*r.seed) : Json(nullptr);
  Json entries = Json::array();
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    Json row;
    row["rank"] = i + 1;
    row["language"] = e.language;
    row["value"] = e.value;
    if (e.sample_count_query) row["sample_count_query"] = *e.sample_count_query;
    if (e.sample_count_target) row["sample_count_target"] = *e.sample_count_target;
    entries.push_back(std::move(row));
  }
  j["entries"] = std::move(entries);
  return j;
}

/// `rank,language,value` with a header row.
inline std::string to_csv(const SimilarityReport& r) {
  std::string out = "rank,language,value\n";
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    out += std::to_string(i + 1) + "," + r.entries[i].language + "," + format_real(r.entries[i].value) + "\n";
  }
  return out;
}

inline Json to_json(const ConfusionProfile& p) {
  Json j;
  j["true_label"] = p.true_label;
  j["total"] = p.total;
  j["overall_mr"] = p.overall_mr;
  Json rates = Json::object();
  for (const auto& [code, rate] : p.per_language) rates[code] = rate;
  j["per_language"] = std::move(rates);
  return j;
}

inline Json to_json(const CurationConfig& c) {
  Json j;
  j["target_rate"] = c.target_rate;
  j["silence_threshold_db"] = c.silence_threshold_db;
  j["frame_ms"] = c.frame_ms;
  j["min_duration_s"] = c.min_duration_s;
  j["max_duration_s"] = c.max_duration_s;
  return j;
}

inline Json to_json(const CurationManifest& m) {
  Json j;
  j["config"] = to_json(m.config);
  Json outputs = Json::array();
  for (const auto& o : m.outputs) {
    Json row;
    row["output_path"] = o.output_path;
    row["duration_s"] = o.duration_s;
    Json sources = Json::array();
    for (const auto& s : o.sources) {
      sources.push_back(Json{{"path", s.path}, {"start_sample", s.start_sample}, {"end_sample", s.end_sample}});
    }
    row["sources"] = std::move(sources);
    row["flagged_remainder"] = o.flagged_remainder;
    outputs.push_back(std::move(row));
  }
  j["outputs"] = std::move(outputs);
  j["dropped"] = m.dropped;
  Json errors = Json::array();
  for (const auto& e : m.errors) errors.push_back(Json{{"path", e.path}, {"message", e.message}});
  j["errors"] = std::move(errors);
  return j;
}

inline Json to_json(const ProjectionConfig& c) {
  Json j;
  j["perplexity"] = c.perplexity;
  j["iterations"] = c.iterations;
  j["early_exaggeration"] = c.early_exaggeration;
  j["exaggeration_iterations"] = c.exaggeration_iterations;
  j["learning_rate"] = c.learning_rate;
  j["initial_momentum"] = c.initial_momentum;
  j["final_momentum"] = c.final_momentum;
  j["momentum_switch_iteration"] = c.momentum_switch_iteration;
  j["seed"] = c.seed;
  return j;
}

/// `language,x,y`, one row per point.
inline std::string to_csv(const Projection2D& p) {
  std::string out = "language,x,y\n";
  for (Eigen::Index i = 0; i < p.points.rows(); ++i) {
    out += p.labels[static_cast<std::size_t>(i)] + "," + format_real(p.points(i, 0)) + "," +
           format_real(p.points(i, 1)) + "\n";
  }
  return out;
}

/// Top-level document every command emits.
struct RunReport {
  std::string command;
  Json config = Json::object();
  std::optional<std::uint64_t> seed;
  Json results = Json::object();
  std::vector<std::string> warnings;

  Json to_json() const {
    Json j;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed ? Json(*seed) : Json(nullptr);
    j["results"] = results;
    j["warnings"] = warnings;
    return j;
  }

  std::string dump() const { return to_json().dump(2) + "\n"; }
};

}  // namespace langsim
