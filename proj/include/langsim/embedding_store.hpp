#pragma once

// On-disk formats for embedding sets, language manifests and classifier
// probability matrices.
//
// Embedding file (all integers and floats little-endian):
//
//   offset 0   "EMB1"              4 bytes ASCII magic
//   offset 4   dim                 uint32
//   offset 8   N                   uint32
//   offset 12  N*dim float32       row-major payload
//
// The language code is not stored in the file; it comes from the manifest.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "langsim/error.hpp"

namespace langsim {

using FloatMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Embedding vectors of one language, one utterance per row. Stored at the
/// on-disk precision (float32) so that save/load is exact.
class EmbeddingSet {
 public:
  EmbeddingSet(std::string language, FloatMatrix vectors)
      : language_(std::move(language)), vectors_(std::move(vectors)) {
    if (vectors_.rows() < 1 || vectors_.cols() < 1) {
      throw Error(ErrorCode::kDimensionMismatch, "embedding set needs N >= 1 and dim >= 1");
    }
    for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
      for (Eigen::Index j = 0; j < vectors_.cols(); ++j) {
        if (!std::isfinite(vectors_(i, j))) {
          throw Error(ErrorCode::kNonFiniteValue,
                      "non-finite value at (" + std::to_string(i) + "," + std::to_string(j) + ")",
                      Location{static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
        }
      }
    }
  }

  const std::string& language() const noexcept { return language_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(vectors_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }
  const FloatMatrix& vectors() const noexcept { return vectors_; }

  /// Promoted copy for double-precision statistics.
  RowMatrix as_double() const { return vectors_.cast<double>(); }

  bool operator==(const EmbeddingSet& other) const {
    return language_ == other.language_ && vectors_.rows() == other.vectors_.rows() &&
           vectors_.cols() == other.vectors_.cols() && vectors_ == other.vectors_;
  }

 private:
  std::string language_;
  FloatMatrix vectors_;
};

namespace detail {

inline constexpr std::array<char, 4> kEmbeddingMagic = {'E', 'M', 'B', '1'};
inline constexpr std::size_t kEmbeddingHeaderBytes = 12;

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in[at + b]) << (8 * b);
  return v;
}

inline std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(in[at + b]) << (8 * b);
  return v;
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline float get_f32(std::span<const std::uint8_t> in, std::size_t at) {
  return std::bit_cast<float>(get_u32(in, at));
}

/// Appends one "EMB1" block (header + payload).
inline void put_block(std::vector<std::uint8_t>& out, const FloatMatrix& m) {
  out.insert(out.end(), kEmbeddingMagic.begin(), kEmbeddingMagic.end());
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f32(out, m(i, j));
}

struct BlockHeader {
  std::uint32_t dim = 0;
  std::uint32_t rows = 0;
};

inline BlockHeader read_block_header(std::span<const std::uint8_t> bytes, std::size_t at) {
  if (bytes.size() < at + kEmbeddingHeaderBytes ||
      !std::equal(kEmbeddingMagic.begin(), kEmbeddingMagic.end(), bytes.begin() + at)) {
    throw Error(ErrorCode::kMalformedHeader, "missing EMB1 magic or truncated header");
  }
  BlockHeader h{get_u32(bytes, at + 4), get_u32(bytes, at + 8)};
  if (h.dim == 0 || h.rows == 0) {
    throw Error(ErrorCode::kMalformedHeader, "header declares dim=" + std::to_string(h.dim) +
                                                 " N=" + std::to_string(h.rows));
  }
  return h;
}

/// Reads one block starting at `at`; advances `at` past it. Values are not
/// checked for finiteness here.
inline FloatMatrix read_block(std::span<const std::uint8_t> bytes, std::size_t& at) {
  const BlockHeader h = read_block_header(bytes, at);
  const std::uint64_t payload = std::uint64_t{h.dim} * h.rows * 4;
  if (bytes.size() - at - kEmbeddingHeaderBytes < payload) {
    throw Error(ErrorCode::kDimensionMismatch,
                "payload holds " + std::to_string(bytes.size() - at - kEmbeddingHeaderBytes) +
                    " bytes, header requires " + std::to_string(payload));
  }
  FloatMatrix m(h.rows, h.dim);
  std::size_t pos = at + kEmbeddingHeaderBytes;
  for (std::uint32_t i = 0; i < h.rows; ++i)
    for (std::uint32_t j = 0; j < h.dim; ++j, pos += 4) m(i, j) = get_f32(bytes, pos);
  at = pos;
  return m;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path.string());
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Non-empty lines of `text` (LF or CRLF).
inline std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) out.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> cells;
  while (true) {
    const auto p = line.find(sep);
    cells.push_back(trim(line.substr(0, p)));
    if (p == std::string_view::npos) break;
    line.remove_prefix(p + 1);
  }
  return cells;
}

template <typename T>
std::optional<T> parse_real(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  T v{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) return std::nullopt;
  return v;
}

/// Parses a numeric CSV body into rows of equal width.
template <typename T>
std::vector<std::vector<T>> parse_numeric_rows(std::span<const std::string_view> rows) {
  std::vector<std::vector<T>> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto cells = split(rows[i], ',');
    if (!out.empty() && cells.size() != out.front().size()) {
      throw Error(ErrorCode::kRaggedRows,
                  "row " + std::to_string(i) + " has " + std::to_string(cells.size()) +
                      " columns, expected " + std::to_string(out.front().size()),
                  Location{i, cells.size()});
    }
    std::vector<T> values;
    values.reserve(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      auto v = parse_real<T>(cells[j]);
      if (!v) {
        throw Error(ErrorCode::kParseFailure,
                    "cannot parse '" + std::string(cells[j]) + "' at row " + std::to_string(i) + ", col " +
                        std::to_string(j),
                    Location{i, j});
      }
      values.push_back(*v);
    }
    out.push_back(std::move(values));
  }
  return out;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set) {
  std::vector<std::uint8_t> out;
  out.reserve(detail::kEmbeddingHeaderBytes + set.size() * set.dim() * 4);
  detail::put_block(out, set.vectors());
  return out;
}

inline EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes, std::string language = {}) {
  std::size_t at = 0;
  const detail::BlockHeader h = detail::read_block_header(bytes, 0);
  const std::uint64_t expected = detail::kEmbeddingHeaderBytes + std::uint64_t{h.dim} * h.rows * 4;
  if (bytes.size() != expected) {
    throw Error(ErrorCode::kDimensionMismatch,
                "file holds " + std::to_string(bytes.size()) + " bytes, header (dim=" +
                    std::to_string(h.dim) + ", N=" + std::to_string(h.rows) + ") requires " +
                    std::to_string(expected));
  }
  return EmbeddingSet(std::move(language), detail::read_block(bytes, at));
}

inline EmbeddingSet load_embeddings(const std::filesystem::path& path, std::string language = {}) {
  const auto bytes = detail::read_file(path);
  return decode_embeddings(bytes, std::move(language));
}

inline void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  detail::write_file(path, encode_embeddings(set));
}

/// Reads only the 12-byte header; returns (dim, N).
inline std::pair<std::uint32_t, std::uint32_t> peek_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::array<std::uint8_t, detail::kEmbeddingHeaderBytes> head{};
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  const auto h = detail::read_block_header(std::span<const std::uint8_t>(head.data(), got), 0);
  return {h.dim, h.rows};
}

inline EmbeddingSet parse_embedding_csv(std::string_view text, std::string language) {
  const auto rows = detail::lines(text);
  if (rows.empty()) throw Error(ErrorCode::kParseFailure, "CSV has no data rows", Location{0, 0});
  const auto values = detail::parse_numeric_rows<float>(rows);
  FloatMatrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.front().size()));
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = 0; j < values[i].size(); ++j) m(i, j) = values[i][j];
  return EmbeddingSet(std::move(language), std::move(m));
}

inline EmbeddingSet import_csv(const std::filesystem::path& path, std::string language) {
  return parse_embedding_csv(detail::read_text(path), std::move(language));
}

/// Classifier output over a fixed language vocabulary, one utterance per row.
class ProbabilityMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-4;

  ProbabilityMatrix(std::vector<std::string> vocabulary, RowMatrix rows)
      : vocabulary_(std::move(vocabulary)), rows_(std::move(rows)) {
    if (vocabulary_.size() < 2) {
      throw Error(ErrorCode::kMalformedHeader, "vocabulary needs at least 2 language codes");
    }
    std::set<std::string_view> seen;
    for (const auto& code : vocabulary_) {
      if (code.empty()) throw Error(ErrorCode::kMalformedHeader, "empty language code in header");
      if (!seen.insert(code).second) {
        throw Error(ErrorCode::kDuplicateLanguageCode, "language code '" + code + "' repeated");
      }
    }
    if (rows_.rows() < 1) throw Error(ErrorCode::kParseFailure, "probability matrix has no rows");
    if (rows_.cols() != static_cast<Eigen::Index>(vocabulary_.size())) {
      throw Error(ErrorCode::kRaggedRows, "row width differs from vocabulary size");
    }
    for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
      double sum = 0.0;
      for (Eigen::Index j = 0; j < rows_.cols(); ++j) {
        const double p = rows_(i, j);
        if (!(p >= 0.0 && p <= 1.0)) {
          throw Error(ErrorCode::kProbabilityOutOfRange,
                      "entry " + std::to_string(p) + " at (" + std::to_string(i) + "," +
                          std::to_string(j) + ") outside [0,1]",
                      Location{static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        std::ostringstream msg;
        msg << "row " << i << " sums to " << sum;
        throw Error(ErrorCode::kRowSumViolation, msg.str(), Location{static_cast<std::size_t>(i), 0});
      }
    }
  }

  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
  const RowMatrix& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(rows_.rows()); }

 private:
  std::vector<std::string> vocabulary_;
  RowMatrix rows_;
};

/// Header row of language codes, then one row of probabilities per
/// utterance. Data row indices in errors are 0-based and exclude the header.
inline ProbabilityMatrix parse_probability_csv(std::string_view text) {
  const auto all = detail::lines(text);
  if (all.empty()) throw Error(ErrorCode::kMalformedHeader, "empty probability CSV");
  std::vector<std::string> vocab;
  for (auto cell : detail::split(all.front(), ',')) vocab.emplace_back(cell);
  const std::span<const std::string_view> body(all.data() + 1, all.size() - 1);
  const auto values = detail::parse_numeric_rows<double>(body);
  if (!values.empty() && values.front().size() != vocab.size()) {
    throw Error(ErrorCode::kRaggedRows,
                "data rows have " + std::to_string(values.front().size()) + " columns, header has " +
                    std::to_string(vocab.size()),
                Location{0, values.front().size()});
  }
  RowMatrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(vocab.size()));
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = 0; j < values[i].size(); ++j) m(i, j) = values[i][j];
  return ProbabilityMatrix(std::move(vocab), std::move(m));
}

inline ProbabilityMatrix load_probability_matrix(const std::filesystem::path& path) {
  return parse_probability_csv(detail::read_text(path));
}

struct ManifestEntry {
  std::string language;
  std::filesystem::path path;  // as written, relative to the manifest directory
  std::uint32_t count = 0;     // utterances, from the embedding file header
};

/// The query language plus the catalog of reference languages.
///
/// Text form, UTF-8 with LF line endings:
///
///   #query <code>
///   <code>\t<relative-path>
///   ...
struct LanguageManifest {
  std::string query_language;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  const ManifestEntry* find(std::string_view code) const {
    for (const auto& e : entries)
      if (e.language == code) return &e;
    return nullptr;
  }

  std::filesystem::path resolve(const ManifestEntry& e) const { return base_dir / e.path; }

  void validate() const {
    std::set<std::string_view> seen;
    for (const auto& e : entries) {
      if (e.language.empty()) throw Error(ErrorCode::kInvalidManifest, "empty language code");
      if (!seen.insert(e.language).second) {
        throw Error(ErrorCode::kDuplicateLanguageCode, "language code '" + e.language + "' repeated");
      }
    }
    if (query_language.empty() || !seen.contains(query_language)) {
      throw Error(ErrorCode::kInvalidManifest,
                  "query language '" + query_language + "' has no manifest entry");
    }
  }

  std::string to_text() const {
    std::string out = "#query " + query_language + "\n";
    for (const auto& e : entries) out += e.language + "\t" + e.path.generic_string() + "\n";
    return out;
  }
};

/// Parses manifest text. Counts are left at zero.
inline LanguageManifest parse_manifest(std::string_view text, std::filesystem::path base_dir = {}) {
  const auto all = detail::lines(text);
  constexpr std::string_view kQuery = "#query ";
  if (all.empty() || !all.front().starts_with(kQuery)) {
    throw Error(ErrorCode::kInvalidManifest, "first line must be '#query <language-code>'");
  }
  LanguageManifest m;
  m.base_dir = std::move(base_dir);
  m.query_language = std::string(detail::trim(all.front().substr(kQuery.size())));
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].starts_with('#')) continue;
    const auto tab = all[i].find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidManifest,
                  "line " + std::to_string(i + 1) + " lacks a tab separator");
    }
    ManifestEntry e;
    e.language = std::string(detail::trim(all[i].substr(0, tab)));
    e.path = std::string(detail::trim(all[i].substr(tab + 1)));
    if (e.path.empty()) {
      throw Error(ErrorCode::kInvalidManifest, "line " + std::to_string(i + 1) + " has no path");
    }
    m.entries.push_back(std::move(e));
  }
  m.validate();
  return m;
}

/// Parses the manifest and fills each entry's count from its embedding file
/// header.
inline LanguageManifest load_manifest(const std::filesystem::path& path) {
  auto m = parse_manifest(detail::read_text(path), path.parent_path());
  for (auto& e : m.entries) {
    try {
      e.count = peek_embeddings(m.resolve(e)).second;
    } catch (const Error& err) {
      throw Error(ErrorCode::kMissingLanguageFile,
                  "language '" + e.language + "' (" + m.resolve(e).string() + "): " + err.what());
    }
  }
  return m;
}

inline void save_manifest(const LanguageManifest& m, const std::filesystem::path& path) {
  m.validate();
  detail::write_text(path, m.to_text());
}

/// Loads the embedding set of one manifest entry, labelled with its code.
inline EmbeddingSet load_language(const LanguageManifest& m, std::string_view code) {
  const ManifestEntry* e = m.find(code);
  if (e == nullptr) {
    throw Error(ErrorCode::kMissingLanguageFile, "language '" + std::string(code) + "' not in manifest");
  }
  std::vector<std::uint8_t> bytes;
  try {
    bytes = detail::read_file(m.resolve(*e));
  } catch (const Error&) {
    throw Error(ErrorCode::kMissingLanguageFile,
                "language '" + e->language + "': cannot read " + m.resolve(*e).string());
  }
  return decode_embeddings(bytes, e->language);
}

}  // namespace langsim
