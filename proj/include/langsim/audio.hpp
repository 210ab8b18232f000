#pragma once

// Audio curation: RIFF/WAVE decoding, windowed-sinc resampling, RMS-gated
// silence trimming at clip edges and in-order packing of short clips into
// utterances of a target duration.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "langsim/embedding_store.hpp"
#include "langsim/error.hpp"

namespace langsim {

struct AudioClip {
  std::vector<double> samples;  // mono, in [-1, 1]
  std::uint32_t sample_rate = 16000;
  std::string source;

  std::size_t size() const noexcept { return samples.size(); }
  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

struct CurationConfig {
  std::uint32_t target_rate = 16000;
  double silence_threshold_db = -40.0;
  double frame_ms = 20.0;
  double min_duration_s = 10.0;
  double max_duration_s = 15.0;

  void validate() const {
    if (target_rate == 0) throw Error(ErrorCode::kInvalidConfig, "target rate must be positive");
    if (!(min_duration_s > 0.0 && min_duration_s < max_duration_s)) {
      throw Error(ErrorCode::kInvalidConfig, "need 0 < min duration (" + std::to_string(min_duration_s) +
                                                 ") < max duration (" + std::to_string(max_duration_s) + ")");
    }
    if (!(frame_ms > 0.0)) throw Error(ErrorCode::kInvalidConfig, "frame length must be positive");
    if (!(silence_threshold_db < 0.0)) throw Error(ErrorCode::kInvalidConfig, "silence threshold must be < 0 dBFS");
  }
};

namespace wav {

inline constexpr std::uint16_t kFormatPcm = 1;
inline constexpr std::uint16_t kFormatFloat = 3;
inline constexpr std::uint16_t kFormatExtensible = 0xFFFE;

inline std::uint16_t get_u16(std::span<const std::uint8_t> in, std::size_t at) {
  return static_cast<std::uint16_t>(in[at] | (in[at + 1] << 8));
}

inline bool tag_is(std::span<const std::uint8_t> in, std::size_t at, std::string_view tag) {
  return std::equal(tag.begin(), tag.end(), in.begin() + static_cast<std::ptrdiff_t>(at),
                    [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; });
}

}  // namespace wav

/// Decodes 16-bit PCM or 32-bit IEEE float WAV data. Multi-channel input is
/// averaged to mono; 16-bit samples are scaled by 1/32768.
inline AudioClip parse_wav(std::span<const std::uint8_t> bytes, std::string source = {}) {
  if (bytes.size() < 12 || !wav::tag_is(bytes, 0, "RIFF") || !wav::tag_is(bytes, 8, "WAVE")) {
    throw Error(ErrorCode::kMalformedContainer, "not a RIFF/WAVE file: " + source);
  }
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;

  std::size_t at = 12;
  while (at + 8 <= bytes.size()) {
    const std::size_t chunk_size = detail::get_u32(bytes, at + 4);
    const std::size_t body = at + 8;
    const std::size_t available = std::min(chunk_size, bytes.size() - body);

    if (wav::tag_is(bytes, at, "fmt ")) {
      if (available < 16) throw Error(ErrorCode::kMalformedContainer, "fmt chunk too short");
      format = wav::get_u16(bytes, body);
      channels = wav::get_u16(bytes, body + 2);
      rate = detail::get_u32(bytes, body + 4);
      block_align = wav::get_u16(bytes, body + 12);
      bits = wav::get_u16(bytes, body + 14);
      if (format == wav::kFormatExtensible) {
        if (available < 26) throw Error(ErrorCode::kMalformedContainer, "extensible fmt chunk too short");
        format = wav::get_u16(bytes, body + 24);  // first two bytes of the subformat GUID
      }
      if (channels == 0 || rate == 0) {
        throw Error(ErrorCode::kMalformedContainer, "fmt chunk declares zero channels or rate");
      }
      const bool pcm16 = format == wav::kFormatPcm && bits == 16;
      const bool float32 = format == wav::kFormatFloat && bits == 32;
      if (!pcm16 && !float32) {
        throw Error(ErrorCode::kUnsupportedEncoding,
                    "codec id " + std::to_string(format) + " with " + std::to_string(bits) + " bits per sample");
      }
      if (block_align != channels * (bits / 8)) {
        throw Error(ErrorCode::kMalformedContainer, "block alignment disagrees with channels and bit depth");
      }
      have_fmt = true;
    } else if (wav::tag_is(bytes, at, "data")) {
      if (!have_fmt) throw Error(ErrorCode::kMalformedContainer, "data chunk precedes fmt chunk");
      const std::size_t frames = available / block_align;
      AudioClip clip;
      clip.sample_rate = rate;
      clip.source = std::move(source);
      clip.samples.resize(frames);
      const std::size_t width = bits / 8;
      for (std::size_t f = 0; f < frames; ++f) {
        double sum = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t pos = body + f * block_align + c * width;
          if (format == wav::kFormatPcm) {
            sum += static_cast<double>(static_cast<std::int16_t>(wav::get_u16(bytes, pos)));
          } else {
            const float v = detail::get_f32(bytes, pos);
            if (!std::isfinite(v)) {
              throw Error(ErrorCode::kNonFiniteValue, "non-finite float sample at frame " + std::to_string(f));
            }
            sum += std::clamp(static_cast<double>(v), -1.0, 1.0);
          }
        }
        const double mono = sum / static_cast<double>(channels);
        clip.samples[f] = format == wav::kFormatPcm ? mono / 32768.0 : mono;
      }
      return clip;
    }
    at = body + chunk_size + (chunk_size & 1);
  }
  if (!have_fmt) throw Error(ErrorCode::kMalformedContainer, "no fmt chunk");
  throw Error(ErrorCode::kMissingDataChunk, "no data chunk");
}

inline AudioClip load_wav(const std::filesystem::path& path) {
  return parse_wav(detail::read_file(path), path.string());
}

/// Round half away from zero, clipped to the int16 range.
inline std::int16_t quantize_pcm16(double sample) {
  const double scaled = std::round(sample * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

/// Mono 16-bit PCM WAV bytes.
inline std::vector<std::uint8_t> encode_wav16(const AudioClip& clip) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  auto tag = [&out](std::string_view t) { out.insert(out.end(), t.begin(), t.end()); };
  auto u16 = [&out](std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  tag("RIFF");
  detail::put_u32(out, 36 + data_bytes);
  tag("WAVE");
  tag("fmt ");
  detail::put_u32(out, 16);
  u16(wav::kFormatPcm);
  u16(1);
  detail::put_u32(out, clip.sample_rate);
  detail::put_u32(out, clip.sample_rate * 2);
  u16(2);
  u16(16);
  tag("data");
  detail::put_u32(out, data_bytes);
  for (double s : clip.samples) u16(static_cast<std::uint16_t>(quantize_pcm16(s)));
  return out;
}

inline void save_wav16(const AudioClip& clip, const std::filesystem::path& path) {
  detail::write_file(path, encode_wav16(clip));
}

namespace detail {

inline constexpr double kKaiserBeta = 8.6;
inline constexpr int kResampleHalfTaps = 64;

/// Kaiser window w(r), r in [0, 1], tabulated and linearly interpolated.
class KaiserTable {
 public:
  static constexpr std::size_t kPoints = 8192;

  KaiserTable() {
    const double norm = std::cyl_bessel_i(0.0, kKaiserBeta);
    for (std::size_t i = 0; i <= kPoints; ++i) {
      const double r = static_cast<double>(i) / kPoints;
      table_[i] = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm;
    }
  }

  double operator()(double r) const {
    r = std::abs(r);
    if (r >= 1.0) return 0.0;
    const double pos = r * kPoints;
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return table_[i] + frac * (table_[i + 1] - table_[i]);
  }

 private:
  std::array<double, kPoints + 1> table_{};
};

inline const KaiserTable& kaiser_table() {
  static const KaiserTable table;
  return table;
}

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace detail

/// Kaiser-windowed sinc interpolation. The low-pass cutoff sits at the lower
/// of the two Nyquist rates and the kernel spans 64 taps of the lower rate
/// on each side. Output length is round(N * target / source).
inline AudioClip resample(const AudioClip& clip, std::uint32_t target_rate) {
  if (target_rate == 0 || clip.sample_rate == 0) {
    throw Error(ErrorCode::kInvalidConfig, "sample rates must be positive");
  }
  if (target_rate == clip.sample_rate) return clip;

  const std::uint64_t n = clip.samples.size();
  const std::uint64_t src = clip.sample_rate;
  const std::uint64_t out_len = (n * target_rate + src / 2) / src;
  const double step = static_cast<double>(src) / static_cast<double>(target_rate);
  const double cutoff = std::min(1.0, static_cast<double>(target_rate) / static_cast<double>(src));
  const double half_width = detail::kResampleHalfTaps / cutoff;
  const auto& window = detail::kaiser_table();

  AudioClip out;
  out.sample_rate = target_rate;
  out.source = clip.source;
  out.samples.resize(out_len);
  for (std::uint64_t m = 0; m < out_len; ++m) {
    const double t = static_cast<double>(m) * step;
    const auto first = static_cast<std::int64_t>(std::ceil(t - half_width));
    const auto last = static_cast<std::int64_t>(std::floor(t + half_width));
    double acc = 0.0;
    double gain = 0.0;
    for (std::int64_t k = first; k <= last; ++k) {
      const double u = t - static_cast<double>(k);
      const double h = cutoff * detail::sinc(cutoff * u) * window(u / half_width);
      gain += h;
      if (k >= 0 && static_cast<std::uint64_t>(k) < n) acc += h * clip.samples[static_cast<std::size_t>(k)];
    }
    // Normalize by the full-kernel DC gain at this fractional phase.
    out.samples[m] = gain != 0.0 ? std::clamp(acc / gain, -1.0, 1.0) : 0.0;
  }
  return out;
}

/// Samples [begin, end) kept by trim_silence.
struct TrimBounds {
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline std::size_t frame_length(std::uint32_t sample_rate, double frame_ms) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frame_ms * sample_rate / 1000.0)));
}

/// Frames are non-overlapping windows from the start of the clip; the last
/// frame may be partial. A frame is silent when its RMS is below the
/// threshold in dBFS.
inline TrimBounds trim_bounds(const AudioClip& clip, const CurationConfig& config) {
  const std::size_t frame = frame_length(clip.sample_rate, config.frame_ms);
  const double threshold = std::pow(10.0, config.silence_threshold_db / 20.0);
  const double threshold_sq = threshold * threshold;
  const std::size_t n = clip.samples.size();

  auto loud = [&](std::size_t start) {
    const std::size_t stop = std::min(n, start + frame);
    double energy = 0.0;
    for (std::size_t i = start; i < stop; ++i) energy += clip.samples[i] * clip.samples[i];
    return energy / static_cast<double>(stop - start) >= threshold_sq;
  };

  std::size_t begin = 0;
  while (begin < n && !loud(begin)) begin += frame;
  if (begin >= n) return {0, 0};
  std::size_t last = ((n - 1) / frame) * frame;
  while (last > begin && !loud(last)) last -= frame;
  return {begin, std::min(n, last + frame)};
}

/// Removes leading and trailing silent frames; interior silence is kept.
/// An all-silent clip comes back empty.
inline AudioClip trim_silence(const AudioClip& clip, const CurationConfig& config) {
  const TrimBounds b = trim_bounds(clip, config);
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.source = clip.source;
  out.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(b.begin),
                     clip.samples.begin() + static_cast<std::ptrdiff_t>(b.end));
  return out;
}

struct SourceSpan {
  std::string path;
  std::size_t start_sample = 0;
  std::size_t end_sample = 0;
};

struct PackedUtterance {
  AudioClip clip;
  std::vector<SourceSpan> sources;
  /// Shorter than the minimum duration.
  bool flagged_remainder = false;
};

/// Greedy in-order packing. Clips are appended until the output reaches the
/// minimum duration; a clip that would push it past the maximum starts the
/// next output instead. Clips longer than the maximum pass through alone.
/// Outputs below the minimum are flagged. Source spans index into each input
/// clip.
inline std::vector<PackedUtterance> concatenate_to_target(std::span<const AudioClip> clips,
                                                          const CurationConfig& config) {
  config.validate();
  std::vector<PackedUtterance> out;
  const double rate = config.target_rate;
  const double min_samples = config.min_duration_s * rate;
  const double max_samples = config.max_duration_s * rate;

  PackedUtterance current;
  current.clip.sample_rate = config.target_rate;
  auto flush = [&] {
    if (current.clip.samples.empty()) return;
    current.flagged_remainder = static_cast<double>(current.clip.size()) < min_samples;
    out.push_back(std::move(current));
    current = PackedUtterance{};
    current.clip.sample_rate = config.target_rate;
  };

  for (const AudioClip& clip : clips) {
    if (clip.sample_rate != config.target_rate) {
      throw Error(ErrorCode::kSampleRateMismatch, "clip '" + clip.source + "' is at " +
                                                      std::to_string(clip.sample_rate) + " Hz, expected " +
                                                      std::to_string(config.target_rate));
    }
    if (clip.samples.empty()) continue;
    const auto len = static_cast<double>(clip.size());
    if (len > max_samples) {
      flush();
      current.clip.samples = clip.samples;
      current.sources.push_back({clip.source, 0, clip.size()});
      flush();
      continue;
    }
    if (!current.clip.samples.empty() && static_cast<double>(current.clip.size()) + len > max_samples) flush();
    current.clip.samples.insert(current.clip.samples.end(), clip.samples.begin(), clip.samples.end());
    current.sources.push_back({clip.source, 0, clip.size()});
    if (static_cast<double>(current.clip.size()) >= min_samples) flush();
  }
  flush();
  return out;
}

struct CurationOutput {
  std::string output_path;  // relative to the output directory
  double duration_s = 0.0;
  std::vector<SourceSpan> sources;  // spans in the resampled source timeline
  bool flagged_remainder = false;
};

struct CurationError {
  std::string path;
  std::string message;
};

struct CurationManifest {
  CurationConfig config;
  std::vector<CurationOutput> outputs;
  std::vector<std::string> dropped;  // silent after trimming
  std::vector<CurationError> errors;
};

/// .wav files (any case) directly inside `dir`, sorted by file name.
inline std::vector<std::filesystem::path> list_wav_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

/// Parse, resample, trim and pack every WAV file in `in_dir`; write the
/// packed utterances to `out_dir` as 16-bit PCM. Per-file failures are
/// recorded in the manifest and do not stop the batch.
inline CurationManifest curate_directory(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                                         const CurationConfig& config) {
  config.validate();
  std::error_code ec;
  if (!std::filesystem::is_directory(in_dir, ec)) {
    throw Error(ErrorCode::kIoFailure, "input directory not readable: " + in_dir.string());
  }
  CurationManifest manifest;
  manifest.config = config;

  std::vector<AudioClip> trimmed;
  std::vector<std::size_t> offsets;
  for (const auto& path : list_wav_files(in_dir)) {
    const std::string name = path.filename().string();
    try {
      AudioClip clip = resample(parse_wav(detail::read_file(path), name), config.target_rate);
      const TrimBounds b = trim_bounds(clip, config);
      if (b.end == b.begin) {
        manifest.dropped.push_back(name);
        continue;
      }
      offsets.push_back(b.begin);
      clip.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(b.begin),
                          clip.samples.begin() + static_cast<std::ptrdiff_t>(b.end));
      trimmed.push_back(std::move(clip));
    } catch (const Error& e) {
      manifest.errors.push_back({name, e.what()});
    }
  }

  const auto packed = concatenate_to_target(trimmed, config);
  if (!packed.empty()) std::filesystem::create_directories(out_dir);
  std::size_t next_source = 0;
  for (std::size_t i = 0; i < packed.size(); ++i) {
    std::string name = std::to_string(i);
    name = "utt_" + std::string(name.size() < 5 ? 5 - name.size() : 0, '0') + name + ".wav";
    save_wav16(packed[i].clip, out_dir / name);
    CurationOutput o{name, packed[i].clip.duration_s(), {}, packed[i].flagged_remainder};
    for (const auto& span : packed[i].sources) {
      const std::size_t offset = offsets[next_source++];
      o.sources.push_back({span.path, span.start_sample + offset, span.end_sample + offset});
    }
    manifest.outputs.push_back(std::move(o));
  }
  return manifest;
}

}  // namespace langsim
