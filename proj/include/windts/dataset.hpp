#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "windts/scada.hpp"

namespace windts::data {

struct NormStats {
  double mean = 0.0;
  double std = 1.0;  // clamped to >= 1e-8 at construction
};

// One instance-normalized univariate series in single-series format, with
// the stats needed to invert the normalization and where it came from.
struct S3Sequence {
  std::vector<double> values;
  std::string channel_name;
  NormStats stats;
  std::string turbine_id;
  std::int64_t start_ts = 0;
};

NormStats compute_stats(std::span<const double> values);
std::vector<double> normalize(std::span<const double> values, const NormStats& stats);
std::vector<double> denormalize(std::span<const double> values, const NormStats& stats);

// Channel-independent split: each channel becomes its own normalized series.
std::array<S3Sequence, scada::kNumChannels> to_s3(const scada::WindowSample& sample);

// Non-overlapping patch tokenization: row i of the token matrix holds source
// elements [i*S, (i+1)*S). The source length must divide evenly.
struct TokenSequence {
  std::size_t n = 0;  // tokens
  std::size_t s = 0;  // patch length
  std::vector<double> v;  // row-major n x s

  std::span<const double> token(std::size_t i) const { return {v.data() + i * s, s}; }
};

TokenSequence tokenize(std::span<const double> series, std::size_t patch);
std::vector<double> detokenize(const TokenSequence& tokens);

// Chronological train/validation/test split. Boundaries come either from
// ratios over the frame's time span or from explicit timestamps; windows are
// cut inside each region with that region's stride, so no window straddles a
// boundary.
struct SplitConfig {
  double train_ratio = 0.5;
  double val_ratio = 0.25;  // remainder is test
  std::optional<std::int64_t> train_end_ts;  // overrides ratios when set
  std::optional<std::int64_t> val_end_ts;
  std::size_t window = 768;        // test windows: context + max horizon
  // train/val window length; 0 falls back to `window`. At the published
  // scale both are 768 (= 8 tokens of 96 = 672 context + 96 target).
  std::size_t train_window = 0;
  std::size_t train_stride = 100;
  std::size_t val_stride = 100;
  std::size_t test_stride = 1;
};

struct Splits {
  std::vector<scada::WindowSample> train;
  std::vector<scada::WindowSample> val;
  std::vector<scada::WindowSample> test;
};

Splits build_splits(const scada::RawScadaFrame& frame, const scada::OutlierLabeling& labels,
                    const SplitConfig& config, std::vector<std::string>* warnings = nullptr);

// Manifest: one row per window sample (id, source file, offsets) for
// reproducible dataset assembly.
void write_manifest_csv(const std::string& path,
                        const std::vector<scada::WindowSample>& samples,
                        const std::string& source_file);

// Binary cache of univariate token-ready series. Little-endian layout:
//   magic "WTSS3CH1" (8 bytes), version u32, record count u64, then per
//   record: n u32, s u32, n*s float64 values.
void write_series_cache(const std::string& path, const std::vector<S3Sequence>& sequences,
                        std::size_t patch);
std::vector<std::vector<double>> read_series_cache(const std::string& path);

}  // namespace windts::data
