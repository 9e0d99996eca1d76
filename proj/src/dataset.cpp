#include "windts/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "windts/cleaning.hpp"
#include "windts/csvio.hpp"

namespace windts::data {

NormStats compute_stats(std::span<const double> values) {
  WINDTS_REQUIRE(!values.empty(), "normalize: empty series");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::max(std::sqrt(var), 1e-8)};
}

std::vector<double> normalize(std::span<const double> values, const NormStats& stats) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - stats.mean) / stats.std;
  return out;
}

std::vector<double> denormalize(std::span<const double> values, const NormStats& stats) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * stats.std + stats.mean;
  return out;
}

std::array<S3Sequence, scada::kNumChannels> to_s3(const scada::WindowSample& sample) {
  sample.validate();
  std::array<S3Sequence, scada::kNumChannels> out;
  for (int c = 0; c < scada::kNumChannels; ++c) {
    S3Sequence& s = out[c];
    s.channel_name = scada::channel_name(static_cast<scada::Channel>(c));
    s.turbine_id = sample.turbine_id;
    s.start_ts = sample.start_ts;
    s.stats = compute_stats(sample.channels[c]);
    s.values = normalize(sample.channels[c], s.stats);
  }
  return out;
}

TokenSequence tokenize(std::span<const double> series, std::size_t patch) {
  WINDTS_REQUIRE(patch >= 1, "tokenize: patch length must be >= 1");
  WINDTS_REQUIRE(series.size() % patch == 0,
                 "tokenize: series length {} is not divisible by patch length {}", series.size(),
                 patch);
  TokenSequence t;
  t.n = series.size() / patch;
  t.s = patch;
  t.v.assign(series.begin(), series.end());
  return t;
}

std::vector<double> detokenize(const TokenSequence& tokens) {
  WINDTS_REQUIRE(tokens.v.size() == tokens.n * tokens.s,
                 "detokenize: token matrix holds {} values for {}x{}", tokens.v.size(), tokens.n,
                 tokens.s);
  return tokens.v;
}

Splits build_splits(const scada::RawScadaFrame& frame, const scada::OutlierLabeling& labels,
                    const SplitConfig& config, std::vector<std::string>* warnings) {
  frame.validate();
  WINDTS_REQUIRE(config.train_ratio > 0 && config.val_ratio >= 0 &&
                     config.train_ratio + config.val_ratio < 1.0 + 1e-12,
                 "build_splits: ratios ({}, {}) must fit in (0,1]", config.train_ratio,
                 config.val_ratio);
  Splits out;
  if (frame.size() == 0) return out;

  const std::int64_t t0 = frame.timestamps.front();
  const std::int64_t t1 = frame.timestamps.back() + frame.interval_s;
  const double span = static_cast<double>(t1 - t0);
  const std::int64_t train_end =
      config.train_end_ts.value_or(t0 + static_cast<std::int64_t>(span * config.train_ratio));
  const std::int64_t val_end = config.val_end_ts.value_or(
      t0 + static_cast<std::int64_t>(span * (config.train_ratio + config.val_ratio)));
  WINDTS_REQUIRE(train_end <= val_end, "build_splits: train boundary {} after val boundary {}",
                 train_end, val_end);

  // Region masks as labelings, so region boundaries break windowing runs.
  auto region_samples = [&](std::int64_t lo, std::int64_t hi, std::size_t window,
                            std::size_t stride) {
    scada::OutlierLabeling masked = labels;
    for (std::size_t i = 0; i < frame.size(); ++i) {
      if (frame.timestamps[i] < lo || frame.timestamps[i] >= hi) {
        masked.reject(i, scada::Reason::MISSING);
      }
    }
    return scada::segment_and_window(frame, masked, window, stride);
  };

  const std::size_t train_window = config.train_window ? config.train_window : config.window;
  out.train = region_samples(t0, train_end, train_window, config.train_stride);
  out.val = region_samples(train_end, val_end, train_window, config.val_stride);
  out.test = region_samples(val_end, t1, config.window, config.test_stride);

  if (warnings) {
    if (out.train.empty()) warnings->push_back("build_splits: empty training split");
    if (out.val.empty()) warnings->push_back("build_splits: empty validation split");
    if (out.test.empty()) warnings->push_back("build_splits: empty test split");
  }
  return out;
}

void write_manifest_csv(const std::string& path,
                        const std::vector<scada::WindowSample>& samples,
                        const std::string& source_file) {
  csv::Writer w(path);
  w.row({"sample_id", "source_file", "turbine_id", "start_ts", "length"});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    w.row({std::to_string(i), source_file, samples[i].turbine_id,
           std::to_string(samples[i].start_ts), std::to_string(samples[i].length)});
  }
}

namespace {
constexpr char kCacheMagic[8] = {'W', 'T', 'S', 'S', '3', 'C', 'H', '1'};
constexpr std::uint32_t kCacheVersion = 1;
}  // namespace

void write_series_cache(const std::string& path, const std::vector<S3Sequence>& sequences,
                        std::size_t patch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open '{}' for writing", path);
  out.write(kCacheMagic, 8);
  const std::uint32_t version = kCacheVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t count = sequences.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& s : sequences) {
    WINDTS_REQUIRE(patch >= 1 && s.values.size() % patch == 0,
                   "series cache: length {} not divisible by patch {}", s.values.size(), patch);
    const std::uint32_t n = static_cast<std::uint32_t>(s.values.size() / patch);
    const std::uint32_t sp = static_cast<std::uint32_t>(patch);
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&sp), sizeof(sp));
    out.write(reinterpret_cast<const char*>(s.values.data()),
              static_cast<std::streamsize>(s.values.size() * sizeof(double)));
  }
}

std::vector<std::vector<double>> read_series_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '{}' for reading", path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCacheMagic, 8) != 0) fail("{}: not a series cache file", path);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  WINDTS_REQUIRE(version == kCacheVersion, "{}: unsupported cache version {}", path, version);
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t n = 0, s = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&s), sizeof(s));
    if (!in) fail("{}: truncated record header at {}", path, i);
    std::vector<double> values(static_cast<std::size_t>(n) * s);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) fail("{}: truncated payload at record {}", path, i);
    out.push_back(std::move(values));
  }
  return out;
}

}  // namespace windts::data
