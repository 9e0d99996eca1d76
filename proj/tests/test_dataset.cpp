#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>

#include "windts/dataset.hpp"
#include "windts/rng.hpp"

using namespace windts;
using namespace windts::data;

namespace {

scada::WindowSample sample_of(std::vector<double> base) {
  scada::WindowSample s;
  s.turbine_id = "T001";
  s.start_ts = 1704067200;
  s.length = base.size();
  for (int c = 0; c < scada::kNumChannels; ++c) {
    s.channels[c] = base;
    for (auto& v : s.channels[c]) v += c;  // distinct per channel
  }
  return s;
}

scada::RawScadaFrame monotone_frame(std::size_t n) {
  scada::RawScadaFrame f;
  f.turbine_id = "T001";
  for (std::size_t i = 0; i < n; ++i) {
    f.timestamps.push_back(1704067200 + static_cast<std::int64_t>(i) * f.interval_s);
    for (int c = 0; c < scada::kNumChannels; ++c) {
      f.channels[c].push_back(static_cast<double>(i % 97));
    }
  }
  return f;
}

}  // namespace

TEST_CASE("to_s3 instance normalization") {
  // constant channel collapses to zeros with the std clamped
  scada::WindowSample constant = sample_of(std::vector<double>(16, 5.0));
  const auto s3 = to_s3(constant);
  for (double v : s3[0].values) CHECK(v == 0.0);
  CHECK(s3[0].stats.mean == 5.0);
  CHECK(s3[0].stats.std == 1e-8);

  // alternating 0/1: mean 0.5, std 0.5, values +-1
  std::vector<double> alt(16);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? 1.0 : 0.0;
  const auto s3b = to_s3(sample_of(alt));
  CHECK(s3b[0].stats.mean == doctest::Approx(0.5));
  CHECK(s3b[0].stats.std == doctest::Approx(0.5));
  for (std::size_t i = 0; i < alt.size(); ++i) {
    CHECK(s3b[0].values[i] == doctest::Approx(i % 2 ? 1.0 : -1.0));
  }

  // normalized output has near-zero mean and unit std
  Rng rng(3);
  std::vector<double> noise(768);
  for (auto& v : noise) v = rng.normal(3.0, 7.0);
  const auto s3c = to_s3(sample_of(noise));
  double mean = 0.0;
  for (double v : s3c[2].values) mean += v;
  mean /= 768.0;
  CHECK(std::fabs(mean) < 1e-9);
  double var = 0.0;
  for (double v : s3c[2].values) var += (v - mean) * (v - mean);
  CHECK(std::fabs(std::sqrt(var / 768.0) - 1.0) < 1e-9);

  // denormalize inverts
  const auto back = denormalize(s3c[2].values, s3c[2].stats);
  for (std::size_t i = 0; i < noise.size(); ++i) {
    CHECK(back[i] == doctest::Approx(noise[i] + 2.0).epsilon(1e-9));  // channel 2 offset
  }
}

TEST_CASE("denormalize basics") {
  const std::vector<double> zeros(4, 0.0);
  const auto a = denormalize(zeros, {5.0, 2.0});
  for (double v : a) CHECK(v == 5.0);
  const std::vector<double> xs = {1.0, -2.0, 0.25};
  const auto b = denormalize(xs, {0.0, 1.0});
  CHECK(b == xs);
}

TEST_CASE("tokenize follows the non-overlapping patch rule") {
  const std::vector<double> xs = {1, 2, 3, 4, 5, 6};
  const TokenSequence t = tokenize(xs, 3);
  CHECK(t.n == 2);
  CHECK(t.s == 3);
  CHECK(t.token(0)[0] == 1.0);
  CHECK(t.token(0)[2] == 3.0);
  CHECK(t.token(1)[0] == 4.0);

  // published geometry: 768 points -> 8 patches of 96
  std::vector<double> series(768, 0.0);
  CHECK(tokenize(series, 96).n == 8);

  // single token equal to the series
  const TokenSequence whole = tokenize(xs, 6);
  CHECK(whole.n == 1);
  CHECK(detokenize(whole) == xs);

  // 1x1 edge
  const TokenSequence one = tokenize(std::vector<double>{7.0}, 1);
  CHECK(detokenize(one) == std::vector<double>{7.0});

  CHECK_THROWS_AS(tokenize(xs, 4), ValidationError);
}

TEST_CASE("tokenize/detokenize is a bijection on random series") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t s = 1 + rng.below(16);
    const std::size_t n = 1 + rng.below(12);
    std::vector<double> xs(n * s);
    for (auto& v : xs) v = rng.normal(0.0, 1.0);
    const auto round = detokenize(tokenize(xs, s));
    CHECK(std::memcmp(round.data(), xs.data(), xs.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("build_splits: chronological boundaries and per-split strides") {
  // 12 "months" of 60 points each, ratio 6/3/3
  const std::size_t n = 720;
  scada::RawScadaFrame f = monotone_frame(n);
  SplitConfig cfg;
  cfg.train_ratio = 0.5;
  cfg.val_ratio = 0.25;
  cfg.window = 60;
  cfg.train_stride = 60;
  cfg.val_stride = 60;
  cfg.test_stride = 60;
  const Splits s = build_splits(f, scada::OutlierLabeling::all_keep(n), cfg);
  CHECK(s.train.size() == 6);
  CHECK(s.val.size() == 3);
  CHECK(s.test.size() == 3);
  // boundary at month 6 and 9
  CHECK(s.val.front().start_ts == f.timestamps[360]);
  CHECK(s.test.front().start_ts == f.timestamps[540]);

  // no window straddles a boundary
  for (const auto& w : s.train) {
    CHECK(w.start_ts + static_cast<std::int64_t>((w.length - 1) * f.interval_s) <
          f.timestamps[360]);
  }

  // test stride 1 yields the dense set
  SplitConfig dense = cfg;
  dense.test_stride = 1;
  const Splits sd = build_splits(f, scada::OutlierLabeling::all_keep(n), dense);
  CHECK(sd.test.size() == 180 - 60 + 1);
}

TEST_CASE("build_splits: degenerate splits warn instead of failing") {
  scada::RawScadaFrame f = monotone_frame(100);
  SplitConfig cfg;
  cfg.window = 30;
  cfg.train_ratio = 0.98;
  cfg.val_ratio = 0.01;
  std::vector<std::string> warnings;
  const Splits s = build_splits(f, scada::OutlierLabeling::all_keep(100), cfg, &warnings);
  CHECK(s.train.size() > 0);
  CHECK(s.val.empty());
  CHECK(s.test.empty());
  CHECK(warnings.size() == 2);

  // a single short frame lands in exactly one split
  scada::RawScadaFrame tiny = monotone_frame(40);
  SplitConfig one;
  one.window = 30;
  one.train_ratio = 1.0;
  one.val_ratio = 0.0;
  one.train_stride = 100;
  std::vector<std::string> w2;
  const Splits s2 = build_splits(tiny, scada::OutlierLabeling::all_keep(40), one, &w2);
  CHECK(s2.train.size() == 1);
  CHECK(s2.val.empty());
  CHECK(s2.test.empty());
}

TEST_CASE("explicit date boundaries override ratios") {
  scada::RawScadaFrame f = monotone_frame(300);
  SplitConfig cfg;
  cfg.window = 50;
  cfg.train_stride = 50;
  cfg.val_stride = 50;
  cfg.test_stride = 50;
  cfg.train_end_ts = f.timestamps[100];
  cfg.val_end_ts = f.timestamps[200];
  const Splits s = build_splits(f, scada::OutlierLabeling::all_keep(300), cfg);
  CHECK(s.train.size() == 2);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 2);
}

TEST_CASE("series cache round trip") {
  Rng rng(14);
  std::vector<S3Sequence> seqs(3);
  for (auto& s : seqs) {
    s.values.resize(24);
    for (auto& v : s.values) v = rng.normal(0.0, 1.0);
  }
  const std::string path = "/tmp/windts_cache_test.bin";
  write_series_cache(path, seqs, 8);
  const auto loaded = read_series_cache(path);
  REQUIRE(loaded.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::memcmp(loaded[i].data(), seqs[i].values.data(), 24 * sizeof(double)) == 0);
  }
  std::remove(path.c_str());
}

TEST_CASE("channel independence: other channels never leak into a channel's S3 series") {
  Rng rng(9);
  std::vector<double> base(64);
  for (auto& v : base) v = rng.normal(0.0, 1.0);
  scada::WindowSample a = sample_of(base);
  scada::WindowSample b = a;
  // permute another channel entirely
  std::reverse(b.channels[3].begin(), b.channels[3].end());
  const auto sa = to_s3(a);
  const auto sb = to_s3(b);
  CHECK(std::memcmp(sa[0].values.data(), sb[0].values.data(), 64 * sizeof(double)) == 0);
  CHECK(std::memcmp(sa[1].values.data(), sb[1].values.data(), 64 * sizeof(double)) == 0);
}
