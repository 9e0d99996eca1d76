#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "windts/evaluation.hpp"
#include "windts/rng.hpp"

using namespace windts;
using namespace windts::eval;

namespace {

model::Model zero_head_model(int patch = 4, int context_tokens = 3) {
  model::ModelConfig cfg = model::ModelConfig::preset_timer();
  cfg.tf.layers = 1;
  cfg.tf.model_dim = 8;
  cfg.tf.ffn_hidden = 16;
  cfg.tf.heads = 2;
  cfg.tf.patch = patch;
  cfg.tf.context_tokens = context_tokens;
  cfg.tf.dropout = 0.0;
  model::Model m = model::make_model(cfg, 1);
  auto wd = m.params.at("head.wd").mutable_data();
  std::fill(wd.begin(), wd.end(), 0.0);
  return m;
}

std::vector<scada::WindowSample> windows_of(std::size_t count, std::size_t length,
                                            std::uint64_t seed, bool constant = false) {
  Rng rng(seed);
  std::vector<scada::WindowSample> out;
  for (std::size_t i = 0; i < count; ++i) {
    scada::WindowSample w;
    w.turbine_id = "T001";
    w.start_ts = static_cast<std::int64_t>(i) * 600;
    w.length = length;
    for (int c = 0; c < scada::kNumChannels; ++c) {
      w.channels[c].resize(length);
      double x = rng.normal(0.0, 1.0);
      for (auto& v : w.channels[c]) {
        if (constant) {
          v = 3.5;
        } else {
          x = 0.9 * x + rng.normal(0.0, 0.3);
          v = x;
        }
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

TEST_CASE("mse basics") {
  const std::vector<double> a = {1.0, 2.0};
  CHECK(mse(a, a) == 0.0);
  const std::vector<double> b = {3.0, 4.0};
  CHECK(mse(a, b) == doctest::Approx(4.0));  // uniform error of 2
  const std::vector<double> t = {2.0, 4.0};
  CHECK(mse(a, t) == doctest::Approx(2.5));
  CHECK_THROWS_AS(mse({}, {}), ValidationError);
  CHECK_THROWS_AS(mse(a, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("zero model on constant channels is a perfect oracle") {
  // constant context -> normalized truth is exactly 0, and the zero-head
  // model predicts exactly 0
  const model::Model m = zero_head_model();
  EvalOptions opt;
  opt.horizons = {1, 2, 4};
  opt.context_len = 12;
  const EvalReport r =
      evaluate_horizons(m, "zero", "scratch", windows_of(3, 16, 5, true), opt);
  REQUIRE(r.rows.size() == 3);
  for (const auto& row : r.rows) CHECK(row.mse == 0.0);
}

TEST_CASE("zero model MSE equals the mean squared normalized target") {
  const model::Model m = zero_head_model();
  EvalOptions opt;
  opt.horizons = {4};
  opt.context_len = 12;
  const auto windows = windows_of(6, 16, 9);
  const EvalReport r = evaluate_horizons(m, "zero", "scratch", windows, opt);

  // independent oracle: expected MSE = mean over windows/channels/steps of
  // the squared context-normalized target
  double sq = 0.0;
  std::int64_t n = 0;
  for (const auto& w : windows) {
    for (int c = 0; c < scada::kNumChannels; ++c) {
      const std::span<const double> ctx(w.channels[c].data(), 12);
      const data::NormStats stats = data::compute_stats(ctx);
      for (int h = 0; h < 4; ++h) {
        const double t = (w.channels[c][12 + h] - stats.mean) / stats.std;
        sq += t * t;
        ++n;
      }
    }
  }
  CHECK(r.rows[0].mse == doctest::Approx(sq / static_cast<double>(n)).epsilon(1e-12));
  CHECK(r.rows[0].mse > 0.25);  // sanity: near the target variance, not 0
}

TEST_CASE("horizon slicing is prefix-consistent with dedicated short forecasts") {
  model::ModelConfig cfg = model::ModelConfig::preset_timer();
  cfg.tf.layers = 2;
  cfg.tf.model_dim = 16;
  cfg.tf.ffn_hidden = 32;
  cfg.tf.heads = 2;
  cfg.tf.patch = 4;
  cfg.tf.context_tokens = 3;
  cfg.tf.dropout = 0.0;
  const model::Model m = model::make_model(cfg, 7);
  const auto windows = windows_of(4, 20, 11);

  EvalOptions both;
  both.horizons = {1, 8};
  both.context_len = 12;
  EvalOptions single;
  single.horizons = {1};
  single.context_len = 12;
  const EvalReport r_both = evaluate_horizons(m, "m", "scratch", windows, both);
  const EvalReport r_single = evaluate_horizons(m, "m", "scratch", windows, single);
  // the H=1 slice of an (iterated) H=8 forecast scores identically to a
  // dedicated H=1 run: iteration 1 is bitwise the same
  CHECK(r_both.rows[0].horizon == 1);
  CHECK(r_both.rows[0].mse == r_single.rows[0].mse);
}

TEST_CASE("short windows are skipped and counted; horizon set {1} gives one row") {
  const model::Model m = zero_head_model();
  EvalOptions opt;
  opt.horizons = {1};
  opt.context_len = 12;
  auto windows = windows_of(3, 16, 3);
  windows.push_back(windows_of(1, 12, 4)[0]);  // too short: 12 < 12 + 1
  const EvalReport r = evaluate_horizons(m, "zero", "scratch", windows, opt);
  CHECK(r.rows.size() == 1);
  CHECK(r.rows[0].n_windows == 3);
  CHECK(r.skipped_windows == 1);
}

TEST_CASE("averaging order invariance for equal-count windows") {
  const model::Model m = zero_head_model();
  EvalOptions opt;
  opt.horizons = {4};
  opt.context_len = 12;
  const auto windows = windows_of(5, 16, 21);
  const EvalReport all = evaluate_horizons(m, "m", "scratch", windows, opt);
  // equal counts per window: the pooled MSE equals the mean of per-window MSEs
  double mean_of_means = 0.0;
  for (const auto& w : windows) {
    const EvalReport one = evaluate_horizons(m, "m", "scratch", {w}, opt);
    mean_of_means += one.rows[0].mse;
  }
  mean_of_means /= static_cast<double>(windows.size());
  CHECK(all.rows[0].mse == doctest::Approx(mean_of_means).epsilon(1e-12));
}

TEST_CASE("subsample indices are deterministic and nested") {
  const auto small = subsample_indices(100, 0.1, 9);
  const auto large = subsample_indices(100, 0.5, 9);
  CHECK(small.size() == 10);
  CHECK(large.size() == 50);
  const std::set<std::size_t> large_set(large.begin(), large.end());
  for (std::size_t i : small) CHECK(large_set.count(i) == 1);
  CHECK(subsample_indices(100, 0.1, 9) == small);
  // fraction 1.0 keeps everything
  CHECK(subsample_indices(7, 1.0, 3).size() == 7);
  CHECK_THROWS_AS(subsample_indices(10, 0.0, 1), ValidationError);
}

TEST_CASE("report rendering: csv round trip, markdown best flags, determinism") {
  EvalReport report;
  for (const std::string& mid : {"a", "b", "c"}) {
    for (int h : {1, 6}) {
      EvalRow r;
      r.model_id = mid;
      r.training_mode = "scratch";
      r.horizon = h;
      r.mse = (mid == "b" ? 0.1 : 0.2) * h;
      r.n_windows = 4;
      r.seed = 3;
      r.data_fraction = 1.0;
      r.turbine_scope = "all";
      report.rows.push_back(r);
    }
  }
  const std::string dir = "/tmp/windts_report_test";
  std::filesystem::remove_all(dir);
  render_report(report, dir, true);

  const EvalReport loaded = read_report_csv(dir + "/report.csv");
  REQUIRE(loaded.rows.size() == report.rows.size());
  for (std::size_t i = 0; i < loaded.rows.size(); ++i) {
    CHECK(loaded.rows[i].model_id == report.rows[i].model_id);
    CHECK(loaded.rows[i].mse == report.rows[i].mse);
  }

  std::ifstream md(dir + "/report.md");
  std::string text((std::istreambuf_iterator<char>(md)), std::istreambuf_iterator<char>());
  // exactly one bold flag per horizon column (model b wins both)
  CHECK(std::count(text.begin(), text.end(), '*') == 2 * 2 * 2);
  CHECK(text.find("**0.1000**") != std::string::npos);
  CHECK(std::filesystem::exists(dir + "/mse_vs_horizon.svg"));

  // byte-identical rendering on rerun
  std::ifstream c1(dir + "/report.csv");
  std::string first((std::istreambuf_iterator<char>(c1)), std::istreambuf_iterator<char>());
  render_report(report, dir, true);
  std::ifstream c2(dir + "/report.csv");
  std::string second((std::istreambuf_iterator<char>(c2)), std::istreambuf_iterator<char>());
  CHECK(first == second);

  // empty report still renders valid files
  render_report(EvalReport{}, dir + "/empty", false);
  CHECK(std::filesystem::exists(dir + "/empty/report.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("one-turbine protocol on synthetic clones averages to any trial") {
  // three "turbines" sharing identical splits: per-trial rows are equal, so
  // the average equals any single trial
  model::ModelConfig cfg = model::ModelConfig::preset_timer();
  cfg.tf.layers = 1;
  cfg.tf.model_dim = 8;
  cfg.tf.ffn_hidden = 16;
  cfg.tf.heads = 2;
  cfg.tf.patch = 4;
  cfg.tf.context_tokens = 2;
  cfg.tf.dropout = 0.0;

  data::Splits splits;
  splits.train = windows_of(3, 12, 31);
  splits.val = windows_of(2, 12, 32);
  splits.test = windows_of(2, 12, 33);

  std::map<std::string, data::Splits> per_turbine;
  per_turbine["T001"] = splits;
  per_turbine["T002"] = splits;
  per_turbine["T003"] = splits;

  Candidate cand;
  cand.id = "timer-scratch";
  cand.config = cfg;
  cand.mode = Candidate::Mode::TRAIN;
  cand.tc = train::TrainConfig::defaults(train::TrainMode::SCRATCH);
  cand.tc.epochs = 2;
  cand.tc.initial_lr = 1e-3;
  cand.tc.batch_size = 8;
  cand.tc.seed = 5;

  EvalOptions opt;
  opt.horizons = {1, 4};
  opt.context_len = 8;
  const EvalReport avg = one_turbine_protocol({"T001", "T002", "T003"}, per_turbine, {cand}, opt);
  REQUIRE(avg.rows.size() == 2);  // models x horizons

  // single-trial reference: train on the shared splits, evaluate on the
  // 3x-duplicated plant test set
  const train::TrainSet ti = train::items_for(cfg, splits.train);
  const train::TrainSet vi = train::items_for(cfg, splits.val);
  const train::TrainResult tr = train::train(cfg, ti, vi, cand.tc);
  std::vector<scada::WindowSample> plant_test;
  for (int i = 0; i < 3; ++i) {
    plant_test.insert(plant_test.end(), splits.test.begin(), splits.test.end());
  }
  const EvalReport one = evaluate_horizons(tr.model, "timer-scratch", "scratch", plant_test, opt);
  for (std::size_t i = 0; i < avg.rows.size(); ++i) {
    CHECK(avg.rows[i].mse == doctest::Approx(one.rows[i].mse).epsilon(1e-12));
  }

  CHECK_THROWS_AS(one_turbine_protocol({"T001", "T002"}, per_turbine, {cand}, opt),
                  ValidationError);
}
