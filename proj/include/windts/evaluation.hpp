#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "windts/dataset.hpp"
#include "windts/model.hpp"
#include "windts/trainer.hpp"

namespace windts::eval {

double mse(std::span<const double> pred, std::span<const double> truth);

struct EvalRow {
  std::string model_id;
  std::string training_mode;  // scratch / pretrain / finetune / zero-shot
  int horizon = 0;
  double mse = 0.0;
  std::int64_t n_windows = 0;
  std::uint64_t seed = 0;
  double data_fraction = 1.0;  // 0 marks the zero-shot baseline row
  std::string turbine_scope;
};

struct RawChannelRow {
  std::string model_id;
  int horizon = 0;
  std::string channel;
  double mse_raw = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<RawChannelRow> raw_rows;  // raw-unit MSE per channel
  std::size_t skipped_windows = 0;

  void append(const EvalReport& other);
};

struct EvalOptions {
  std::vector<int> horizons = {1, 6, 12, 24, 48, 96};
  std::size_t context_len = 672;
  std::uint64_t seed = 0;
  double data_fraction = 1.0;
  std::string turbine_scope = "all";
};

// One MSE per horizon, averaged over every (window, channel, step) triple in
// normalized space (context-only statistics). A single forecast at the
// largest horizon is sliced to score all shorter ones. Windows shorter than
// context + max(horizon) are skipped and counted.
EvalReport evaluate_horizons(const model::Model& m, const std::string& model_id,
                             const std::string& training_mode,
                             const std::vector<scada::WindowSample>& test_windows,
                             const EvalOptions& options);

// A model entry in a protocol run: train from scratch, fine-tune from a
// checkpoint, or evaluate a checkpoint as-is (zero-shot).
struct Candidate {
  std::string id;
  model::ModelConfig config;
  enum class Mode { TRAIN, FINETUNE, ZERO_SHOT } mode = Mode::TRAIN;
  std::string checkpoint;  // FINETUNE / ZERO_SHOT
  train::TrainConfig tc;
};

// Trains (when required) and evaluates every candidate on the fixed splits.
EvalReport run_candidates(const std::vector<Candidate>& candidates, const data::Splits& splits,
                          const EvalOptions& options);

// Data-volume ablation: training windows are subsampled deterministically
// and nested (the sample at a smaller fraction is a prefix of the larger
// one under a fixed seed-derived permutation). Zero-shot candidates are
// evaluated once and reported with data_fraction 0.
struct AblationPlan {
  std::vector<double> fractions;  // ascending, each in (0, 1]
  std::uint64_t seed = 0;
};
EvalReport run_ablation(const AblationPlan& plan, const std::vector<Candidate>& candidates,
                        const data::Splits& splits, const EvalOptions& options);

// Deterministic nested subsample helper (exposed for tests).
std::vector<std::size_t> subsample_indices(std::size_t total, double fraction,
                                           std::uint64_t seed);

// One-turbine protocol: each trial trains/fine-tunes on a single turbine's
// data and evaluates on every turbine's test windows; per-candidate
// per-horizon MSE is averaged over the trials.
EvalReport one_turbine_protocol(const std::vector<std::string>& trial_turbines,
                                const std::map<std::string, data::Splits>& per_turbine,
                                const std::vector<Candidate>& candidates,
                                const EvalOptions& options);

// report.csv + report.md (+ raw-unit CSV); optional SVG plots of MSE vs
// horizon and, when several fractions are present, MSE vs data fraction.
void render_report(const EvalReport& report, const std::string& out_dir, bool with_svg);

void write_report_csv(const std::string& path, const EvalReport& report);
EvalReport read_report_csv(const std::string& path);

}  // namespace windts::eval
