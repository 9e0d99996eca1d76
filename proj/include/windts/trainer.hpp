#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "windts/dataset.hpp"
#include "windts/model.hpp"
#include "windts/scada.hpp"

namespace windts::train {

enum class TrainMode { SCRATCH, PRETRAIN, FINETUNE };
const char* mode_name(TrainMode m);
TrainMode mode_from_name(const std::string& name);

enum class Schedule { COSINE, CONSTANT };

struct TrainConfig {
  TrainMode mode = TrainMode::SCRATCH;
  double initial_lr = 1e-4;
  Schedule schedule = Schedule::COSINE;
  int epochs = 2000;
  int batch_size = 64;
  int early_stop_patience = 20;
  std::uint64_t seed = 0;
  std::string checkpoint_in;  // required for FINETUNE
  bool grad_clip = true;
  double clip_norm = 1.0;

  // Scratch/pretrain: lr 1e-4, 2000 epochs, cosine, patience 20.
  // Finetune: lr 5e-6, 100 epochs, constant, patience 10.
  static TrainConfig defaults(TrainMode mode);
  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double wall_s = 0.0;
};

enum class StopReason { MAX_EPOCHS, EARLY_STOP, NAN_ABORT };
const char* stop_reason_name(StopReason r);

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // index into epochs
  StopReason stop = StopReason::MAX_EPOCHS;

  double best_val_loss() const;
};

void write_history_csv(const std::string& path, const TrainHistory& history);

// One model-ready training item: a [rows x cols] matrix. Transformer kinds
// use token matrices (rows = tokens, cols = token width); the LSTM uses step
// sequences (rows = time, cols = channels). Values are already normalized.
struct TrainItem {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;
};
using TrainSet = std::vector<TrainItem>;

// lr0 * 0.5 * (1 + cos(pi * step / total)), floored at 0.
double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0);

// Next-token MSE: row i of `predicted` estimates token i+1, so rows
// 0..N-2 are scored against target rows 1..N-1 and the mean runs over the
// (N-1)*width actually-predicted scalars. The first token is never a target.
ad::Tensor autoregressive_loss(const ad::Tensor& predicted, const ad::Tensor& target_tokens);

struct TrainResult {
  model::Model model;       // parameters from the best validation epoch
  TrainHistory history;
};

// Full training loop: Adam with the scheduled learning rate, one validation
// pass per epoch, early stopping on the validation objective, dropout in
// train mode only. FINETUNE loads the checkpoint and updates every
// parameter (no freezing, no new head). A non-finite loss aborts with the
// history preserved.
TrainResult train(const model::ModelConfig& config, const TrainSet& train_set,
                  const TrainSet& val_set, const TrainConfig& tc);

// Builders from cleaned windows; normalization is per instance over the
// whole window (training-time scope).
TrainSet items_for(const model::ModelConfig& config,
                   const std::vector<scada::WindowSample>& windows);
// Univariate token items straight from S3 sequences (pretraining path).
TrainSet items_from_series(const std::vector<data::S3Sequence>& sequences, int patch);

// Synthetic pretraining regimes standing in for a large multi-domain corpus.
struct RegimeConfig {
  enum class Type { AR1, SEASONAL, REGIME_SWITCH } type = Type::AR1;
  // AR1
  double ar1 = 0.95;
  double innovation_std = 1.0;
  // SEASONAL: two-sine mixture with random phases per sample
  double period1 = 48.0, amp1 = 1.0;
  double period2 = 12.0, amp2 = 0.4;
  double noise_std = 0.2;
  // REGIME_SWITCH: noise whose level flips between two stds
  double low_std = 0.3, high_std = 2.0;
  double switch_prob = 0.03;
};

// Draws samples_per_regime series of the given length from every regime,
// instance-normalizes each, and shuffles the pool deterministically.
std::vector<data::S3Sequence> pretrain_corpus(const std::vector<RegimeConfig>& regimes,
                                              std::size_t samples_per_regime,
                                              std::size_t length, std::uint64_t seed);

}  // namespace windts::train
