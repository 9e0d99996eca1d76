#include "windts/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "windts/adam.hpp"
#include "windts/csvio.hpp"
#include "windts/ops.hpp"
#include "windts/rng.hpp"

namespace windts::train {

const char* mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::SCRATCH: return "scratch";
    case TrainMode::PRETRAIN: return "pretrain";
    case TrainMode::FINETUNE: return "finetune";
  }
  return "?";
}

TrainMode mode_from_name(const std::string& name) {
  for (TrainMode m : {TrainMode::SCRATCH, TrainMode::PRETRAIN, TrainMode::FINETUNE}) {
    if (name == mode_name(m)) return m;
  }
  fail("unknown training mode '{}'", name);
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::MAX_EPOCHS: return "max_epochs";
    case StopReason::EARLY_STOP: return "early_stop";
    case StopReason::NAN_ABORT: return "nan_abort";
  }
  return "?";
}

TrainConfig TrainConfig::defaults(TrainMode mode) {
  TrainConfig tc;
  tc.mode = mode;
  if (mode == TrainMode::FINETUNE) {
    tc.initial_lr = 5e-6;
    tc.epochs = 100;
    tc.schedule = Schedule::CONSTANT;
    tc.early_stop_patience = 10;
  }
  return tc;
}

void TrainConfig::validate() const {
  WINDTS_REQUIRE(initial_lr >= 0.0, "train config: negative learning rate {}", initial_lr);
  WINDTS_REQUIRE(epochs >= 0, "train config: negative epoch count {}", epochs);
  WINDTS_REQUIRE(batch_size >= 1, "train config: batch size {} must be >= 1", batch_size);
  WINDTS_REQUIRE(early_stop_patience >= 1, "train config: patience {} must be >= 1",
                 early_stop_patience);
  if (mode == TrainMode::FINETUNE) {
    WINDTS_REQUIRE(!checkpoint_in.empty(), "train config: finetune requires --checkpoint");
  }
}

double TrainHistory::best_val_loss() const {
  return best_epoch >= 0 ? epochs[static_cast<std::size_t>(best_epoch)].val_loss
                         : std::numeric_limits<double>::quiet_NaN();
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
  csv::Writer w(path);
  w.row({"epoch", "train_loss", "val_loss", "lr"});
  for (const auto& e : history.epochs) {
    w.row({std::to_string(e.epoch), csv::fmt_double(e.train_loss), csv::fmt_double(e.val_loss),
           csv::fmt_double(e.lr)});
  }
}

double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0) {
  WINDTS_REQUIRE(total_steps >= 1, "cosine_lr: total steps must be >= 1");
  WINDTS_REQUIRE(step >= 0 && step <= total_steps, "cosine_lr: step {} outside [0, {}]", step,
                 total_steps);
  const double x = static_cast<double>(step) / static_cast<double>(total_steps);
  return std::max(0.0, lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * x)));
}

ad::Tensor autoregressive_loss(const ad::Tensor& predicted, const ad::Tensor& target_tokens) {
  WINDTS_REQUIRE(predicted.shape() == target_tokens.shape(),
                 "autoregressive_loss: prediction shape {} != target shape {}",
                 ad::shape_str(predicted.shape()), ad::shape_str(target_tokens.shape()));
  WINDTS_REQUIRE(predicted.shape().size() == 2, "autoregressive_loss: expected 2-D tokens, got {}",
                 ad::shape_str(predicted.shape()));
  const std::int64_t n = predicted.shape()[0];
  WINDTS_REQUIRE(n >= 2, "autoregressive_loss: need at least 2 tokens, got {}", n);
  return ad::mse_loss(ad::slice(predicted, 0, 0, n - 1), ad::slice(target_tokens, 0, 1, n - 1));
}

namespace {

ad::Tensor item_tensor(const TrainItem& item) {
  return ad::Tensor::from_data(
      {static_cast<std::int64_t>(item.rows), static_cast<std::int64_t>(item.cols)}, item.v);
}

ad::Tensor item_loss(const model::Model& m, const TrainItem& item, bool train_mode,
                     model::DropoutCtx* drop) {
  const ad::Tensor input = item_tensor(item);
  const ad::Tensor out = m.config.is_lstm()
                             ? model::lstm_forward(m.params, m.config.lstm, input, train_mode, drop)
                             : model::transformer_forward(m.params, m.config.tf, input,
                                                          train_mode, drop);
  return autoregressive_loss(out, input);
}

double eval_loss(const model::Model& m, const TrainSet& set) {
  double total = 0.0;
  for (const TrainItem& item : set) total += item_loss(m, item, false, nullptr).item();
  return total / static_cast<double>(set.size());
}

bool structurally_compatible(const model::ModelConfig& a, const model::ModelConfig& b) {
  // Dropout is a training-time knob; everything else must match.
  auto ka = a.to_kv();
  auto kb = b.to_kv();
  ka.erase("tf.dropout");
  kb.erase("tf.dropout");
  ka.erase("lstm.dropout");
  kb.erase("lstm.dropout");
  return ka == kb;
}

}  // namespace

TrainResult train(const model::ModelConfig& config, const TrainSet& train_set,
                  const TrainSet& val_set, const TrainConfig& tc) {
  tc.validate();
  config.validate();
  WINDTS_REQUIRE(!train_set.empty(), "train: empty training set");

  model::Model m;
  if (tc.mode == TrainMode::FINETUNE) {
    model::Checkpoint ckpt = model::load_checkpoint(tc.checkpoint_in);
    if (!structurally_compatible(ckpt.model.config, config)) {
      // surface both configs, matching the checkpoint loader's message shape
      model::load_checkpoint(tc.checkpoint_in, config);
    }
    m.config = config;  // caller may adjust dropout for fine-tuning
    m.params = std::move(ckpt.model.params);
  } else {
    m = model::make_model(config, mix_seed(tc.seed, 0x1417));
  }

  TrainResult result;
  result.history.stop = StopReason::MAX_EPOCHS;

  ad::AdamState adam;
  model::DropoutCtx drop{mix_seed(tc.seed, 0xd409), 0, 0};
  const bool has_val = !val_set.empty();

  ad::ParamMap best_params;
  for (const auto& [name, t] : m.params) best_params[name] = t.detached_copy(true);
  double best_metric = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const auto wall_start = std::chrono::steady_clock::now();
    const double lr = tc.schedule == Schedule::COSINE
                          ? cosine_lr(epoch, tc.epochs, tc.initial_lr)
                          : tc.initial_lr;

    Rng shuffle_rng(mix_seed(tc.seed, 0xe90c * static_cast<std::uint64_t>(epoch + 1)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    bool aborted = false;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      for (auto& [name, t] : m.params) t.zero_grad();

      ad::Tensor batch_loss;
      for (std::size_t i = start; i < end; ++i) {
        drop.pass += 1;
        drop.site = 0;
        ad::Tensor l = item_loss(m, train_set[order[i]], true, &drop);
        batch_loss = batch_loss.defined() ? ad::add(batch_loss, l) : l;
      }
      batch_loss = ad::scale(batch_loss, 1.0 / static_cast<double>(end - start));
      const double loss_value = batch_loss.item();
      if (!std::isfinite(loss_value)) {
        aborted = true;
        break;
      }
      epoch_loss += loss_value * static_cast<double>(end - start);
      ad::backward(batch_loss);
      if (tc.grad_clip) ad::clip_grad_norm(m.params, tc.clip_norm);
      ad::adam_step(m.params, adam, lr);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;
    stats.train_loss = aborted ? std::numeric_limits<double>::quiet_NaN()
                               : epoch_loss / static_cast<double>(train_set.size());
    stats.val_loss = aborted ? std::numeric_limits<double>::quiet_NaN()
                             : (has_val ? eval_loss(m, val_set) : stats.train_loss);
    stats.wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    result.history.epochs.push_back(stats);

    if (aborted || !std::isfinite(stats.val_loss)) {
      result.history.stop = StopReason::NAN_ABORT;
      break;
    }

    if (stats.val_loss < best_metric) {
      best_metric = stats.val_loss;
      result.history.best_epoch = epoch;
      epochs_since_best = 0;
      for (const auto& [name, t] : m.params) best_params[name] = t.detached_copy(true);
    } else {
      epochs_since_best += 1;
      if (epochs_since_best >= tc.early_stop_patience) {
        result.history.stop = StopReason::EARLY_STOP;
        break;
      }
    }
  }

  result.model.config = m.config;
  result.model.params = std::move(best_params);
  return result;
}

TrainSet items_for(const model::ModelConfig& config,
                   const std::vector<scada::WindowSample>& windows) {
  config.validate();
  TrainSet items;
  if (config.is_lstm()) {
    for (const auto& w : windows) {
      const auto s3 = data::to_s3(w);
      TrainItem item;
      item.rows = w.length;
      item.cols = scada::kNumChannels;
      item.v.resize(item.rows * item.cols);
      for (std::size_t t = 0; t < w.length; ++t) {
        for (int c = 0; c < scada::kNumChannels; ++c) {
          item.v[t * scada::kNumChannels + c] = s3[c].values[t];
        }
      }
      items.push_back(std::move(item));
    }
    return items;
  }

  const auto& tf = config.tf;
  for (const auto& w : windows) {
    WINDTS_REQUIRE(w.length % static_cast<std::size_t>(tf.patch) == 0,
                   "items_for: window length {} not divisible by patch {}", w.length, tf.patch);
    const std::size_t n_tokens = w.length / static_cast<std::size_t>(tf.patch);
    WINDTS_REQUIRE(n_tokens <= static_cast<std::size_t>(tf.max_tokens()),
                   "items_for: window of {} tokens exceeds the {}-token model context; "
                   "set dataset.train_window to context_tokens+1 patches",
                   n_tokens, tf.max_tokens());
    const auto s3 = data::to_s3(w);
    if (tf.channels == 1) {
      // channel independence: each channel is its own item
      for (int c = 0; c < scada::kNumChannels; ++c) {
        TrainItem item;
        item.rows = n_tokens;
        item.cols = static_cast<std::size_t>(tf.patch);
        item.v = s3[c].values;
        items.push_back(std::move(item));
      }
    } else {
      WINDTS_REQUIRE(tf.channels == scada::kNumChannels,
                     "items_for: config expects {} channels, data has {}", tf.channels,
                     scada::kNumChannels);
      // channel-dependent: token i is the concatenation of every channel's
      // patch i (channel-major within the token)
      TrainItem item;
      item.rows = n_tokens;
      item.cols = static_cast<std::size_t>(tf.token_width());
      item.v.resize(item.rows * item.cols);
      for (std::size_t i = 0; i < n_tokens; ++i) {
        for (int c = 0; c < tf.channels; ++c) {
          for (int p = 0; p < tf.patch; ++p) {
            item.v[i * item.cols + static_cast<std::size_t>(c * tf.patch + p)] =
                s3[c].values[i * static_cast<std::size_t>(tf.patch) +
                             static_cast<std::size_t>(p)];
          }
        }
      }
      items.push_back(std::move(item));
    }
  }
  return items;
}

TrainSet items_from_series(const std::vector<data::S3Sequence>& sequences, int patch) {
  TrainSet items;
  items.reserve(sequences.size());
  for (const auto& s : sequences) {
    WINDTS_REQUIRE(s.values.size() % static_cast<std::size_t>(patch) == 0,
                   "items_from_series: length {} not divisible by patch {}", s.values.size(),
                   patch);
    TrainItem item;
    item.rows = s.values.size() / static_cast<std::size_t>(patch);
    item.cols = static_cast<std::size_t>(patch);
    item.v = s.values;
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<data::S3Sequence> pretrain_corpus(const std::vector<RegimeConfig>& regimes,
                                              std::size_t samples_per_regime,
                                              std::size_t length, std::uint64_t seed) {
  WINDTS_REQUIRE(regimes.size() >= 2, "pretrain_corpus: need at least 2 regimes, got {}",
                 regimes.size());
  WINDTS_REQUIRE(samples_per_regime >= 1 && length >= 2, "pretrain_corpus: degenerate sizes");

  std::vector<data::S3Sequence> corpus;
  corpus.reserve(regimes.size() * samples_per_regime);
  for (std::size_t r = 0; r < regimes.size(); ++r) {
    const RegimeConfig& rc = regimes[r];
    Rng rng(mix_seed(seed, 0xbead00 + r));
    for (std::size_t s = 0; s < samples_per_regime; ++s) {
      std::vector<double> xs(length);
      switch (rc.type) {
        case RegimeConfig::Type::AR1: {
          double x = rng.normal(0.0, rc.innovation_std /
                                         std::sqrt(1.0 - rc.ar1 * rc.ar1));
          for (auto& v : xs) {
            v = x;
            x = rc.ar1 * x + rng.normal(0.0, rc.innovation_std);
          }
          break;
        }
        case RegimeConfig::Type::SEASONAL: {
          const double phase1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
          const double phase2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
          for (std::size_t t = 0; t < length; ++t) {
            xs[t] = rc.amp1 * std::sin(2.0 * std::numbers::pi * t / rc.period1 + phase1) +
                    rc.amp2 * std::sin(2.0 * std::numbers::pi * t / rc.period2 + phase2) +
                    rng.normal(0.0, rc.noise_std);
          }
          break;
        }
        case RegimeConfig::Type::REGIME_SWITCH: {
          bool high = rng.uniform() < 0.5;
          double level = 0.0;
          for (std::size_t t = 0; t < length; ++t) {
            if (rng.uniform() < rc.switch_prob) {
              high = !high;
              level = rng.normal(0.0, 1.0);
            }
            xs[t] = level + rng.normal(0.0, high ? rc.high_std : rc.low_std);
          }
          break;
        }
      }
      data::S3Sequence seq;
      seq.channel_name = fmt::format("regime{}", r);
      seq.stats = data::compute_stats(xs);
      seq.values = data::normalize(xs, seq.stats);
      corpus.push_back(std::move(seq));
    }
  }
  Rng shuffle_rng(mix_seed(seed, 0x5487));
  shuffle_rng.shuffle(corpus);
  return corpus;
}

}  // namespace windts::train
