#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "windts/rng.hpp"
#include "windts/tensor.hpp"

namespace windts::model {

enum class Kind { TIMER, TRANSFORMER, TRANSFORMER_MINI, LSTM };
const char* kind_name(Kind k);
Kind kind_from_name(const std::string& name);

// Decoder-only transformer scale. channels == 1 is the channel-independent
// patch model; channels > 1 flattens a multivariate patch into one token
// (channel-dependent baseline).
struct TransformerConfig {
  int layers = 8;
  int model_dim = 1024;
  int ffn_hidden = 2048;
  int heads = 8;
  double dropout = 0.1;
  int patch = 96;  // S, time points per token
  int context_tokens = 7;
  bool use_time_embedding = false;
  int channels = 1;

  bool operator==(const TransformerConfig&) const = default;
  int token_width() const { return patch * channels; }
  int max_tokens() const { return context_tokens + 1; }
  void validate() const;
};

struct LstmConfig {
  int hidden_units = 128;
  int layers = 3;
  double dropout = 0.1;
  int input_dim = 4;

  bool operator==(const LstmConfig&) const = default;
  void validate() const;
};

struct ModelConfig {
  Kind kind = Kind::TIMER;
  TransformerConfig tf;
  LstmConfig lstm;

  bool is_lstm() const { return kind == Kind::LSTM; }
  void validate() const;

  // Published scales.
  static ModelConfig preset_timer();             // 8 blocks, d=1024, ffn=2048, 8 heads
  static ModelConfig preset_transformer();       // Timer-scale blocks, C=4 flattened patches
  static ModelConfig preset_transformer_mini();  // 4 blocks, d=256, ffn=512, C=4
  static ModelConfig preset_lstm();              // 128 hidden units, 3 layers

  std::map<std::string, std::string> to_kv() const;
  static ModelConfig from_kv(const std::map<std::string, std::string>& kv);
  bool operator==(const ModelConfig&) const = default;
};

// Counter-based dropout key stream: one site counter per forward pass, so a
// fixed (seed, pass) pair replays identically regardless of where in the
// process it runs.
struct DropoutCtx {
  std::uint64_t seed = 0;
  std::uint64_t pass = 0;
  std::uint64_t site = 0;
  std::uint64_t next_key() { return mix_seed(mix_seed(seed, pass), ++site); }
};

struct ParamSpec {
  std::string name;
  ad::Shape shape;
  enum class Init { TRUNC_NORMAL, ZERO, ONE } init;
};

std::vector<ParamSpec> param_specs(const ModelConfig& config);

// Truncated normal (std 0.02, clipped at 2 std) for weights, zeros for
// offsets/biases, ones for layer-norm gains. Deterministic per seed.
ad::ParamMap init_params(const ModelConfig& config, std::uint64_t seed);

std::int64_t count_params(const ModelConfig& config);   // from shape arithmetic
std::int64_t count_params(const ad::ParamMap& params);  // from allocated tensors

struct Model {
  ModelConfig config;
  ad::ParamMap params;
};

Model make_model(const ModelConfig& config, std::uint64_t seed);

// Forward pass of the decoder-only transformer on one token matrix
// [N, token_width], N <= context_tokens + 1. Causal attention throughout;
// output row i is the prediction of token i+1. `hours` (token start
// hour-of-day, one per token) feeds the optional time embedding.
ad::Tensor transformer_forward(const ad::ParamMap& params, const TransformerConfig& config,
                               const ad::Tensor& tokens, bool train_mode,
                               DropoutCtx* dropout_ctx = nullptr,
                               const std::vector<std::int64_t>* hours = nullptr);

// Unidirectional stacked LSTM over a [T, input_dim] step sequence; output
// row t is the prediction of step t+1 from the final layer's hidden state.
ad::Tensor lstm_forward(const ad::ParamMap& params, const LstmConfig& config,
                        const ad::Tensor& steps, bool train_mode,
                        DropoutCtx* dropout_ctx = nullptr);

// Hidden/cell state per layer, for incremental stepping at inference time.
struct LstmState {
  std::vector<ad::Tensor> h;
  std::vector<ad::Tensor> c;
};
// As lstm_forward, but resumes from `state` (zero-initialized when empty)
// and leaves the post-sequence state behind for the next call.
ad::Tensor lstm_forward_stateful(const ad::ParamMap& params, const LstmConfig& config,
                                 const ad::Tensor& steps, bool train_mode,
                                 DropoutCtx* dropout_ctx, LstmState& state);

// Binary checkpoint with a trailing FNV-1a checksum; loading verifies the
// checksum, version, and parameter shapes against the embedded config.
void save_checkpoint(const std::string& path, const Model& model,
                     const std::map<std::string, std::string>& metadata = {});
struct Checkpoint {
  Model model;
  std::map<std::string, std::string> metadata;
};
Checkpoint load_checkpoint(const std::string& path);
// Loads and rejects when the stored config differs from `expected`; the
// error message carries both configs.
Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expected);

}  // namespace windts::model
