#include <cmath>
#include <limits>

#include "windts/model.hpp"
#include "windts/ops.hpp"

namespace windts::model {

namespace {

const ad::Tensor& param(const ad::ParamMap& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) fail("missing parameter '{}'", name);
  return it->second;
}

// Strict upper triangle gets -inf: position i may attend to j <= i only.
ad::Tensor causal_mask(std::int64_t n) {
  std::vector<double> m(static_cast<std::size_t>(n * n), 0.0);
  const double ninf = -std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) m[i * n + j] = ninf;
  }
  return ad::Tensor::from_data({n, n}, std::move(m));
}

ad::Tensor maybe_dropout(const ad::Tensor& x, double rate, bool train, DropoutCtx* ctx) {
  if (!train || rate == 0.0 || ctx == nullptr) return x;
  return ad::dropout(x, rate, ctx->next_key(), true);
}

}  // namespace

ad::Tensor transformer_forward(const ad::ParamMap& params, const TransformerConfig& config,
                               const ad::Tensor& tokens, bool train_mode,
                               DropoutCtx* dropout_ctx, const std::vector<std::int64_t>* hours) {
  config.validate();
  WINDTS_REQUIRE(tokens.shape().size() == 2, "transformer: tokens must be 2-D, got {}",
                 ad::shape_str(tokens.shape()));
  const std::int64_t n = tokens.shape()[0];
  WINDTS_REQUIRE(tokens.shape()[1] == config.token_width(),
                 "transformer: token width {} does not match config width {}", tokens.shape()[1],
                 config.token_width());
  WINDTS_REQUIRE(n >= 1 && n <= config.max_tokens(),
                 "transformer: {} tokens exceed the {}-token context", n, config.max_tokens());

  const std::int64_t d = config.model_dim;
  const std::int64_t dk = d / config.heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dk));

  ad::Tensor h = ad::matmul(tokens, param(params, "embed.we"));
  h = ad::add(h, ad::slice(param(params, "embed.pos"), 0, 0, n));
  if (config.use_time_embedding) {
    WINDTS_REQUIRE(hours != nullptr && static_cast<std::int64_t>(hours->size()) == n,
                   "transformer: time embedding enabled but {} hour indices given for {} tokens",
                   hours ? hours->size() : 0, n);
    h = ad::add(h, ad::take_rows(param(params, "embed.te"), *hours));
  }
  h = maybe_dropout(h, config.dropout, train_mode, dropout_ctx);

  const ad::Tensor mask = causal_mask(n);
  for (int l = 0; l < config.layers; ++l) {
    const std::string p = fmt::format("block{:02}.", l);

    // pre-norm causal self-attention
    ad::Tensor a = ad::layer_norm(h, param(params, p + "ln1.g"), param(params, p + "ln1.b"));
    ad::Tensor q = ad::matmul(a, param(params, p + "attn.wq"));
    ad::Tensor k = ad::matmul(a, param(params, p + "attn.wk"));
    ad::Tensor v = ad::matmul(a, param(params, p + "attn.wv"));
    std::vector<ad::Tensor> heads;
    heads.reserve(static_cast<std::size_t>(config.heads));
    for (int hd = 0; hd < config.heads; ++hd) {
      ad::Tensor qh = ad::slice(q, 1, hd * dk, dk);
      ad::Tensor kh = ad::slice(k, 1, hd * dk, dk);
      ad::Tensor vh = ad::slice(v, 1, hd * dk, dk);
      ad::Tensor scores = ad::scale(ad::matmul(qh, ad::transpose_last2(kh)), att_scale);
      ad::Tensor probs = ad::softmax(ad::add(scores, mask));
      heads.push_back(ad::matmul(probs, vh));
    }
    ad::Tensor mixed = ad::matmul(config.heads == 1 ? heads[0] : ad::concat(heads, 1),
                                  param(params, p + "attn.wo"));
    h = ad::add(h, maybe_dropout(mixed, config.dropout, train_mode, dropout_ctx));

    // pre-norm feed-forward
    ad::Tensor f = ad::layer_norm(h, param(params, p + "ln2.g"), param(params, p + "ln2.b"));
    f = ad::gelu(ad::add(ad::matmul(f, param(params, p + "ffn.w1")), param(params, p + "ffn.b1")));
    f = ad::add(ad::matmul(f, param(params, p + "ffn.w2")), param(params, p + "ffn.b2"));
    h = ad::add(h, maybe_dropout(f, config.dropout, train_mode, dropout_ctx));
  }

  h = ad::layer_norm(h, param(params, "final_ln.g"), param(params, "final_ln.b"));
  return ad::add(ad::matmul(h, param(params, "head.wd")), param(params, "head.bd"));
}

ad::Tensor lstm_forward_stateful(const ad::ParamMap& params, const LstmConfig& config,
                                 const ad::Tensor& steps, bool train_mode,
                                 DropoutCtx* dropout_ctx, LstmState& state) {
  config.validate();
  WINDTS_REQUIRE(steps.shape().size() == 2, "lstm: steps must be 2-D, got {}",
                 ad::shape_str(steps.shape()));
  const std::int64_t t_len = steps.shape()[0];
  WINDTS_REQUIRE(steps.shape()[1] == config.input_dim,
                 "lstm: input width {} does not match input_dim {}", steps.shape()[1],
                 config.input_dim);
  WINDTS_REQUIRE(t_len >= 1, "lstm: empty sequence");

  const std::int64_t hd = config.hidden_units;
  if (state.h.empty()) {
    state.h.resize(static_cast<std::size_t>(config.layers));
    state.c.resize(static_cast<std::size_t>(config.layers));
    for (int l = 0; l < config.layers; ++l) {
      state.h[l] = ad::Tensor::zeros({1, hd});
      state.c[l] = ad::Tensor::zeros({1, hd});
    }
  }
  WINDTS_REQUIRE(static_cast<int>(state.h.size()) == config.layers,
                 "lstm: state holds {} layers, config has {}", state.h.size(), config.layers);

  std::vector<ad::Tensor> outputs;
  outputs.reserve(static_cast<std::size_t>(t_len));
  for (std::int64_t t = 0; t < t_len; ++t) {
    ad::Tensor x = ad::slice(steps, 0, t, 1);  // [1, input_dim]
    for (int l = 0; l < config.layers; ++l) {
      const std::string p = fmt::format("lstm{:02}.", l);
      ad::Tensor gates = ad::add(
          ad::add(ad::matmul(x, param(params, p + "wih")),
                  ad::matmul(state.h[l], param(params, p + "whh"))),
          param(params, p + "b"));
      ad::Tensor ig = ad::sigmoid(ad::slice(gates, 1, 0, hd));
      ad::Tensor fg = ad::sigmoid(ad::slice(gates, 1, hd, hd));
      ad::Tensor gg = ad::tanh(ad::slice(gates, 1, 2 * hd, hd));
      ad::Tensor og = ad::sigmoid(ad::slice(gates, 1, 3 * hd, hd));
      state.c[l] = ad::add(ad::mul(fg, state.c[l]), ad::mul(ig, gg));
      state.h[l] = ad::mul(og, ad::tanh(state.c[l]));
      x = state.h[l];
      if (l + 1 < config.layers) {
        x = maybe_dropout(x, config.dropout, train_mode, dropout_ctx);
      }
    }
    outputs.push_back(
        ad::add(ad::matmul(x, param(params, "head.w")), param(params, "head.b")));
  }
  return outputs.size() == 1 ? outputs[0] : ad::concat(outputs, 0);
}

ad::Tensor lstm_forward(const ad::ParamMap& params, const LstmConfig& config,
                        const ad::Tensor& steps, bool train_mode, DropoutCtx* dropout_ctx) {
  LstmState state;
  return lstm_forward_stateful(params, config, steps, train_mode, dropout_ctx, state);
}

}  // namespace windts::model
