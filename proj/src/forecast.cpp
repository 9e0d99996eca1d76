#include "windts/forecast.hpp"

#include <cmath>

namespace windts::infer {

namespace {

// Rolling token buffer: rows are tokens, capped at `max_tokens` by dropping
// the oldest row.
struct TokenWindow {
  std::int64_t width;
  std::int64_t max_tokens;
  std::vector<double> v;

  std::int64_t tokens() const { return static_cast<std::int64_t>(v.size()) / width; }
  void push(std::span<const double> token) {
    v.insert(v.end(), token.begin(), token.end());
    if (tokens() > max_tokens) {
      v.erase(v.begin(), v.begin() + width);
    }
  }
  ad::Tensor tensor() const {
    return ad::Tensor::from_data({tokens(), width}, v);
  }
};

std::vector<double> run_token_loop(const model::Model& m, TokenWindow& window, int horizon,
                                   int* iterations) {
  const auto& tf = m.config.tf;
  const int iters =
      static_cast<int>((static_cast<std::int64_t>(horizon) + tf.patch - 1) / tf.patch);
  if (iterations) *iterations = iters;
  std::vector<double> generated;
  generated.reserve(static_cast<std::size_t>(iters) * tf.token_width());
  for (int it = 0; it < iters; ++it) {
    const ad::Tensor out = model::transformer_forward(m.params, tf, window.tensor(), false);
    const std::int64_t n = out.shape()[0];
    const std::span<const double> next =
        out.data().subspan(static_cast<std::size_t>((n - 1) * tf.token_width()),
                           static_cast<std::size_t>(tf.token_width()));
    generated.insert(generated.end(), next.begin(), next.end());
    window.push(next);
  }
  return generated;
}

}  // namespace

ForecastResult forecast(const model::Model& m, const ForecastRequest& request) {
  WINDTS_REQUIRE(!m.config.is_lstm(), "forecast: token forecasting needs a transformer model");
  WINDTS_REQUIRE(m.config.tf.channels == 1,
                 "forecast: univariate forecasting needs a channel-independent model");
  WINDTS_REQUIRE(request.horizon >= 1, "forecast: horizon {} must be >= 1", request.horizon);
  const auto& tf = m.config.tf;
  WINDTS_REQUIRE(!request.context.empty() &&
                     request.context.size() % static_cast<std::size_t>(tf.patch) == 0,
                 "forecast: context length {} must be a positive multiple of patch {}",
                 request.context.size(), tf.patch);

  TokenWindow window{tf.patch, tf.context_tokens, {}};
  const std::size_t n_ctx_tokens = request.context.size() / static_cast<std::size_t>(tf.patch);
  for (std::size_t i = 0; i < n_ctx_tokens; ++i) {
    window.push(std::span<const double>(request.context)
                    .subspan(i * static_cast<std::size_t>(tf.patch),
                             static_cast<std::size_t>(tf.patch)));
  }

  ForecastResult result;
  result.predictions = run_token_loop(m, window, request.horizon, &result.iterations);
  result.predictions.resize(static_cast<std::size_t>(request.horizon));
  return result;
}

MultivariateForecast forecast_multivariate(const model::Model& m, const Mat& context_raw,
                                           int horizon) {
  WINDTS_REQUIRE(context_raw.rows == scada::kNumChannels,
                 "forecast_multivariate: expected {} channel rows, got {}", scada::kNumChannels,
                 context_raw.rows);
  MultivariateForecast out;
  out.normalized = Mat(scada::kNumChannels, static_cast<std::size_t>(horizon));
  out.raw = Mat(scada::kNumChannels, static_cast<std::size_t>(horizon));
  for (int c = 0; c < scada::kNumChannels; ++c) {
    const auto ctx = context_raw.row(static_cast<std::size_t>(c));
    out.stats[c] = data::compute_stats(ctx);
    ForecastRequest req;
    req.context = data::normalize(ctx, out.stats[c]);
    req.horizon = horizon;
    const ForecastResult r = forecast(m, req);
    out.iterations = r.iterations;
    for (int h = 0; h < horizon; ++h) {
      out.normalized.at(c, h) = r.predictions[static_cast<std::size_t>(h)];
      out.raw.at(c, h) = r.predictions[static_cast<std::size_t>(h)] * out.stats[c].std +
                         out.stats[c].mean;
    }
  }
  return out;
}

MultivariateForecast lstm_forecast(const model::Model& m, const Mat& context_raw, int horizon) {
  WINDTS_REQUIRE(m.config.is_lstm(), "lstm_forecast: model is not an LSTM");
  WINDTS_REQUIRE(horizon >= 1, "lstm_forecast: horizon {} must be >= 1", horizon);
  WINDTS_REQUIRE(context_raw.rows == static_cast<std::size_t>(m.config.lstm.input_dim),
                 "lstm_forecast: expected {} channel rows, got {}", m.config.lstm.input_dim,
                 context_raw.rows);
  WINDTS_REQUIRE(context_raw.cols >= 1, "lstm_forecast: empty context");
  const std::size_t channels = context_raw.rows;
  const std::size_t len = context_raw.cols;

  MultivariateForecast out;
  out.iterations = horizon;
  out.normalized = Mat(channels, static_cast<std::size_t>(horizon));
  out.raw = Mat(channels, static_cast<std::size_t>(horizon));

  // time-major normalized context
  std::vector<double> steps(len * channels);
  for (std::size_t c = 0; c < channels; ++c) {
    out.stats[c] = data::compute_stats(context_raw.row(c));
    for (std::size_t t = 0; t < len; ++t) {
      steps[t * channels + c] = (context_raw.at(c, t) - out.stats[c].mean) / out.stats[c].std;
    }
  }

  model::LstmState state;
  const ad::Tensor warmup = model::lstm_forward_stateful(
      m.params, m.config.lstm,
      ad::Tensor::from_data({static_cast<std::int64_t>(len), static_cast<std::int64_t>(channels)},
                            std::move(steps)),
      false, nullptr, state);
  // last warmup row predicts the first step beyond the context
  std::vector<double> next(warmup.data().end() - static_cast<std::ptrdiff_t>(channels),
                           warmup.data().end());
  for (int h = 0; h < horizon; ++h) {
    for (std::size_t c = 0; c < channels; ++c) {
      out.normalized.at(c, static_cast<std::size_t>(h)) = next[c];
      out.raw.at(c, static_cast<std::size_t>(h)) =
          next[c] * out.stats[c].std + out.stats[c].mean;
    }
    if (h + 1 < horizon) {
      const ad::Tensor step = model::lstm_forward_stateful(
          m.params, m.config.lstm,
          ad::Tensor::from_data({1, static_cast<std::int64_t>(channels)}, next), false, nullptr,
          state);
      next.assign(step.data().begin(), step.data().end());
    }
  }
  return out;
}

MultivariateForecast cd_transformer_forecast(const model::Model& m, const Mat& context_raw,
                                             int horizon) {
  WINDTS_REQUIRE(!m.config.is_lstm(), "cd_transformer_forecast: model is not a transformer");
  const auto& tf = m.config.tf;
  WINDTS_REQUIRE(tf.channels == static_cast<int>(context_raw.rows),
                 "cd_transformer_forecast: expected {} channel rows, got {}", tf.channels,
                 context_raw.rows);
  WINDTS_REQUIRE(horizon >= 1, "cd_transformer_forecast: horizon {} must be >= 1", horizon);
  WINDTS_REQUIRE(context_raw.cols % static_cast<std::size_t>(tf.patch) == 0,
                 "cd_transformer_forecast: context length {} not a multiple of patch {}",
                 context_raw.cols, tf.patch);
  const std::size_t channels = context_raw.rows;
  const std::size_t n_tokens = context_raw.cols / static_cast<std::size_t>(tf.patch);

  MultivariateForecast out;
  std::array<std::vector<double>, scada::kNumChannels> normalized;
  for (std::size_t c = 0; c < channels; ++c) {
    out.stats[c] = data::compute_stats(context_raw.row(c));
    normalized[c] = data::normalize(context_raw.row(c), out.stats[c]);
  }

  TokenWindow window{tf.token_width(), tf.context_tokens, {}};
  std::vector<double> token(static_cast<std::size_t>(tf.token_width()));
  for (std::size_t i = 0; i < n_tokens; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (int p = 0; p < tf.patch; ++p) {
        token[c * static_cast<std::size_t>(tf.patch) + static_cast<std::size_t>(p)] =
            normalized[c][i * static_cast<std::size_t>(tf.patch) + static_cast<std::size_t>(p)];
      }
    }
    window.push(token);
  }

  const std::vector<double> generated = run_token_loop(m, window, horizon, &out.iterations);
  out.normalized = Mat(channels, static_cast<std::size_t>(horizon));
  out.raw = Mat(channels, static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) {
    const std::size_t tok = static_cast<std::size_t>(h) / static_cast<std::size_t>(tf.patch);
    const std::size_t pos = static_cast<std::size_t>(h) % static_cast<std::size_t>(tf.patch);
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = generated[tok * static_cast<std::size_t>(tf.token_width()) +
                                 c * static_cast<std::size_t>(tf.patch) + pos];
      out.normalized.at(c, static_cast<std::size_t>(h)) = v;
      out.raw.at(c, static_cast<std::size_t>(h)) = v * out.stats[c].std + out.stats[c].mean;
    }
  }
  return out;
}

MultivariateForecast multivariate_forecast(const model::Model& m, const Mat& context_raw,
                                           int horizon) {
  if (m.config.is_lstm()) return lstm_forecast(m, context_raw, horizon);
  if (m.config.tf.channels == 1) return forecast_multivariate(m, context_raw, horizon);
  return cd_transformer_forecast(m, context_raw, horizon);
}

}  // namespace windts::infer
