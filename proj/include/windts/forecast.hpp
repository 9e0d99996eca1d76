#pragma once

#include <array>
#include <vector>

#include "windts/dataset.hpp"
#include "windts/model.hpp"

namespace windts::infer {

struct ForecastRequest {
  std::vector<double> context;  // normalized values, length divisible by patch
  int horizon = 96;
};

struct ForecastResult {
  std::vector<double> predictions;  // normalized, length == horizon
  int iterations = 0;               // == ceil(horizon / patch)
};

// Iterative next-token forecasting for the channel-independent transformer:
// predict one token from the most recent context_tokens tokens, append it,
// roll the window, repeat ceil(H/S) times, then truncate to H values.
// Eval mode throughout (dropout off); deterministic.
ForecastResult forecast(const model::Model& m, const ForecastRequest& request);

struct MultivariateForecast {
  Mat normalized;  // channels x H, in per-channel context-normalized space
  Mat raw;         // channels x H, denormalized
  std::array<data::NormStats, scada::kNumChannels> stats;  // context-only stats
  int iterations = 0;
};

// Channel-independent multivariate forecasting: each channel is normalized
// by its own context statistics and forecast independently.
MultivariateForecast forecast_multivariate(const model::Model& m, const Mat& context_raw,
                                           int horizon);

// Recursive multi-step forecasting for the LSTM: warm up on the context,
// then feed each one-step prediction back as the next input, H times.
MultivariateForecast lstm_forecast(const model::Model& m, const Mat& context_raw, int horizon);

// Channel-dependent transformer baseline: iterates flattened multivariate
// patch tokens (same loop as `forecast`, C*S-wide tokens).
MultivariateForecast cd_transformer_forecast(const model::Model& m, const Mat& context_raw,
                                             int horizon);

// Dispatch on the model kind; context is channels x L of raw values.
MultivariateForecast multivariate_forecast(const model::Model& m, const Mat& context_raw,
                                           int horizon);

}  // namespace windts::infer
