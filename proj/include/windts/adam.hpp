#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "windts/tensor.hpp"

namespace windts::ad {

// Adam with bias correction. Moment buffers mirror parameter shapes and are
// keyed by parameter name; the step counter increases by exactly one per
// update.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

// Applies one update using each parameter's accumulated .grad. Parameters
// without a gradient buffer are treated as zero-gradient. A non-finite
// gradient rejects the whole update (no state is touched) and the error
// names the offending parameter. lr == 0 updates moments and the step
// counter but leaves parameter values bitwise unchanged.
void adam_step(ParamMap& params, AdamState& state, double lr);

// Global-norm gradient clipping; returns the pre-clip norm.
double clip_grad_norm(ParamMap& params, double max_norm);

}  // namespace windts::ad
