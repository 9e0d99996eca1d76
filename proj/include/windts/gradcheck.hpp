#pragma once

#include <cstdint>
#include <functional>

#include "windts/tensor.hpp"

namespace windts::ad {

// Compares reverse-mode gradients against central finite differences.
// `loss_fn` must be a deterministic forward (dropout disabled) producing a
// scalar loss from the current parameter values. Up to
// `max_coords_per_param` coordinates per parameter are sampled (all of them
// when the parameter is small enough). Returns the max over sampled
// coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double finite_diff_check(const std::function<Tensor(const ParamMap&)>& loss_fn,
                         ParamMap& params, double h = 1e-5,
                         std::int64_t max_coords_per_param = 24,
                         std::uint64_t seed = 0);

}  // namespace windts::ad
