#include "windts/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "windts/rng.hpp"

namespace windts::ad {

double finite_diff_check(const std::function<Tensor(const ParamMap&)>& loss_fn,
                         ParamMap& params, double h, std::int64_t max_coords_per_param,
                         std::uint64_t seed) {
  WINDTS_REQUIRE(h > 0.0, "finite_diff_check: h must be positive, got {}", h);

  for (auto& [name, p] : params) p.zero_grad();
  Tensor loss = loss_fn(params);
  backward(loss);

  Rng rng(mix_seed(seed, 0xfdc0ffee));
  double max_rel = 0.0;
  for (auto& [name, p] : params) {
    if (!p.requires_grad()) continue;
    const std::int64_t n = p.numel();
    std::vector<std::int64_t> coords;
    if (n <= max_coords_per_param) {
      coords.resize(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) coords[static_cast<std::size_t>(i)] = i;
    } else {
      for (std::int64_t i = 0; i < max_coords_per_param; ++i) {
        coords.push_back(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n))));
      }
    }
    auto data = p.mutable_data();
    const auto grad = p.grad();
    for (std::int64_t c : coords) {
      const double saved = data[c];
      data[c] = saved + h;
      const double up = loss_fn(params).item();
      data[c] = saved - h;
      const double down = loss_fn(params).item();
      data[c] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grad.empty() ? 0.0 : grad[c];
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::fabs(analytic - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace windts::ad
