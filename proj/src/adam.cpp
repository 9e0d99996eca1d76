#include "windts/adam.hpp"

#include <cmath>

namespace windts::ad {

void adam_step(ParamMap& params, AdamState& state, double lr) {
  WINDTS_REQUIRE(lr >= 0.0, "adam: learning rate {} must be >= 0", lr);
  // Validate everything before mutating any state.
  for (auto& [name, p] : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) {
      if (!std::isfinite(g)) {
        fail("adam: non-finite gradient in parameter '{}'", name);
      }
    }
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (auto& [name, p] : params) {
    const std::size_t n = p.data().size();
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.size() != n) m.assign(n, 0.0);
    if (v.size() != n) v.assign(n, 0.0);
    const bool has_grad = p.has_grad();
    auto grad = p.grad();
    auto data = p.mutable_data();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = has_grad ? grad[i] : 0.0;
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      if (lr != 0.0) {
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        data[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
      }
    }
  }
}

double clip_grad_norm(ParamMap& params, double max_norm) {
  double sq = 0.0;
  for (auto& [name, p] : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& [name, p] : params) {
      if (!p.has_grad()) continue;
      auto& g = p.impl()->grad;
      for (double& x : g) x *= s;
    }
  }
  return norm;
}

}  // namespace windts::ad
