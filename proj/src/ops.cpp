#include "windts/ops.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "windts/rng.hpp"

namespace windts::ad {

namespace {

Tensor make_node(Shape shape, std::vector<double> data, std::vector<Tensor> parents,
                 std::function<void(TensorImpl&)> bw) {
  bool record = false;
  for (const auto& p : parents) record = record || p.requires_grad();
  Tensor out = Tensor::from_data(std::move(shape), std::move(data), false);
  if (record) {
    out.impl()->requires_grad = true;
    out.impl()->parents.reserve(parents.size());
    for (const auto& p : parents) out.impl()->parents.push_back(p.impl());
    out.impl()->backward_fn = std::move(bw);
  }
  return out;
}

// C[m x n] += A[m x k] * B[k x n]
void gemm_acc(double* c, const double* a, const double* b, std::int64_t m, std::int64_t k,
              std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const double* brow = b + kk * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// dA[m x k] += dC[m x n] * B^T   (B is [k x n])
void gemm_acc_bt(double* da, const double* dc, const double* b, std::int64_t m,
                 std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* dcrow = dc + i * n;
    double* darow = da + i * k;
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const double* brow = b + kk * n;
      double acc = 0.0;
      for (std::int64_t j = 0; j < n; ++j) acc += dcrow[j] * brow[j];
      darow[kk] += acc;
    }
  }
}

// dB[k x n] += A^T * dC   (A is [m x k], dC is [m x n])
void gemm_acc_at(double* db, const double* a, const double* dc, std::int64_t m,
                 std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* dcrow = dc + i * n;
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      double* dbrow = db + kk * n;
      for (std::int64_t j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
    }
  }
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  for (std::size_t i = 0; i < small.size(); ++i) {
    if (small[small.size() - 1 - i] != big[big.size() - 1 - i]) return false;
  }
  return true;
}

struct BroadcastPlan {
  bool a_is_big = true;
  std::int64_t outer = 1;  // leading repetitions of the small operand
  std::int64_t inner = 1;  // numel of the small operand
};

BroadcastPlan broadcast_plan(const char* op, const Tensor& a, const Tensor& b) {
  BroadcastPlan p;
  if (a.shape() == b.shape()) {
    p.outer = 1;
    p.inner = a.numel();
    return p;
  }
  if (is_suffix(b.shape(), a.shape())) {
    p.a_is_big = true;
    p.inner = b.numel();
    p.outer = a.numel() / std::max<std::int64_t>(1, p.inner);
    return p;
  }
  if (is_suffix(a.shape(), b.shape())) {
    p.a_is_big = false;
    p.inner = a.numel();
    p.outer = b.numel() / std::max<std::int64_t>(1, p.inner);
    return p;
  }
  fail("{}: shapes {} and {} are not broadcast-compatible", op, shape_str(a.shape()),
       shape_str(b.shape()));
}

struct AxisSplit {
  std::int64_t outer, axis, inner;
};

AxisSplit axis_split(const char* op, const Shape& s, std::size_t axis) {
  WINDTS_REQUIRE(axis < s.size(), "{}: axis {} out of range for shape {}", op, axis,
                 shape_str(s));
  AxisSplit r{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

Tensor unary_elementwise(const Tensor& a, double (*fwd)(double), double (*dfdx)(double)) {
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.data()[i]);
  auto ai = a.impl();
  return make_node(a.shape(), std::move(out), {a}, [ai, dfdx](TensorImpl& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      ai->grad[i] += self.grad[i] * dfdx(ai->data[i]);
    }
  });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  WINDTS_REQUIRE(sa.size() >= 2 && sb.size() >= 2, "matmul: operands must be >= 2-D, got {} and {}",
                 shape_str(sa), shape_str(sb));
  const std::int64_t m = sa[sa.size() - 2];
  const std::int64_t k = sa[sa.size() - 1];
  const std::int64_t n = sb[sb.size() - 1];
  const bool b_shared = sb.size() == 2;
  WINDTS_REQUIRE(sb[sb.size() - 2] == k, "matmul: inner dims differ for {} and {}",
                 shape_str(sa), shape_str(sb));
  if (!b_shared) {
    WINDTS_REQUIRE(sa.size() == sb.size(), "matmul: rank mismatch for {} and {}",
                   shape_str(sa), shape_str(sb));
    for (std::size_t i = 0; i + 2 < sa.size(); ++i) {
      WINDTS_REQUIRE(sa[i] == sb[i], "matmul: leading dims differ for {} and {}",
                     shape_str(sa), shape_str(sb));
    }
  }
  const std::int64_t batch = a.numel() / (m * k);

  Shape out_shape(sa.begin(), sa.end());
  out_shape[out_shape.size() - 1] = n;
  std::vector<double> out(static_cast<std::size_t>(batch * m * n), 0.0);
  for (std::int64_t bi = 0; bi < batch; ++bi) {
    const double* ap = a.data().data() + bi * m * k;
    const double* bp = b.data().data() + (b_shared ? 0 : bi * k * n);
    gemm_acc(out.data() + bi * m * n, ap, bp, m, k, n);
  }

  auto ai = a.impl();
  auto bi_ = b.impl();
  return make_node(std::move(out_shape), std::move(out), {a, b},
                   [ai, bi_, m, k, n, batch, b_shared](TensorImpl& self) {
                     if (ai->requires_grad) {
                       ai->ensure_grad();
                       for (std::int64_t bi = 0; bi < batch; ++bi) {
                         gemm_acc_bt(ai->grad.data() + bi * m * k,
                                     self.grad.data() + bi * m * n,
                                     bi_->data.data() + (b_shared ? 0 : bi * k * n), m, k, n);
                       }
                     }
                     if (bi_->requires_grad) {
                       bi_->ensure_grad();
                       for (std::int64_t bi = 0; bi < batch; ++bi) {
                         gemm_acc_at(bi_->grad.data() + (b_shared ? 0 : bi * k * n),
                                     ai->data.data() + bi * m * k,
                                     self.grad.data() + bi * m * n, m, k, n);
                       }
                     }
                   });
}

namespace {

enum class EwKind { ADD, SUB, MUL };

Tensor binary_broadcast(const char* name, EwKind kind, const Tensor& a, const Tensor& b) {
  const BroadcastPlan plan = broadcast_plan(name, a, b);
  const Tensor& big = plan.a_is_big ? a : b;
  const Tensor& small = plan.a_is_big ? b : a;
  const std::int64_t outer = plan.outer, inner = plan.inner;

  std::vector<double> out(big.data().size());
  const double* bp = big.data().data();
  const double* sp = small.data().data();
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t i = 0; i < inner; ++i) {
      const std::size_t idx = static_cast<std::size_t>(o * inner + i);
      const double x = plan.a_is_big ? bp[idx] : sp[i];
      const double y = plan.a_is_big ? sp[i] : bp[idx];
      switch (kind) {
        case EwKind::ADD: out[idx] = x + y; break;
        case EwKind::SUB: out[idx] = x - y; break;
        case EwKind::MUL: out[idx] = x * y; break;
      }
    }
  }

  auto big_i = big.impl();
  auto small_i = small.impl();
  const bool a_is_big = plan.a_is_big;
  return make_node(big.shape(), std::move(out), {a, b},
                   [big_i, small_i, outer, inner, kind, a_is_big](TensorImpl& self) {
                     const double* g = self.grad.data();
                     // sign of d(out)/d(operand) for SUB depends on position
                     const double big_sign = (kind == EwKind::SUB && !a_is_big) ? -1.0 : 1.0;
                     const double small_sign = (kind == EwKind::SUB && a_is_big) ? -1.0 : 1.0;
                     if (big_i->requires_grad) {
                       big_i->ensure_grad();
                       for (std::int64_t o = 0; o < outer; ++o) {
                         for (std::int64_t i = 0; i < inner; ++i) {
                           const std::size_t idx = static_cast<std::size_t>(o * inner + i);
                           const double factor =
                               kind == EwKind::MUL ? small_i->data[i] : big_sign;
                           big_i->grad[idx] += g[idx] * factor;
                         }
                       }
                     }
                     if (small_i->requires_grad) {
                       small_i->ensure_grad();
                       for (std::int64_t o = 0; o < outer; ++o) {
                         for (std::int64_t i = 0; i < inner; ++i) {
                           const std::size_t idx = static_cast<std::size_t>(o * inner + i);
                           const double factor =
                               kind == EwKind::MUL ? big_i->data[idx] : small_sign;
                           small_i->grad[i] += g[idx] * factor;
                         }
                       }
                     }
                   });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_broadcast("add", EwKind::ADD, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_broadcast("sub", EwKind::SUB, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_broadcast("mul", EwKind::MUL, a, b); }

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
  auto ai = a.impl();
  return make_node(a.shape(), std::move(out), {a}, [ai, c](TensorImpl& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] += self.grad[i] * c;
  });
}

Tensor relu(const Tensor& a) {
  return unary_elementwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& a) {
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  return unary_elementwise(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [](double x) {
        const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        return cdf + x * pdf;
      });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(a.data()[i]);
  auto ai = a.impl();
  std::vector<double> saved = out;
  return make_node(a.shape(), std::move(out), {a},
                   [ai, saved = std::move(saved)](TensorImpl& self) {
                     if (!ai->requires_grad) return;
                     ai->ensure_grad();
                     for (std::size_t i = 0; i < self.grad.size(); ++i) {
                       ai->grad[i] += self.grad[i] * saved[i] * (1.0 - saved[i]);
                     }
                   });
}

Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.data()[i]);
  auto ai = a.impl();
  std::vector<double> saved = out;
  return make_node(a.shape(), std::move(out), {a},
                   [ai, saved = std::move(saved)](TensorImpl& self) {
                     if (!ai->requires_grad) return;
                     ai->ensure_grad();
                     for (std::size_t i = 0; i < self.grad.size(); ++i) {
                       ai->grad[i] += self.grad[i] * (1.0 - saved[i] * saved[i]);
                     }
                   });
}

Tensor softmax(const Tensor& a) {
  WINDTS_REQUIRE(!a.shape().empty(), "softmax: scalar input not supported");
  const std::int64_t inner = a.shape().back();
  const std::int64_t rows = a.numel() / inner;
  std::vector<double> out(a.data().size());
  const double* x = a.data().data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = x + r * inner;
    double* yr = out.data() + r * inner;
    double mx = -std::numeric_limits<double>::infinity();
    bool has_nan = false;
    for (std::int64_t j = 0; j < inner; ++j) {
      has_nan = has_nan || std::isnan(xr[j]);
      mx = std::max(mx, xr[j]);
    }
    if (has_nan) {
      // poisoned inputs propagate; the training loop aborts on NaN loss
      for (std::int64_t j = 0; j < inner; ++j) yr[j] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    if (std::isinf(mx) && mx < 0) {
      fail("softmax: fully masked row {} (all logits are -inf)", r);
    }
    double denom = 0.0;
    for (std::int64_t j = 0; j < inner; ++j) {
      // -inf logits map to exactly zero probability
      yr[j] = std::isinf(xr[j]) && xr[j] < 0 ? 0.0 : std::exp(xr[j] - mx);
      denom += yr[j];
    }
    for (std::int64_t j = 0; j < inner; ++j) yr[j] /= denom;
  }

  auto ai = a.impl();
  std::vector<double> saved = out;
  return make_node(a.shape(), std::move(out), {a},
                   [ai, saved = std::move(saved), rows, inner](TensorImpl& self) {
                     if (!ai->requires_grad) return;
                     ai->ensure_grad();
                     for (std::int64_t r = 0; r < rows; ++r) {
                       const double* y = saved.data() + r * inner;
                       const double* dy = self.grad.data() + r * inner;
                       double dot = 0.0;
                       for (std::int64_t j = 0; j < inner; ++j) dot += y[j] * dy[j];
                       double* dx = ai->grad.data() + r * inner;
                       for (std::int64_t j = 0; j < inner; ++j) dx[j] += y[j] * (dy[j] - dot);
                     }
                   });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& offset, double eps) {
  WINDTS_REQUIRE(!x.shape().empty(), "layer_norm: scalar input not supported");
  const std::int64_t d = x.shape().back();
  WINDTS_REQUIRE(gain.shape() == Shape{d} && offset.shape() == Shape{d},
                 "layer_norm: gain/offset must be [{}], got {} and {}", d,
                 shape_str(gain.shape()), shape_str(offset.shape()));
  const std::int64_t rows = x.numel() / d;
  std::vector<double> out(x.data().size());
  std::vector<double> xhat(x.data().size());
  std::vector<double> inv_std(static_cast<std::size_t>(rows));
  const double* xp = x.data().data();
  const double* gp = gain.data().data();
  const double* bp = offset.data().data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = xp + r * d;
    double mu = 0.0;
    for (std::int64_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::int64_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(r)] = inv;
    for (std::int64_t j = 0; j < d; ++j) {
      const double h = (xr[j] - mu) * inv;
      xhat[r * d + j] = h;
      out[r * d + j] = h * gp[j] + bp[j];
    }
  }

  auto xi = x.impl();
  auto gi = gain.impl();
  auto oi = offset.impl();
  return make_node(
      x.shape(), std::move(out), {x, gain, offset},
      [xi, gi, oi, xhat = std::move(xhat), inv_std = std::move(inv_std), rows,
       d](TensorImpl& self) {
        const double* dy = self.grad.data();
        if (gi->requires_grad) {
          gi->ensure_grad();
          for (std::int64_t r = 0; r < rows; ++r) {
            for (std::int64_t j = 0; j < d; ++j) {
              gi->grad[j] += dy[r * d + j] * xhat[r * d + j];
            }
          }
        }
        if (oi->requires_grad) {
          oi->ensure_grad();
          for (std::int64_t r = 0; r < rows; ++r) {
            for (std::int64_t j = 0; j < d; ++j) oi->grad[j] += dy[r * d + j];
          }
        }
        if (xi->requires_grad) {
          xi->ensure_grad();
          for (std::int64_t r = 0; r < rows; ++r) {
            const double inv = inv_std[static_cast<std::size_t>(r)];
            // dxhat = dy * gain; dx via the standard two-correction form
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::int64_t j = 0; j < d; ++j) {
              const double dxh = dy[r * d + j] * gi->data[j];
              sum_dxhat += dxh;
              sum_dxhat_xhat += dxh * xhat[r * d + j];
            }
            const double nd = static_cast<double>(d);
            for (std::int64_t j = 0; j < d; ++j) {
              const double dxh = dy[r * d + j] * gi->data[j];
              xi->grad[r * d + j] +=
                  inv * (dxh - sum_dxhat / nd - xhat[r * d + j] * sum_dxhat_xhat / nd);
            }
          }
        }
      });
}

Tensor dropout(const Tensor& a, double rate, std::uint64_t key, bool train) {
  WINDTS_REQUIRE(rate >= 0.0 && rate < 1.0, "dropout: rate {} outside [0,1)", rate);
  if (!train || rate == 0.0) return a;  // identity, bitwise
  std::vector<double> mask(a.data().size());
  const double inv_keep = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = counter_uniform(key, i) >= rate ? inv_keep : 0.0;
  }
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * mask[i];
  auto ai = a.impl();
  return make_node(a.shape(), std::move(out), {a},
                   [ai, mask = std::move(mask)](TensorImpl& self) {
                     if (!ai->requires_grad) return;
                     ai->ensure_grad();
                     for (std::size_t i = 0; i < self.grad.size(); ++i) {
                       ai->grad[i] += self.grad[i] * mask[i];
                     }
                   });
}

Tensor slice(const Tensor& a, std::size_t axis, std::int64_t start, std::int64_t len) {
  const AxisSplit sp = axis_split("slice", a.shape(), axis);
  WINDTS_REQUIRE(start >= 0 && len >= 0 && start + len <= sp.axis,
                 "slice: range [{}, {}) out of bounds for axis length {} in {}", start,
                 start + len, sp.axis, shape_str(a.shape()));
  Shape out_shape = a.shape();
  out_shape[axis] = len;
  std::vector<double> out(static_cast<std::size_t>(sp.outer * len * sp.inner));
  const double* src = a.data().data();
  for (std::int64_t o = 0; o < sp.outer; ++o) {
    const double* block = src + (o * sp.axis + start) * sp.inner;
    std::copy(block, block + len * sp.inner, out.data() + o * len * sp.inner);
  }
  auto ai = a.impl();
  return make_node(std::move(out_shape), std::move(out), {a},
                   [ai, sp, start, len](TensorImpl& self) {
                     if (!ai->requires_grad) return;
                     ai->ensure_grad();
                     for (std::int64_t o = 0; o < sp.outer; ++o) {
                       double* dst = ai->grad.data() + (o * sp.axis + start) * sp.inner;
                       const double* g = self.grad.data() + o * len * sp.inner;
                       for (std::int64_t i = 0; i < len * sp.inner; ++i) dst[i] += g[i];
                     }
                   });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  WINDTS_REQUIRE(!parts.empty(), "concat: no inputs");
  const Shape& first = parts[0].shape();
  std::int64_t axis_total = 0;
  for (const auto& p : parts) {
    WINDTS_REQUIRE(p.shape().size() == first.size(), "concat: rank mismatch {} vs {}",
                   shape_str(p.shape()), shape_str(first));
    for (std::size_t i = 0; i < first.size(); ++i) {
      WINDTS_REQUIRE(i == axis || p.shape()[i] == first[i],
                     "concat: shape {} incompatible with {} on axis {}", shape_str(p.shape()),
                     shape_str(first), axis);
    }
    axis_total += p.shape()[axis];
  }
  Shape out_shape = first;
  out_shape[axis] = axis_total;
  const AxisSplit sp = axis_split("concat", out_shape, axis);
  std::vector<double> out(static_cast<std::size_t>(sp.outer * sp.axis * sp.inner));
  std::int64_t offset = 0;
  for (const auto& p : parts) {
    const std::int64_t plen = p.shape()[axis];
    for (std::int64_t o = 0; o < sp.outer; ++o) {
      const double* src = p.data().data() + o * plen * sp.inner;
      double* dst = out.data() + (o * sp.axis + offset) * sp.inner;
      std::copy(src, src + plen * sp.inner, dst);
    }
    offset += plen;
  }
  std::vector<std::shared_ptr<TensorImpl>> impls;
  for (const auto& p : parts) impls.push_back(p.impl());
  return make_node(std::move(out_shape), std::move(out), parts,
                   [impls, sp](TensorImpl& self) {
                     std::int64_t offset = 0;
                     for (const auto& pi : impls) {
                       const AxisSplit psp{sp.outer, pi->numel() / (sp.outer * sp.inner),
                                           sp.inner};
                       if (pi->requires_grad) {
                         pi->ensure_grad();
                         for (std::int64_t o = 0; o < sp.outer; ++o) {
                           const double* g =
                               self.grad.data() + (o * sp.axis + offset) * sp.inner;
                           double* dst = pi->grad.data() + o * psp.axis * sp.inner;
                           for (std::int64_t i = 0; i < psp.axis * sp.inner; ++i) dst[i] += g[i];
                         }
                       }
                       offset += pi->numel() / (sp.outer * sp.inner);
                     }
                   });
}

Tensor reshape(const Tensor& a, Shape new_shape) {
  WINDTS_REQUIRE(shape_numel(new_shape) == a.numel(),
                 "reshape: cannot view {} as {} (element counts differ)",
                 shape_str(a.shape()), shape_str(new_shape));
  std::vector<double> out(a.data().begin(), a.data().end());
  auto ai = a.impl();
  return make_node(std::move(new_shape), std::move(out), {a}, [ai](TensorImpl& self) {
    if (!ai->requires_grad) return;
    ai->accumulate(self.grad);
  });
}

Tensor transpose_last2(const Tensor& a) {
  WINDTS_REQUIRE(a.shape().size() >= 2, "transpose: input {} must be >= 2-D",
                 shape_str(a.shape()));
  const std::int64_t r = a.shape()[a.shape().size() - 2];
  const std::int64_t c = a.shape()[a.shape().size() - 1];
  const std::int64_t batch = a.numel() / (r * c);
  Shape out_shape = a.shape();
  std::swap(out_shape[out_shape.size() - 2], out_shape[out_shape.size() - 1]);
  std::vector<double> out(a.data().size());
  for (std::int64_t b = 0; b < batch; ++b) {
    const double* src = a.data().data() + b * r * c;
    double* dst = out.data() + b * r * c;
    for (std::int64_t i = 0; i < r; ++i) {
      for (std::int64_t j = 0; j < c; ++j) dst[j * r + i] = src[i * c + j];
    }
  }
  auto ai = a.impl();
  return make_node(std::move(out_shape), std::move(out), {a},
                   [ai, r, c, batch](TensorImpl& self) {
                     if (!ai->requires_grad) return;
                     ai->ensure_grad();
                     for (std::int64_t b = 0; b < batch; ++b) {
                       const double* g = self.grad.data() + b * r * c;
                       double* dst = ai->grad.data() + b * r * c;
                       for (std::int64_t i = 0; i < r; ++i) {
                         for (std::int64_t j = 0; j < c; ++j) dst[i * c + j] += g[j * r + i];
                       }
                     }
                   });
}

Tensor take_rows(const Tensor& a, const std::vector<std::int64_t>& rows) {
  WINDTS_REQUIRE(a.shape().size() == 2, "take_rows: input {} must be 2-D",
                 shape_str(a.shape()));
  const std::int64_t nrow = a.shape()[0];
  const std::int64_t d = a.shape()[1];
  std::vector<double> out(rows.size() * static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    WINDTS_REQUIRE(rows[i] >= 0 && rows[i] < nrow, "take_rows: index {} out of range [0, {})",
                   rows[i], nrow);
    const double* src = a.data().data() + rows[i] * d;
    std::copy(src, src + d, out.data() + i * d);
  }
  auto ai = a.impl();
  return make_node({static_cast<std::int64_t>(rows.size()), d}, std::move(out), {a},
                   [ai, rows, d](TensorImpl& self) {
                     if (!ai->requires_grad) return;
                     ai->ensure_grad();
                     for (std::size_t i = 0; i < rows.size(); ++i) {
                       const double* g = self.grad.data() + i * d;
                       double* dst = ai->grad.data() + rows[i] * d;
                       for (std::int64_t j = 0; j < d; ++j) dst[j] += g[j];
                     }
                   });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  auto ai = a.impl();
  return make_node({1}, {s}, {a}, [ai](TensorImpl& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    const double g = self.grad[0];
    for (double& d : ai->grad) d += g;
  });
}

Tensor mean(const Tensor& a) {
  WINDTS_REQUIRE(a.numel() > 0, "mean: empty tensor");
  double s = 0.0;
  for (double v : a.data()) s += v;
  const double n = static_cast<double>(a.numel());
  auto ai = a.impl();
  return make_node({1}, {s / n}, {a}, [ai, n](TensorImpl& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    const double g = self.grad[0] / n;
    for (double& d : ai->grad) d += g;
  });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  WINDTS_REQUIRE(pred.shape() == target.shape(), "mse: shapes {} and {} differ",
                 shape_str(pred.shape()), shape_str(target.shape()));
  WINDTS_REQUIRE(pred.numel() > 0, "mse: empty tensors");
  const double n = static_cast<double>(pred.numel());
  double s = 0.0;
  for (std::int64_t i = 0; i < pred.numel(); ++i) {
    const double d = pred.data()[i] - target.data()[i];
    s += d * d;
  }
  auto pi = pred.impl();
  auto ti = target.impl();
  return make_node({1}, {s / n}, {pred, target}, [pi, ti, n](TensorImpl& self) {
    const double g = self.grad[0] * 2.0 / n;
    if (pi->requires_grad) {
      pi->ensure_grad();
      for (std::size_t i = 0; i < pi->data.size(); ++i) {
        pi->grad[i] += g * (pi->data[i] - ti->data[i]);
      }
    }
    if (ti->requires_grad) {
      ti->ensure_grad();
      for (std::size_t i = 0; i < ti->data.size(); ++i) {
        ti->grad[i] -= g * (pi->data[i] - ti->data[i]);
      }
    }
  });
}

}  // namespace windts::ad
