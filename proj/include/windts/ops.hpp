#pragma once

#include <cstdint>
#include <vector>

#include "windts/tensor.hpp"

namespace windts::ad {

// All ops validate shapes eagerly and throw ValidationError naming the op and
// the offending shapes. A node is recorded in the compute graph only when at
// least one input requires grad; otherwise the result is a plain constant.

// Matrix product over the last two axes. `b` may be 2-D (shared across the
// leading axes of `a`) or carry leading axes identical to `a`'s.
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise with trailing-suffix broadcasting: the smaller operand's shape
// must equal a trailing suffix of the larger's and is repeated over the
// leading axes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double c);

Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);  // exact erf form
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);

// Softmax over the last axis. Additive masks (0 / -inf) are applied by adding
// the mask to the logits first; -inf entries yield exactly zero probability.
// A fully masked row is an error.
Tensor softmax(const Tensor& a);

// Layer normalization over the last axis: gain and offset have shape [D].
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& offset,
                  double eps = 1e-5);

// Inverted dropout driven by a counter-based stream: element i of call `key`
// is kept iff counter_uniform(key, i) >= rate. In eval mode (train == false)
// this is the identity, bitwise.
Tensor dropout(const Tensor& a, double rate, std::uint64_t key, bool train);

Tensor slice(const Tensor& a, std::size_t axis, std::int64_t start, std::int64_t len);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor reshape(const Tensor& a, Shape new_shape);
Tensor transpose_last2(const Tensor& a);

// Row gather on axis 0 of a 2-D tensor (embedding lookup).
Tensor take_rows(const Tensor& a, const std::vector<std::int64_t>& rows);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Mean squared error over all elements; scalar output.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace windts::ad
