#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "windts/common.hpp"

namespace windts::ad {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) { return "[" + join_i64(s) + "]"; }

// One node of the compute graph. Leaves have no parents; interior nodes carry
// the backward rule recorded by the op that produced them. Data is immutable
// once the node participates in a graph; only grad buffers accumulate.
struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool consumed = false;  // backward already ran through this node
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(TensorImpl&)> backward_fn;

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
  }
  // Gradients accumulate by summation (parameter sharing sums contributions).
  void accumulate(std::span<const double> g) {
    ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false) {
    WINDTS_REQUIRE(shape_numel(shape) == static_cast<std::int64_t>(data.size()),
                   "tensor: shape {} does not match data length {}", shape_str(shape),
                   data.size());
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
  }
  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return full(std::move(shape), 0.0, requires_grad);
  }
  static Tensor full(Shape shape, double value, bool requires_grad = false) {
    std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)), value);
    return from_data(std::move(shape), std::move(d), requires_grad);
  }
  static Tensor scalar(double value, bool requires_grad = false) {
    return from_data({1}, {value}, requires_grad);
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::int64_t numel() const { return impl_->numel(); }
  bool requires_grad() const { return impl_->requires_grad; }

  std::span<const double> data() const { return impl_->data; }
  // For leaves only: parameter initialization and optimizer updates.
  std::span<double> mutable_data() { return impl_->data; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  void zero_grad() { impl_->grad.clear(); }

  double item() const {
    WINDTS_REQUIRE(numel() == 1, "item: tensor {} is not scalar", shape_str(shape()));
    return impl_->data[0];
  }

  // Deep copy of values only; drops graph linkage and gradients.
  Tensor detached_copy(bool requires_grad = false) const {
    return from_data(impl_->shape, impl_->data, requires_grad);
  }

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

using ParamMap = std::map<std::string, Tensor>;

// Reverse-mode accumulation from a scalar loss. Fills .grad on every
// requires_grad leaf reachable from `loss` and returns those leaves in
// deterministic traversal order. The recorded graph is consumed: a second
// backward through any of its nodes is an error.
std::vector<Tensor> backward(const Tensor& loss);

}  // namespace windts::ad
