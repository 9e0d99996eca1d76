#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "windts/adam.hpp"
#include "windts/gradcheck.hpp"
#include "windts/ops.hpp"
#include "windts/rng.hpp"
#include "windts/tensor.hpp"

using namespace windts;
using namespace windts::ad;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = true) {
  std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : d) x = rng.normal(0.0, 1.0);
  return Tensor::from_data(std::move(shape), std::move(d), requires_grad);
}

}  // namespace

TEST_CASE("matmul shapes and values") {
  auto a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  auto b = Tensor::from_data({3, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0});
  auto c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 4});
  CHECK(c.data()[0] == 1.0);
  CHECK(c.data()[5] == 5.0);
  CHECK(c.data()[3] == 0.0);

  CHECK_THROWS_AS(matmul(a, Tensor::zeros({4, 2})), ValidationError);
}

TEST_CASE("softmax of zeros is uniform; rows sum to one; mask zeroes positions") {
  auto x = Tensor::from_data({3}, {0, 0, 0});
  auto y = softmax(x);
  for (double v : y.data()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-14));

  Rng rng(11);
  auto z = random_tensor({5, 7}, rng, false);
  auto s = softmax(z);
  for (int r = 0; r < 5; ++r) {
    double total = 0.0;
    for (int j = 0; j < 7; ++j) total += s.data()[r * 7 + j];
    CHECK(std::fabs(total - 1.0) < 1e-12);
  }

  const double ninf = -std::numeric_limits<double>::infinity();
  auto masked = add(Tensor::from_data({4}, {0.3, 1.0, -2.0, 0.1}),
                    Tensor::from_data({4}, {0.0, ninf, 0.0, ninf}));
  auto p = softmax(masked);
  CHECK(p.data()[1] == 0.0);
  CHECK(p.data()[3] == 0.0);
  CHECK(p.data()[0] + p.data()[2] == doctest::Approx(1.0).epsilon(1e-14));

  auto all_masked = Tensor::from_data({2}, {ninf, ninf});
  CHECK_THROWS(softmax(all_masked));
}

TEST_CASE("layer norm normalizes the last axis") {
  auto x = Tensor::from_data({3}, {1, 2, 3});
  auto y = layer_norm(x, Tensor::full({3}, 1.0), Tensor::zeros({3}), 1e-12);
  double mean = 0.0;
  for (double v : y.data()) mean += v;
  mean /= 3.0;
  CHECK(std::fabs(mean) < 1e-12);
  double var = 0.0;
  for (double v : y.data()) var += (v - mean) * (v - mean);
  CHECK(var / 3.0 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("backward of sum(x*x)") {
  auto x = Tensor::from_data({3}, {1, 2, 3}, true);
  auto loss = sum(mul(x, x));
  auto leaves = backward(loss);
  REQUIRE(leaves.size() == 1);
  CHECK(x.grad()[0] == 2.0);
  CHECK(x.grad()[1] == 4.0);
  CHECK(x.grad()[2] == 6.0);
}

TEST_CASE("backward rejects non-scalar loss and consumed graphs") {
  auto x = Tensor::from_data({2}, {1, 2}, true);
  auto y = mul(x, x);
  CHECK_THROWS_AS(backward(y), ValidationError);

  auto loss = sum(mul(x, x));
  backward(loss);
  CHECK_THROWS_AS(backward(loss), ValidationError);
}

TEST_CASE("backward over constants returns an empty gradient map") {
  auto a = Tensor::from_data({2}, {1, 2});
  auto b = Tensor::from_data({2}, {3, 4});
  auto loss = sum(mul(a, b));
  CHECK(loss.impl()->parents.empty());  // nothing recorded for constants
  auto leaves = backward(loss);
  CHECK(leaves.empty());
  CHECK_FALSE(a.has_grad());
}

TEST_CASE("gradient accumulation sums over shared parameters") {
  auto w = Tensor::from_data({2}, {1.0, -2.0}, true);
  // loss = sum(w*w) + sum(w) uses w twice
  auto loss = sum(add(mul(w, w), w));
  backward(loss);
  CHECK(w.grad()[0] == doctest::Approx(2.0 * 1.0 + 1.0));
  CHECK(w.grad()[1] == doctest::Approx(2.0 * -2.0 + 1.0));
}

TEST_CASE("linear layer gradient matches central finite differences") {
  Rng rng(7);
  ParamMap params;
  params["w"] = random_tensor({4, 3}, rng);
  params["b"] = random_tensor({3}, rng);
  auto x = random_tensor({5, 4}, rng, false);
  auto y = random_tensor({5, 3}, rng, false);
  auto loss_fn = [&](const ParamMap& p) {
    return mse_loss(add(matmul(x, p.at("w")), p.at("b")), y);
  };
  const double err = finite_diff_check(loss_fn, params, 1e-5, 64, 1);
  CHECK(err < 1e-6);
}

TEST_CASE("identity forward has zero finite-difference error") {
  ParamMap params;
  params["w"] = Tensor::from_data({3}, {1.0, 2.0, 3.0}, true);
  auto loss_fn = [](const ParamMap& p) { return sum(p.at("w")); };
  const double err = finite_diff_check(loss_fn, params, 1e-5, 8, 0);
  CHECK(err == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("every op passes a randomized finite-difference check") {
  Rng rng(1234);
  const double tol = 1e-4;
  const double h = 1e-5;

  auto check1 = [&](const char* name, auto make_loss, Shape shape) {
    ParamMap params;
    params["x"] = random_tensor(shape, rng);
    auto fn = [&](const ParamMap& p) { return make_loss(p.at("x")); };
    const double err = finite_diff_check(fn, params, h, 16, rng.next_u64());
    INFO("op: " << name);
    CHECK(err < tol);
  };

  check1("relu", [](const Tensor& x) { return mean(relu(x)); }, {4, 5});
  check1("gelu", [](const Tensor& x) { return mean(gelu(x)); }, {4, 5});
  check1("sigmoid", [](const Tensor& x) { return mean(sigmoid(x)); }, {4, 5});
  check1("tanh", [](const Tensor& x) { return mean(ad::tanh(x)); }, {4, 5});
  check1("softmax", [](const Tensor& x) { return mean(mul(softmax(x), x)); }, {3, 6});
  check1("scale", [](const Tensor& x) { return sum(scale(x, -1.7)); }, {7});
  check1("reshape", [](const Tensor& x) { return mean(mul(reshape(x, {2, 10}), reshape(x, {2, 10}))); }, {4, 5});
  check1("transpose", [](const Tensor& x) { return mean(mul(transpose_last2(x), transpose_last2(x))); }, {3, 4});
  check1("slice", [](const Tensor& x) { return mean(mul(slice(x, 1, 1, 2), slice(x, 1, 1, 2))); }, {3, 4});
  check1("sum", [](const Tensor& x) { return sum(mul(x, x)); }, {6});
  check1("mean", [](const Tensor& x) { return mean(mul(x, x)); }, {6});

  {
    ParamMap params;
    params["a"] = random_tensor({3, 4}, rng);
    params["b"] = random_tensor({4, 2}, rng);
    auto fn = [](const ParamMap& p) { return mean(matmul(p.at("a"), p.at("b"))); };
    CHECK(finite_diff_check(fn, params, h, 32, 2) < tol);
  }
  {
    // batched matmul with shared rhs and batched rhs
    ParamMap params;
    params["a"] = random_tensor({2, 3, 4}, rng);
    params["b"] = random_tensor({4, 5}, rng);
    params["c"] = random_tensor({2, 5, 3}, rng);
    auto fn = [](const ParamMap& p) {
      return mean(matmul(matmul(p.at("a"), p.at("b")), p.at("c")));
    };
    CHECK(finite_diff_check(fn, params, h, 32, 3) < tol);
  }
  {
    // broadcasting add/sub/mul over leading axes
    ParamMap params;
    params["x"] = random_tensor({3, 4}, rng);
    params["bias"] = random_tensor({4}, rng);
    auto fn = [](const ParamMap& p) {
      auto t = add(p.at("x"), p.at("bias"));
      t = sub(t, p.at("bias"));
      t = mul(t, p.at("bias"));
      return mean(t);
    };
    CHECK(finite_diff_check(fn, params, h, 32, 4) < tol);
  }
  {
    ParamMap params;
    params["x"] = random_tensor({4, 6}, rng);
    params["g"] = random_tensor({6}, rng);
    params["b"] = random_tensor({6}, rng);
    auto fn = [](const ParamMap& p) {
      return mean(layer_norm(p.at("x"), p.at("g"), p.at("b")));
    };
    CHECK(finite_diff_check(fn, params, h, 48, 5) < tol);
  }
  {
    ParamMap params;
    params["x"] = random_tensor({2, 3}, rng);
    params["y"] = random_tensor({2, 3}, rng);
    auto fn = [](const ParamMap& p) {
      return mse_loss(concat({p.at("x"), p.at("y")}, 0), Tensor::zeros({4, 3}));
    };
    CHECK(finite_diff_check(fn, params, h, 32, 6) < tol);
  }
  {
    // dropout with a fixed key is deterministic, so FD still applies
    ParamMap params;
    params["x"] = random_tensor({5, 5}, rng);
    auto fn = [](const ParamMap& p) {
      return mean(dropout(p.at("x"), 0.4, 99, true));
    };
    CHECK(finite_diff_check(fn, params, h, 32, 7) < tol);
  }
  {
    ParamMap params;
    params["table"] = random_tensor({6, 3}, rng);
    auto fn = [](const ParamMap& p) {
      return mean(take_rows(p.at("table"), {0, 2, 2, 5}));
    };
    CHECK(finite_diff_check(fn, params, h, 32, 8) < tol);
  }
}

TEST_CASE("dropout in eval mode is the identity, bitwise") {
  Rng rng(5);
  auto x = random_tensor({64}, rng, false);
  auto y = dropout(x, 0.5, 123, false);
  CHECK(std::memcmp(x.data().data(), y.data().data(), sizeof(double) * 64) == 0);
}

TEST_CASE("dropout stream depends on the key, not evaluation order") {
  Rng rng(6);
  auto x = random_tensor({32}, rng, false);
  auto a = dropout(x, 0.3, 42, true);
  auto ignored = dropout(x, 0.3, 7, true);
  auto b = dropout(x, 0.3, 42, true);
  CHECK(std::memcmp(a.data().data(), b.data().data(), sizeof(double) * 32) == 0);
  (void)ignored;
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ParamMap params;
  params["w"] = Tensor::from_data({3}, {1.0, -2.0, 0.5}, true);
  params["w"].impl()->ensure_grad();  // zeros
  AdamState st;
  adam_step(params, st, 0.1);
  CHECK(params["w"].data()[0] == 1.0);
  CHECK(params["w"].data()[1] == -2.0);
  CHECK(params["w"].data()[2] == 0.5);
  CHECK(st.step == 1);
}

TEST_CASE("adam: first step with unit gradient moves by ~lr") {
  ParamMap params;
  params["w"] = Tensor::from_data({1}, {1.0}, true);
  params["w"].impl()->grad = {1.0};
  AdamState st;
  adam_step(params, st, 0.1);
  // bias-corrected mhat = 1, vhat = 1 -> step = lr / (1 + eps)
  CHECK(params["w"].data()[0] == doctest::Approx(0.9).epsilon(1e-7));
}

TEST_CASE("adam: converges on (w-3)^2") {
  ParamMap params;
  params["w"] = Tensor::from_data({1}, {0.0}, true);
  AdamState st;
  for (int i = 0; i < 1000; ++i) {
    params["w"].zero_grad();
    const double w = params["w"].data()[0];
    params["w"].impl()->grad = {2.0 * (w - 3.0)};
    adam_step(params, st, 0.05);
  }
  CHECK(std::fabs(params["w"].data()[0] - 3.0) < 0.01);
}

TEST_CASE("adam: lr=0 is bitwise a no-op on parameters") {
  ParamMap params;
  params["w"] = Tensor::from_data({3}, {1.0, -0.0, 3.5e-17}, true);
  params["w"].impl()->grad = {0.3, -0.7, 100.0};
  std::vector<double> before(params["w"].data().begin(), params["w"].data().end());
  AdamState st;
  adam_step(params, st, 0.0);
  CHECK(std::memcmp(before.data(), params["w"].data().data(), sizeof(double) * 3) == 0);
  CHECK(st.step == 1);
}

TEST_CASE("adam: NaN gradient rejected, error names the parameter") {
  ParamMap params;
  params["fine"] = Tensor::from_data({1}, {1.0}, true);
  params["fine"].impl()->grad = {0.1};
  params["poisoned"] = Tensor::from_data({1}, {1.0}, true);
  params["poisoned"].impl()->grad = {std::nan("")};
  AdamState st;
  try {
    adam_step(params, st, 0.1);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("poisoned") != std::string::npos);
  }
  CHECK(st.step == 0);
  CHECK(params["fine"].data()[0] == 1.0);
}

TEST_CASE("clip_grad_norm scales gradients above the threshold") {
  ParamMap params;
  params["w"] = Tensor::from_data({2}, {0.0, 0.0}, true);
  params["w"].impl()->grad = {3.0, 4.0};
  const double norm = clip_grad_norm(params, 1.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(params["w"].grad()[0] == doctest::Approx(0.6));
  CHECK(params["w"].grad()[1] == doctest::Approx(0.8));
}

TEST_CASE("determinism: same seed and inputs give bitwise-identical loss") {
  auto run = [] {
    Rng rng(99);
    auto x = random_tensor({6, 6}, rng);
    auto w = random_tensor({6, 6}, rng);
    auto y = dropout(gelu(matmul(x, w)), 0.2, 17, true);
    return sum(y).item();
  };
  const double a = run();
  const double b = run();
  CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
}
