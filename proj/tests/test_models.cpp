#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "windts/gradcheck.hpp"
#include "windts/model.hpp"
#include "windts/ops.hpp"
#include "windts/rng.hpp"

using namespace windts;
using namespace windts::model;

namespace {

ad::Tensor random_tokens(std::int64_t n, std::int64_t width, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> d(static_cast<std::size_t>(n * width));
  for (auto& x : d) x = rng.normal(0.0, 1.0);
  return ad::Tensor::from_data({n, width}, std::move(d));
}

ModelConfig tiny_timer() {
  ModelConfig c = ModelConfig::preset_timer();
  c.tf.layers = 2;
  c.tf.model_dim = 16;
  c.tf.ffn_hidden = 32;
  c.tf.heads = 2;
  c.tf.patch = 6;
  c.tf.context_tokens = 4;
  c.tf.dropout = 0.0;
  return c;
}

}  // namespace

TEST_CASE("shipped configs reproduce the published parameter counts") {
  const std::int64_t timer = count_params(ModelConfig::preset_timer());
  const std::int64_t transformer = count_params(ModelConfig::preset_transformer());
  const std::int64_t mini = count_params(ModelConfig::preset_transformer_mini());
  CHECK(std::fabs(static_cast<double>(timer) / 67.40e6 - 1.0) < 0.005);
  CHECK(std::fabs(static_cast<double>(transformer) / 68.00e6 - 1.0) < 0.005);
  CHECK(std::fabs(static_cast<double>(mini) / 2.31e6 - 1.0) < 0.02);
  CHECK(timer == 67373152);
  CHECK(transformer == 67963264);
  CHECK(mini == 2303872);
}

TEST_CASE("count_params agrees with traversing allocated parameters") {
  for (ModelConfig cfg : {tiny_timer(), ModelConfig::preset_transformer_mini(), ModelConfig::preset_lstm()}) {
    if (cfg.kind == Kind::TRANSFORMER_MINI) {
      cfg.tf.model_dim = 32;  // keep allocation small
      cfg.tf.ffn_hidden = 64;
      cfg.tf.layers = 2;
    }
    if (cfg.is_lstm()) {
      cfg.lstm.hidden_units = 12;
      cfg.lstm.layers = 2;
    }
    const ad::ParamMap params = init_params(cfg, 3);
    CHECK(count_params(cfg) == count_params(params));
  }
}

TEST_CASE("init_params is deterministic per seed and truncated at 2 std") {
  const ModelConfig cfg = tiny_timer();
  const ad::ParamMap a = init_params(cfg, 11);
  const ad::ParamMap b = init_params(cfg, 11);
  const ad::ParamMap c = init_params(cfg, 12);
  bool any_diff = false;
  for (const auto& [name, t] : a) {
    CHECK(std::memcmp(t.data().data(), b.at(name).data().data(),
                      t.data().size() * sizeof(double)) == 0);
    for (std::size_t i = 0; i < t.data().size(); ++i) {
      CHECK(std::isfinite(t.data()[i]));
      if (name.find("ln") == std::string::npos && name.find(".b") == std::string::npos) {
        CHECK(std::fabs(t.data()[i]) <= 0.04 + 1e-15);  // 2 * std(0.02)
      }
      any_diff = any_diff || t.data()[i] != c.at(name).data()[i];
    }
  }
  CHECK(any_diff);
}

TEST_CASE("transformer forward: shape contract and zero-head behavior") {
  ModelConfig cfg = ModelConfig::preset_timer();
  cfg.tf.layers = 2;
  cfg.tf.model_dim = 32;
  cfg.tf.ffn_hidden = 64;
  cfg.tf.heads = 4;
  // keep the published token geometry: 8 x 96 in, 8 x 96 out
  Model m = make_model(cfg, 5);
  const ad::Tensor tokens = random_tokens(8, 96, 7);
  const ad::Tensor out = transformer_forward(m.params, cfg.tf, tokens, false);
  CHECK(out.shape() == ad::Shape{8, 96});

  // zero output projection (and bias) means all-zero predictions
  auto wd = m.params.at("head.wd").mutable_data();
  std::fill(wd.begin(), wd.end(), 0.0);
  const ad::Tensor zero_out = transformer_forward(m.params, cfg.tf, tokens, false);
  for (double v : zero_out.data()) CHECK(v == 0.0);

  CHECK_THROWS_AS(transformer_forward(m.params, cfg.tf, random_tokens(8, 95, 1), false),
                  ValidationError);
  CHECK_THROWS_AS(transformer_forward(m.params, cfg.tf, random_tokens(9, 96, 1), false),
                  ValidationError);
}

TEST_CASE("transformer causality is bitwise") {
  const ModelConfig cfg = tiny_timer();
  const Model m = make_model(cfg, 21);
  Rng rng(98);
  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t n = cfg.tf.max_tokens();
    ad::Tensor base = random_tokens(n, cfg.tf.patch, rng.next_u64());
    const std::int64_t j = 1 + static_cast<std::int64_t>(rng.below(n - 1));  // perturb token j
    std::vector<double> perturbed(base.data().begin(), base.data().end());
    for (std::int64_t col = 0; col < cfg.tf.patch; ++col) {
      perturbed[j * cfg.tf.patch + col] += rng.normal(0.0, 1.0);
    }
    const ad::Tensor out_a = transformer_forward(m.params, cfg.tf, base, false);
    const ad::Tensor out_b = transformer_forward(
        m.params, cfg.tf, ad::Tensor::from_data(base.shape(), std::move(perturbed)), false);
    CHECK(std::memcmp(out_a.data().data(), out_b.data().data(),
                      static_cast<std::size_t>(j * cfg.tf.patch) * sizeof(double)) == 0);
  }
}

TEST_CASE("channel-dependent transformer: width 384 tokens and causality") {
  ModelConfig cfg = ModelConfig::preset_transformer();
  CHECK(cfg.tf.token_width() == 384);
  cfg.tf.layers = 1;
  cfg.tf.model_dim = 16;
  cfg.tf.ffn_hidden = 32;
  cfg.tf.heads = 2;
  cfg.tf.patch = 4;
  cfg.tf.channels = 3;
  cfg.tf.context_tokens = 6;
  cfg.tf.dropout = 0.0;
  const Model m = make_model(cfg, 2);
  const ad::Tensor tokens = random_tokens(7, 12, 3);
  const ad::Tensor out = transformer_forward(m.params, cfg.tf, tokens, false);
  CHECK(out.shape() == ad::Shape{7, 12});

  std::vector<double> perturbed(tokens.data().begin(), tokens.data().end());
  perturbed[5 * 12 + 2] += 3.0;  // token 5
  const ad::Tensor out_b = transformer_forward(
      m.params, cfg.tf, ad::Tensor::from_data(tokens.shape(), std::move(perturbed)), false);
  CHECK(std::memcmp(out.data().data(), out_b.data().data(), 5 * 12 * sizeof(double)) == 0);
}

TEST_CASE("lstm forward: shape, zero-weight fixed point, causality") {
  ModelConfig cfg = ModelConfig::preset_lstm();
  cfg.lstm.hidden_units = 8;
  cfg.lstm.layers = 2;
  cfg.lstm.dropout = 0.0;
  Model m = make_model(cfg, 4);

  const ad::Tensor steps = random_tokens(20, 4, 5);
  const ad::Tensor out = lstm_forward(m.params, cfg.lstm, steps, false);
  CHECK(out.shape() == ad::Shape{20, 4});

  // all-zero weights: state stays at the tanh/sigmoid fixed point, output is
  // the (zero) head bias for every step, independent of input
  for (auto& [name, t] : m.params) {
    auto d = t.mutable_data();
    std::fill(d.begin(), d.end(), 0.0);
  }
  const ad::Tensor frozen = lstm_forward(m.params, cfg.lstm, steps, false);
  const ad::Tensor frozen2 = lstm_forward(m.params, cfg.lstm, random_tokens(20, 4, 99), false);
  for (double v : frozen.data()) CHECK(v == 0.0);
  CHECK(std::memcmp(frozen.data().data(), frozen2.data().data(), 20 * 4 * sizeof(double)) == 0);

  // causality: perturbing step t leaves predictions for steps < t unchanged
  Model m2 = make_model(cfg, 9);
  std::vector<double> perturbed(steps.data().begin(), steps.data().end());
  perturbed[12 * 4 + 1] += 2.0;
  const ad::Tensor a = lstm_forward(m2.params, cfg.lstm, steps, false);
  const ad::Tensor b = lstm_forward(
      m2.params, cfg.lstm, ad::Tensor::from_data(steps.shape(), std::move(perturbed)), false);
  CHECK(std::memcmp(a.data().data(), b.data().data(), 12 * 4 * sizeof(double)) == 0);
  bool changed = false;
  for (std::size_t i = 12 * 4; i < 20 * 4; ++i) changed = changed || a.data()[i] != b.data()[i];
  CHECK(changed);
}

TEST_CASE("gradient check on 2-layer d=16 instances of every architecture") {
  // CI timer
  {
    ModelConfig cfg = tiny_timer();
    ad::ParamMap params = init_params(cfg, 31);
    const ad::Tensor tokens = random_tokens(cfg.tf.max_tokens(), cfg.tf.patch, 41);
    auto loss_fn = [&](const ad::ParamMap& p) {
      return ad::mean(ad::mul(transformer_forward(p, cfg.tf, tokens, false),
                              transformer_forward(p, cfg.tf, tokens, false)));
    };
    CHECK(ad::finite_diff_check(loss_fn, params, 1e-5, 4, 1) < 1e-4);
  }
  // CD baseline
  {
    ModelConfig cfg = ModelConfig::preset_transformer();
    cfg.tf.layers = 2;
    cfg.tf.model_dim = 16;
    cfg.tf.ffn_hidden = 32;
    cfg.tf.heads = 2;
    cfg.tf.patch = 3;
    cfg.tf.channels = 2;
    cfg.tf.context_tokens = 3;
    cfg.tf.dropout = 0.0;
    ad::ParamMap params = init_params(cfg, 32);
    const ad::Tensor tokens = random_tokens(4, 6, 42);
    auto loss_fn = [&](const ad::ParamMap& p) {
      return ad::mse_loss(transformer_forward(p, cfg.tf, tokens, false),
                          ad::Tensor::zeros({4, 6}));
    };
    CHECK(ad::finite_diff_check(loss_fn, params, 1e-5, 4, 2) < 1e-4);
  }
  // LSTM
  {
    ModelConfig cfg = ModelConfig::preset_lstm();
    cfg.lstm.hidden_units = 16;
    cfg.lstm.layers = 2;
    cfg.lstm.dropout = 0.0;
    cfg.lstm.input_dim = 3;
    ad::ParamMap params = init_params(cfg, 33);
    const ad::Tensor steps = random_tokens(6, 3, 43);
    auto loss_fn = [&](const ad::ParamMap& p) {
      return ad::mse_loss(lstm_forward(p, cfg.lstm, steps, false), ad::Tensor::zeros({6, 3}));
    };
    CHECK(ad::finite_diff_check(loss_fn, params, 1e-5, 4, 3) < 1e-4);
  }
}

TEST_CASE("time embedding path: shapes, determinism, gradient") {
  ModelConfig cfg = tiny_timer();
  cfg.tf.use_time_embedding = true;
  ad::ParamMap params = init_params(cfg, 8);
  CHECK(params.count("embed.te") == 1);
  const ad::Tensor tokens = random_tokens(3, cfg.tf.patch, 13);
  const std::vector<std::int64_t> hours = {6, 7, 8};
  const ad::Tensor out = transformer_forward(params, cfg.tf, tokens, false, nullptr, &hours);
  CHECK(out.shape() == ad::Shape{3, cfg.tf.patch});
  CHECK_THROWS_AS(transformer_forward(params, cfg.tf, tokens, false), ValidationError);

  auto loss_fn = [&](const ad::ParamMap& p) {
    return ad::mean(transformer_forward(p, cfg.tf, tokens, false, nullptr, &hours));
  };
  CHECK(ad::finite_diff_check(loss_fn, params, 1e-5, 4, 4) < 1e-4);
}

TEST_CASE("forward passes are independent across samples") {
  const ModelConfig cfg = tiny_timer();
  const Model m = make_model(cfg, 55);
  const ad::Tensor a = random_tokens(5, cfg.tf.patch, 1);
  const ad::Tensor b = random_tokens(5, cfg.tf.patch, 2);
  const ad::Tensor a_first = transformer_forward(m.params, cfg.tf, a, false);
  const ad::Tensor b_then = transformer_forward(m.params, cfg.tf, b, false);
  const ad::Tensor b_first = transformer_forward(m.params, cfg.tf, b, false);
  const ad::Tensor a_then = transformer_forward(m.params, cfg.tf, a, false);
  CHECK(std::memcmp(a_first.data().data(), a_then.data().data(),
                    a_first.data().size() * sizeof(double)) == 0);
  CHECK(std::memcmp(b_first.data().data(), b_then.data().data(),
                    b_first.data().size() * sizeof(double)) == 0);
}

TEST_CASE("checkpoint round trip is bitwise; mismatches are rejected") {
  ModelConfig cfg = tiny_timer();
  Model m = make_model(cfg, 17);
  const std::string path = "/tmp/windts_ckpt_test.bin";
  save_checkpoint(path, m, {{"note", "unit"}});

  const Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.metadata.at("note") == "unit");
  CHECK(loaded.model.config == cfg);
  for (const auto& [name, t] : m.params) {
    const auto& lt = loaded.model.params.at(name);
    CHECK(std::memcmp(t.data().data(), lt.data().data(), t.data().size() * sizeof(double)) == 0);
  }

  // wrong config on load
  ModelConfig other = cfg;
  other.tf.model_dim = 32;
  other.tf.heads = 2;
  try {
    load_checkpoint(path, other);
    FAIL("expected config mismatch rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("model_dim") != std::string::npos);
  }

  // truncated file fails the checksum
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 16));
  out.close();
  try {
    load_checkpoint(path);
    FAIL("expected checksum failure");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("checksum") != std::string::npos);
  }
  std::remove(path.c_str());
}
