#include "windts/model.hpp"

namespace windts::model {

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::TIMER: return "timer";
    case Kind::TRANSFORMER: return "transformer";
    case Kind::TRANSFORMER_MINI: return "transformer-mini";
    case Kind::LSTM: return "lstm";
  }
  return "?";
}

Kind kind_from_name(const std::string& name) {
  for (Kind k : {Kind::TIMER, Kind::TRANSFORMER, Kind::TRANSFORMER_MINI, Kind::LSTM}) {
    if (name == kind_name(k)) return k;
  }
  fail("unknown model kind '{}' (expected timer, transformer, transformer-mini or lstm)", name);
}

void TransformerConfig::validate() const {
  WINDTS_REQUIRE(layers >= 1 && model_dim >= 1 && ffn_hidden >= 1 && heads >= 1,
                 "transformer config: non-positive dimension");
  WINDTS_REQUIRE(model_dim % heads == 0, "transformer config: model_dim {} not divisible by {} heads",
                 model_dim, heads);
  WINDTS_REQUIRE(dropout >= 0.0 && dropout < 1.0, "transformer config: dropout {} outside [0,1)",
                 dropout);
  WINDTS_REQUIRE(patch >= 1 && context_tokens >= 1 && channels >= 1,
                 "transformer config: patch/context/channels must be >= 1");
}

void LstmConfig::validate() const {
  WINDTS_REQUIRE(hidden_units >= 1 && layers >= 1 && input_dim >= 1,
                 "lstm config: non-positive dimension");
  WINDTS_REQUIRE(dropout >= 0.0 && dropout < 1.0, "lstm config: dropout {} outside [0,1)", dropout);
}

void ModelConfig::validate() const {
  if (is_lstm()) {
    lstm.validate();
  } else {
    tf.validate();
  }
}

ModelConfig ModelConfig::preset_timer() {
  ModelConfig c;
  c.kind = Kind::TIMER;
  return c;
}

ModelConfig ModelConfig::preset_transformer() {
  ModelConfig c;
  c.kind = Kind::TRANSFORMER;
  c.tf.channels = 4;
  return c;
}

ModelConfig ModelConfig::preset_transformer_mini() {
  ModelConfig c;
  c.kind = Kind::TRANSFORMER_MINI;
  c.tf.layers = 4;
  c.tf.model_dim = 256;
  c.tf.ffn_hidden = 512;
  c.tf.channels = 4;
  return c;
}

ModelConfig ModelConfig::preset_lstm() {
  ModelConfig c;
  c.kind = Kind::LSTM;
  return c;
}

std::map<std::string, std::string> ModelConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["kind"] = kind_name(kind);
  kv["tf.layers"] = std::to_string(tf.layers);
  kv["tf.model_dim"] = std::to_string(tf.model_dim);
  kv["tf.ffn_hidden"] = std::to_string(tf.ffn_hidden);
  kv["tf.heads"] = std::to_string(tf.heads);
  kv["tf.dropout"] = fmt::format("{}", tf.dropout);
  kv["tf.patch"] = std::to_string(tf.patch);
  kv["tf.context_tokens"] = std::to_string(tf.context_tokens);
  kv["tf.use_time_embedding"] = tf.use_time_embedding ? "1" : "0";
  kv["tf.channels"] = std::to_string(tf.channels);
  kv["lstm.hidden_units"] = std::to_string(lstm.hidden_units);
  kv["lstm.layers"] = std::to_string(lstm.layers);
  kv["lstm.dropout"] = fmt::format("{}", lstm.dropout);
  kv["lstm.input_dim"] = std::to_string(lstm.input_dim);
  return kv;
}

ModelConfig ModelConfig::from_kv(const std::map<std::string, std::string>& kv) {
  auto get = [&kv](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) fail("model config: missing key '{}'", key);
    return it->second;
  };
  ModelConfig c;
  c.kind = kind_from_name(get("kind"));
  c.tf.layers = std::stoi(get("tf.layers"));
  c.tf.model_dim = std::stoi(get("tf.model_dim"));
  c.tf.ffn_hidden = std::stoi(get("tf.ffn_hidden"));
  c.tf.heads = std::stoi(get("tf.heads"));
  c.tf.dropout = std::stod(get("tf.dropout"));
  c.tf.patch = std::stoi(get("tf.patch"));
  c.tf.context_tokens = std::stoi(get("tf.context_tokens"));
  c.tf.use_time_embedding = get("tf.use_time_embedding") == "1";
  c.tf.channels = std::stoi(get("tf.channels"));
  c.lstm.hidden_units = std::stoi(get("lstm.hidden_units"));
  c.lstm.layers = std::stoi(get("lstm.layers"));
  c.lstm.dropout = std::stod(get("lstm.dropout"));
  c.lstm.input_dim = std::stoi(get("lstm.input_dim"));
  c.validate();
  return c;
}

std::vector<ParamSpec> param_specs(const ModelConfig& config) {
  config.validate();
  using Init = ParamSpec::Init;
  std::vector<ParamSpec> specs;
  if (config.is_lstm()) {
    const auto& c = config.lstm;
    for (int l = 0; l < c.layers; ++l) {
      const std::int64_t in = l == 0 ? c.input_dim : c.hidden_units;
      const std::int64_t h = c.hidden_units;
      const std::string p = fmt::format("lstm{:02}.", l);
      specs.push_back({p + "wih", {in, 4 * h}, Init::TRUNC_NORMAL});
      specs.push_back({p + "whh", {h, 4 * h}, Init::TRUNC_NORMAL});
      specs.push_back({p + "b", {4 * h}, Init::ZERO});
    }
    specs.push_back({"head.w", {c.hidden_units, c.input_dim}, Init::TRUNC_NORMAL});
    specs.push_back({"head.b", {c.input_dim}, Init::ZERO});
    return specs;
  }

  const auto& c = config.tf;
  const std::int64_t d = c.model_dim;
  const std::int64_t w = c.token_width();
  specs.push_back({"embed.we", {w, d}, Init::TRUNC_NORMAL});
  specs.push_back({"embed.pos", {c.max_tokens(), d}, Init::TRUNC_NORMAL});
  if (c.use_time_embedding) {
    specs.push_back({"embed.te", {24, d}, Init::TRUNC_NORMAL});
  }
  for (int l = 0; l < c.layers; ++l) {
    const std::string p = fmt::format("block{:02}.", l);
    specs.push_back({p + "ln1.g", {d}, Init::ONE});
    specs.push_back({p + "ln1.b", {d}, Init::ZERO});
    specs.push_back({p + "attn.wq", {d, d}, Init::TRUNC_NORMAL});
    specs.push_back({p + "attn.wk", {d, d}, Init::TRUNC_NORMAL});
    specs.push_back({p + "attn.wv", {d, d}, Init::TRUNC_NORMAL});
    specs.push_back({p + "attn.wo", {d, d}, Init::TRUNC_NORMAL});
    specs.push_back({p + "ln2.g", {d}, Init::ONE});
    specs.push_back({p + "ln2.b", {d}, Init::ZERO});
    specs.push_back({p + "ffn.w1", {d, c.ffn_hidden}, Init::TRUNC_NORMAL});
    specs.push_back({p + "ffn.b1", {c.ffn_hidden}, Init::ZERO});
    specs.push_back({p + "ffn.w2", {c.ffn_hidden, d}, Init::TRUNC_NORMAL});
    specs.push_back({p + "ffn.b2", {d}, Init::ZERO});
  }
  specs.push_back({"final_ln.g", {d}, Init::ONE});
  specs.push_back({"final_ln.b", {d}, Init::ZERO});
  specs.push_back({"head.wd", {d, w}, Init::TRUNC_NORMAL});
  specs.push_back({"head.bd", {w}, Init::ZERO});
  return specs;
}

ad::ParamMap init_params(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x9a9c51));
  ad::ParamMap params;
  for (const ParamSpec& spec : param_specs(config)) {
    const std::size_t n = static_cast<std::size_t>(ad::shape_numel(spec.shape));
    std::vector<double> data(n);
    switch (spec.init) {
      case ParamSpec::Init::TRUNC_NORMAL:
        for (auto& v : data) v = rng.truncated_normal(0.0, 0.02);
        break;
      case ParamSpec::Init::ZERO:
        break;
      case ParamSpec::Init::ONE:
        std::fill(data.begin(), data.end(), 1.0);
        break;
    }
    params[spec.name] = ad::Tensor::from_data(spec.shape, std::move(data), true);
  }
  return params;
}

std::int64_t count_params(const ModelConfig& config) {
  std::int64_t total = 0;
  for (const ParamSpec& spec : param_specs(config)) total += ad::shape_numel(spec.shape);
  return total;
}

std::int64_t count_params(const ad::ParamMap& params) {
  std::int64_t total = 0;
  for (const auto& [name, t] : params) total += t.numel();
  return total;
}

Model make_model(const ModelConfig& config, std::uint64_t seed) {
  return Model{config, init_params(config, seed)};
}

}  // namespace windts::model
