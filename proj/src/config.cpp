#include "windts/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "windts/csvio.hpp"

namespace windts::cfg {

const std::vector<KeySpec>& known_keys() {
  static const std::vector<KeySpec> keys = {
      {"seed", "0", "global run seed; every random stream derives from it"},
      {"threads", "1", "worker threads for per-turbine and per-window stages"},

      {"synth.turbines", "6", "turbines in the synthetic plant"},
      {"synth.days", "30", "days of 10-minute data per turbine"},
      {"synth.interval_s", "600", "sampling interval in seconds"},
      {"synth.start_ts", "1704067200", "epoch seconds of the first sample"},
      {"synth.wind_ar1", "0.97", "AR(1) coefficient of the wind process"},
      {"synth.wind_mean", "7.5", "mean wind speed, m/s"},
      {"synth.wind_volatility", "0.6", "AR innovation std, m/s per step"},
      {"synth.wind_diurnal_amp", "1.0", "diurnal wind amplitude, m/s"},
      {"synth.temp_mean", "21.0", "mean ambient temperature, degC"},
      {"synth.temp_seasonal_amp", "4.0", "seasonal temperature amplitude"},
      {"synth.temp_diurnal_amp", "1.5", "diurnal temperature amplitude"},
      {"synth.noise_wind", "0.15", "wind measurement noise std"},
      {"synth.noise_power_frac", "0.01", "power noise std as fraction of rated"},
      {"synth.noise_genspeed", "8.0", "generator speed noise std, rpm"},
      {"synth.noise_temp", "0.5", "temperature noise std"},
      {"synth.noise_pitch", "0.15", "pitch noise std, degrees"},
      {"synth.curtail_frac", "0.02", "fraction of points under curtailment"},
      {"synth.spike_frac", "0.005", "fraction of points with sensor spikes"},
      {"synth.gap_frac", "0.01", "fraction of points lost to gaps"},
      {"synth.curtail_run_min", "3", "shortest curtailment run, points"},
      {"synth.curtail_run_max", "30", "longest curtailment run, points"},
      {"synth.curtail_min_wind", "0", "curtail only above this true wind speed"},
      {"synth.gap_run_min", "1", "shortest gap run, points"},
      {"synth.gap_run_max", "8", "longest gap run, points"},
      {"synth.rated_genspeed", "1800", "generator speed at rated wind, rpm"},

      {"turbine.cut_in", "3.0", "cut-in wind speed, m/s"},
      {"turbine.rated_speed", "11.0", "rated wind speed, m/s"},
      {"turbine.cut_out", "25.0", "cut-out wind speed, m/s"},
      {"turbine.rated_power", "1500.0", "rated power, kW"},
      {"turbine.mppt_pitch_limit", "5.0", "pitch ceiling in the MPPT band, degrees"},
      {"turbine.power_floor_fraction", "0.9", "power floor above rated, fraction"},
      {"turbine.wind_range", "0,45", "plausible wind speed range"},
      {"turbine.power_range", "-75,1800", "plausible power range, kW"},
      {"turbine.genspeed_range", "0,2300", "plausible generator speed range, rpm"},
      {"turbine.temp_range", "-5,45", "plausible ambient temperature range"},

      {"clean.eps", "0.10", "DBSCAN radius in standardized (wind,power) units"},
      {"clean.min_pts", "10", "DBSCAN core threshold, self included"},
      {"clean.lof_k", "20", "LOF neighborhood size"},
      {"clean.lof_threshold", "3.0", "LOF score above which a point is rejected"},
      {"clean.min_points_for_density", "100", "survivors needed to run density refinement"},
      {"clean.max_gap", "3", "longest repairable gap, points"},
      {"clean.quantile_trim", "false", "also trim outside empirical quantiles"},
      {"clean.trim_q", "0.001", "quantile for optional trimming"},

      {"dataset.window", "768", "test window length, points"},
      {"dataset.train_window", "", "train/val window length (empty = dataset.window)"},
      {"dataset.train_stride", "100", "training window stride"},
      {"dataset.val_stride", "100", "validation window stride"},
      {"dataset.test_stride", "1", "test window stride"},
      {"dataset.train_ratio", "0.5", "chronological share of the training region"},
      {"dataset.val_ratio", "0.25", "chronological share of the validation region"},
      {"dataset.cache", "false", "also write the binary series cache"},

      {"model.kind", "timer", "timer | transformer | transformer-mini | lstm"},
      {"model.layers", "8", "transformer blocks"},
      {"model.dim", "1024", "model dimension"},
      {"model.ffn", "2048", "FFN hidden units"},
      {"model.heads", "8", "attention heads"},
      {"model.dropout", "0.1", "dropout rate"},
      {"model.patch", "96", "token patch length S"},
      {"model.context_tokens", "7", "context tokens for next-token prediction"},
      {"model.time_embedding", "false", "add the hour-of-day embedding"},
      {"lstm.hidden", "128", "LSTM hidden units"},
      {"lstm.layers", "3", "LSTM depth"},
      {"lstm.dropout", "0.1", "LSTM inter-layer dropout"},

      {"train.lr", "", "initial learning rate (empty = mode default)"},
      {"train.epochs", "", "epoch budget (empty = mode default)"},
      {"train.schedule", "", "cosine | constant (empty = mode default)"},
      {"train.batch", "64", "batch size"},
      {"train.patience", "", "early stopping patience (empty = mode default)"},
      {"train.clip", "true", "gradient clipping at global norm 1"},
      {"train.clip_norm", "1.0", "clipping threshold"},

      {"pretrain.samples_per_regime", "256", "series per synthetic regime"},
      {"pretrain.regimes", "ar1,seasonal,switch", "regimes in the pretraining mix"},

      {"eval.horizons", "1,6,12,24,48,96", "forecast horizons to score"},
      {"eval.context", "672", "context length for evaluation, points"},
      {"eval.test_stride", "", "thin the test split (empty = dataset.test_stride)"},
      {"eval.svg", "true", "emit SVG plots next to the report"},

      {"finetune.lr", "", "fine-tuning learning rate (empty = 5e-6)"},
      {"finetune.epochs", "", "fine-tuning epoch budget (empty = 100)"},
      {"finetune.schedule", "", "fine-tuning schedule (empty = constant)"},
      {"finetune.patience", "", "fine-tuning early-stop patience (empty = 10)"},

      {"ablate.fractions", "0.1,0.25,0.5,1.0", "training-data fractions"},
      {"oneturbine.trials", "", "comma-separated trial turbine ids (empty = first 3)"},
      {"pipeline.models", "timer-scratch,lstm",
       "rows for pipeline/ablate/one-turbine: timer-scratch, timer-pretrained, "
       "timer-finetuned, transformer, transformer-mini, lstm"},
  };
  return keys;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::string env_name(const std::string& key) {
  std::string out = "WINDTS_";
  for (char c : key) {
    out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace

Config::Config() {
  for (const KeySpec& k : known_keys()) values_[k.key] = k.default_value;
}

Config Config::load_file(const std::string& path) {
  Config c;
  std::ifstream in(path);
  if (!in) fail("cannot open config file '{}'", path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    WINDTS_REQUIRE(eq != std::string::npos, "{}:{}: expected 'key = value', got '{}'", path,
                   line_no, line);
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

void Config::apply_env() {
  for (const KeySpec& k : known_keys()) {
    if (const char* v = std::getenv(env_name(k.key).c_str())) {
      values_[k.key] = v;
    }
  }
}

void Config::set(const std::string& key, const std::string& value) {
  if (values_.count(key) == 0) {
    fail("unknown config key '{}' (see the configuration section of the README)", key);
  }
  values_[key] = value;
}

void Config::set_if_known(const std::string& key, const std::string& value) {
  if (values_.count(key)) values_[key] = value;
}

bool Config::has(const std::string& key) const {
  auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string Config::get_str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail("unknown config key '{}'", key);
  return it->second;
}

double Config::get_double(const std::string& key) const {
  return csv::parse_double(get_str(key));
}

std::int64_t Config::get_int(const std::string& key) const {
  return csv::parse_i64(get_str(key));
}

bool Config::get_bool(const std::string& key) const {
  const std::string v = get_str(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail("config key '{}': cannot parse '{}' as a boolean", key, v);
}

std::vector<std::string> Config::get_str_list(const std::string& key) const {
  std::vector<std::string> out;
  for (const std::string& cell : csv::split_line(get_str(key))) {
    const std::string t = trim(cell);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const std::string& s : get_str_list(key)) {
    out.push_back(static_cast<int>(csv::parse_i64(s)));
  }
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& s : get_str_list(key)) out.push_back(csv::parse_double(s));
  return out;
}

void Config::write_snapshot(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail("cannot open '{}' for writing", path);
  for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
}

scada::TurbineSpec Config::turbine_spec() const {
  scada::TurbineSpec s;
  s.cut_in_speed = get_double("turbine.cut_in");
  s.rated_speed = get_double("turbine.rated_speed");
  s.cut_out_speed = get_double("turbine.cut_out");
  s.rated_power = get_double("turbine.rated_power");
  s.mppt_pitch_limit = get_double("turbine.mppt_pitch_limit");
  s.power_floor_fraction = get_double("turbine.power_floor_fraction");
  const char* range_keys[scada::kNumChannels] = {"turbine.wind_range", "turbine.power_range",
                                                 "turbine.genspeed_range", "turbine.temp_range"};
  for (int c = 0; c < scada::kNumChannels; ++c) {
    const auto v = get_double_list(range_keys[c]);
    WINDTS_REQUIRE(v.size() == 2, "config key '{}' must hold 'lo,hi'", range_keys[c]);
    s.ranges[c] = {v[0], v[1]};
  }
  s.validate();
  return s;
}

scada::CleanConfig Config::clean_config() const {
  scada::CleanConfig c;
  c.dbscan_eps = get_double("clean.eps");
  c.dbscan_min_pts = static_cast<int>(get_int("clean.min_pts"));
  c.lof_k = static_cast<int>(get_int("clean.lof_k"));
  c.lof_threshold = get_double("clean.lof_threshold");
  c.min_points_for_density = static_cast<std::size_t>(get_int("clean.min_points_for_density"));
  c.max_gap = static_cast<int>(get_int("clean.max_gap"));
  c.quantile_trim = get_bool("clean.quantile_trim");
  c.trim_q = get_double("clean.trim_q");
  return c;
}

synth::SynthConfig Config::synth_config() const {
  synth::SynthConfig c;
  c.turbines = static_cast<int>(get_int("synth.turbines"));
  c.days = static_cast<int>(get_int("synth.days"));
  c.interval_s = get_int("synth.interval_s");
  c.start_ts = get_int("synth.start_ts");
  c.spec = turbine_spec();
  c.rated_genspeed = get_double("synth.rated_genspeed");
  c.wind_ar1 = get_double("synth.wind_ar1");
  c.wind_mean = get_double("synth.wind_mean");
  c.wind_volatility = get_double("synth.wind_volatility");
  c.wind_diurnal_amp = get_double("synth.wind_diurnal_amp");
  c.temp_mean = get_double("synth.temp_mean");
  c.temp_seasonal_amp = get_double("synth.temp_seasonal_amp");
  c.temp_diurnal_amp = get_double("synth.temp_diurnal_amp");
  c.noise_wind = get_double("synth.noise_wind");
  c.noise_power_frac = get_double("synth.noise_power_frac");
  c.noise_genspeed = get_double("synth.noise_genspeed");
  c.noise_temp = get_double("synth.noise_temp");
  c.noise_pitch = get_double("synth.noise_pitch");
  c.curtail_frac = get_double("synth.curtail_frac");
  c.spike_frac = get_double("synth.spike_frac");
  c.gap_frac = get_double("synth.gap_frac");
  c.curtail_run_min = static_cast<int>(get_int("synth.curtail_run_min"));
  c.curtail_run_max = static_cast<int>(get_int("synth.curtail_run_max"));
  c.curtail_min_wind = get_double("synth.curtail_min_wind");
  c.gap_run_min = static_cast<int>(get_int("synth.gap_run_min"));
  c.gap_run_max = static_cast<int>(get_int("synth.gap_run_max"));
  c.seed = static_cast<std::uint64_t>(get_int("seed"));
  c.validate();
  return c;
}

data::SplitConfig Config::split_config() const {
  data::SplitConfig c;
  c.window = static_cast<std::size_t>(get_int("dataset.window"));
  if (has("dataset.train_window")) {
    c.train_window = static_cast<std::size_t>(get_int("dataset.train_window"));
  }
  c.train_stride = static_cast<std::size_t>(get_int("dataset.train_stride"));
  c.val_stride = static_cast<std::size_t>(get_int("dataset.val_stride"));
  c.test_stride = static_cast<std::size_t>(get_int("dataset.test_stride"));
  c.train_ratio = get_double("dataset.train_ratio");
  c.val_ratio = get_double("dataset.val_ratio");
  return c;
}

model::ModelConfig Config::model_config(const std::string& kind_override) const {
  const std::string kind =
      kind_override.empty() ? get_str("model.kind") : kind_override;
  model::ModelConfig c;
  c.kind = model::kind_from_name(kind);
  if (c.kind == model::Kind::TRANSFORMER_MINI) {
    c = model::ModelConfig::preset_transformer_mini();
  } else if (c.kind == model::Kind::TRANSFORMER) {
    c = model::ModelConfig::preset_transformer();
  } else if (c.kind == model::Kind::LSTM) {
    c = model::ModelConfig::preset_lstm();
  } else {
    c = model::ModelConfig::preset_timer();
  }
  if (c.kind != model::Kind::TRANSFORMER_MINI) {
    // mini keeps its published scale unless explicitly overridden below
    c.tf.layers = static_cast<int>(get_int("model.layers"));
    c.tf.model_dim = static_cast<int>(get_int("model.dim"));
    c.tf.ffn_hidden = static_cast<int>(get_int("model.ffn"));
    c.tf.heads = static_cast<int>(get_int("model.heads"));
  }
  c.tf.dropout = get_double("model.dropout");
  c.tf.patch = static_cast<int>(get_int("model.patch"));
  c.tf.context_tokens = static_cast<int>(get_int("model.context_tokens"));
  c.tf.use_time_embedding = get_bool("model.time_embedding");
  c.lstm.hidden_units = static_cast<int>(get_int("lstm.hidden"));
  c.lstm.layers = static_cast<int>(get_int("lstm.layers"));
  c.lstm.dropout = get_double("lstm.dropout");
  c.validate();
  return c;
}

train::TrainConfig Config::train_config(train::TrainMode mode) const {
  train::TrainConfig tc = train::TrainConfig::defaults(mode);
  // FINETUNE reads the finetune.* keys, other modes the train.* keys.
  const std::string p = mode == train::TrainMode::FINETUNE ? "finetune." : "train.";
  if (has(p + "lr")) tc.initial_lr = get_double(p + "lr");
  if (has(p + "epochs")) tc.epochs = static_cast<int>(get_int(p + "epochs"));
  if (has(p + "schedule")) {
    const std::string s = get_str(p + "schedule");
    if (s == "cosine") {
      tc.schedule = train::Schedule::COSINE;
    } else if (s == "constant") {
      tc.schedule = train::Schedule::CONSTANT;
    } else {
      fail("config key '{}schedule': expected cosine or constant, got '{}'", p, s);
    }
  }
  if (has(p + "patience")) {
    tc.early_stop_patience = static_cast<int>(get_int(p + "patience"));
  }
  tc.batch_size = static_cast<int>(get_int("train.batch"));
  tc.grad_clip = get_bool("train.clip");
  tc.clip_norm = get_double("train.clip_norm");
  tc.seed = static_cast<std::uint64_t>(get_int("seed"));
  return tc;
}

eval::EvalOptions Config::eval_options() const {
  eval::EvalOptions o;
  o.horizons = get_int_list("eval.horizons");
  o.context_len = static_cast<std::size_t>(get_int("eval.context"));
  o.seed = static_cast<std::uint64_t>(get_int("seed"));
  return o;
}

std::vector<train::RegimeConfig> Config::pretrain_regimes() const {
  std::vector<train::RegimeConfig> out;
  for (const std::string& name : get_str_list("pretrain.regimes")) {
    train::RegimeConfig rc;
    if (name == "ar1") {
      rc.type = train::RegimeConfig::Type::AR1;
      rc.ar1 = 0.97;
      rc.innovation_std = 0.25;
    } else if (name == "ar1-fast") {
      rc.type = train::RegimeConfig::Type::AR1;
      rc.ar1 = 0.8;
      rc.innovation_std = 0.6;
    } else if (name == "seasonal") {
      rc.type = train::RegimeConfig::Type::SEASONAL;
    } else if (name == "switch") {
      rc.type = train::RegimeConfig::Type::REGIME_SWITCH;
    } else {
      fail("config key 'pretrain.regimes': unknown regime '{}'", name);
    }
    out.push_back(rc);
  }
  return out;
}

}  // namespace windts::cfg
