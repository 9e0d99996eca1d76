#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "windts/cleaning.hpp"
#include "windts/dataset.hpp"
#include "windts/evaluation.hpp"
#include "windts/model.hpp"
#include "windts/synth.hpp"
#include "windts/trainer.hpp"

namespace windts::cfg {

struct KeySpec {
  const char* key;
  const char* default_value;
  const char* description;
};

// Every configuration key, its shipped default, and one-line doc. Keys are
// sectioned (`clean.eps`, `train.lr`); the same names work in the config
// file, as WINDTS_* environment overrides (dots become underscores), and as
// --set key=value flag overrides.
const std::vector<KeySpec>& known_keys();

class Config {
 public:
  Config();  // defaults only

  static Config load_file(const std::string& path);  // defaults + file
  void apply_env();                                   // WINDTS_* overrides
  void set(const std::string& key, const std::string& value);  // flag override
  void set_if_known(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_str(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::string> get_str_list(const std::string& key) const;

  // Fully resolved snapshot (sorted key=value) for provenance.
  void write_snapshot(const std::string& path) const;

  scada::TurbineSpec turbine_spec() const;
  scada::CleanConfig clean_config() const;
  synth::SynthConfig synth_config() const;
  data::SplitConfig split_config() const;
  model::ModelConfig model_config(const std::string& kind_override = "") const;
  train::TrainConfig train_config(train::TrainMode mode) const;
  eval::EvalOptions eval_options() const;
  std::vector<train::RegimeConfig> pretrain_regimes() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace windts::cfg
