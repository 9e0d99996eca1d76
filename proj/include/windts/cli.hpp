#pragma once

#include <string>
#include <vector>

#include "windts/config.hpp"

namespace windts::cli {

// Resolution order: defaults < config file < WINDTS_* environment < --set
// key=value flags. The resolved snapshot is written into every command's
// output directory.
cfg::Config resolve_config(const std::string& config_path,
                           const std::vector<std::string>& overrides);

void cmd_synth(const cfg::Config& config, const std::string& out_dir);
void cmd_clean(const cfg::Config& config, const std::string& in_path,
               const std::string& out_dir);
void cmd_dataset(const cfg::Config& config, const std::string& in_dir,
                 const std::string& out_dir);
void cmd_pretrain(const cfg::Config& config, const std::string& out_dir);
void cmd_train(const cfg::Config& config, const std::string& data_dir,
               const std::string& out_dir);
void cmd_finetune(const cfg::Config& config, const std::string& data_dir,
                  const std::string& checkpoint, const std::string& out_dir);
void cmd_forecast(const cfg::Config& config, const std::string& checkpoint,
                  const std::string& context_csv, int horizon, const std::string& out_csv);
void cmd_eval(const cfg::Config& config, const std::string& data_dir,
              const std::vector<std::string>& models, const std::string& out_dir);
void cmd_ablate(const cfg::Config& config, const std::string& data_dir,
                const std::string& pretrained, const std::string& out_dir);
void cmd_one_turbine(const cfg::Config& config, const std::string& data_dir,
                     const std::string& pretrained, const std::string& out_dir);
void cmd_report(const std::string& report_csv, const std::string& out_dir, bool svg);
void cmd_pipeline(const cfg::Config& config, const std::string& out_dir);

}  // namespace windts::cli
