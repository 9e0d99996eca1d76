#include <CLI11.hpp>
#include <exception>
#include <iostream>

#include "windts/cli.hpp"
#include "windts/common.hpp"

using namespace windts;

int main(int argc, char** argv) {
  CLI::App app{"SCADA time-series cleaning and patch-token forecasting toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand name

  std::string config_path;
  std::vector<std::string> overrides;
  std::string seed_override;
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "override a config key, e.g. --set train.lr=1e-4");
  app.add_option("--seed", seed_override, "shorthand for --set seed=N");
  std::string threads_override;
  app.add_option("--threads", threads_override, "shorthand for --set threads=N");

  std::string out_dir = "out";
  std::string in_path, data_dir, checkpoint, context_csv, report_csv, pretrained;
  std::vector<std::string> models;
  int horizon = 96;
  bool svg = true;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic plant with ground truth");
  synth->add_option("--out", out_dir, "output directory");

  CLI::App* clean = app.add_subcommand("clean", "run the outlier-removal pipeline");
  clean->add_option("--in", in_path, "turbine CSV file or directory")->required();
  clean->add_option("--out", out_dir, "output directory");

  CLI::App* dataset = app.add_subcommand("dataset", "build split manifests from cleaned data");
  dataset->add_option("--in", in_path, "cleaned data directory")->required();
  dataset->add_option("--out", out_dir, "output directory");

  CLI::App* pretrain =
      app.add_subcommand("pretrain", "pretrain on the synthetic multi-regime corpus");
  pretrain->add_option("--out", out_dir, "output directory");

  CLI::App* train_cmd = app.add_subcommand("train", "train from scratch on cleaned data");
  train_cmd->add_option("--data", data_dir, "cleaned data directory")->required();
  train_cmd->add_option("--out", out_dir, "output directory");

  CLI::App* finetune = app.add_subcommand("finetune", "fine-tune a pretrained checkpoint");
  finetune->add_option("--data", data_dir, "cleaned data directory")->required();
  finetune->add_option("--checkpoint", checkpoint, "pretrained checkpoint")->required();
  finetune->add_option("--out", out_dir, "output directory");

  CLI::App* forecast = app.add_subcommand("forecast", "multi-horizon forecast from a context CSV");
  forecast->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  forecast->add_option("--context", context_csv, "context CSV (frame schema)")->required();
  forecast->add_option("--horizon", horizon, "steps to forecast");
  std::string out_csv = "forecast.csv";
  forecast->add_option("--out", out_csv, "output CSV");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate checkpoints at multiple horizons");
  eval_cmd->add_option("--data", data_dir, "cleaned data directory")->required();
  eval_cmd->add_option("--model", models, "name=checkpoint (repeatable)")->required();
  eval_cmd->add_option("--out", out_dir, "output directory");

  CLI::App* ablate = app.add_subcommand("ablate", "train at shrinking data fractions");
  ablate->add_option("--data", data_dir, "cleaned data directory")->required();
  ablate->add_option("--pretrained", pretrained,
                     "pretrained checkpoint for finetune/zero-shot rows");
  ablate->add_option("--out", out_dir, "output directory");

  CLI::App* one_turbine =
      app.add_subcommand("one-turbine", "train on single turbines, test on the whole plant");
  one_turbine->add_option("--data", data_dir, "cleaned data directory")->required();
  one_turbine->add_option("--pretrained", pretrained,
                          "pretrained checkpoint for finetune/zero-shot rows");
  one_turbine->add_option("--out", out_dir, "output directory");

  CLI::App* report = app.add_subcommand("report", "re-render tables and plots from a report CSV");
  report->add_option("--in", report_csv, "report.csv")->required();
  report->add_option("--out", out_dir, "output directory");
  report->add_flag("--svg,!--no-svg", svg, "emit SVG plots");

  CLI::App* pipeline =
      app.add_subcommand("pipeline", "synth -> clean -> dataset -> train -> eval, end to end");
  pipeline->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\nRun with --help for usage.\n";
    return 1;
  }

  try {
    if (!seed_override.empty()) overrides.push_back("seed=" + seed_override);
    if (!threads_override.empty()) overrides.push_back("threads=" + threads_override);
    const cfg::Config config = cli::resolve_config(config_path, overrides);

    if (synth->parsed()) {
      cli::cmd_synth(config, out_dir);
    } else if (clean->parsed()) {
      cli::cmd_clean(config, in_path, out_dir);
    } else if (dataset->parsed()) {
      cli::cmd_dataset(config, in_path, out_dir);
    } else if (pretrain->parsed()) {
      cli::cmd_pretrain(config, out_dir);
    } else if (train_cmd->parsed()) {
      cli::cmd_train(config, data_dir, out_dir);
    } else if (finetune->parsed()) {
      cli::cmd_finetune(config, data_dir, checkpoint, out_dir);
    } else if (forecast->parsed()) {
      cli::cmd_forecast(config, checkpoint, context_csv, horizon, out_csv);
    } else if (eval_cmd->parsed()) {
      cli::cmd_eval(config, data_dir, models, out_dir);
    } else if (ablate->parsed()) {
      cli::cmd_ablate(config, data_dir, pretrained, out_dir);
    } else if (one_turbine->parsed()) {
      cli::cmd_one_turbine(config, data_dir, pretrained, out_dir);
    } else if (report->parsed()) {
      cli::cmd_report(report_csv, out_dir, svg);
    } else if (pipeline->parsed()) {
      cli::cmd_pipeline(config, out_dir);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
