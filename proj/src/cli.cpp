#include "windts/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <thread>

#include "windts/cleaning.hpp"
#include "windts/csvio.hpp"
#include "windts/forecast.hpp"
#include "windts/rng.hpp"

namespace fs = std::filesystem;

namespace windts::cli {

namespace {

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// Turbine data CSVs in a directory, sorted by filename; sidecar outputs
// (labels, truth, stats) are excluded.
std::vector<fs::path> turbine_csvs(const std::string& in_path) {
  std::vector<fs::path> files;
  const fs::path p(in_path);
  if (fs::is_regular_file(p)) {
    files.push_back(p);
  } else if (fs::is_directory(p)) {
    for (const auto& entry : fs::directory_iterator(p)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
      const std::string stem = entry.path().stem().string();
      if (stem == "truth" || stem == "density_stats") continue;
      if (stem.size() > 7 && stem.substr(stem.size() - 7) == "_labels") continue;
      if (stem.size() > 6 && stem.substr(stem.size() - 6) == "_truth") continue;
      files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    fail("input path '{}' is neither a file nor a directory", in_path);
  }
  WINDTS_REQUIRE(!files.empty(), "no turbine CSV files under '{}'", in_path);
  return files;
}

struct TurbineSplits {
  std::string turbine_id;
  data::Splits splits;
};

std::vector<TurbineSplits> load_splits(const cfg::Config& config, const std::string& data_dir,
                                       std::size_t test_stride_override = 0) {
  data::SplitConfig sc = config.split_config();
  if (test_stride_override > 0) sc.test_stride = test_stride_override;
  std::vector<TurbineSplits> out;
  for (const fs::path& file : turbine_csvs(data_dir)) {
    const scada::RawScadaFrame frame =
        scada::read_frame_csv(file.string(), file.stem().string());
    std::vector<std::string> warnings;
    TurbineSplits ts;
    ts.turbine_id = file.stem().string();
    ts.splits = data::build_splits(frame, scada::OutlierLabeling::all_keep(frame.size()), sc,
                                   &warnings);
    print_warnings(warnings);
    out.push_back(std::move(ts));
  }
  return out;
}

data::Splits pooled_splits(const std::vector<TurbineSplits>& per_turbine) {
  data::Splits pooled;
  for (const auto& ts : per_turbine) {
    pooled.train.insert(pooled.train.end(), ts.splits.train.begin(), ts.splits.train.end());
    pooled.val.insert(pooled.val.end(), ts.splits.val.begin(), ts.splits.val.end());
    pooled.test.insert(pooled.test.end(), ts.splits.test.begin(), ts.splits.test.end());
  }
  return pooled;
}

std::size_t eval_test_stride(const cfg::Config& config) {
  return config.has("eval.test_stride")
             ? static_cast<std::size_t>(config.get_int("eval.test_stride"))
             : 0;
}

model::ModelConfig candidate_model_config(const cfg::Config& config, const std::string& id) {
  if (id == "lstm") return config.model_config("lstm");
  if (id == "transformer") return config.model_config("transformer");
  if (id == "transformer-mini") return config.model_config("transformer-mini");
  return config.model_config("timer");
}

std::vector<eval::Candidate> build_candidates(const cfg::Config& config,
                                              const std::string& pretrained_ckpt) {
  std::vector<eval::Candidate> out;
  for (const std::string& id : config.get_str_list("pipeline.models")) {
    eval::Candidate cand;
    cand.id = id;
    cand.config = candidate_model_config(config, id);
    if (id == "timer-pretrained") {
      WINDTS_REQUIRE(!pretrained_ckpt.empty(),
                     "model '{}' needs a pretrained checkpoint (--pretrained or pipeline pretrain)",
                     id);
      cand.mode = eval::Candidate::Mode::ZERO_SHOT;
      cand.checkpoint = pretrained_ckpt;
    } else if (id == "timer-finetuned") {
      WINDTS_REQUIRE(!pretrained_ckpt.empty(),
                     "model '{}' needs a pretrained checkpoint (--pretrained or pipeline pretrain)",
                     id);
      cand.mode = eval::Candidate::Mode::FINETUNE;
      cand.checkpoint = pretrained_ckpt;
      cand.tc = config.train_config(train::TrainMode::FINETUNE);
    } else if (id == "timer-scratch" || id == "lstm" || id == "transformer" ||
               id == "transformer-mini") {
      cand.mode = eval::Candidate::Mode::TRAIN;
      cand.tc = config.train_config(train::TrainMode::SCRATCH);
    } else {
      fail("unknown entry '{}' in pipeline.models", id);
    }
    out.push_back(std::move(cand));
  }
  WINDTS_REQUIRE(!out.empty(), "pipeline.models resolved to an empty model list");
  return out;
}

scada::RawScadaFrame keep_rows_only(const scada::RawScadaFrame& frame,
                                    const scada::OutlierLabeling& labels) {
  scada::RawScadaFrame out;
  out.turbine_id = frame.turbine_id;
  out.interval_s = frame.interval_s;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (!labels.keep(i)) continue;
    out.timestamps.push_back(frame.timestamps[i]);
    for (int c = 0; c < scada::kNumChannels; ++c) {
      out.channels[c].push_back(frame.channels[c][i]);
    }
    if (frame.has_pitch()) out.pitch_angle.push_back(frame.pitch_angle[i]);
  }
  return out;
}

void run_indexed(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

cfg::Config resolve_config(const std::string& config_path,
                           const std::vector<std::string>& overrides) {
  cfg::Config config =
      config_path.empty() ? cfg::Config() : cfg::Config::load_file(config_path);
  config.apply_env();
  for (const std::string& kv : overrides) {
    const std::size_t eq = kv.find('=');
    WINDTS_REQUIRE(eq != std::string::npos, "--set expects key=value, got '{}'", kv);
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

void cmd_synth(const cfg::Config& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  const synth::SynthConfig sc = config.synth_config();
  std::vector<synth::TurbineData> plant(static_cast<std::size_t>(sc.turbines));
  // per-turbine generation is independent; indexes keep output deterministic
  const auto full = synth::generate_plant(sc);
  for (std::size_t i = 0; i < full.size(); ++i) {
    scada::write_frame_csv(fmt::format("{}/{}.csv", out_dir, full[i].frame.turbine_id),
                           full[i].frame);
    synth::write_truth_csv(fmt::format("{}/{}_truth.csv", out_dir, full[i].frame.turbine_id),
                           full[i].frame, full[i].truth);
  }
  (void)plant;
  config.write_snapshot(out_dir + "/config_snapshot.cfg");
  std::cout << fmt::format("synth: wrote {} turbines x {} points to {}\n", sc.turbines,
                           sc.points_per_turbine(), out_dir);
}

void cmd_clean(const cfg::Config& config, const std::string& in_path,
               const std::string& out_dir) {
  ensure_dir(out_dir);
  const scada::TurbineSpec spec = config.turbine_spec();
  const scada::CleanConfig cc = config.clean_config();
  const std::vector<fs::path> files = turbine_csvs(in_path);
  const int threads = static_cast<int>(config.get_int("threads"));

  std::vector<scada::CleanResult> results(files.size());
  std::vector<scada::RawScadaFrame> frames(files.size());
  run_indexed(files.size(), threads, [&](std::size_t i) {
    frames[i] = scada::read_frame_csv(files[i].string(), files[i].stem().string());
    results[i] = scada::clean_frame(frames[i], spec, cc);
  });

  csv::Writer stats(out_dir + "/density_stats.csv");
  stats.row({"turbine_id", "wind_mean", "wind_std", "power_mean", "power_std"});
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string stem = files[i].stem().string();
    print_warnings(results[i].warnings);
    const scada::RawScadaFrame cleaned =
        keep_rows_only(results[i].repaired, results[i].final_labels);
    scada::write_frame_csv(fmt::format("{}/{}.csv", out_dir, stem), cleaned);
    scada::write_labeling_csv(fmt::format("{}/{}_labels.csv", out_dir, stem), frames[i],
                              results[i].final_labels);
    stats.row({stem, csv::fmt_double(results[i].stats.wind_mean),
               csv::fmt_double(results[i].stats.wind_std),
               csv::fmt_double(results[i].stats.power_mean),
               csv::fmt_double(results[i].stats.power_std)});
    std::cout << fmt::format("clean: {} kept {}/{} points ({} repaired)\n", stem,
                             results[i].final_labels.keep_count(), frames[i].size(),
                             results[i].repaired_points);
  }
  config.write_snapshot(out_dir + "/config_snapshot.cfg");
}

void cmd_dataset(const cfg::Config& config, const std::string& in_dir,
                 const std::string& out_dir) {
  ensure_dir(out_dir);
  const auto per_turbine = load_splits(config, in_dir);
  const bool cache = config.get_bool("dataset.cache");
  const int patch = static_cast<int>(config.get_int("model.patch"));

  std::size_t train_total = 0, val_total = 0, test_total = 0;
  for (const auto& ts : per_turbine) {
    const std::string base = fmt::format("{}/{}", out_dir, ts.turbine_id);
    const std::string source = fmt::format("{}/{}.csv", in_dir, ts.turbine_id);
    data::write_manifest_csv(base + "_train.csv", ts.splits.train, source);
    data::write_manifest_csv(base + "_val.csv", ts.splits.val, source);
    data::write_manifest_csv(base + "_test.csv", ts.splits.test, source);
    train_total += ts.splits.train.size();
    val_total += ts.splits.val.size();
    test_total += ts.splits.test.size();
    if (cache) {
      std::vector<data::S3Sequence> sequences;
      for (const auto& w : ts.splits.train) {
        for (auto& s : data::to_s3(w)) sequences.push_back(std::move(s));
      }
      data::write_series_cache(base + "_train.s3cache", sequences,
                               static_cast<std::size_t>(patch));
    }
  }
  config.write_snapshot(out_dir + "/config_snapshot.cfg");
  std::cout << fmt::format("dataset: {} train / {} val / {} test windows across {} turbines\n",
                           train_total, val_total, test_total, per_turbine.size());
}

void cmd_pretrain(const cfg::Config& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  const model::ModelConfig mc = config.model_config("timer");
  const std::size_t length =
      static_cast<std::size_t>(mc.tf.max_tokens()) * static_cast<std::size_t>(mc.tf.patch);
  const auto corpus =
      train::pretrain_corpus(config.pretrain_regimes(),
                             static_cast<std::size_t>(config.get_int("pretrain.samples_per_regime")),
                             length, static_cast<std::uint64_t>(config.get_int("seed")));
  // hold out a slice for validation / early stopping
  const std::size_t val_count = std::max<std::size_t>(1, corpus.size() / 10);
  std::vector<data::S3Sequence> train_series(corpus.begin(), corpus.end() - val_count);
  std::vector<data::S3Sequence> val_series(corpus.end() - val_count, corpus.end());

  train::TrainConfig tc = config.train_config(train::TrainMode::PRETRAIN);
  tc.mode = train::TrainMode::PRETRAIN;
  const train::TrainResult result =
      train::train(mc, train::items_from_series(train_series, mc.tf.patch),
                   train::items_from_series(val_series, mc.tf.patch), tc);

  model::save_checkpoint(out_dir + "/pretrained.ckpt", result.model,
                         {{"stage", "pretrain"}, {"corpus", config.get_str("pretrain.regimes")}});
  train::write_history_csv(out_dir + "/pretrain_history.csv", result.history);
  config.write_snapshot(out_dir + "/config_snapshot.cfg");
  std::cout << fmt::format("pretrain: {} series, best val loss {} ({}), checkpoint {}\n",
                           corpus.size(), result.history.best_val_loss(),
                           train::stop_reason_name(result.history.stop),
                           out_dir + "/pretrained.ckpt");
}

namespace {

void train_like(const cfg::Config& config, const std::string& data_dir,
                const std::string& checkpoint, train::TrainMode mode,
                const std::string& out_dir) {
  ensure_dir(out_dir);
  const model::ModelConfig mc = config.model_config();
  const data::Splits pooled = pooled_splits(load_splits(config, data_dir));
  WINDTS_REQUIRE(!pooled.train.empty(), "no training windows found under '{}'", data_dir);

  train::TrainConfig tc = config.train_config(mode);
  tc.mode = mode;
  tc.checkpoint_in = checkpoint;
  const train::TrainResult result = train::train(mc, train::items_for(mc, pooled.train),
                                                 train::items_for(mc, pooled.val), tc);
  if (result.history.stop == train::StopReason::NAN_ABORT) {
    train::write_history_csv(out_dir + "/train_history.csv", result.history);
    throw std::runtime_error("training aborted on a non-finite loss; history preserved");
  }

  model::save_checkpoint(out_dir + "/model.ckpt", result.model,
                         {{"stage", train::mode_name(mode)}});
  train::write_history_csv(out_dir + "/train_history.csv", result.history);
  config.write_snapshot(out_dir + "/config_snapshot.cfg");
  std::cout << fmt::format("{}: {} train / {} val windows, best val loss {} ({})\n",
                           train::mode_name(mode), pooled.train.size(), pooled.val.size(),
                           result.history.best_val_loss(),
                           train::stop_reason_name(result.history.stop));
}

}  // namespace

void cmd_train(const cfg::Config& config, const std::string& data_dir,
               const std::string& out_dir) {
  train_like(config, data_dir, "", train::TrainMode::SCRATCH, out_dir);
}

void cmd_finetune(const cfg::Config& config, const std::string& data_dir,
                  const std::string& checkpoint, const std::string& out_dir) {
  train_like(config, data_dir, checkpoint, train::TrainMode::FINETUNE, out_dir);
}

void cmd_forecast(const cfg::Config& config, const std::string& checkpoint,
                  const std::string& context_csv, int horizon, const std::string& out_csv) {
  WINDTS_REQUIRE(horizon >= 1, "forecast: horizon {} must be >= 1", horizon);
  const model::Checkpoint ckpt = model::load_checkpoint(checkpoint);
  const scada::RawScadaFrame frame = scada::read_frame_csv(context_csv);
  const std::size_t context_len =
      static_cast<std::size_t>(config.get_int("eval.context"));
  WINDTS_REQUIRE(frame.size() >= context_len,
                 "forecast: context file holds {} points, need {}", frame.size(), context_len);

  Mat context(scada::kNumChannels, context_len);
  const std::size_t offset = frame.size() - context_len;  // most recent points
  for (int c = 0; c < scada::kNumChannels; ++c) {
    for (std::size_t t = 0; t < context_len; ++t) {
      context.at(c, t) = frame.channels[c][offset + t];
    }
  }
  const infer::MultivariateForecast fc =
      infer::multivariate_forecast(ckpt.model, context, horizon);

  csv::Writer w(out_csv);
  w.row({"channel", "step", "value_normalized", "value_raw"});
  for (int c = 0; c < scada::kNumChannels; ++c) {
    for (int h = 0; h < horizon; ++h) {
      w.row({scada::channel_name(static_cast<scada::Channel>(c)), std::to_string(h + 1),
             csv::fmt_double(fc.normalized.at(c, h)), csv::fmt_double(fc.raw.at(c, h))});
    }
  }
  std::cout << fmt::format("forecast: {} steps x {} channels in {} iterations -> {}\n", horizon,
                           scada::kNumChannels, fc.iterations, out_csv);
}

void cmd_eval(const cfg::Config& config, const std::string& data_dir,
              const std::vector<std::string>& models, const std::string& out_dir) {
  WINDTS_REQUIRE(!models.empty(), "eval: pass at least one --model name=path");
  ensure_dir(out_dir);
  const data::Splits pooled =
      pooled_splits(load_splits(config, data_dir, eval_test_stride(config)));
  WINDTS_REQUIRE(!pooled.test.empty(), "eval: no test windows found under '{}'", data_dir);

  eval::EvalReport report;
  for (const std::string& spec : models) {
    const std::size_t eq = spec.find('=');
    WINDTS_REQUIRE(eq != std::string::npos, "eval: --model expects name=path, got '{}'", spec);
    const std::string name = spec.substr(0, eq);
    const model::Checkpoint ckpt = model::load_checkpoint(spec.substr(eq + 1));
    const std::string mode = ckpt.metadata.count("stage") ? ckpt.metadata.at("stage") : "unknown";
    report.append(
        eval::evaluate_horizons(ckpt.model, name, mode, pooled.test, config.eval_options()));
  }
  eval::render_report(report, out_dir, config.get_bool("eval.svg"));
  config.write_snapshot(out_dir + "/config_snapshot.cfg");
  std::cout << fmt::format("eval: {} rows over {} test windows -> {}/report.csv\n",
                           report.rows.size(), pooled.test.size(), out_dir);
}

void cmd_ablate(const cfg::Config& config, const std::string& data_dir,
                const std::string& pretrained, const std::string& out_dir) {
  ensure_dir(out_dir);
  const data::Splits pooled =
      pooled_splits(load_splits(config, data_dir, eval_test_stride(config)));
  eval::AblationPlan plan;
  plan.fractions = config.get_double_list("ablate.fractions");
  plan.seed = static_cast<std::uint64_t>(config.get_int("seed"));
  const eval::EvalReport report =
      eval::run_ablation(plan, build_candidates(config, pretrained), pooled,
                         config.eval_options());
  eval::render_report(report, out_dir, config.get_bool("eval.svg"));
  config.write_snapshot(out_dir + "/config_snapshot.cfg");
  std::cout << fmt::format("ablate: {} fractions x models -> {}/report.csv\n",
                           plan.fractions.size(), out_dir);
}

void cmd_one_turbine(const cfg::Config& config, const std::string& data_dir,
                     const std::string& pretrained, const std::string& out_dir) {
  ensure_dir(out_dir);
  const auto per_turbine_vec = load_splits(config, data_dir, eval_test_stride(config));
  std::map<std::string, data::Splits> per_turbine;
  for (const auto& ts : per_turbine_vec) per_turbine[ts.turbine_id] = ts.splits;

  std::vector<std::string> trials;
  if (config.has("oneturbine.trials")) {
    trials = config.get_str_list("oneturbine.trials");
  } else {
    for (const auto& ts : per_turbine_vec) {
      if (trials.size() == 3) break;
      trials.push_back(ts.turbine_id);
    }
  }
  const eval::EvalReport report =
      eval::one_turbine_protocol(trials, per_turbine, build_candidates(config, pretrained),
                                 config.eval_options());
  eval::render_report(report, out_dir, config.get_bool("eval.svg"));
  config.write_snapshot(out_dir + "/config_snapshot.cfg");
  std::cout << fmt::format("one-turbine: {} trials x {} turbines -> {}/report.csv\n",
                           trials.size(), per_turbine.size(), out_dir);
}

void cmd_report(const std::string& report_csv, const std::string& out_dir, bool svg) {
  const eval::EvalReport report = eval::read_report_csv(report_csv);
  eval::render_report(report, out_dir, svg);
  std::cout << fmt::format("report: {} rows -> {}/report.md\n", report.rows.size(), out_dir);
}

void cmd_pipeline(const cfg::Config& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  config.write_snapshot(out_dir + "/config_snapshot.cfg");

  const auto stage = [&](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("pipeline stage '{}' failed: {}", name, e.what()));
    }
  };

  stage("synth", [&] { cmd_synth(config, out_dir + "/data"); });
  stage("clean", [&] { cmd_clean(config, out_dir + "/data", out_dir + "/clean"); });
  stage("dataset", [&] { cmd_dataset(config, out_dir + "/clean", out_dir + "/dataset"); });

  const auto model_ids = config.get_str_list("pipeline.models");
  const bool needs_pretrain =
      std::find(model_ids.begin(), model_ids.end(), "timer-pretrained") != model_ids.end() ||
      std::find(model_ids.begin(), model_ids.end(), "timer-finetuned") != model_ids.end();
  std::string pretrained;
  if (needs_pretrain) {
    stage("pretrain", [&] { cmd_pretrain(config, out_dir + "/pretrain"); });
    pretrained = out_dir + "/pretrain/pretrained.ckpt";
  }

  stage("train+eval", [&] {
    const data::Splits pooled =
        pooled_splits(load_splits(config, out_dir + "/clean", eval_test_stride(config)));
    WINDTS_REQUIRE(!pooled.train.empty() && !pooled.test.empty(),
                   "pipeline: splits are empty; extend synth.days or shrink dataset.window");
    const eval::EvalReport report = eval::run_candidates(
        build_candidates(config, pretrained), pooled, config.eval_options());
    eval::render_report(report, out_dir + "/eval", config.get_bool("eval.svg"));
  });

  // headline summary
  const eval::EvalReport report = eval::read_report_csv(out_dir + "/eval/report.csv");
  std::cout << "pipeline artifacts:\n";
  for (const char* artifact :
       {"/data", "/clean", "/dataset", "/eval/report.csv", "/eval/report.md"}) {
    std::cout << "  " << out_dir << artifact << "\n";
  }
  std::cout << "headline MSE:\n";
  for (const auto& row : report.rows) {
    std::cout << fmt::format("  {:<18} H={:<3} mse={:.4f}\n", row.model_id, row.horizon,
                             row.mse);
  }
}

}  // namespace windts::cli
