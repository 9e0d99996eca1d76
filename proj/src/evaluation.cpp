#include "windts/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "windts/csvio.hpp"
#include "windts/forecast.hpp"
#include "windts/rng.hpp"

namespace windts::eval {

double mse(std::span<const double> pred, std::span<const double> truth) {
  WINDTS_REQUIRE(pred.size() == truth.size(), "mse: lengths {} and {} differ", pred.size(),
                 truth.size());
  WINDTS_REQUIRE(!pred.empty(), "mse: empty arrays");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

void EvalReport::append(const EvalReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  raw_rows.insert(raw_rows.end(), other.raw_rows.begin(), other.raw_rows.end());
  skipped_windows += other.skipped_windows;
}

EvalReport evaluate_horizons(const model::Model& m, const std::string& model_id,
                             const std::string& training_mode,
                             const std::vector<scada::WindowSample>& test_windows,
                             const EvalOptions& options) {
  WINDTS_REQUIRE(!options.horizons.empty(), "evaluate_horizons: empty horizon set");
  const int max_h = *std::max_element(options.horizons.begin(), options.horizons.end());
  WINDTS_REQUIRE(max_h >= 1, "evaluate_horizons: horizons must be >= 1");

  EvalReport report;
  // accumulators per horizon: sum of squared errors and scalar count
  std::map<int, double> sq;
  std::map<int, std::int64_t> count;
  // raw-unit accumulators per (horizon, channel)
  std::map<int, std::array<double, scada::kNumChannels>> raw_sq;
  std::map<int, std::array<std::int64_t, scada::kNumChannels>> raw_count;
  for (int h : options.horizons) {
    sq[h] = 0.0;
    count[h] = 0;
    raw_sq[h] = {};
    raw_count[h] = {};
  }

  std::int64_t used = 0;
  for (const auto& w : test_windows) {
    if (w.length < options.context_len + static_cast<std::size_t>(max_h)) {
      report.skipped_windows += 1;
      continue;
    }
    ++used;
    Mat context(scada::kNumChannels, options.context_len);
    for (int c = 0; c < scada::kNumChannels; ++c) {
      for (std::size_t t = 0; t < options.context_len; ++t) {
        context.at(c, t) = w.channels[c][t];
      }
    }
    const infer::MultivariateForecast fc = infer::multivariate_forecast(m, context, max_h);
    for (int c = 0; c < scada::kNumChannels; ++c) {
      const auto& stats = fc.stats[c];
      for (int h = 0; h < max_h; ++h) {
        const double truth_raw = w.channels[c][options.context_len + static_cast<std::size_t>(h)];
        const double truth_norm = (truth_raw - stats.mean) / stats.std;
        const double err_norm = fc.normalized.at(c, h) - truth_norm;
        const double err_raw = fc.raw.at(c, h) - truth_raw;
        for (int horizon : options.horizons) {
          if (h < horizon) {
            sq[horizon] += err_norm * err_norm;
            count[horizon] += 1;
            raw_sq[horizon][c] += err_raw * err_raw;
            raw_count[horizon][c] += 1;
          }
        }
      }
    }
  }

  for (int h : options.horizons) {
    EvalRow row;
    row.model_id = model_id;
    row.training_mode = training_mode;
    row.horizon = h;
    row.mse = count[h] > 0 ? sq[h] / static_cast<double>(count[h])
                           : std::numeric_limits<double>::quiet_NaN();
    row.n_windows = used;
    row.seed = options.seed;
    row.data_fraction = options.data_fraction;
    row.turbine_scope = options.turbine_scope;
    report.rows.push_back(row);
    for (int c = 0; c < scada::kNumChannels; ++c) {
      RawChannelRow rr;
      rr.model_id = model_id;
      rr.horizon = h;
      rr.channel = scada::channel_name(static_cast<scada::Channel>(c));
      rr.mse_raw = raw_count[h][c] > 0 ? raw_sq[h][c] / static_cast<double>(raw_count[h][c])
                                       : std::numeric_limits<double>::quiet_NaN();
      report.raw_rows.push_back(rr);
    }
  }
  return report;
}

namespace {

struct PreparedCandidate {
  model::Model model;
  std::string training_mode;
};

PreparedCandidate prepare(const Candidate& cand, const train::TrainSet& train_items,
                          const train::TrainSet& val_items) {
  switch (cand.mode) {
    case Candidate::Mode::ZERO_SHOT: {
      model::Checkpoint ckpt = model::load_checkpoint(cand.checkpoint);
      return {std::move(ckpt.model), "zero-shot"};
    }
    case Candidate::Mode::FINETUNE: {
      train::TrainConfig tc = cand.tc;
      tc.mode = train::TrainMode::FINETUNE;
      tc.checkpoint_in = cand.checkpoint;
      train::TrainResult r = train::train(cand.config, train_items, val_items, tc);
      return {std::move(r.model), "finetune"};
    }
    case Candidate::Mode::TRAIN:
    default: {
      train::TrainConfig tc = cand.tc;
      if (tc.mode == train::TrainMode::FINETUNE) tc.mode = train::TrainMode::SCRATCH;
      train::TrainResult r = train::train(cand.config, train_items, val_items, tc);
      return {std::move(r.model), train::mode_name(tc.mode)};
    }
  }
}

}  // namespace

EvalReport run_candidates(const std::vector<Candidate>& candidates, const data::Splits& splits,
                          const EvalOptions& options) {
  EvalReport report;
  for (const Candidate& cand : candidates) {
    const train::TrainSet train_items = train::items_for(cand.config, splits.train);
    const train::TrainSet val_items = train::items_for(cand.config, splits.val);
    const PreparedCandidate pc = prepare(cand, train_items, val_items);
    report.append(
        evaluate_horizons(pc.model, cand.id, pc.training_mode, splits.test, options));
  }
  return report;
}

std::vector<std::size_t> subsample_indices(std::size_t total, double fraction,
                                           std::uint64_t seed) {
  WINDTS_REQUIRE(fraction > 0.0 && fraction <= 1.0, "subsample: fraction {} outside (0,1]",
                 fraction);
  std::vector<std::size_t> perm(total);
  for (std::size_t i = 0; i < total; ++i) perm[i] = i;
  Rng rng(mix_seed(seed, 0xab1a7e));
  rng.shuffle(perm);
  const std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total))));
  perm.resize(std::min(keep, total));
  return perm;
}

EvalReport run_ablation(const AblationPlan& plan, const std::vector<Candidate>& candidates,
                        const data::Splits& splits, const EvalOptions& options) {
  WINDTS_REQUIRE(!plan.fractions.empty(), "ablation: empty fraction list");
  WINDTS_REQUIRE(std::is_sorted(plan.fractions.begin(), plan.fractions.end()),
                 "ablation: fractions must be sorted ascending");
  EvalReport report;

  // Zero-shot baselines do not train; one row set regardless of fraction.
  for (const Candidate& cand : candidates) {
    if (cand.mode != Candidate::Mode::ZERO_SHOT) continue;
    model::Checkpoint ckpt = model::load_checkpoint(cand.checkpoint);
    EvalOptions opt = options;
    opt.data_fraction = 0.0;
    report.append(evaluate_horizons(ckpt.model, cand.id, "zero-shot", splits.test, opt));
  }

  for (double fraction : plan.fractions) {
    const std::vector<std::size_t> idx =
        subsample_indices(splits.train.size(), fraction, plan.seed);
    data::Splits sub = splits;
    sub.train.clear();
    for (std::size_t i : idx) sub.train.push_back(splits.train[i]);
    EvalOptions opt = options;
    opt.data_fraction = fraction;
    for (const Candidate& cand : candidates) {
      if (cand.mode == Candidate::Mode::ZERO_SHOT) continue;
      if (sub.train.empty()) continue;  // row would be meaningless
      const train::TrainSet train_items = train::items_for(cand.config, sub.train);
      const train::TrainSet val_items = train::items_for(cand.config, sub.val);
      const PreparedCandidate pc = prepare(cand, train_items, val_items);
      report.append(evaluate_horizons(pc.model, cand.id, pc.training_mode, sub.test, opt));
    }
  }
  return report;
}

EvalReport one_turbine_protocol(const std::vector<std::string>& trial_turbines,
                                const std::map<std::string, data::Splits>& per_turbine,
                                const std::vector<Candidate>& candidates,
                                const EvalOptions& options) {
  WINDTS_REQUIRE(trial_turbines.size() >= 3,
                 "one-turbine protocol: need 3 trial turbines, got {}", trial_turbines.size());
  WINDTS_REQUIRE(per_turbine.size() >= 3, "one-turbine protocol: need >= 3 turbines, got {}",
                 per_turbine.size());
  for (const auto& id : trial_turbines) {
    WINDTS_REQUIRE(per_turbine.count(id) == 1, "one-turbine protocol: unknown turbine '{}'", id);
  }

  // Plant-wide test set, fixed across trials.
  std::vector<scada::WindowSample> plant_test;
  for (const auto& [id, splits] : per_turbine) {
    plant_test.insert(plant_test.end(), splits.test.begin(), splits.test.end());
  }

  // candidate -> horizon -> per-trial MSEs
  std::map<std::string, std::map<int, std::vector<double>>> trials;
  std::map<std::string, std::string> modes;
  std::map<std::string, std::int64_t> windows_total;
  EvalReport merged_raw;  // raw rows from the last trial are representative

  for (const std::string& turbine : trial_turbines) {
    const data::Splits& local = per_turbine.at(turbine);
    EvalOptions opt = options;
    opt.turbine_scope = fmt::format("train:{} test:plant", turbine);
    for (const Candidate& cand : candidates) {
      const train::TrainSet train_items = train::items_for(cand.config, local.train);
      const train::TrainSet val_items = train::items_for(cand.config, local.val);
      const PreparedCandidate pc = prepare(cand, train_items, val_items);
      const EvalReport r = evaluate_horizons(pc.model, cand.id, pc.training_mode, plant_test, opt);
      for (const EvalRow& row : r.rows) {
        trials[row.model_id][row.horizon].push_back(row.mse);
        windows_total[row.model_id] += row.n_windows;
      }
      modes[cand.id] = pc.training_mode;
    }
  }

  EvalReport report;
  std::string scope = "avg3(";
  for (std::size_t i = 0; i < trial_turbines.size(); ++i) {
    scope += (i ? "," : "") + trial_turbines[i];
  }
  scope += ") test:plant";
  for (const Candidate& cand : candidates) {
    for (const auto& [horizon, values] : trials[cand.id]) {
      EvalRow row;
      row.model_id = cand.id;
      row.training_mode = modes[cand.id];
      row.horizon = horizon;
      double s = 0.0;
      for (double v : values) s += v;
      row.mse = s / static_cast<double>(values.size());
      row.n_windows = windows_total[cand.id];
      row.seed = options.seed;
      row.data_fraction = options.data_fraction;
      row.turbine_scope = scope;
      report.rows.push_back(row);
    }
  }
  report.append(merged_raw);
  return report;
}

void write_report_csv(const std::string& path, const EvalReport& report) {
  csv::Writer w(path);
  w.row({"model_id", "training_mode", "horizon", "mse", "n_windows", "seed", "data_fraction",
         "turbine_scope"});
  for (const EvalRow& r : report.rows) {
    w.row({r.model_id, r.training_mode, std::to_string(r.horizon), csv::fmt_double(r.mse),
           std::to_string(r.n_windows), std::to_string(r.seed), csv::fmt_double(r.data_fraction),
           r.turbine_scope});
  }
}

EvalReport read_report_csv(const std::string& path) {
  const csv::Table t = csv::read_table(path);
  EvalReport report;
  const int c_model = t.require_column("model_id", path);
  const int c_mode = t.require_column("training_mode", path);
  const int c_h = t.require_column("horizon", path);
  const int c_mse = t.require_column("mse", path);
  const int c_n = t.require_column("n_windows", path);
  const int c_seed = t.require_column("seed", path);
  const int c_frac = t.require_column("data_fraction", path);
  const int c_scope = t.require_column("turbine_scope", path);
  for (const auto& row : t.rows) {
    EvalRow r;
    r.model_id = row.at(c_model);
    r.training_mode = row.at(c_mode);
    r.horizon = static_cast<int>(csv::parse_i64(row.at(c_h)));
    r.mse = csv::parse_double(row.at(c_mse));
    r.n_windows = csv::parse_i64(row.at(c_n));
    r.seed = static_cast<std::uint64_t>(csv::parse_i64(row.at(c_seed)));
    r.data_fraction = csv::parse_double(row.at(c_frac));
    r.turbine_scope = row.at(c_scope);
    report.rows.push_back(r);
  }
  return report;
}

namespace {

// Markdown pivot: model rows x horizon columns, best (minimum) per column
// flagged in bold, one table per data fraction.
void write_markdown(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) fail("cannot open '{}' for writing", path);
  out << "# Forecast MSE report\n";

  std::set<double> fractions;
  for (const auto& r : report.rows) fractions.insert(r.data_fraction);
  for (double fraction : fractions) {
    std::set<int> horizons;
    std::vector<std::string> models;
    for (const auto& r : report.rows) {
      if (r.data_fraction != fraction) continue;
      horizons.insert(r.horizon);
      if (std::find(models.begin(), models.end(), r.model_id) == models.end()) {
        models.push_back(r.model_id);
      }
    }
    if (models.empty()) continue;
    out << fmt::format("\n## data fraction {}\n\n", fraction);
    out << "| model |";
    for (int h : horizons) out << fmt::format(" H={} |", h);
    out << "\n|---|";
    for (std::size_t i = 0; i < horizons.size(); ++i) out << "---|";
    out << "\n";

    std::map<int, double> best;
    for (int h : horizons) {
      double b = std::numeric_limits<double>::infinity();
      for (const auto& r : report.rows) {
        if (r.data_fraction == fraction && r.horizon == h) b = std::min(b, r.mse);
      }
      best[h] = b;
    }
    for (const auto& mid : models) {
      out << "| " << mid << " |";
      for (int h : horizons) {
        double v = std::numeric_limits<double>::quiet_NaN();
        for (const auto& r : report.rows) {
          if (r.data_fraction == fraction && r.horizon == h && r.model_id == mid) v = r.mse;
        }
        if (std::isnan(v)) {
          out << " - |";
        } else if (v == best[h]) {
          out << fmt::format(" **{:.4f}** |", v);
        } else {
          out << fmt::format(" {:.4f} |", v);
        }
      }
      out << "\n";
    }
  }
  if (report.skipped_windows > 0) {
    out << fmt::format("\n{} test windows skipped (shorter than context + horizon).\n",
                       report.skipped_windows);
  }
}

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

void write_svg_lines(const std::string& path, const std::string& x_label,
                     const std::string& y_label, const std::vector<SvgSeries>& series) {
  std::ofstream out(path);
  if (!out) fail("cannot open '{}' for writing", path);
  const double width = 640, height = 420, margin = 56;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (series.empty() || xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto sx = [&](double x) { return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin); };
  auto sy = [&](double y) {
    return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin);
  };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\">\n",
      width, height, width, height);
  out << fmt::format(
      "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n"
      "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n"
      "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
      width, height, margin, height - margin, width - margin, height - margin, margin, margin,
      margin, height - margin);
  out << fmt::format(
      "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
      width / 2, height - 12, x_label);
  out << fmt::format(
      "<text x=\"14\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 14 {})\">{}</text>\n",
      height / 2, height / 2, y_label);
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 8];
    out << fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"",
                       color);
    for (const auto& [x, y] : series[s].points) {
      out << fmt::format("{:.1f},{:.1f} ", sx(x), sy(y));
    }
    out << "\"/>\n";
    out << fmt::format(
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{}\">{}</text>\n", width - margin + 4,
        margin + 14 * static_cast<double>(s), color, series[s].label);
  }
  out << "</svg>\n";
}

}  // namespace

void render_report(const EvalReport& report, const std::string& out_dir, bool with_svg) {
  std::filesystem::create_directories(out_dir);
  write_report_csv(out_dir + "/report.csv", report);
  write_markdown(out_dir + "/report.md", report);

  if (!report.raw_rows.empty()) {
    csv::Writer w(out_dir + "/report_raw.csv");
    w.row({"model_id", "horizon", "channel", "mse_raw"});
    for (const auto& r : report.raw_rows) {
      w.row({r.model_id, std::to_string(r.horizon), r.channel, csv::fmt_double(r.mse_raw)});
    }
  }

  if (!with_svg) return;
  // MSE vs horizon at the largest fraction present
  double top_fraction = 0.0;
  for (const auto& r : report.rows) top_fraction = std::max(top_fraction, r.data_fraction);
  {
    std::vector<SvgSeries> series;
    std::vector<std::string> models;
    for (const auto& r : report.rows) {
      if (r.data_fraction != top_fraction) continue;
      if (std::find(models.begin(), models.end(), r.model_id) == models.end()) {
        models.push_back(r.model_id);
      }
    }
    for (const auto& mid : models) {
      SvgSeries s;
      s.label = mid;
      for (const auto& r : report.rows) {
        if (r.data_fraction == top_fraction && r.model_id == mid && std::isfinite(r.mse)) {
          s.points.emplace_back(r.horizon, r.mse);
        }
      }
      std::sort(s.points.begin(), s.points.end());
      series.push_back(std::move(s));
    }
    write_svg_lines(out_dir + "/mse_vs_horizon.svg", "prediction length", "MSE", series);
  }

  std::set<double> fractions;
  for (const auto& r : report.rows) {
    if (r.data_fraction > 0.0) fractions.insert(r.data_fraction);
  }
  if (fractions.size() >= 2) {
    int max_h = 0;
    for (const auto& r : report.rows) max_h = std::max(max_h, r.horizon);
    std::vector<SvgSeries> series;
    std::vector<std::string> models;
    for (const auto& r : report.rows) {
      if (std::find(models.begin(), models.end(), r.model_id) == models.end()) {
        models.push_back(r.model_id);
      }
    }
    for (const auto& mid : models) {
      SvgSeries s;
      s.label = mid;
      for (const auto& r : report.rows) {
        if (r.model_id == mid && r.horizon == max_h && r.data_fraction > 0.0 &&
            std::isfinite(r.mse)) {
          s.points.emplace_back(r.data_fraction, r.mse);
        }
      }
      std::sort(s.points.begin(), s.points.end());
      if (!s.points.empty()) series.push_back(std::move(s));
    }
    write_svg_lines(out_dir + "/mse_vs_fraction.svg", "training data fraction",
                    fmt::format("MSE at H={}", max_h), series);
  }
}

}  // namespace windts::eval
