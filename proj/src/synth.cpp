#include "windts/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "windts/csvio.hpp"
#include "windts/rng.hpp"

namespace windts::synth {

namespace {
constexpr double kTau = 2.0 * std::numbers::pi;
}

const char* truth_name(TruthLabel l) {
  switch (l) {
    case TruthLabel::NORMAL: return "NORMAL";
    case TruthLabel::CURTAILED: return "CURTAILED";
    case TruthLabel::SPIKE: return "SPIKE";
    case TruthLabel::GAP: return "GAP";
  }
  return "?";
}

void SynthConfig::validate() const {
  WINDTS_REQUIRE(turbines >= 1, "synth: turbine count {} must be >= 1", turbines);
  WINDTS_REQUIRE(days >= 1, "synth: days {} must be >= 1", days);
  WINDTS_REQUIRE(86400 % interval_s == 0, "synth: interval {} must divide a day", interval_s);
  for (double f : {curtail_frac, spike_frac, gap_frac}) {
    WINDTS_REQUIRE(f >= 0.0 && f < 1.0, "synth: injection fraction {} outside [0,1)", f);
  }
  WINDTS_REQUIRE(std::fabs(wind_ar1) < 1.0, "synth: AR(1) coefficient {} must satisfy |a| < 1",
                 wind_ar1);
  spec.validate();
}

double nominal_power(const scada::TurbineSpec& spec, double v) {
  if (v < spec.cut_in_speed || v >= spec.cut_out_speed) return 0.0;
  if (v >= spec.rated_speed) return spec.rated_power;
  const double k = spec.rated_power / (spec.rated_speed * spec.rated_speed * spec.rated_speed);
  return k * v * v * v;
}

double nominal_genspeed(const scada::TurbineSpec& spec, double rated_genspeed, double v) {
  return rated_genspeed * std::min(v, spec.rated_speed) / spec.rated_speed;
}

double nominal_pitch(const scada::TurbineSpec& spec, double v) {
  if (v < spec.rated_speed) return 0.0;
  const double t = (v - spec.rated_speed) / (spec.cut_out_speed - spec.rated_speed);
  return std::clamp(25.0 * t, 0.0, 30.0);
}

namespace {

struct Injector {
  std::vector<bool> taken;
  explicit Injector(std::size_t n) : taken(n, false) {}
  bool free_run(std::size_t start, std::size_t len) const {
    if (start + len > taken.size()) return false;
    for (std::size_t i = start; i < start + len; ++i) {
      if (taken[i]) return false;
    }
    return true;
  }
  void mark(std::size_t start, std::size_t len) {
    for (std::size_t i = start; i < start + len; ++i) taken[i] = true;
  }
};

TurbineData generate_turbine(const SynthConfig& cfg, int turbine_index) {
  const std::size_t n = cfg.points_per_turbine();
  Rng rng(mix_seed(cfg.seed, 0x5c4d4aULL + static_cast<std::uint64_t>(turbine_index)));
  const scada::TurbineSpec& spec = cfg.spec;

  TurbineData out;
  out.frame.turbine_id = fmt::format("T{:03}", turbine_index + 1);
  out.frame.interval_s = cfg.interval_s;
  out.truth.labels.assign(n, TruthLabel::NORMAL);

  // True wind: stationary start, then AR(1) with a diurnal term added on top.
  const double stationary_std =
      cfg.wind_volatility / std::sqrt(1.0 - cfg.wind_ar1 * cfg.wind_ar1);
  double ar = rng.normal(0.0, stationary_std);
  std::vector<double> true_wind(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t ts = cfg.start_ts + static_cast<std::int64_t>(i) * cfg.interval_s;
    const double day_phase = static_cast<double>(ts % 86400) / 86400.0;
    const double diurnal = cfg.wind_diurnal_amp * std::sin(kTau * day_phase);
    true_wind[i] = std::max(0.0, cfg.wind_mean + ar + diurnal);
    ar = cfg.wind_ar1 * ar + rng.normal(0.0, cfg.wind_volatility);
    out.frame.timestamps.push_back(ts);
  }

  auto& wind = out.frame.channel(scada::Channel::WIND);
  auto& power = out.frame.channel(scada::Channel::POWER);
  auto& genspeed = out.frame.channel(scada::Channel::GENSPEED);
  auto& temp = out.frame.channel(scada::Channel::TEMP);
  auto& pitch = out.frame.pitch_angle;
  wind.resize(n);
  power.resize(n);
  genspeed.resize(n);
  temp.resize(n);
  pitch.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t ts = out.frame.timestamps[i];
    const double v = true_wind[i];
    const double day_phase = static_cast<double>(ts % 86400) / 86400.0;
    const double year_phase =
        static_cast<double>(ts % 31557600LL) / 31557600.0;  // 365.25-day year
    wind[i] = std::max(0.0, v + rng.normal(0.0, cfg.noise_wind));
    power[i] = nominal_power(spec, v) + rng.normal(0.0, cfg.noise_power_frac * spec.rated_power);
    genspeed[i] = std::max(
        0.0, nominal_genspeed(spec, cfg.rated_genspeed, v) + rng.normal(0.0, cfg.noise_genspeed));
    temp[i] = cfg.temp_mean + cfg.temp_seasonal_amp * std::sin(kTau * year_phase) +
              cfg.temp_diurnal_amp * std::sin(kTau * day_phase - std::numbers::pi / 2) +
              rng.normal(0.0, cfg.noise_temp);
    pitch[i] = std::max(0.0, nominal_pitch(spec, v) + rng.normal(0.0, cfg.noise_pitch));
  }

  Injector inj(n);

  // Curtailment: contiguous dispatch orders. Power drops to a fraction of
  // nominal and the blades pitch out; only points where the turbine is
  // actually producing are affected (a disconnected turbine cannot be
  // curtailed) and only those carry the CURTAILED label.
  if (cfg.curtail_frac > 0.0) {
    const double mean_run = 0.5 * (cfg.curtail_run_min + cfg.curtail_run_max);
    const std::size_t runs = static_cast<std::size_t>(
        std::llround(cfg.curtail_frac * static_cast<double>(n) / mean_run));
    for (std::size_t r = 0; r < runs; ++r) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        const std::size_t len = cfg.curtail_run_min +
                                rng.below(static_cast<std::uint64_t>(
                                    cfg.curtail_run_max - cfg.curtail_run_min + 1));
        const std::size_t start = rng.below(n);
        if (!inj.free_run(start, len)) continue;
        const double factor = rng.uniform(0.2, 0.6);
        const double forced_pitch = rng.uniform(10.0, 30.0);
        const double wind_floor = std::max(spec.cut_in_speed, cfg.curtail_min_wind);
        for (std::size_t i = start; i < start + len; ++i) {
          const double v = true_wind[i];
          if (v < wind_floor || v >= spec.cut_out_speed) continue;
          power[i] = factor * nominal_power(spec, v) +
                     rng.normal(0.0, cfg.noise_power_frac * spec.rated_power);
          pitch[i] = std::max(0.0, forced_pitch + rng.normal(0.0, cfg.noise_pitch));
          out.truth.labels[i] = TruthLabel::CURTAILED;
        }
        inj.mark(start, len);
        break;
      }
    }
  }

  // Gaps: whole rows go missing.
  if (cfg.gap_frac > 0.0) {
    const double mean_run = 0.5 * (cfg.gap_run_min + cfg.gap_run_max);
    const std::size_t runs = static_cast<std::size_t>(
        std::llround(cfg.gap_frac * static_cast<double>(n) / mean_run));
    const double nan = std::nan("");
    for (std::size_t r = 0; r < runs; ++r) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        const std::size_t len =
            cfg.gap_run_min +
            rng.below(static_cast<std::uint64_t>(cfg.gap_run_max - cfg.gap_run_min + 1));
        const std::size_t start = rng.below(n);
        if (!inj.free_run(start, len)) continue;
        for (std::size_t i = start; i < start + len; ++i) {
          wind[i] = power[i] = genspeed[i] = temp[i] = pitch[i] = nan;
          out.truth.labels[i] = TruthLabel::GAP;
        }
        inj.mark(start, len);
        break;
      }
    }
  }

  // Spikes: one channel takes a gross sensor excursion, either multiplied by
  // a factor in [3,10] or negated. Draws whose result barely differs from
  // the clean value are resampled: they would carry a SPIKE label without
  // being an anomaly at all.
  if (cfg.spike_frac > 0.0) {
    const std::size_t count =
        static_cast<std::size_t>(std::llround(cfg.spike_frac * static_cast<double>(n)));
    const double channel_noise[4] = {cfg.noise_wind, cfg.noise_power_frac * spec.rated_power,
                                     cfg.noise_genspeed, cfg.noise_temp};
    for (std::size_t s = 0; s < count; ++s) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        const std::size_t i = rng.below(n);
        if (!inj.free_run(i, 1)) continue;
        const int c = static_cast<int>(rng.below(4));
        double* value = &out.frame.channels[c][i];
        const double original = *value;
        const double spiked =
            rng.uniform() < 0.5 ? -original : original * rng.uniform(3.0, 10.0);
        if (std::fabs(spiked - original) < 8.0 * channel_noise[c]) continue;
        *value = spiked;
        out.truth.labels[i] = TruthLabel::SPIKE;
        inj.mark(i, 1);
        break;
      }
    }
  }

  return out;
}

}  // namespace

std::vector<TurbineData> generate_plant(const SynthConfig& config) {
  config.validate();
  std::vector<TurbineData> plant;
  plant.reserve(static_cast<std::size_t>(config.turbines));
  for (int t = 0; t < config.turbines; ++t) plant.push_back(generate_turbine(config, t));
  return plant;
}

CleaningScore cleaning_score(const scada::OutlierLabeling& predicted, const GroundTruth& truth) {
  WINDTS_REQUIRE(predicted.size() == truth.size(),
                 "cleaning_score: labeling size {} != truth size {}", predicted.size(),
                 truth.size());
  CleaningScore score;
  std::map<TruthLabel, std::size_t> rejected_per_class;
  std::map<TruthLabel, std::size_t> total_per_class;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const TruthLabel t = truth.labels[i];
    total_per_class[t] += 1;
    if (!predicted.keep(i)) rejected_per_class[t] += 1;
  }
  score.normal_total = total_per_class[TruthLabel::NORMAL];
  score.normal_rejected = rejected_per_class[TruthLabel::NORMAL];

  for (TruthLabel cls : {TruthLabel::CURTAILED, TruthLabel::SPIKE, TruthLabel::GAP}) {
    ClassScore cs;
    cs.support = total_per_class[cls];
    const std::size_t tp = rejected_per_class[cls];
    const std::size_t fp = score.normal_rejected;
    cs.recall = cs.support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(cs.support);
    if (tp + fp == 0) {
      cs.precision = 1.0;
      cs.zero_support_precision = true;
    } else {
      cs.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    score.per_class[cls] = cs;
  }
  return score;
}

void write_truth_csv(const std::string& path, const scada::RawScadaFrame& frame,
                     const GroundTruth& truth) {
  WINDTS_REQUIRE(truth.size() == frame.size(), "truth size {} != frame size {}", truth.size(),
                 frame.size());
  csv::Writer w(path);
  w.row({"timestamp", "label"});
  for (std::size_t i = 0; i < truth.size(); ++i) {
    w.row({std::to_string(frame.timestamps[i]), truth_name(truth.labels[i])});
  }
}

GroundTruth read_truth_csv(const std::string& path) {
  const csv::Table t = csv::read_table(path);
  const int col = t.require_column("label", path);
  GroundTruth g;
  for (const auto& row : t.rows) {
    const std::string& name = row.at(col);
    bool found = false;
    for (TruthLabel l :
         {TruthLabel::NORMAL, TruthLabel::CURTAILED, TruthLabel::SPIKE, TruthLabel::GAP}) {
      if (name == truth_name(l)) {
        g.labels.push_back(l);
        found = true;
        break;
      }
    }
    WINDTS_REQUIRE(found, "{}: unknown truth label '{}'", path, name);
  }
  return g;
}

}  // namespace windts::synth
