#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "windts/scada.hpp"

namespace windts::synth {

enum class TruthLabel : std::uint8_t { NORMAL = 0, CURTAILED, SPIKE, GAP };
const char* truth_name(TruthLabel l);

// Per-timestamp ground-truth label for a generated frame.
struct GroundTruth {
  std::vector<TruthLabel> labels;
  std::size_t size() const { return labels.size(); }
};

struct SynthConfig {
  int turbines = 6;
  int days = 30;
  std::int64_t interval_s = scada::kDefaultIntervalSeconds;
  std::int64_t start_ts = 1704067200;  // 2024-01-01T00:00:00Z
  scada::TurbineSpec spec;
  double rated_genspeed = 1800.0;  // rpm at rated wind speed

  // Wind: mean-reverting AR(1) plus a diurnal sinusoid, clipped at zero.
  double wind_ar1 = 0.97;
  double wind_mean = 7.5;
  double wind_volatility = 0.6;  // AR innovation std, per step
  double wind_diurnal_amp = 1.0;

  // Ambient temperature: seasonal + diurnal sinusoids plus noise.
  double temp_mean = 21.0;
  double temp_seasonal_amp = 4.0;
  double temp_diurnal_amp = 1.5;

  // Measurement noise std per channel (power noise as a fraction of rated).
  double noise_wind = 0.15;
  double noise_power_frac = 0.01;
  double noise_genspeed = 8.0;
  double noise_temp = 0.5;
  double noise_pitch = 0.15;

  // Injection rates as fractions of all points.
  double curtail_frac = 0.0;
  double spike_frac = 0.0;
  double gap_frac = 0.0;
  int curtail_run_min = 3, curtail_run_max = 30;  // 30..300 minutes of dispatch
  // Curtailment only hits points with true wind at or above this speed (and
  // always requires a producing turbine). Raising it keeps the injected band
  // clear of the low-wind noise floor where curtailment is unobservable.
  double curtail_min_wind = 0.0;
  int gap_run_min = 1, gap_run_max = 8;

  std::uint64_t seed = 0;

  void validate() const;
  std::size_t points_per_turbine() const {
    return static_cast<std::size_t>(days) * static_cast<std::size_t>(86400 / interval_s);
  }
};

struct TurbineData {
  scada::RawScadaFrame frame;
  GroundTruth truth;
};

// Nominal (pre-noise) curves used by the generator; exposed for tests.
double nominal_power(const scada::TurbineSpec& spec, double wind_speed);
double nominal_genspeed(const scada::TurbineSpec& spec, double rated_genspeed,
                        double wind_speed);
double nominal_pitch(const scada::TurbineSpec& spec, double wind_speed);

// Generates the whole plant deterministically from config.seed; turbine i
// uses an independent substream, so plants are byte-identical per seed.
std::vector<TurbineData> generate_plant(const SynthConfig& config);

struct ClassScore {
  double precision = 1.0;
  double recall = 0.0;
  std::size_t support = 0;          // points of this truth class
  bool zero_support_precision = false;  // no positives predicted at all
};

struct CleaningScore {
  std::map<TruthLabel, ClassScore> per_class;  // CURTAILED, SPIKE, GAP
  std::size_t normal_total = 0;
  std::size_t normal_rejected = 0;  // false positives
  double normal_false_reject_rate() const {
    return normal_total == 0 ? 0.0
                             : static_cast<double>(normal_rejected) /
                                   static_cast<double>(normal_total);
  }
};

// Detection quality against ground truth. A point counts as predicted
// positive when the labeling rejects it for any reason; rejected NORMAL
// points are the false positives for every class.
CleaningScore cleaning_score(const scada::OutlierLabeling& predicted, const GroundTruth& truth);

void write_truth_csv(const std::string& path, const scada::RawScadaFrame& frame,
                     const GroundTruth& truth);
GroundTruth read_truth_csv(const std::string& path);

}  // namespace windts::synth
