#pragma once

#include <optional>
#include <string>
#include <vector>

#include "windts/scada.hpp"

namespace windts::scada {

// Mean/std of the (wind_speed, power) plane used by the density stage.
// Persisting these across runs keeps refinement idempotent on cleaned data.
struct DensityStats {
  double wind_mean = 0, wind_std = 1;
  double power_mean = 0, power_std = 1;
};

struct CleanConfig {
  double dbscan_eps = 0.10;       // standardized units
  int dbscan_min_pts = 10;
  int lof_k = 20;
  double lof_threshold = 3.0;
  std::size_t min_points_for_density = 100;
  int max_gap = 3;                // points (30 min at 10-min sampling)
  bool quantile_trim = false;     // optional distribution trimming
  double trim_q = 0.001;
  std::optional<DensityStats> persisted_stats;
};

// Stage 1: NaN values -> REJECT(MISSING); values outside the per-channel
// plausible range -> REJECT(RANGE). With quantile_trim, values outside the
// per-channel [q, 1-q] empirical quantiles are also REJECT(RANGE).
OutlierLabeling range_filter(const RawScadaFrame& frame, const TurbineSpec& spec,
                             const CleanConfig& config = {});

// Stage 2: turbine-physics rules on previously-KEEP points.
//   MPPT band   (cut_in <= v < rated):   pitch > mppt_pitch_limit -> PITCH_LIMIT
//   above rated (rated <= v < cut_out):  power < floor * rated    -> POWER_FLOOR
// Below cut-in everything stays KEEP (grid-disconnected, zero power is
// normal). When `pitch` is empty the pitch rule is skipped with a warning.
OutlierLabeling power_curve_filter(const RawScadaFrame& frame,
                                   const std::vector<double>& pitch, const TurbineSpec& spec,
                                   const OutlierLabeling& prior,
                                   std::vector<std::string>* warnings = nullptr);

// Stage 3: DBSCAN then LOF on the KEEP points, in the standardized
// (wind_speed, power) plane. Noise points -> DBSCAN_NOISE; LOF is then
// computed on the survivors and scores above the threshold -> LOF. Skipped
// with a warning when fewer than min_points_for_density points survive.
// `used_stats` receives the standardization actually applied.
OutlierLabeling density_refine(const RawScadaFrame& frame, const OutlierLabeling& prior,
                               const CleanConfig& config,
                               DensityStats* used_stats = nullptr,
                               std::vector<std::string>* warnings = nullptr);

// Stage 4: every maximal run of <= max_gap consecutive rejected timestamps,
// bounded by KEEP timestamps one sampling interval away on both sides, is
// replaced per channel by linear interpolation and relabeled KEEP. The
// rejected values themselves are never reinstated, only synthesized ones.
// Longer runs and runs touching the series boundary stay rejected.
struct InterpolateResult {
  RawScadaFrame frame;
  OutlierLabeling labels;
  std::size_t repaired_points = 0;
};
InterpolateResult interpolate_short_gaps(const RawScadaFrame& frame,
                                         const OutlierLabeling& labels, int max_gap);

// Splits the frame into maximal runs of consecutive KEEP timestamps
// (consecutive = exactly one sampling interval apart) and cuts windows at
// offsets 0, stride, 2*stride, ... within each run.
std::vector<WindowSample> segment_and_window(const RawScadaFrame& frame,
                                             const OutlierLabeling& labels,
                                             std::size_t window, std::size_t stride);

// Full pipeline: range rules -> physics rules -> density refinement ->
// interpolation. `detection` is the labeling before interpolation (what the
// pipeline flagged); `final_labels` is after short-gap repair.
struct CleanResult {
  OutlierLabeling detection;
  OutlierLabeling final_labels;
  RawScadaFrame repaired;
  DensityStats stats;
  std::size_t repaired_points = 0;
  std::vector<std::string> warnings;
};
CleanResult clean_frame(const RawScadaFrame& frame, const TurbineSpec& spec,
                        const CleanConfig& config);

}  // namespace windts::scada
