#include "windts/cleaning.hpp"

#include <algorithm>
#include <cmath>

#include "windts/dbscan.hpp"
#include "windts/lof.hpp"

namespace windts::scada {

namespace {

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) warnings->push_back(std::move(msg));
}

double quantile(std::vector<double> sorted_copy, double q) {
  if (sorted_copy.empty()) return std::nan("");
  std::sort(sorted_copy.begin(), sorted_copy.end());
  const double pos = q * static_cast<double>(sorted_copy.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted_copy.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted_copy[lo] * (1.0 - frac) + sorted_copy[hi] * frac;
}

}  // namespace

OutlierLabeling range_filter(const RawScadaFrame& frame, const TurbineSpec& spec,
                             const CleanConfig& config) {
  frame.validate();
  spec.validate();
  const std::size_t n = frame.size();
  OutlierLabeling labels = OutlierLabeling::all_keep(n);

  std::array<ChannelRange, kNumChannels> bounds = spec.ranges;
  if (config.quantile_trim) {
    for (int c = 0; c < kNumChannels; ++c) {
      std::vector<double> finite;
      for (double v : frame.channels[c]) {
        if (!std::isnan(v)) finite.push_back(v);
      }
      if (finite.empty()) continue;
      const double lo = quantile(finite, config.trim_q);
      const double hi = quantile(finite, 1.0 - config.trim_q);
      bounds[c].lo = std::max(bounds[c].lo, lo);
      bounds[c].hi = std::min(bounds[c].hi, hi);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    bool missing = false;
    bool out_of_range = false;
    for (int c = 0; c < kNumChannels; ++c) {
      const double v = frame.channels[c][i];
      if (std::isnan(v)) {
        missing = true;
      } else if (!bounds[c].contains(v)) {
        out_of_range = true;
      }
    }
    if (frame.has_pitch() && std::isnan(frame.pitch_angle[i])) missing = true;
    if (missing) {
      labels.reject(i, Reason::MISSING);
    } else if (out_of_range) {
      labels.reject(i, Reason::RANGE);
    }
  }
  return labels;
}

OutlierLabeling power_curve_filter(const RawScadaFrame& frame, const std::vector<double>& pitch,
                                   const TurbineSpec& spec, const OutlierLabeling& prior,
                                   std::vector<std::string>* warnings) {
  WINDTS_REQUIRE(prior.size() == frame.size(), "power_curve_filter: labeling size {} != frame size {}",
                 prior.size(), frame.size());
  const bool have_pitch = !pitch.empty();
  if (have_pitch) {
    WINDTS_REQUIRE(pitch.size() == frame.size(),
                   "power_curve_filter: pitch array length {} != frame size {}", pitch.size(),
                   frame.size());
  } else {
    warn(warnings, "power_curve_filter: no pitch data, MPPT pitch rule skipped");
  }

  OutlierLabeling labels = prior;
  const auto& wind = frame.channel(Channel::WIND);
  const auto& power = frame.channel(Channel::POWER);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (!labels.keep(i)) continue;
    const double v = wind[i];
    if (v < spec.cut_in_speed) continue;  // disconnected, zero power is normal
    if (v < spec.rated_speed) {
      if (have_pitch && pitch[i] > spec.mppt_pitch_limit) {
        labels.reject(i, Reason::PITCH_LIMIT);
      }
    } else if (v < spec.cut_out_speed) {
      if (power[i] < spec.power_floor_fraction * spec.rated_power) {
        labels.reject(i, Reason::POWER_FLOOR);
      }
    }
  }
  return labels;
}

OutlierLabeling density_refine(const RawScadaFrame& frame, const OutlierLabeling& prior,
                               const CleanConfig& config, DensityStats* used_stats,
                               std::vector<std::string>* warnings) {
  WINDTS_REQUIRE(prior.size() == frame.size(), "density_refine: labeling size {} != frame size {}",
                 prior.size(), frame.size());
  OutlierLabeling labels = prior;

  std::vector<std::size_t> keep_idx;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (labels.keep(i)) keep_idx.push_back(i);
  }
  if (keep_idx.size() < config.min_points_for_density) {
    warn(warnings, fmt::format("density_refine: only {} surviving points (< {}), refinement skipped",
                               keep_idx.size(), config.min_points_for_density));
    if (used_stats && config.persisted_stats) *used_stats = *config.persisted_stats;
    return labels;
  }

  const auto& wind = frame.channel(Channel::WIND);
  const auto& power = frame.channel(Channel::POWER);
  DensityStats st;
  if (config.persisted_stats) {
    st = *config.persisted_stats;
  } else {
    double wm = 0, pm = 0;
    for (std::size_t i : keep_idx) {
      wm += wind[i];
      pm += power[i];
    }
    wm /= static_cast<double>(keep_idx.size());
    pm /= static_cast<double>(keep_idx.size());
    double wv = 0, pv = 0;
    for (std::size_t i : keep_idx) {
      wv += (wind[i] - wm) * (wind[i] - wm);
      pv += (power[i] - pm) * (power[i] - pm);
    }
    st.wind_mean = wm;
    st.power_mean = pm;
    st.wind_std = std::max(std::sqrt(wv / static_cast<double>(keep_idx.size())), 1e-8);
    st.power_std = std::max(std::sqrt(pv / static_cast<double>(keep_idx.size())), 1e-8);
  }
  if (used_stats) *used_stats = st;

  Mat pts(keep_idx.size(), 2);
  for (std::size_t r = 0; r < keep_idx.size(); ++r) {
    pts.at(r, 0) = (wind[keep_idx[r]] - st.wind_mean) / st.wind_std;
    pts.at(r, 1) = (power[keep_idx[r]] - st.power_mean) / st.power_std;
  }

  const std::vector<int> cluster = dbscan(pts, config.dbscan_eps, config.dbscan_min_pts);
  std::vector<std::size_t> survivors;
  for (std::size_t r = 0; r < keep_idx.size(); ++r) {
    if (cluster[r] == kDbscanNoise) {
      labels.reject(keep_idx[r], Reason::DBSCAN_NOISE);
    } else {
      survivors.push_back(r);
    }
  }

  if (survivors.size() < std::max<std::size_t>(config.min_points_for_density,
                                               static_cast<std::size_t>(config.lof_k) + 1)) {
    warn(warnings, fmt::format("density_refine: only {} points after DBSCAN, LOF skipped",
                               survivors.size()));
    return labels;
  }

  Mat surv_pts(survivors.size(), 2);
  for (std::size_t r = 0; r < survivors.size(); ++r) {
    surv_pts.at(r, 0) = pts.at(survivors[r], 0);
    surv_pts.at(r, 1) = pts.at(survivors[r], 1);
  }
  const std::vector<double> scores = lof(surv_pts, config.lof_k);
  for (std::size_t r = 0; r < survivors.size(); ++r) {
    if (scores[r] > config.lof_threshold) {
      labels.reject(keep_idx[survivors[r]], Reason::LOF);
    }
  }
  return labels;
}

InterpolateResult interpolate_short_gaps(const RawScadaFrame& frame,
                                         const OutlierLabeling& labels, int max_gap) {
  WINDTS_REQUIRE(max_gap >= 1, "interpolate_short_gaps: max_gap {} must be >= 1", max_gap);
  WINDTS_REQUIRE(labels.size() == frame.size(),
                 "interpolate_short_gaps: labeling size {} != frame size {}", labels.size(),
                 frame.size());
  InterpolateResult out{frame, labels, 0};
  const std::size_t n = frame.size();

  std::size_t i = 0;
  while (i < n) {
    if (out.labels.keep(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !out.labels.keep(j)) ++j;
    const std::size_t run_len = j - i;
    const bool bounded = i > 0 && j < n;
    if (bounded && run_len <= static_cast<std::size_t>(max_gap)) {
      const std::size_t left = i - 1;
      const std::size_t right = j;
      // Anchors must be exactly one interval beyond each end of the run;
      // frames with dropped rows would otherwise interpolate across time.
      const std::int64_t span = frame.timestamps[right] - frame.timestamps[left];
      if (span == static_cast<std::int64_t>(run_len + 1) * frame.interval_s) {
        for (std::size_t p = i; p < j; ++p) {
          const double t = static_cast<double>(p - left) / static_cast<double>(right - left);
          for (int c = 0; c < kNumChannels; ++c) {
            const double a = out.frame.channels[c][left];
            const double b = out.frame.channels[c][right];
            out.frame.channels[c][p] = a + (b - a) * t;
          }
          if (out.frame.has_pitch()) {
            const double a = out.frame.pitch_angle[left];
            const double b = out.frame.pitch_angle[right];
            out.frame.pitch_angle[p] = a + (b - a) * t;
          }
          out.labels.reasons[p] = Reason::NONE;
          ++out.repaired_points;
        }
      }
    }
    i = j;
  }
  return out;
}

std::vector<WindowSample> segment_and_window(const RawScadaFrame& frame,
                                             const OutlierLabeling& labels, std::size_t window,
                                             std::size_t stride) {
  WINDTS_REQUIRE(window >= 1 && stride >= 1, "segment_and_window: window {} and stride {} must be >= 1",
                 window, stride);
  WINDTS_REQUIRE(labels.size() == frame.size(),
                 "segment_and_window: labeling size {} != frame size {}", labels.size(),
                 frame.size());
  std::vector<WindowSample> samples;
  const std::size_t n = frame.size();
  std::size_t i = 0;
  while (i < n) {
    if (!labels.keep(i)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n && labels.keep(j) &&
           frame.timestamps[j] - frame.timestamps[j - 1] == frame.interval_s) {
      ++j;
    }
    const std::size_t run = j - i;
    if (run >= window) {
      for (std::size_t off = 0; off + window <= run; off += stride) {
        WindowSample s;
        s.turbine_id = frame.turbine_id;
        s.start_ts = frame.timestamps[i + off];
        s.length = window;
        for (int c = 0; c < kNumChannels; ++c) {
          const auto& src = frame.channels[c];
          s.channels[c].assign(src.begin() + static_cast<std::ptrdiff_t>(i + off),
                               src.begin() + static_cast<std::ptrdiff_t>(i + off + window));
        }
        samples.push_back(std::move(s));
      }
    }
    i = j;
  }
  return samples;
}

namespace {

// REJECT-only re-application of the range and physics rules to the KEEP rows
// of `prior` (quantile trimming is a first-pass-only decision).
OutlierLabeling reapply_rules(const RawScadaFrame& frame, const TurbineSpec& spec,
                              const OutlierLabeling& prior) {
  OutlierLabeling labels = prior;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (!labels.keep(i)) continue;
    bool missing = false, out_of_range = false;
    for (int c = 0; c < kNumChannels; ++c) {
      const double v = frame.channels[c][i];
      if (std::isnan(v)) {
        missing = true;
      } else if (!spec.ranges[c].contains(v)) {
        out_of_range = true;
      }
    }
    if (frame.has_pitch() && std::isnan(frame.pitch_angle[i])) missing = true;
    if (missing) {
      labels.reject(i, Reason::MISSING);
    } else if (out_of_range) {
      labels.reject(i, Reason::RANGE);
    }
  }
  return power_curve_filter(frame, frame.pitch_angle, spec, labels);
}

}  // namespace

CleanResult clean_frame(const RawScadaFrame& frame, const TurbineSpec& spec,
                        const CleanConfig& config) {
  CleanResult result;
  OutlierLabeling labels = range_filter(frame, spec, config);
  labels = power_curve_filter(frame, frame.pitch_angle, spec, labels, &result.warnings);
  labels = density_refine(frame, labels, config, &result.stats, &result.warnings);
  result.detection = labels;

  InterpolateResult repaired = interpolate_short_gaps(frame, labels, config.max_gap);
  result.repaired_points = repaired.repaired_points;

  // Stabilize the keep set: re-detect over the repaired values (density with
  // the first pass's standardization persisted) until nothing else falls
  // out. The published keep set is then a detection fixed point, so
  // re-cleaning the cleaned output changes nothing.
  CleanConfig stable_cfg = config;
  stable_cfg.persisted_stats = result.stats;
  OutlierLabeling current = std::move(repaired.labels);
  for (int pass = 0; pass < 8; ++pass) {
    OutlierLabeling next = reapply_rules(repaired.frame, spec, current);
    next = density_refine(repaired.frame, next, stable_cfg, nullptr, nullptr);
    const bool converged = next.reasons == current.reasons;
    current = std::move(next);
    if (converged) break;
    if (pass == 7) {
      result.warnings.push_back("clean_frame: keep set did not stabilize within 8 passes");
    }
  }
  result.final_labels = std::move(current);
  result.repaired = std::move(repaired.frame);
  return result;
}

}  // namespace windts::scada
