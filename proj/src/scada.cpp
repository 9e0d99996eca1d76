#include "windts/scada.hpp"

#include <cmath>

#include "windts/csvio.hpp"

namespace windts::scada {

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::WIND: return "wind_speed";
    case Channel::POWER: return "power";
    case Channel::GENSPEED: return "generator_speed";
    case Channel::TEMP: return "ambient_temperature";
  }
  return "?";
}

void RawScadaFrame::validate() const {
  for (int c = 0; c < kNumChannels; ++c) {
    WINDTS_REQUIRE(channels[c].size() == timestamps.size(),
                   "frame '{}': channel {} has {} values for {} timestamps", turbine_id,
                   channel_name(static_cast<Channel>(c)), channels[c].size(),
                   timestamps.size());
  }
  if (has_pitch()) {
    WINDTS_REQUIRE(pitch_angle.size() == timestamps.size(),
                   "frame '{}': pitch has {} values for {} timestamps", turbine_id,
                   pitch_angle.size(), timestamps.size());
  }
  WINDTS_REQUIRE(interval_s > 0, "frame '{}': sampling interval must be positive", turbine_id);
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    const std::int64_t delta = timestamps[i] - timestamps[i - 1];
    WINDTS_REQUIRE(delta > 0, "frame '{}': timestamps not strictly increasing at row {}",
                   turbine_id, i);
    WINDTS_REQUIRE(delta % interval_s == 0,
                   "frame '{}': timestamp delta {} at row {} is not a multiple of {}",
                   turbine_id, delta, i, interval_s);
  }
}

void TurbineSpec::validate() const {
  WINDTS_REQUIRE(cut_in_speed > 0 && cut_in_speed < rated_speed && rated_speed < cut_out_speed,
                 "turbine spec: need 0 < cut_in ({}) < rated ({}) < cut_out ({})",
                 cut_in_speed, rated_speed, cut_out_speed);
  WINDTS_REQUIRE(rated_power > 0, "turbine spec: rated power {} must be positive", rated_power);
  WINDTS_REQUIRE(power_floor_fraction > 0 && power_floor_fraction < 1,
                 "turbine spec: power floor fraction {} must lie in (0,1)",
                 power_floor_fraction);
  for (const auto& r : ranges) {
    WINDTS_REQUIRE(r.lo < r.hi, "turbine spec: empty range [{}, {}]", r.lo, r.hi);
  }
}

TurbineSpec TurbineSpec::for_plant(double rated_power_kw, double rated_genspeed_rpm) {
  TurbineSpec s;
  s.rated_power = rated_power_kw;
  s.ranges[static_cast<int>(Channel::POWER)] = {-0.05 * rated_power_kw, 1.2 * rated_power_kw};
  s.ranges[static_cast<int>(Channel::GENSPEED)] = {0.0, 1.25 * rated_genspeed_rpm};
  return s;
}

const char* reason_name(Reason r) {
  switch (r) {
    case Reason::NONE: return "NONE";
    case Reason::RANGE: return "RANGE";
    case Reason::PITCH_LIMIT: return "PITCH_LIMIT";
    case Reason::POWER_FLOOR: return "POWER_FLOOR";
    case Reason::DBSCAN_NOISE: return "DBSCAN_NOISE";
    case Reason::LOF: return "LOF";
    case Reason::MISSING: return "MISSING";
  }
  return "?";
}

std::optional<Reason> reason_from_name(const std::string& name) {
  for (Reason r : {Reason::NONE, Reason::RANGE, Reason::PITCH_LIMIT, Reason::POWER_FLOOR,
                   Reason::DBSCAN_NOISE, Reason::LOF, Reason::MISSING}) {
    if (name == reason_name(r)) return r;
  }
  return std::nullopt;
}

std::size_t OutlierLabeling::keep_count() const {
  std::size_t n = 0;
  for (Reason r : reasons) n += r == Reason::NONE;
  return n;
}

void WindowSample::validate() const {
  WINDTS_REQUIRE(length > 0, "window sample: empty window");
  for (int c = 0; c < kNumChannels; ++c) {
    WINDTS_REQUIRE(channels[c].size() == length, "window sample: channel {} has {} of {} values",
                   channel_name(static_cast<Channel>(c)), channels[c].size(), length);
    for (double v : channels[c]) {
      WINDTS_REQUIRE(!std::isnan(v), "window sample: NaN in channel {}",
                     channel_name(static_cast<Channel>(c)));
    }
  }
}

RawScadaFrame read_frame_csv(const std::string& path, const std::string& turbine_id) {
  const csv::Table t = csv::read_table(path);
  RawScadaFrame f;
  f.turbine_id = turbine_id;
  const int ts = t.require_column("timestamp", path);
  const int cols[kNumChannels] = {
      t.require_column("wind_speed", path),
      t.require_column("power", path),
      t.require_column("generator_speed", path),
      t.require_column("ambient_temperature", path),
  };
  const int pitch = t.column("pitch_angle");
  for (const auto& row : t.rows) {
    f.timestamps.push_back(csv::parse_i64(row.at(ts)));
    for (int c = 0; c < kNumChannels; ++c) {
      f.channels[c].push_back(csv::parse_double(row.at(cols[c])));
    }
    if (pitch >= 0) f.pitch_angle.push_back(csv::parse_double(row.at(pitch)));
  }
  if (f.timestamps.size() >= 2) f.interval_s = f.timestamps[1] - f.timestamps[0];
  f.validate();
  return f;
}

void write_frame_csv(const std::string& path, const RawScadaFrame& frame) {
  csv::Writer w(path);
  std::vector<std::string> header = {"timestamp", "wind_speed", "power", "generator_speed",
                                     "ambient_temperature"};
  if (frame.has_pitch()) header.push_back("pitch_angle");
  w.row(header);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    std::vector<std::string> row;
    row.push_back(std::to_string(frame.timestamps[i]));
    for (int c = 0; c < kNumChannels; ++c) row.push_back(csv::fmt_double(frame.channels[c][i]));
    if (frame.has_pitch()) row.push_back(csv::fmt_double(frame.pitch_angle[i]));
    w.row(row);
  }
}

void write_labeling_csv(const std::string& path, const RawScadaFrame& frame,
                        const OutlierLabeling& labels) {
  WINDTS_REQUIRE(labels.size() == frame.size(), "labeling size {} != frame size {}",
                 labels.size(), frame.size());
  csv::Writer w(path);
  w.row({"timestamp", "verdict", "reason"});
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const bool keep = labels.keep(i);
    w.row({std::to_string(frame.timestamps[i]), keep ? "KEEP" : "REJECT",
           keep ? "" : reason_name(labels.reasons[i])});
  }
}

OutlierLabeling read_labeling_csv(const std::string& path) {
  const csv::Table t = csv::read_table(path);
  const int verdict = t.require_column("verdict", path);
  const int reason = t.require_column("reason", path);
  OutlierLabeling out;
  for (const auto& row : t.rows) {
    if (row.at(verdict) == "KEEP") {
      out.reasons.push_back(Reason::NONE);
    } else {
      const auto r = reason_from_name(row.at(reason));
      WINDTS_REQUIRE(r.has_value() && *r != Reason::NONE, "{}: bad reject reason '{}'", path,
                     row.at(reason));
      out.reasons.push_back(*r);
    }
  }
  return out;
}

}  // namespace windts::scada
