#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "windts/common.hpp"

namespace windts::scada {

inline constexpr std::int64_t kDefaultIntervalSeconds = 600;

enum class Channel : int { WIND = 0, POWER = 1, GENSPEED = 2, TEMP = 3 };
inline constexpr int kNumChannels = 4;
const char* channel_name(Channel c);

// Timestamped four-channel turbine telemetry at a fixed sampling interval.
// Missing values are NaN. Pitch angle rides along when the source provides
// it; it is consumed by the cleaning rules but is not a forecast channel.
struct RawScadaFrame {
  std::string turbine_id;
  std::int64_t interval_s = kDefaultIntervalSeconds;
  std::vector<std::int64_t> timestamps;  // epoch seconds, strictly increasing
  std::array<std::vector<double>, kNumChannels> channels;
  std::vector<double> pitch_angle;  // empty when absent

  std::size_t size() const { return timestamps.size(); }
  bool has_pitch() const { return !pitch_angle.empty(); }
  std::vector<double>& channel(Channel c) { return channels[static_cast<int>(c)]; }
  const std::vector<double>& channel(Channel c) const { return channels[static_cast<int>(c)]; }

  // Checks aligned lengths, strictly increasing timestamps, and that every
  // timestamp delta is a positive multiple of the sampling interval.
  void validate() const;
};

struct ChannelRange {
  double lo;
  double hi;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Plant-specific operating thresholds. The cleaning rules are generic; every
// number here comes from configuration, with utility-scale defaults.
struct TurbineSpec {
  double cut_in_speed = 3.0;    // m/s
  double rated_speed = 11.0;    // m/s
  double cut_out_speed = 25.0;  // m/s
  double rated_power = 1500.0;  // kW
  double mppt_pitch_limit = 5.0;        // degrees
  double power_floor_fraction = 0.9;    // of rated power
  std::array<ChannelRange, kNumChannels> ranges = {
      ChannelRange{0.0, 45.0},        // wind speed m/s
      ChannelRange{-75.0, 1800.0},    // power kW
      ChannelRange{0.0, 2300.0},      // generator speed rpm
      ChannelRange{-5.0, 45.0},       // ambient temperature degC
  };

  void validate() const;
  // Convenience: range bounds tied to rated power / rated generator speed.
  static TurbineSpec for_plant(double rated_power_kw, double rated_genspeed_rpm);
};

enum class Reason : std::uint8_t {
  NONE = 0,  // KEEP
  RANGE,
  PITCH_LIMIT,
  POWER_FLOOR,
  DBSCAN_NOISE,
  LOF,
  MISSING,
};
const char* reason_name(Reason r);
std::optional<Reason> reason_from_name(const std::string& name);

// One verdict per frame timestamp; NONE means KEEP.
struct OutlierLabeling {
  std::vector<Reason> reasons;

  static OutlierLabeling all_keep(std::size_t n) { return {std::vector<Reason>(n, Reason::NONE)}; }
  std::size_t size() const { return reasons.size(); }
  bool keep(std::size_t i) const { return reasons[i] == Reason::NONE; }
  void reject(std::size_t i, Reason r) { reasons[i] = r; }
  std::size_t keep_count() const;
  std::size_t reject_count() const { return reasons.size() - keep_count(); }
};

// A contiguous, fully-clean window of raw channel values (channels x time).
struct WindowSample {
  std::string turbine_id;
  std::int64_t start_ts = 0;
  std::size_t length = 0;
  std::array<std::vector<double>, kNumChannels> channels;

  void validate() const;
};

// CSV schema: timestamp,wind_speed,power,generator_speed,ambient_temperature
// with an optional trailing pitch_angle column. Empty fields and "nan" parse
// as NaN.
RawScadaFrame read_frame_csv(const std::string& path, const std::string& turbine_id = "");
void write_frame_csv(const std::string& path, const RawScadaFrame& frame);

// Labeling CSV schema: timestamp,verdict,reason (verdict KEEP/REJECT).
void write_labeling_csv(const std::string& path, const RawScadaFrame& frame,
                        const OutlierLabeling& labels);
OutlierLabeling read_labeling_csv(const std::string& path);

}  // namespace windts::scada
