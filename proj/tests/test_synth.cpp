#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "windts/cleaning.hpp"
#include "windts/synth.hpp"

using namespace windts;
using namespace windts::synth;

TEST_CASE("zero injection rates leave the whole plant NORMAL") {
  SynthConfig cfg;
  cfg.turbines = 2;
  cfg.days = 3;
  const auto plant = generate_plant(cfg);
  REQUIRE(plant.size() == 2);
  for (const auto& t : plant) {
    CHECK(t.frame.size() == cfg.points_per_turbine());
    for (TruthLabel l : t.truth.labels) CHECK(l == TruthLabel::NORMAL);
  }
}

TEST_CASE("nominal curves follow the cubic law") {
  scada::TurbineSpec spec;
  CHECK(nominal_power(spec, spec.rated_speed) == spec.rated_power);
  CHECK(nominal_power(spec, 0.5 * spec.rated_speed) ==
        doctest::Approx(spec.rated_power / 8.0).epsilon(1e-12));
  CHECK(nominal_power(spec, spec.cut_in_speed - 0.5) == 0.0);
  CHECK(nominal_power(spec, spec.cut_out_speed + 1.0) == 0.0);
  CHECK(nominal_power(spec, spec.rated_speed + 3.0) == spec.rated_power);
}

TEST_CASE("pre-noise points satisfy the turbine rules exactly") {
  SynthConfig cfg;
  cfg.turbines = 1;
  cfg.days = 10;
  cfg.noise_wind = cfg.noise_power_frac = cfg.noise_genspeed = cfg.noise_temp =
      cfg.noise_pitch = 0.0;
  const auto plant = generate_plant(cfg);
  const auto& f = plant[0].frame;
  const auto& spec = cfg.spec;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = f.channel(scada::Channel::WIND)[i];
    const double p = f.channel(scada::Channel::POWER)[i];
    const double pitch = f.pitch_angle[i];
    if (v >= spec.cut_in_speed && v < spec.rated_speed) {
      CHECK(pitch <= spec.mppt_pitch_limit);  // zero violations in MPPT band
    } else if (v >= spec.rated_speed && v < spec.cut_out_speed) {
      CHECK(p >= spec.power_floor_fraction * spec.rated_power);
    }
  }
}

TEST_CASE("same seed gives byte-identical plants") {
  SynthConfig cfg;
  cfg.turbines = 2;
  cfg.days = 5;
  cfg.curtail_frac = 0.02;
  cfg.spike_frac = 0.01;
  cfg.gap_frac = 0.01;
  cfg.seed = 77;
  const auto a = generate_plant(cfg);
  const auto b = generate_plant(cfg);
  for (int t = 0; t < cfg.turbines; ++t) {
    CHECK(a[t].frame.timestamps == b[t].frame.timestamps);
    for (int c = 0; c < scada::kNumChannels; ++c) {
      const auto& ca = a[t].frame.channels[c];
      const auto& cb = b[t].frame.channels[c];
      REQUIRE(ca.size() == cb.size());
      for (std::size_t i = 0; i < ca.size(); ++i) {
        if (std::isnan(ca[i])) {
          CHECK(std::isnan(cb[i]));
        } else {
          CHECK(ca[i] == cb[i]);
        }
      }
    }
    CHECK(a[t].truth.labels == b[t].truth.labels);
  }
}

TEST_CASE("different seeds change at least something") {
  SynthConfig cfg;
  cfg.turbines = 1;
  cfg.days = 2;
  cfg.seed = 1;
  const auto a = generate_plant(cfg);
  cfg.seed = 2;
  const auto b = generate_plant(cfg);
  CHECK(a[0].frame.channel(scada::Channel::WIND) != b[0].frame.channel(scada::Channel::WIND));
}

TEST_CASE("turbines with identical specs are distributional twins") {
  SynthConfig cfg;
  cfg.turbines = 2;
  cfg.days = 70;  // ~10k points each
  cfg.seed = 31;
  const auto plant = generate_plant(cfg);
  REQUIRE(plant[0].frame.size() >= 10000);
  for (int c = 0; c < scada::kNumChannels; ++c) {
    const double ks = testing::ks_statistic(plant[0].frame.channels[c],
                                            plant[1].frame.channels[c]);
    INFO("channel " << scada::channel_name(static_cast<scada::Channel>(c)));
    CHECK(ks <= 0.05);
  }
}

TEST_CASE("cleaning_score conventions") {
  GroundTruth truth;
  truth.labels = {TruthLabel::NORMAL, TruthLabel::NORMAL, TruthLabel::CURTAILED,
                  TruthLabel::SPIKE, TruthLabel::GAP};

  // perfect labeling
  scada::OutlierLabeling perfect = scada::OutlierLabeling::all_keep(5);
  perfect.reject(2, scada::Reason::PITCH_LIMIT);
  perfect.reject(3, scada::Reason::RANGE);
  perfect.reject(4, scada::Reason::MISSING);
  const CleaningScore ps = cleaning_score(perfect, truth);
  for (const auto& [cls, s] : ps.per_class) {
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
  }
  CHECK(ps.normal_false_reject_rate() == 0.0);

  // reject everything: recall 1, precision = class base rate vs NORMAL
  scada::OutlierLabeling all = scada::OutlierLabeling::all_keep(5);
  for (std::size_t i = 0; i < 5; ++i) all.reject(i, scada::Reason::RANGE);
  const CleaningScore as = cleaning_score(all, truth);
  CHECK(as.per_class.at(TruthLabel::CURTAILED).recall == 1.0);
  CHECK(as.per_class.at(TruthLabel::CURTAILED).precision == doctest::Approx(1.0 / 3.0));

  // keep everything: recall 0, precision reported as 1 with zero support
  const CleaningScore ks = cleaning_score(scada::OutlierLabeling::all_keep(5), truth);
  CHECK(ks.per_class.at(TruthLabel::SPIKE).recall == 0.0);
  CHECK(ks.per_class.at(TruthLabel::SPIKE).precision == 1.0);
  CHECK(ks.per_class.at(TruthLabel::SPIKE).zero_support_precision);

  CHECK_THROWS_AS(cleaning_score(scada::OutlierLabeling::all_keep(3), truth), ValidationError);
}

TEST_CASE("truth csv round trip") {
  SynthConfig cfg;
  cfg.turbines = 1;
  cfg.days = 2;
  cfg.gap_frac = 0.02;
  const auto plant = generate_plant(cfg);
  const std::string path = "/tmp/windts_truth_test.csv";
  write_truth_csv(path, plant[0].frame, plant[0].truth);
  const GroundTruth loaded = read_truth_csv(path);
  CHECK(loaded.labels == plant[0].truth.labels);
}
