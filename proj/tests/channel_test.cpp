#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "iabsim/channel.hpp"
#include "iabsim/deployment.hpp"

using namespace iabsim;

TEST(Los, ShortRangeIsCertain) {
  EXPECT_DOUBLE_EQ(los_probability(10.0), 1.0);
  EXPECT_DOUBLE_EQ(los_probability(18.0), 1.0);
}

TEST(Los, HandValueAt36m) {
  const double e = std::exp(-1.0);
  EXPECT_NEAR(los_probability(36.0), 0.5 * (1 - e) + e, 1e-12);
  EXPECT_NEAR(los_probability(36.0), 0.684, 5e-4);
}

TEST(Los, MonotoneTail) {
  double prev = 1.0;
  for (double d = 18.0; d < 5000.0; d *= 1.3) {
    const double p = los_probability(d);
    EXPECT_LE(p, prev + 1e-15);
    prev = p;
  }
  EXPECT_LT(los_probability(1e6), 1e-4);
}

TEST(Pathloss, HandValues) {
  EXPECT_NEAR(pathloss_db(1.0, true, 28.0), 61.34, 0.01);
  EXPECT_NEAR(pathloss_db(100.0, true, 28.0), 103.34, 0.01);
  EXPECT_NEAR(pathloss_db(100.0, false, 28.0), 123.83, 0.01);
}

TEST(Pathloss, ClampsBelowOneMetre) {
  EXPECT_DOUBLE_EQ(pathloss_db(0.2, true, 28.0), pathloss_db(1.0, true, 28.0));
}

TEST(Pathloss, NlosNeverBelowLos) {
  for (double d = 1.0; d < 3000.0; d *= 1.1) {
    EXPECT_GE(pathloss_db(d, false, 28.0), pathloss_db(d, true, 28.0));
  }
}

TEST(Pathloss, MonotoneInDistance) {
  for (bool los : {true, false}) {
    double prev = 0.0;
    for (double d = 1.0; d < 3000.0; d *= 1.07) {
      const double pl = pathloss_db(d, los, 28.0);
      EXPECT_GE(pl, prev);
      prev = pl;
    }
  }
}

TEST(Gain, ArrayGain) {
  EXPECT_DOUBLE_EQ(beamforming_gain_db(1), 0.0);
  EXPECT_NEAR(beamforming_gain_db(64), 18.06, 0.005);
  EXPECT_NEAR(beamforming_gain_db(16), 12.04, 0.005);
}

TEST(Snr, LinkBudgetExample) {
  RadioConfig cfg;
  EXPECT_NEAR(noise_floor_dbm(cfg), -82.98, 0.01);
  const double s = snr_db(cfg, 103.34, 0.0, beamforming_gain_db(64), beamforming_gain_db(16));
  EXPECT_NEAR(s, 39.74, 0.01);
}

TEST(Snr, CancellationAndLinearity) {
  RadioConfig cfg;
  const double pl = cfg.tx_power_dbm - noise_floor_dbm(cfg);
  EXPECT_NEAR(snr_db(cfg, pl, 0.0, 0.0, 0.0), 0.0, 1e-9);
  RadioConfig hot = cfg;
  hot.tx_power_dbm += 3.0;
  EXPECT_NEAR(snr_db(hot, 110.0, 1.0, 5.0, 5.0) - snr_db(cfg, 110.0, 1.0, 5.0, 5.0), 3.0, 1e-9);
}

TEST(Capacity, Examples) {
  EXPECT_NEAR(capacity_bps(0.0, 400e6, 7.406), 400e6, 1.0);
  EXPECT_NEAR(capacity_bps(39.74, 400e6, 7.406), 2.9624e9, 1e3);
  EXPECT_EQ(capacity_bps(-std::numeric_limits<double>::infinity(), 400e6, 7.406), 0.0);
}

TEST(Capacity, MonotoneAndBounded) {
  double prev = 0.0;
  for (double s = -30.0; s < 60.0; s += 0.5) {
    const double c = capacity_bps(s, 400e6, 7.406);
    EXPECT_GE(c, prev);
    EXPECT_LE(c, 400e6 * 7.406 + 1e-3);
    prev = c;
  }
}

TEST(LinkTable, StaticSymmetricAndBounded) {
  DeploymentParams p;
  p.density_gnb_km2 = 20;
  const auto sc = generate_scenario(p, 3);
  RadioConfig cfg;
  const LinkTable a(sc, cfg);
  const LinkTable b(sc, cfg);
  for (std::size_t i = 0; i < sc.gnbs.size(); ++i) {
    for (std::size_t j = 0; j < sc.gnbs.size(); ++j) {
      if (i == j) continue;
      const auto& l = a.gnb_link(static_cast<int>(i), static_cast<int>(j));
      EXPECT_EQ(l.snr_db, a.gnb_link(static_cast<int>(j), static_cast<int>(i)).snr_db);
      EXPECT_EQ(l.snr_db, b.gnb_link(static_cast<int>(i), static_cast<int>(j)).snr_db);
      EXPECT_GE(l.capacity_bps, 0.0);
      EXPECT_LE(l.capacity_bps, cfg.bandwidth_hz * cfg.se_cap_bps_hz);
      EXPECT_GT(l.pathloss_db, 0.0);
    }
  }
  for (std::size_t u = 0; u < sc.ues.size(); ++u) {
    for (std::size_t g = 0; g < sc.gnbs.size(); ++g) {
      const auto& l = a.ue_link(static_cast<int>(u), static_cast<int>(g));
      EXPECT_EQ(l.shadowing_db, b.ue_link(static_cast<int>(u), static_cast<int>(g)).shadowing_db);
      const double expect =
          snr_db(cfg, l.pathloss_db, l.shadowing_db, beamforming_gain_db(64), beamforming_gain_db(16));
      EXPECT_NEAR(l.snr_db, expect, 1e-9);
    }
  }
}

// The same physical pair keeps its channel when the deployment is thinned.
TEST(LinkTable, LinksSurviveOnlyDonorsProjection) {
  DeploymentParams p;
  const auto full = generate_scenario(p, 17);
  const auto od = derive_deployment(full, DeploymentKind::kOnlyDonors);
  RadioConfig cfg;
  const LinkTable lf(full, cfg);
  const LinkTable lo(od, cfg);
  for (std::size_t u = 0; u < od.ues.size(); u += 7) {
    for (const auto& g : od.gnbs) {
      EXPECT_EQ(lo.ue_link(static_cast<int>(u), g.id).snr_db,
                lf.ue_link(static_cast<int>(u), g.deploy_index).snr_db);
    }
  }
}

// LOS frequency over many independent pairs at a fixed distance.
TEST(DrawLink, LosFrequencyMatchesProbability) {
  RadioConfig cfg;
  Rng rng(99);
  int los = 0;
  const int n = 40'000;
  for (int i = 0; i < n; ++i) los += draw_link(cfg, 60.0, 8.5, 0.0, 0.0, rng).los;
  EXPECT_NEAR(los / double(n), los_probability(60.0), 0.01);
}

TEST(DrawLink, ShadowingSpreadByClass) {
  RadioConfig cfg;
  Rng rng(5);
  double s_los = 0, ss_los = 0, s_n = 0, ss_n = 0;
  int n_los = 0, n_n = 0;
  for (int i = 0; i < 60'000; ++i) {
    const auto l = draw_link(cfg, 40.0, 8.5, 0.0, 0.0, rng);
    if (l.los) {
      s_los += l.shadowing_db;
      ss_los += l.shadowing_db * l.shadowing_db;
      ++n_los;
    } else {
      s_n += l.shadowing_db;
      ss_n += l.shadowing_db * l.shadowing_db;
      ++n_n;
    }
  }
  EXPECT_NEAR(std::sqrt(ss_los / n_los - std::pow(s_los / n_los, 2)), 4.0, 0.1);
  EXPECT_NEAR(std::sqrt(ss_n / n_n - std::pow(s_n / n_n, 2)), 7.82, 0.15);
}

TEST(RadioConfig, Validation) {
  RadioConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.bandwidth_hz = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
