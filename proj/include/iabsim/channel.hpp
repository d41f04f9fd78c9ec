#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "iabsim/deployment.hpp"
#include "iabsim/rng.hpp"

namespace iabsim {

struct RadioConfig {
  double carrier_ghz{28.0};
  double bandwidth_hz{400e6};
  double tx_power_dbm{30.0};
  double noise_figure_db{5.0};
  int gnb_elements{64};
  int ue_elements{16};
  double se_cap_bps_hz{7.406};
  double shadow_sigma_los_db{4.0};
  double shadow_sigma_nlos_db{7.82};

  void validate() const {
    if (!(carrier_ghz > 0 && bandwidth_hz > 0 && noise_figure_db > 0 && gnb_elements > 0 &&
          ue_elements > 0 && se_cap_bps_hz > 0)) {
      throw ConfigError("radio parameters must be positive");
    }
  }
};

struct LinkState {
  double distance_m{0.0};
  bool los{false};
  double shadowing_db{0.0};
  double pathloss_db{0.0};
  double snr_db{-std::numeric_limits<double>::infinity()};
  double capacity_bps{0.0};
};

// UMi street canyon LOS probability on the 2D distance.
inline double los_probability(double d_m) {
  if (d_m <= 18.0) return 1.0;
  const double e = std::exp(-d_m / 36.0);
  return (18.0 / d_m) * (1.0 - e) + e;
}

inline double pathloss_db(double d_m, bool los, double f_ghz) {
  const double d = std::max(d_m, 1.0);
  const double pl_los = 32.4 + 21.0 * std::log10(d) + 20.0 * std::log10(f_ghz);
  if (los) return pl_los;
  const double pl_nlos = 22.4 + 35.3 * std::log10(d) + 21.3 * std::log10(f_ghz);
  return std::max(pl_los, pl_nlos);
}

// Ideal array gain with perfectly aligned beams.
inline double beamforming_gain_db(int n_elements) {
  return 10.0 * std::log10(static_cast<double>(n_elements));
}

inline double noise_floor_dbm(const RadioConfig& cfg) {
  return -174.0 + 10.0 * std::log10(cfg.bandwidth_hz) + cfg.noise_figure_db;
}

inline double snr_db(const RadioConfig& cfg, double pl_db, double shadow_db, double g_tx_db,
                     double g_rx_db) {
  return cfg.tx_power_dbm - pl_db - shadow_db + g_tx_db + g_rx_db - noise_floor_dbm(cfg);
}

// Shannon rate capped at the maximum spectral efficiency.
inline double capacity_bps(double snr_db_value, double bandwidth_hz, double se_cap) {
  if (std::isinf(snr_db_value) && snr_db_value < 0) return 0.0;
  const double se = std::log2(1.0 + std::pow(10.0, snr_db_value / 10.0));
  return bandwidth_hz * std::min(se, se_cap);
}

// Draws LOS state and shadowing for one link and evaluates the budget.
template <class Urbg>
LinkState draw_link(const RadioConfig& cfg, double d2d_m, double dh_m, double g_tx_db,
                    double g_rx_db, Urbg& rng) {
  LinkState ls;
  ls.distance_m = std::hypot(d2d_m, dh_m);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ls.los = u(rng) < los_probability(d2d_m);
  std::normal_distribution<double> shadow(
      0.0, ls.los ? cfg.shadow_sigma_los_db : cfg.shadow_sigma_nlos_db);
  ls.shadowing_db = shadow(rng);
  ls.pathloss_db = pathloss_db(ls.distance_m, ls.los, cfg.carrier_ghz);
  ls.snr_db = snr_db(cfg, ls.pathloss_db, ls.shadowing_db, g_tx_db, g_rx_db);
  ls.capacity_bps = capacity_bps(ls.snr_db, cfg.bandwidth_hz, cfg.se_cap_bps_hz);
  return ls;
}

// Immutable per-run link cache. Each pair's randomness comes from a stream
// keyed by the pair's deployment indices, so the same physical link has the
// same state in every deployment kind derived from one draw.
class LinkTable {
 public:
  LinkTable() = default;

  LinkTable(const Scenario& sc, const RadioConfig& cfg) : n_gnb_(sc.gnbs.size()), n_ue_(sc.ues.size()) {
    gnb_gnb_.resize(n_gnb_ * n_gnb_);
    ue_gnb_.resize(n_ue_ * n_gnb_);
    const double g_bs = beamforming_gain_db(cfg.gnb_elements);
    const double g_ue = beamforming_gain_db(cfg.ue_elements);
    for (std::size_t i = 0; i < n_gnb_; ++i) {
      for (std::size_t j = i + 1; j < n_gnb_; ++j) {
        const auto& a = sc.gnbs[i];
        const auto& b = sc.gnbs[j];
        const auto lo = static_cast<std::uint64_t>(std::min(a.deploy_index, b.deploy_index));
        const auto hi = static_cast<std::uint64_t>(std::max(a.deploy_index, b.deploy_index));
        auto rng = make_rng(sc.rng_seed, Stream::kGnbLink, lo, hi);
        const LinkState ls = draw_link(cfg, distance_2d(a.pos, b.pos), a.height - b.height, g_bs, g_bs, rng);
        gnb_gnb_[i * n_gnb_ + j] = ls;
        gnb_gnb_[j * n_gnb_ + i] = ls;
      }
    }
    for (std::size_t u = 0; u < n_ue_; ++u) {
      for (std::size_t g = 0; g < n_gnb_; ++g) {
        const auto& ue = sc.ues[u];
        const auto& gnb = sc.gnbs[g];
        auto rng = make_rng(sc.rng_seed, Stream::kUeLink, static_cast<std::uint64_t>(ue.id),
                            static_cast<std::uint64_t>(gnb.deploy_index));
        ue_gnb_[u * n_gnb_ + g] =
            draw_link(cfg, distance_2d(ue.pos, gnb.pos), gnb.height - ue.height, g_bs, g_ue, rng);
      }
    }
  }

  // Builds a table from explicit link states (hand-built test topologies).
  static LinkTable from_states(std::size_t n_gnb, std::size_t n_ue) {
    LinkTable t;
    t.n_gnb_ = n_gnb;
    t.n_ue_ = n_ue;
    t.gnb_gnb_.assign(n_gnb * n_gnb, LinkState{});
    t.ue_gnb_.assign(n_ue * n_gnb, LinkState{});
    return t;
  }

  std::size_t gnb_count() const { return n_gnb_; }
  std::size_t ue_count() const { return n_ue_; }

  const LinkState& gnb_link(int a, int b) const { return gnb_gnb_[idx(a) * n_gnb_ + idx(b)]; }
  const LinkState& ue_link(int ue, int gnb) const { return ue_gnb_[idx(ue) * n_gnb_ + idx(gnb)]; }

  void set_gnb_link(int a, int b, const LinkState& ls) {
    gnb_gnb_[idx(a) * n_gnb_ + idx(b)] = ls;
    gnb_gnb_[idx(b) * n_gnb_ + idx(a)] = ls;
  }
  void set_ue_link(int ue, int gnb, const LinkState& ls) { ue_gnb_[idx(ue) * n_gnb_ + idx(gnb)] = ls; }

 private:
  static std::size_t idx(int i) { return static_cast<std::size_t>(i); }

  std::size_t n_gnb_{0};
  std::size_t n_ue_{0};
  std::vector<LinkState> gnb_gnb_;
  std::vector<LinkState> ue_gnb_;
};

// Convenience for hand-built topologies: a link whose SNR and capacity are given.
inline LinkState make_link(double snr_db_value, double capacity) {
  LinkState ls;
  ls.distance_m = 1.0;
  ls.los = true;
  ls.pathloss_db = 1.0;
  ls.snr_db = snr_db_value;
  ls.capacity_bps = capacity;
  return ls;
}

}  // namespace iabsim
