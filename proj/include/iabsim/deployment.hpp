#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iabsim/rng.hpp"

namespace iabsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Position {
  double x{0.0};
  double y{0.0};

  friend bool operator==(const Position&, const Position&) = default;
};

inline double distance_2d(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline constexpr double kGnbHeightM = 10.0;
inline constexpr double kUeHeightM = 1.5;

struct GnbSite {
  int id{0};
  Position pos;
  double height{kGnbHeightM};
  bool is_donor{false};
  // Index in the original draw; survives the only-donors renumbering so that
  // per-pair channel draws stay paired across deployment kinds.
  int deploy_index{0};
};

struct UeSite {
  int id{0};
  Position pos;
  double height{kUeHeightM};
};

enum class DeploymentKind { kAllWired, kIab, kOnlyDonors };

inline std::string_view to_string(DeploymentKind k) {
  switch (k) {
    case DeploymentKind::kAllWired: return "all-wired";
    case DeploymentKind::kIab: return "iab";
    case DeploymentKind::kOnlyDonors: return "only-donors";
  }
  return "?";
}

inline DeploymentKind parse_deployment_kind(std::string_view s) {
  if (s == "all-wired" || s == "all_wired" || s == "ALL_WIRED") return DeploymentKind::kAllWired;
  if (s == "iab" || s == "IAB") return DeploymentKind::kIab;
  if (s == "only-donors" || s == "only_donors" || s == "ONLY_DONORS")
    return DeploymentKind::kOnlyDonors;
  throw ConfigError("unknown scenario '" + std::string(s) + "'");
}

struct Scenario {
  double area_km2{1.0};
  std::vector<GnbSite> gnbs;
  std::vector<UeSite> ues;
  std::uint64_t rng_seed{0};

  double side_m() const { return std::sqrt(area_km2) * 1000.0; }
  int donor_count() const {
    return static_cast<int>(std::count_if(gnbs.begin(), gnbs.end(),
                                          [](const GnbSite& g) { return g.is_donor; }));
  }
};

// Homogeneous PPP over a square of the given area: Poisson count, i.i.d.
// uniform positions.
template <class Urbg>
std::vector<Position> sample_ppp(double density_per_km2, double area_km2, Urbg& rng) {
  if (density_per_km2 < 0.0) throw ConfigError("PPP density must be non-negative");
  if (area_km2 <= 0.0) throw ConfigError("PPP area must be positive");
  std::vector<Position> out;
  const double mean = density_per_km2 * area_km2;
  if (mean <= 0.0) return out;
  std::poisson_distribution<int> count_dist(mean);
  const int n = count_dist(rng);
  const double side = std::sqrt(area_km2) * 1000.0;
  std::uniform_real_distribution<double> coord(0.0, side);
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = coord(rng);
    const double y = coord(rng);
    out.push_back({x, y});
  }
  return out;
}

inline int donor_target_count(int n_gnbs, double p) {
  return std::max(1, static_cast<int>(std::lround(p * n_gnbs)));
}

// Marks exactly max(1, round(p*N)) sites as donors, uniformly without
// replacement.
template <class Urbg>
void designate_donors(std::vector<GnbSite>& gnbs, double p, Urbg& rng) {
  if (!(p > 0.0) || p > 1.0) throw ConfigError("donor fraction p must lie in (0, 1]");
  if (gnbs.empty()) throw ConfigError("cannot designate donors without gNBs");
  const int n = static_cast<int>(gnbs.size());
  const int k = std::min(n, donor_target_count(n, p));
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates; std::shuffle would consume a full permutation.
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  for (auto& g : gnbs) g.is_donor = false;
  for (int i = 0; i < k; ++i) gnbs[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])].is_donor = true;
}

struct DeploymentParams {
  double density_gnb_km2{45.0};
  double area_km2{1.0};
  double ue_density_factor{10.0};
  double donor_fraction{0.3};
};

// Full draw: every gNB plus the IAB donor designation. Each component uses its
// own stream, so positions do not depend on p and the donor set does not
// depend on the UE count.
inline Scenario generate_scenario(const DeploymentParams& params, std::uint64_t seed) {
  Scenario sc;
  sc.area_km2 = params.area_km2;
  sc.rng_seed = seed;
  auto gnb_rng = make_rng(seed, Stream::kGnbPlacement);
  const auto gnb_pos = sample_ppp(params.density_gnb_km2, params.area_km2, gnb_rng);
  sc.gnbs.reserve(gnb_pos.size());
  for (std::size_t i = 0; i < gnb_pos.size(); ++i) {
    GnbSite g;
    g.id = static_cast<int>(i);
    g.deploy_index = g.id;
    g.pos = gnb_pos[i];
    sc.gnbs.push_back(g);
  }
  auto ue_rng = make_rng(seed, Stream::kUePlacement);
  const auto ue_pos =
      sample_ppp(params.ue_density_factor * params.density_gnb_km2, params.area_km2, ue_rng);
  sc.ues.reserve(ue_pos.size());
  for (std::size_t i = 0; i < ue_pos.size(); ++i) {
    sc.ues.push_back(UeSite{static_cast<int>(i), ue_pos[i], kUeHeightM});
  }
  if (!sc.gnbs.empty()) {
    auto donor_rng = make_rng(seed, Stream::kDonors);
    designate_donors(sc.gnbs, params.donor_fraction, donor_rng);
  }
  return sc;
}

// Projects the full draw onto one deployment kind: all-wired promotes every
// site to donor; only-donors drops the wireless-backhauled sites and
// renumbers the remaining ones densely in deployment order.
inline Scenario derive_deployment(const Scenario& full, DeploymentKind kind) {
  Scenario out = full;
  switch (kind) {
    case DeploymentKind::kAllWired:
      for (auto& g : out.gnbs) g.is_donor = true;
      break;
    case DeploymentKind::kIab:
      break;
    case DeploymentKind::kOnlyDonors: {
      out.gnbs.clear();
      for (const auto& g : full.gnbs) {
        if (!g.is_donor) continue;
        GnbSite copy = g;
        copy.id = static_cast<int>(out.gnbs.size());
        out.gnbs.push_back(copy);
      }
      break;
    }
  }
  return out;
}

// Versioned plain-text record, one entity per line.
inline constexpr std::string_view kScenarioHeader = "iabsim-scenario v1";

inline void dump_scenario(const Scenario& sc, std::ostream& os) {
  os << kScenarioHeader << '\n';
  os << std::setprecision(17);
  os << "area_km2 " << sc.area_km2 << '\n';
  os << "seed " << sc.rng_seed << '\n';
  for (const auto& g : sc.gnbs) {
    os << "gnb " << g.id << ' ' << g.pos.x << ' ' << g.pos.y << ' ' << g.height << ' '
       << (g.is_donor ? "donor" : "node") << ' ' << g.deploy_index << '\n';
  }
  for (const auto& u : sc.ues) {
    os << "ue " << u.id << ' ' << u.pos.x << ' ' << u.pos.y << ' ' << u.height << '\n';
  }
}

inline Scenario load_scenario(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kScenarioHeader) {
    throw ConfigError("scenario file: missing or unsupported header");
  }
  Scenario sc;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "area_km2") {
      ls >> sc.area_km2;
    } else if (kind == "seed") {
      ls >> sc.rng_seed;
    } else if (kind == "gnb") {
      GnbSite g;
      std::string flag;
      ls >> g.id >> g.pos.x >> g.pos.y >> g.height >> flag >> g.deploy_index;
      if (flag != "donor" && flag != "node") ls.setstate(std::ios::failbit);
      g.is_donor = flag == "donor";
      if (g.id != static_cast<int>(sc.gnbs.size())) {
        throw ConfigError("scenario file line " + std::to_string(lineno) +
                          ": gNB ids must be dense and ordered");
      }
      sc.gnbs.push_back(g);
    } else if (kind == "ue") {
      UeSite u;
      ls >> u.id >> u.pos.x >> u.pos.y >> u.height;
      sc.ues.push_back(u);
    } else {
      throw ConfigError("scenario file line " + std::to_string(lineno) + ": unknown record '" +
                        kind + "'");
    }
    if (ls.fail()) {
      throw ConfigError("scenario file line " + std::to_string(lineno) + ": malformed record");
    }
  }
  return sc;
}

}  // namespace iabsim
