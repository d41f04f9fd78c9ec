#pragma once

#include <algorithm>
#include <iomanip>
#include <iterator>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iabsim/channel.hpp"
#include "iabsim/deployment.hpp"

namespace iabsim {

enum class PolicyKind { kHqf, kWf, kHqfBiased };

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kHqf: return "hqf";
    case PolicyKind::kWf: return "wf";
    case PolicyKind::kHqfBiased: return "biased";
  }
  return "?";
}

inline PolicyKind parse_policy_kind(std::string_view s) {
  if (s == "hqf" || s == "HQF") return PolicyKind::kHqf;
  if (s == "wf" || s == "WF") return PolicyKind::kWf;
  if (s == "biased" || s == "hqf-biased" || s == "HQF_BIASED") return PolicyKind::kHqfBiased;
  throw ConfigError("unknown policy '" + std::string(s) + "'");
}

inline constexpr double kConservativeBetaDb = 3.0;
inline constexpr double kAggressiveBetaDb = 10.0;

struct PolicyConfig {
  PolicyKind kind{PolicyKind::kHqf};
  double beta_db_per_hop{kConservativeBetaDb};
  double min_snr_db{-5.0};

  void validate() const {
    if (beta_db_per_hop < 0.0) throw ConfigError("bias slope beta must be non-negative");
  }
};

struct Candidate {
  int gnb_id{0};
  double snr_db{0.0};
  int hop_count{0};
  bool is_donor{false};
};

namespace detail {
// argmax of score over candidates, ties to the lowest gNB id.
template <class Score>
int argmax_candidate(std::span<const Candidate> cands, Score score) {
  const Candidate* best = nullptr;
  double best_score = 0.0;
  for (const auto& c : cands) {
    const double s = score(c);
    if (best == nullptr || s > best_score || (s == best_score && c.gnb_id < best->gnb_id)) {
      best = &c;
      best_score = s;
    }
  }
  return best->gnb_id;
}
}  // namespace detail

/// Parent choice for an IAB-node among already-attached candidates.
///
/// HQF takes the highest SNR. WF takes the best donor whenever one is among
/// the candidates and otherwise falls back to the highest SNR. The biased
/// variant ranks by SNR minus beta per hop of the candidate, so a large beta
/// behaves like WF.
inline int select_parent(std::span<const Candidate> cands, const PolicyConfig& policy) {
  if (cands.empty()) throw std::logic_error("select_parent: empty candidate set");
  switch (policy.kind) {
    case PolicyKind::kHqf:
      return detail::argmax_candidate(cands, [](const Candidate& c) { return c.snr_db; });
    case PolicyKind::kWf: {
      const bool any_donor =
          std::any_of(cands.begin(), cands.end(), [](const Candidate& c) { return c.is_donor; });
      if (!any_donor) {
        return detail::argmax_candidate(cands, [](const Candidate& c) { return c.snr_db; });
      }
      std::vector<Candidate> donors;
      std::copy_if(cands.begin(), cands.end(), std::back_inserter(donors),
                   [](const Candidate& c) { return c.is_donor; });
      return detail::argmax_candidate(std::span<const Candidate>(donors),
                                      [](const Candidate& c) { return c.snr_db; });
    }
    case PolicyKind::kHqfBiased: {
      const double beta = policy.beta_db_per_hop;
      return detail::argmax_candidate(
          cands, [beta](const Candidate& c) { return c.snr_db - beta * c.hop_count; });
    }
  }
  throw std::logic_error("select_parent: unknown policy");
}

inline constexpr int kNone = -1;

// Spanning forest rooted at the donors.
struct IabTree {
  std::vector<int> parent;                 // kNone for donors and detached nodes
  std::vector<std::vector<int>> children;  // ascending ids
  std::vector<int> hop_count;              // 0 for donors, kNone when detached
  std::vector<bool> is_donor;
  std::vector<double> parent_snr_db;
  std::vector<int> attach_order;  // IAB-nodes, in attachment sequence
  std::vector<int> detached;

  std::size_t size() const { return parent.size(); }
  bool attached(int g) const { return hop_count[static_cast<std::size_t>(g)] != kNone; }

  int root_of(int g) const {
    int cur = g;
    while (parent[static_cast<std::size_t>(cur)] != kNone) cur = parent[static_cast<std::size_t>(cur)];
    return cur;
  }

  std::vector<int> donors() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < is_donor.size(); ++i)
      if (is_donor[i]) out.push_back(static_cast<int>(i));
    return out;
  }

  // Mean hop count over attached IAB-nodes (0 when there are none).
  double mean_iab_hops() const {
    if (attach_order.empty()) return 0.0;
    double sum = 0.0;
    for (int g : attach_order) sum += hop_count[static_cast<std::size_t>(g)];
    return sum / static_cast<double>(attach_order.size());
  }

  // Initializes a forest where every donor is a root and nothing else is attached.
  static IabTree roots_only(std::span<const GnbSite> gnbs) {
    IabTree t;
    const std::size_t n = gnbs.size();
    t.parent.assign(n, kNone);
    t.children.assign(n, {});
    t.hop_count.assign(n, kNone);
    t.is_donor.assign(n, false);
    t.parent_snr_db.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      t.is_donor[i] = gnbs[i].is_donor;
      if (gnbs[i].is_donor) t.hop_count[i] = 0;
    }
    return t;
  }

  void attach(int child, int par, double snr) {
    const auto c = static_cast<std::size_t>(child);
    parent[c] = par;
    hop_count[c] = hop_count[static_cast<std::size_t>(par)] + 1;
    parent_snr_db[c] = snr;
    auto& sib = children[static_cast<std::size_t>(par)];
    sib.insert(std::upper_bound(sib.begin(), sib.end(), child), child);
    attach_order.push_back(child);
  }
};

/// Attaches IAB-nodes one at a time in ascending id, each choosing among the
/// gNBs attached so far whose link clears the SNR floor. Nodes with no usable
/// candidate are retried once after the first pass; the remainder stay detached.
inline IabTree form_topology(const Scenario& sc, const LinkTable& links, const PolicyConfig& policy) {
  policy.validate();
  IabTree tree = IabTree::roots_only(sc.gnbs);
  std::vector<Candidate> cands;
  auto try_attach = [&](int node) {
    cands.clear();
    for (std::size_t g = 0; g < tree.size(); ++g) {
      if (!tree.attached(static_cast<int>(g))) continue;
      const double snr = links.gnb_link(node, static_cast<int>(g)).snr_db;
      if (snr < policy.min_snr_db) continue;
      cands.push_back({static_cast<int>(g), snr, tree.hop_count[g], tree.is_donor[g]});
    }
    if (cands.empty()) return false;
    const int par = select_parent(cands, policy);
    tree.attach(node, par, links.gnb_link(node, par).snr_db);
    return true;
  };

  std::vector<int> pending;
  for (const auto& g : sc.gnbs) {
    if (g.is_donor) continue;
    if (!try_attach(g.id)) pending.push_back(g.id);
  }
  for (int node : pending) {
    if (!try_attach(node)) tree.detached.push_back(node);
  }
  return tree;
}

struct UeAssociation {
  std::vector<int> serving;  // gNB id, kNone when in outage
  std::vector<int> outage;

  bool associated(int ue) const { return serving[static_cast<std::size_t>(ue)] != kNone; }
};

// Strongest-SNR association over attached gNBs; ties to the lowest gNB id.
inline UeAssociation associate_ues(const Scenario& sc, const IabTree& tree, const LinkTable& links,
                                   double min_snr_db) {
  UeAssociation a;
  a.serving.assign(sc.ues.size(), kNone);
  for (const auto& ue : sc.ues) {
    int best = kNone;
    double best_snr = 0.0;
    for (std::size_t g = 0; g < tree.size(); ++g) {
      if (!tree.attached(static_cast<int>(g))) continue;
      const double snr = links.ue_link(ue.id, static_cast<int>(g)).snr_db;
      if (snr < min_snr_db) continue;
      if (best == kNone || snr > best_snr) {
        best = static_cast<int>(g);
        best_snr = snr;
      }
    }
    a.serving[static_cast<std::size_t>(ue.id)] = best;
    if (best == kNone) a.outage.push_back(ue.id);
  }
  return a;
}

// UEs served by each gNB's subtree (own UEs plus all descendants' UEs).
inline std::vector<int> downstream_ue_counts(const IabTree& tree, const UeAssociation& assoc) {
  std::vector<int> counts(tree.size(), 0);
  for (int g : assoc.serving) {
    if (g == kNone) continue;
    for (int cur = g; cur != kNone; cur = tree.parent[static_cast<std::size_t>(cur)]) {
      ++counts[static_cast<std::size_t>(cur)];
    }
  }
  return counts;
}

inline int downstream_ue_count(const IabTree& tree, const UeAssociation& assoc, int gnb) {
  return downstream_ue_counts(tree, assoc)[static_cast<std::size_t>(gnb)];
}

/// Headline measurement cell. All-wired: gNB 0. IAB: the first IAB-node to
/// attach. Only-donors: the first deployed donor, which is id 0 after the
/// only-donors renumbering. Empty when the IAB draw attached no node; a draw
/// with no IAB-nodes at all (p = 1) is all-wired and uses gNB 0.
inline std::optional<int> select_target_cell(const Scenario& sc, const IabTree& tree,
                                             DeploymentKind kind) {
  if (sc.gnbs.empty()) return std::nullopt;
  switch (kind) {
    case DeploymentKind::kAllWired:
      return 0;
    case DeploymentKind::kIab:
      if (sc.donor_count() == static_cast<int>(sc.gnbs.size())) return 0;
      if (tree.attach_order.empty()) return std::nullopt;
      return tree.attach_order.front();
    case DeploymentKind::kOnlyDonors:
      for (const auto& g : sc.gnbs)
        if (g.is_donor) return g.id;
      return std::nullopt;
  }
  return std::nullopt;
}

// Edge list: child parent hop snr_db.
inline void dump_tree(const IabTree& tree, std::ostream& os) {
  os << "# child parent hop snr_db\n";
  os << std::fixed << std::setprecision(3);
  for (std::size_t g = 0; g < tree.size(); ++g) {
    if (tree.parent[g] == kNone) continue;
    os << g << ' ' << tree.parent[g] << ' ' << tree.hop_count[g] << ' ' << tree.parent_snr_db[g]
       << '\n';
  }
  os.unsetf(std::ios::floatfield);
}

}  // namespace iabsim
