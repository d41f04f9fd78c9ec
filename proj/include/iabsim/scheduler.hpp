#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "iabsim/engine.hpp"

namespace iabsim {

inline constexpr SimTime kFrameDuration = SimTime::from_ms(10);
inline constexpr SimTime kSlotDuration = SimTime{125};
inline constexpr int kSlotsPerFrame = static_cast<int>(kFrameDuration.us / kSlotDuration.us);

enum class BearerKind { kAccess, kBackhaul };

// One directed radio link in a donor tree. Endpoints live in a shared node-id
// space (gNBs and UEs must not collide); rx is a UE for access bearers and the
// child IAB-node for backhaul bearers.
struct Bearer {
  int id{0};
  int tx_node{0};
  int rx_node{0};
  BearerKind kind{BearerKind::kAccess};
  int weight{1};
  std::int64_t bytes_per_slot{0};
};

inline std::int64_t bytes_per_slot(double capacity_bps, SimTime slot = kSlotDuration) {
  return static_cast<std::int64_t>(capacity_bps * slot.seconds() / 8.0);
}

struct FrameAllocation {
  std::vector<std::vector<int>> slots;  // bearer indices active per slot
  SimTime frame_duration{kFrameDuration};
  SimTime slot_duration{kSlotDuration};

  int slots_of(int bearer) const {
    int n = 0;
    for (const auto& s : slots) n += static_cast<int>(std::count(s.begin(), s.end(), bearer));
    return n;
  }
};

struct HalfDuplexViolation {
  int slot{0};
  int node{0};
};

// A node may take part in at most one active link per slot.
inline std::vector<HalfDuplexViolation> validate_half_duplex(const FrameAllocation& frame,
                                                             std::span<const Bearer> bearers) {
  std::vector<HalfDuplexViolation> out;
  std::unordered_map<int, int> uses;
  for (std::size_t s = 0; s < frame.slots.size(); ++s) {
    uses.clear();
    for (int b : frame.slots[s]) {
      const auto& br = bearers[static_cast<std::size_t>(b)];
      ++uses[br.tx_node];
      ++uses[br.rx_node];
    }
    std::vector<int> bad;
    for (const auto& [node, n] : uses)
      if (n > 1) bad.push_back(node);
    std::sort(bad.begin(), bad.end());
    for (int node : bad) out.push_back({static_cast<int>(s), node});
  }
  return out;
}

/// Backhaul-aware weighted round robin over one donor tree.
///
/// Every bearer carries a deficit. Within a slot, backlogged bearers are
/// visited in descending deficit (ties by index) and packed greedily whenever
/// both endpoints are still idle, giving a maximal conflict-free set. A served
/// bearer pays one unit. After the pass each backlogged bearer earns
/// weight / W, where W sums the weights of the backlogged bearers touching
/// either of its endpoints (itself included). The earnings at any node then
/// add up to at most one slot per slot, so a heavy backhaul bearer cannot
/// outgrow the node it shares with its relay's access bearers.
/// A bearer with nothing queued at frame start has its deficit cleared.
///
/// Per frame each bearer also has a share, the frame length times its
/// weight / W when it starts contending. Bearers below the floor of their
/// share go first, then those below the ceiling, then the rest, so a
/// saturated node splits every frame within one slot of the shares while
/// the carried deficits decide who gets the rounding slot.
class FrameScheduler {
 public:
  FrameScheduler() = default;

  explicit FrameScheduler(std::vector<Bearer> bearers) : bearers_(std::move(bearers)) {
    deficit_.assign(bearers_.size(), 0.0);
    std::unordered_map<int, int> compact;
    tx_.reserve(bearers_.size());
    rx_.reserve(bearers_.size());
    auto local = [&](int node) {
      auto [it, inserted] = compact.try_emplace(node, static_cast<int>(compact.size()));
      return it->second;
    };
    for (const auto& b : bearers_) {
      tx_.push_back(local(b.tx_node));
      rx_.push_back(local(b.rx_node));
    }
    busy_.assign(compact.size(), -1);
    node_weight_.assign(compact.size(), 0.0);
  }

  std::span<const Bearer> bearers() const { return bearers_; }
  std::span<const double> deficits() const { return deficit_; }
  Bearer& bearer(std::size_t i) { return bearers_[i]; }

  FrameAllocation build_frame(std::span<const std::int64_t> backlog_bytes,
                              int n_slots = kSlotsPerFrame) {
    return build_frame(backlog_bytes, n_slots, [](int, std::int64_t, auto&&) {});
  }

  /// As above, with in-frame pipelining: forward(b, bytes, credit) is told
  /// how many bytes bearer b sends in a slot and calls credit(next, n) for
  /// every n bytes that reach bearer next. Credited bytes become schedulable
  /// from the following slot.
  template <class Forward>
  FrameAllocation build_frame(std::span<const std::int64_t> backlog_bytes, int n_slots, Forward&& forward) {
    FrameAllocation frame;
    frame.slots.resize(static_cast<std::size_t>(n_slots));
    const std::size_t nb = bearers_.size();
    notional_.assign(backlog_bytes.begin(), backlog_bytes.end());
    contenders_.clear();
    contending_.assign(nb, 0);
    served_.assign(nb, 0);
    floor_.assign(nb, 0);
    ceil_.assign(nb, 0);
    std::fill(node_weight_.begin(), node_weight_.end(), 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
      if (notional_[b] > 0) {
        contenders_.push_back(static_cast<int>(b));
        contending_[b] = 1;
        node_weight_[static_cast<std::size_t>(tx_[b])] += bearers_[b].weight;
        node_weight_[static_cast<std::size_t>(rx_[b])] += bearers_[b].weight;
      } else {
        deficit_[b] = 0.0;
      }
    }
    for (int b : contenders_) {
      const auto bi = static_cast<std::size_t>(b);
      const double w = bearers_[bi].weight;
      set_share(bi, n_slots * w / (node_weight_[static_cast<std::size_t>(tx_[bi])] +
                                   node_weight_[static_cast<std::size_t>(rx_[bi])] - w));
    }
    for (int s = 0; s < n_slots; ++s) {
      if (contenders_.empty()) break;
      std::sort(contenders_.begin(), contenders_.end(), [this](int a, int b) {
        const int ta = tier(static_cast<std::size_t>(a));
        const int tb = tier(static_cast<std::size_t>(b));
        if (ta != tb) return ta < tb;
        const double da = deficit_[static_cast<std::size_t>(a)];
        const double db = deficit_[static_cast<std::size_t>(b)];
        if (da != db) return da > db;
        return a < b;
      });
      auto& slot = frame.slots[static_cast<std::size_t>(s)];
      std::fill(node_weight_.begin(), node_weight_.end(), 0.0);
      for (int b : contenders_) {
        const auto bi = static_cast<std::size_t>(b);
        node_weight_[static_cast<std::size_t>(tx_[bi])] += bearers_[bi].weight;
        node_weight_[static_cast<std::size_t>(rx_[bi])] += bearers_[bi].weight;
        const int t = tx_[bi];
        const int r = rx_[bi];
        if (busy_[static_cast<std::size_t>(t)] == stamp_ || busy_[static_cast<std::size_t>(r)] == stamp_) continue;
        busy_[static_cast<std::size_t>(t)] = stamp_;
        busy_[static_cast<std::size_t>(r)] = stamp_;
        slot.push_back(b);
      }
      ++stamp_;
      for (int b : contenders_) {
        const auto bi = static_cast<std::size_t>(b);
        const double w = bearers_[bi].weight;
        const double local = node_weight_[static_cast<std::size_t>(tx_[bi])] +
                             node_weight_[static_cast<std::size_t>(rx_[bi])] - w;
        deficit_[bi] += w / local;
      }
      auto credit = [this, left = n_slots - s - 1](int next, std::int64_t bytes) {
        const auto ni = static_cast<std::size_t>(next);
        notional_[ni] += bytes;
        if (!contending_[ni] && notional_[ni] > 0) {
          contending_[ni] = 1;
          contenders_.push_back(next);
          const double w = bearers_[ni].weight;
          set_share(ni, left * w / (node_weight_[static_cast<std::size_t>(tx_[ni])] +
                                    node_weight_[static_cast<std::size_t>(rx_[ni])] + w));
        }
      };
      for (int b : slot) {
        const auto bi = static_cast<std::size_t>(b);
        deficit_[bi] -= 1.0;
        ++served_[bi];
        const std::int64_t sent = std::min(notional_[bi], bearers_[bi].bytes_per_slot);
        notional_[bi] = std::max<std::int64_t>(0, notional_[bi] - std::max<std::int64_t>(bearers_[bi].bytes_per_slot, 1));
        if (sent > 0) forward(b, sent, credit);
      }
      std::sort(slot.begin(), slot.end());
      std::erase_if(contenders_, [this](int b) {
        const auto bi = static_cast<std::size_t>(b);
        if (notional_[bi] > 0) return false;
        contending_[bi] = 0;
        return true;
      });
    }
    return frame;
  }

 private:
  void set_share(std::size_t b, double share) {
    floor_[b] = static_cast<int>(std::floor(share + 1e-9));
    ceil_[b] = static_cast<int>(std::ceil(share - 1e-9));
  }

  int tier(std::size_t b) const {
    if (served_[b] < floor_[b]) return 0;
    return served_[b] < ceil_[b] ? 1 : 2;
  }

  std::vector<Bearer> bearers_;
  std::vector<double> deficit_;
  std::vector<int> tx_;
  std::vector<int> rx_;
  std::vector<int> busy_;
  std::vector<double> node_weight_;
  int stamp_{0};
  std::vector<std::int64_t> notional_;
  std::vector<int> contenders_;
  std::vector<char> contending_;
  std::vector<int> served_;
  std::vector<int> floor_;
  std::vector<int> ceil_;
};

inline void dump_frame(const FrameAllocation& frame, std::span<const Bearer> bearers, std::ostream& os,
                       const std::string& prefix = {}) {
  for (std::size_t s = 0; s < frame.slots.size(); ++s) {
    if (frame.slots[s].empty()) continue;
    os << prefix << "slot " << s << ':';
    for (int b : frame.slots[s]) {
      const auto& br = bearers[static_cast<std::size_t>(b)];
      os << ' ' << br.tx_node << "->" << br.rx_node << (br.kind == BearerKind::kBackhaul ? "(bh)" : "");
    }
    os << '\n';
  }
}

}  // namespace iabsim
