#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "iabsim/engine.hpp"
#include "iabsim/topology.hpp"

namespace iabsim {

inline constexpr std::int32_t kDefaultPacketBytes = 1400;
inline constexpr std::int64_t kDefaultQueueCapacityBytes = 5'000'000;

struct Packet {
  std::uint64_t id{0};
  std::int32_t flow_id{0};
  std::int32_t size_bytes{kDefaultPacketBytes};
  SimTime created_at{};
  SimTime donor_ingress_at{};
  SimTime delivered_at{-1};
  std::int32_t hop{0};  // index of the bearer currently holding the packet along its path

  bool delivered() const { return delivered_at.us >= 0; }
};

enum class EnqueueResult { kAccepted, kDropped };

// Drop-tail byte-limited FIFO. The head packet may be partially transmitted;
// its bytes stay queued until the last byte leaves.
class BearerQueue {
 public:
  explicit BearerQueue(std::int64_t capacity_bytes = kDefaultQueueCapacityBytes)
      : capacity_(capacity_bytes) {}

  std::int64_t bytes_queued() const { return bytes_; }
  std::int64_t capacity_bytes() const { return capacity_; }
  std::int64_t free_bytes() const { return capacity_ - bytes_; }
  std::int64_t head_offset() const { return head_offset_; }
  std::size_t packets() const { return fifo_.size(); }
  bool empty() const { return fifo_.empty(); }
  const Packet& front() const { return fifo_.front(); }
  const std::deque<Packet>& contents() const { return fifo_; }

  bool fits(std::int32_t size) const { return bytes_ + size <= capacity_; }

  EnqueueResult enqueue(const Packet& p) {
    if (!fits(p.size_bytes)) return EnqueueResult::kDropped;
    fifo_.push_back(p);
    bytes_ += p.size_bytes;
    return EnqueueResult::kAccepted;
  }

  /// Sends up to budget bytes as a byte stream. on_complete(packet, bytes_sent)
  /// fires for every packet whose last byte went out, with bytes_sent counting
  /// from the start of this call. admit(packet) may veto the head packet,
  /// which stalls the queue for the rest of the call. Returns bytes sent.
  template <class OnComplete, class Admit>
  std::int64_t serve(std::int64_t budget, OnComplete&& on_complete, Admit&& admit) {
    std::int64_t sent = 0;
    while (!fifo_.empty() && sent < budget) {
      Packet& head = fifo_.front();
      if (!admit(head)) break;
      const std::int64_t remaining = head.size_bytes - head_offset_;
      const std::int64_t take = std::min(remaining, budget - sent);
      sent += take;
      head_offset_ += take;
      if (head_offset_ < head.size_bytes) break;
      Packet done = head;
      fifo_.pop_front();
      bytes_ -= done.size_bytes;
      head_offset_ = 0;
      on_complete(done, sent);
    }
    return sent;
  }

 private:
  std::deque<Packet> fifo_;
  std::int64_t capacity_;
  std::int64_t bytes_{0};
  std::int64_t head_offset_{0};
};

// Completed packets from one active slot on a bearer.
inline std::vector<Packet> serve_slot(BearerQueue& q, SimTime slot_duration, double link_capacity_bps) {
  std::vector<Packet> done;
  const auto budget = static_cast<std::int64_t>(link_capacity_bps * slot_duration.seconds() / 8.0);
  q.serve(budget, [&](const Packet& p, std::int64_t) { done.push_back(p); },
          [](const Packet&) { return true; });
  return done;
}

class RoutingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Downlink tree routing. For each gNB, maps every UE in its subtree to the
/// bearer leaving that gNB toward the UE (a backhaul bearer to the child on
/// the path, or the UE's own access bearer at the serving gNB).
class RouteTable {
 public:
  RouteTable() = default;

  // access_bearer[ue] and backhaul_bearer[child gNB] give bearer ids; kNone
  // where absent.
  RouteTable(const IabTree& tree, const UeAssociation& assoc, const std::vector<int>& access_bearer,
             const std::vector<int>& backhaul_bearer)
      : next_(tree.size()), paths_(assoc.serving.size()) {
    for (std::size_t ue = 0; ue < assoc.serving.size(); ++ue) {
      const int serving = assoc.serving[ue];
      if (serving == kNone || access_bearer[ue] == kNone) continue;
      std::vector<int> rev;
      const int ab = access_bearer[ue];
      next_[static_cast<std::size_t>(serving)][static_cast<int>(ue)] = ab;
      rev.push_back(ab);
      for (int child = serving; tree.parent[static_cast<std::size_t>(child)] != kNone;
           child = tree.parent[static_cast<std::size_t>(child)]) {
        const int par = tree.parent[static_cast<std::size_t>(child)];
        const int bb = backhaul_bearer[static_cast<std::size_t>(child)];
        next_[static_cast<std::size_t>(par)][static_cast<int>(ue)] = bb;
        rev.push_back(bb);
      }
      paths_[ue].assign(rev.rbegin(), rev.rend());
    }
  }

  int route_next_hop(int at_gnb, int dst_ue) const {
    const auto& m = next_.at(static_cast<std::size_t>(at_gnb));
    const auto it = m.find(dst_ue);
    if (it == m.end()) {
      throw RoutingError("no route from gNB " + std::to_string(at_gnb) + " to UE " +
                         std::to_string(dst_ue));
    }
    return it->second;
  }

  // Bearers from the donor to the UE, access bearer last.
  const std::vector<int>& path(int ue) const { return paths_[static_cast<std::size_t>(ue)]; }

 private:
  std::vector<std::unordered_map<int, int>> next_;
  std::vector<std::vector<int>> paths_;
};

}  // namespace iabsim
