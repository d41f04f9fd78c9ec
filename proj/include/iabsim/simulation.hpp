#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "iabsim/channel.hpp"
#include "iabsim/deployment.hpp"
#include "iabsim/engine.hpp"
#include "iabsim/forwarding.hpp"
#include "iabsim/metrics.hpp"
#include "iabsim/rng.hpp"
#include "iabsim/scheduler.hpp"
#include "iabsim/topology.hpp"
#include "iabsim/traffic.hpp"

namespace iabsim {

// A formed network ready to simulate.
struct Network {
  DeploymentKind kind{DeploymentKind::kIab};
  PolicyConfig policy;
  Scenario scenario;
  LinkTable links;
  IabTree tree;
  UeAssociation assoc;
  std::optional<int> target_cell;
};

inline Network build_network(const Scenario& full, DeploymentKind kind, const RadioConfig& radio,
                             const PolicyConfig& policy) {
  Network net;
  net.kind = kind;
  net.policy = policy;
  net.scenario = derive_deployment(full, kind);
  net.links = LinkTable(net.scenario, radio);
  net.tree = form_topology(net.scenario, net.links, policy);
  net.assoc = associate_ues(net.scenario, net.tree, net.links, policy.min_snr_db);
  net.target_cell = select_target_cell(net.scenario, net.tree, kind);
  return net;
}

struct SimConfig {
  SimTime duration{SimTime::from_seconds(10.0)};
  SimTime warmup{SimTime::from_seconds(1.0)};
  TrafficKind traffic{TrafficKind::kCbr};
  double cbr_rate_bps{kDefaultCbrRateBps};
  std::int32_t packet_bytes{kDefaultPacketBytes};
  std::int64_t queue_capacity_bytes{kDefaultQueueCapacityBytes};
  std::int64_t window_bytes{kDefaultWindowBytes};
  DashParams dash;
  HttpParams http;
  SimTime core_delay{SimTime::from_ms(10)};
  SimTime request_delay{SimTime::from_ms(2)};
  SimTime app_start_spread{SimTime::from_seconds(1.0)};
  // Simulate only the donor tree holding the target cell. Trees share no
  // radio resources, so target-cell results are unchanged.
  bool target_tree_only{false};
  bool check_invariants{false};
  std::ostream* frame_trace{nullptr};
  std::ostream* packet_trace{nullptr};
};

struct InvariantReport {
  std::uint64_t half_duplex_violations{0};
  std::uint64_t frames_checked{0};
  std::uint64_t windowed_drops{0};
  bool conservation_ok{true};
  std::uint64_t latency_bound_violations{0};
  std::uint64_t fifo_violations{0};
};

class Simulation {
 public:
  Simulation(const Network& net, SimConfig cfg, std::uint64_t seed)
      : net_(net), cfg_(std::move(cfg)), seed_(seed) {
    build();
  }

  RunMetrics run() {
    run_until(cfg_.duration);
    return collect();
  }

  const InvariantReport& invariants() const { return report_; }
  const EventEngine& engine() const { return engine_; }
  std::size_t bearer_count() const { return bearers_.size(); }

  struct FlowCounters {
    std::uint64_t generated{0};
    std::uint64_t delivered{0};
    std::uint64_t dropped{0};
  };
  const FlowCounters& counters(int ue) const { return flows_[static_cast<std::size_t>(ue)].counters; }

  // Packets of a flow currently held anywhere in the network (core pipe,
  // donor admission hold, or a bearer queue).
  std::vector<std::uint64_t> in_flight() const {
    std::vector<std::uint64_t> n(flows_.size(), 0);
    auto count = [&n](const Packet& p) { ++n[static_cast<std::size_t>(p.flow_id)]; };
    std::for_each(core_pipe_.begin(), core_pipe_.end(), count);
    for (const auto& b : bearers_) {
      std::for_each(b.hold.begin(), b.hold.end(), count);
      std::for_each(b.queue.contents().begin(), b.queue.contents().end(), count);
    }
    return n;
  }

  // generated == delivered + dropped + in flight, for every flow.
  bool conservation_holds() const {
    const auto held = in_flight();
    for (std::size_t ue = 0; ue < flows_.size(); ++ue) {
      const auto& c = flows_[ue].counters;
      if (c.generated != c.delivered + c.dropped + held[ue]) return false;
    }
    return true;
  }

  // Advances the simulation without collecting; for invariant probes.
  void run_until(SimTime t) {
    if (!started_) {
      engine_.schedule(SimTime{0}, [this] { on_slot(); });
      start_apps();
      started_ = true;
    }
    engine_.run_until(t);
  }

 private:
  struct SimBearer {
    Bearer spec;
    int tree{0};
    int local{0};
    double capacity_bps{0.0};
    BearerQueue queue;
    std::deque<Packet> hold;  // windowed packets waiting for room at the donor
    // Frame-planning cursor: queued packets first, then packets the plan
    // expects to arrive from upstream during the frame.
    std::size_t plan_idx{0};
    std::int64_t plan_offset{0};
    std::vector<Packet> plan_arrivals;
    std::size_t plan_arrival_idx{0};
  };

  struct TreeState {
    int donor{0};
    std::vector<int> bearers;  // global ids, local index order
    FrameScheduler scheduler;
    FrameAllocation frame;
  };

  struct DashState {
    std::unique_ptr<DashClient> client;
    double representation{0.0};
    SimTime requested_at{};
  };

  struct HttpState {
    SimTime first_request_at{};
    int embedded_left{0};
    bool main_done{false};
    WebPage page;
  };

  struct FlowState {
    bool simulated{false};
    bool windowed{false};
    std::vector<int> path;
    FlowCounters counters;
    std::int64_t window_bytes_delivered{0};
    std::int64_t drops{0};
    CbrFlow cbr;
    std::unique_ptr<WindowedFlow> transport;
    std::int64_t pending_ack{0};
    SimTime last_delivery{};
    std::uint64_t last_delivered_id{0};
    bool any_delivered{false};
    DashState dash;
    HttpState http;
    std::vector<double> page_times;
    Rng rng;
    std::uint64_t next_object{0};
  };

  int n_gnb() const { return static_cast<int>(net_.scenario.gnbs.size()); }
  int ue_node(int ue) const { return n_gnb() + ue; }

  void build() {
    const auto& tree = net_.tree;
    const auto& assoc = net_.assoc;
    const int n_ue = static_cast<int>(net_.scenario.ues.size());
    const auto downstream = downstream_ue_counts(tree, assoc);

    std::vector<int> roots;
    if (cfg_.target_tree_only) {
      if (net_.target_cell) roots.push_back(tree.root_of(*net_.target_cell));
    } else {
      roots = tree.donors();
    }

    std::vector<std::vector<int>> ues_at(tree.size());
    for (int ue = 0; ue < n_ue; ++ue) {
      const int g = assoc.serving[static_cast<std::size_t>(ue)];
      if (g != kNone) ues_at[static_cast<std::size_t>(g)].push_back(ue);
    }

    std::vector<int> access_bearer(static_cast<std::size_t>(n_ue), kNone);
    std::vector<int> backhaul_bearer(tree.size(), kNone);
    for (int root : roots) {
      TreeState ts;
      ts.donor = root;
      std::vector<Bearer> specs;
      std::deque<int> bfs{root};
      while (!bfs.empty()) {
        const int g = bfs.front();
        bfs.pop_front();
        for (int child : tree.children[static_cast<std::size_t>(g)]) {
          const auto& link = net_.links.gnb_link(g, child);
          const int id = add_bearer(g, child, BearerKind::kBackhaul,
                                    std::max(1, downstream[static_cast<std::size_t>(child)]),
                                    link.capacity_bps, static_cast<int>(trees_.size()), ts, specs);
          backhaul_bearer[static_cast<std::size_t>(child)] = id;
          bfs.push_back(child);
        }
        for (int ue : ues_at[static_cast<std::size_t>(g)]) {
          const auto& link = net_.links.ue_link(ue, g);
          const int id = add_bearer(g, ue_node(ue), BearerKind::kAccess, 1, link.capacity_bps,
                                    static_cast<int>(trees_.size()), ts, specs);
          access_bearer[static_cast<std::size_t>(ue)] = id;
        }
      }
      ts.scheduler = FrameScheduler(std::move(specs));
      trees_.push_back(std::move(ts));
    }
    routes_ = RouteTable(tree, assoc, access_bearer, backhaul_bearer);

    flows_.resize(static_cast<std::size_t>(n_ue));
    for (int ue = 0; ue < n_ue; ++ue) {
      auto& f = flows_[static_cast<std::size_t>(ue)];
      f.rng = make_rng(seed_, Stream::kTraffic, static_cast<std::uint64_t>(ue));
      if (access_bearer[static_cast<std::size_t>(ue)] == kNone) continue;
      f.simulated = true;
      f.path = routes_.path(ue);
      f.windowed = cfg_.traffic != TrafficKind::kCbr;
      if (cfg_.traffic == TrafficKind::kCbr) {
        f.cbr.rate_bps = cfg_.cbr_rate_bps;
        f.cbr.packet_bytes = cfg_.packet_bytes;
        f.cbr.ue_id = ue;
        cbr_flows_.push_back(ue);
      } else {
        f.transport = std::make_unique<WindowedFlow>(cfg_.window_bytes, cfg_.packet_bytes);
      }
    }
  }

  int add_bearer(int tx, int rx, BearerKind kind, int weight, double capacity, int tree_idx,
                 TreeState& ts, std::vector<Bearer>& specs) {
    const int id = static_cast<int>(bearers_.size());
    SimBearer sb;
    sb.tree = tree_idx;
    sb.local = static_cast<int>(specs.size());
    sb.capacity_bps = capacity;
    sb.queue = BearerQueue(cfg_.queue_capacity_bytes);
    sb.spec = Bearer{static_cast<int>(specs.size()), tx, rx, kind, weight, bytes_per_slot(capacity)};
    specs.push_back(sb.spec);
    ts.bearers.push_back(id);
    bearers_.push_back(std::move(sb));
    return id;
  }

  // --- slot clock -----------------------------------------------------------

  void on_slot() {
    const SimTime now = engine_.now();
    const int slot_in_frame = static_cast<int>(slot_counter_ % kSlotsPerFrame);
    if (slot_in_frame == 0) start_frame(now);
    for (auto& ts : trees_) {
      if (ts.frame.slots.empty()) continue;
      for (int local : ts.frame.slots[static_cast<std::size_t>(slot_in_frame)]) {
        serve_bearer(ts.bearers[static_cast<std::size_t>(local)], now);
      }
    }
    flush_acks();
    ++slot_counter_;
    const SimTime next = now + kSlotDuration;
    if (next < cfg_.duration) engine_.schedule(next, [this] { on_slot(); });
  }

  void start_frame(SimTime now) {
    ingest(now);
    std::vector<std::int64_t> backlog;
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      auto& ts = trees_[t];
      backlog.assign(ts.bearers.size(), 0);
      bool any = false;
      for (std::size_t i = 0; i < ts.bearers.size(); ++i) {
        backlog[i] = bearers_[static_cast<std::size_t>(ts.bearers[i])].queue.bytes_queued();
        any = any || backlog[i] > 0;
      }
      if (!any) {
        ts.frame.slots.clear();
        // Clears the deficits the same way an all-idle frame would.
        ts.scheduler.build_frame(backlog, 0);
        continue;
      }
      for (int id : ts.bearers) {
        auto& b = bearers_[static_cast<std::size_t>(id)];
        b.plan_idx = 0;
        b.plan_offset = b.queue.head_offset();
        b.plan_arrivals.clear();
        b.plan_arrival_idx = 0;
      }
      ts.frame = ts.scheduler.build_frame(backlog, kSlotsPerFrame,
                                          [this, &ts](int local, std::int64_t bytes, auto&& credit) {
                                            plan_forward(ts.bearers[static_cast<std::size_t>(local)], bytes, credit);
                                          });
      if (cfg_.check_invariants) {
        ++report_.frames_checked;
        report_.half_duplex_violations += validate_half_duplex(ts.frame, ts.scheduler.bearers()).size();
      }
      if (cfg_.frame_trace) {
        *cfg_.frame_trace << "# frame " << slot_counter_ / kSlotsPerFrame << " donor " << ts.donor << '\n';
        dump_frame(ts.frame, ts.scheduler.bearers(), *cfg_.frame_trace);
      }
    }
  }

  // Walks a backhaul bearer's planning cursor over `bytes` and credits the
  // next-hop bearers with the packets that would complete.
  template <class Credit>
  void plan_forward(int id, std::int64_t bytes, Credit& credit) {
    auto& b = bearers_[static_cast<std::size_t>(id)];
    if (b.spec.kind != BearerKind::kBackhaul) return;
    const auto& fifo = b.queue.contents();
    while (bytes > 0) {
      const Packet* p = nullptr;
      if (b.plan_idx < fifo.size()) {
        p = &fifo[b.plan_idx];
      } else if (b.plan_arrival_idx < b.plan_arrivals.size()) {
        p = &b.plan_arrivals[b.plan_arrival_idx];
      } else {
        return;
      }
      const std::int64_t take = std::min<std::int64_t>(p->size_bytes - b.plan_offset, bytes);
      bytes -= take;
      b.plan_offset += take;
      if (b.plan_offset < p->size_bytes) return;
      b.plan_offset = 0;
      Packet fwd = *p;
      if (b.plan_idx < fifo.size()) {
        ++b.plan_idx;
      } else {
        ++b.plan_arrival_idx;
      }
      const auto& path = flows_[static_cast<std::size_t>(fwd.flow_id)].path;
      ++fwd.hop;
      const int next = path[static_cast<std::size_t>(fwd.hop)];
      auto& nb = bearers_[static_cast<std::size_t>(next)];
      if (nb.spec.kind == BearerKind::kBackhaul) nb.plan_arrivals.push_back(fwd);
      credit(nb.local, fwd.size_bytes);
    }
  }

  // Moves everything that has reached the donors by `now` into the first-hop
  // queues. Arrivals between frame starts wait here for the next snapshot.
  void ingest(SimTime now) {
    for (auto& b : bearers_) {
      while (!b.hold.empty() && b.queue.fits(b.hold.front().size_bytes)) {
        b.queue.enqueue(b.hold.front());
        b.hold.pop_front();
      }
    }
    while (!core_pipe_.empty() && core_pipe_.front().donor_ingress_at <= now) {
      Packet p = core_pipe_.front();
      core_pipe_.pop_front();
      auto& f = flows_[static_cast<std::size_t>(p.flow_id)];
      auto& b = bearers_[static_cast<std::size_t>(f.path.front())];
      if (b.hold.empty() && b.queue.fits(p.size_bytes)) {
        b.queue.enqueue(p);
      } else {
        b.hold.push_back(p);
      }
    }
    if (cbr_flows_.empty()) return;
    // CBR packets are produced lazily: all flows share rate and phase, so
    // round-robin over flows per packet index is arrival order.
    const SimTime created_cutoff = now - cfg_.core_delay;
    cbr_due_.resize(cbr_flows_.size());
    std::int64_t rounds = 0;
    for (std::size_t i = 0; i < cbr_flows_.size(); ++i) {
      cbr_due_[i] = flows_[static_cast<std::size_t>(cbr_flows_[i])].cbr.due_by(created_cutoff);
      rounds = std::max(rounds, cbr_due_[i]);
    }
    for (std::int64_t k = 0; k < rounds; ++k) {
      for (std::size_t i = 0; i < cbr_flows_.size(); ++i) {
        if (cbr_due_[i] <= k) continue;
        const int ue = cbr_flows_[i];
        auto& f = flows_[static_cast<std::size_t>(ue)];
        Packet p;
        p.id = next_packet_id_++;
        p.flow_id = ue;
        p.size_bytes = f.cbr.packet_bytes;
        p.created_at = f.cbr.next_arrival();
        p.donor_ingress_at = p.created_at + cfg_.core_delay;
        ++f.cbr.next_index;
        ++f.counters.generated;
        auto& b = bearers_[static_cast<std::size_t>(f.path.front())];
        if (b.queue.enqueue(p) == EnqueueResult::kDropped) record_drop(f);
      }
    }
  }

  void record_drop(FlowState& f) {
    ++f.counters.dropped;
    ++f.drops;
    if (f.windowed) ++report_.windowed_drops;
  }

  void serve_bearer(int id, SimTime slot_start) {
    auto& b = bearers_[static_cast<std::size_t>(id)];
    if (b.queue.empty()) return;
    const double cap = b.capacity_bps;
    const bool backhaul = b.spec.kind == BearerKind::kBackhaul;
    auto on_complete = [&](const Packet& done, std::int64_t sent) {
      const auto tx_us = static_cast<std::int64_t>(std::ceil(static_cast<double>(sent) * 8e6 / cap));
      const SimTime at = slot_start + SimTime{std::min<std::int64_t>(tx_us, kSlotDuration.us)};
      if (!backhaul) {
        deliver(done, at);
        return;
      }
      auto& f = flows_[static_cast<std::size_t>(done.flow_id)];
      Packet fwd = done;
      ++fwd.hop;
      auto& next = bearers_[static_cast<std::size_t>(f.path[static_cast<std::size_t>(fwd.hop)])];
      if (next.queue.enqueue(fwd) == EnqueueResult::kDropped) record_drop(f);
    };
    auto admit = [&](const Packet& head) {
      if (!backhaul) return true;
      const auto& f = flows_[static_cast<std::size_t>(head.flow_id)];
      if (!f.windowed) return true;
      // Hop-by-hop flow control: reliable flows wait instead of overflowing.
      const auto& next = bearers_[static_cast<std::size_t>(f.path[static_cast<std::size_t>(head.hop + 1)])];
      return next.queue.fits(head.size_bytes);
    };
    b.queue.serve(b.spec.bytes_per_slot, on_complete, admit);
  }

  void deliver(Packet p, SimTime at) {
    p.delivered_at = at;
    auto& f = flows_[static_cast<std::size_t>(p.flow_id)];
    ++f.counters.delivered;
    if (cfg_.check_invariants) {
      if (f.any_delivered && p.id < f.last_delivered_id) ++report_.fifo_violations;
      double bound_us = 0.0;
      for (int bid : f.path) {
        bound_us += p.size_bytes * 8e6 / bearers_[static_cast<std::size_t>(bid)].capacity_bps;
      }
      if (static_cast<double>((p.delivered_at - p.donor_ingress_at).us) + 1.0 < bound_us)
        ++report_.latency_bound_violations;
    }
    f.any_delivered = true;
    f.last_delivered_id = p.id;
    if (at >= cfg_.warmup) {
      f.window_bytes_delivered += p.size_bytes;
      const std::int64_t lat = (p.delivered_at - p.donor_ingress_at).us;
      network_latency_.add(lat);
      if (net_.target_cell && net_.assoc.serving[static_cast<std::size_t>(p.flow_id)] == *net_.target_cell) {
        target_latency_.add(lat);
      }
    }
    if (cfg_.packet_trace) {
      *cfg_.packet_trace << p.flow_id << ',' << p.created_at.us << ',' << p.donor_ingress_at.us << ','
                         << p.delivered_at.us << ',' << f.path.size() << '\n';
    }
    if (!f.windowed) return;
    for (int obj : f.transport->on_delivered(p.size_bytes)) {
      const int ue = p.flow_id;
      engine_.schedule(at, [this, ue, obj, at] { on_object_complete(ue, obj, at); });
    }
    if (f.pending_ack == 0) ack_touched_.push_back(p.flow_id);
    f.pending_ack += p.size_bytes;
    f.last_delivery = std::max(f.last_delivery, at);
  }

  // One ack event per flow per slot: returns the delivered bytes to the
  // sender window after the uplink and core delays.
  void flush_acks() {
    for (int ue : ack_touched_) {
      auto& f = flows_[static_cast<std::size_t>(ue)];
      const std::int64_t bytes = f.pending_ack;
      f.pending_ack = 0;
      const SimTime at = f.last_delivery + cfg_.request_delay + cfg_.core_delay;
      engine_.schedule(at, [this, ue, bytes] {
        auto& fl = flows_[static_cast<std::size_t>(ue)];
        fl.transport->on_ack(bytes);
        pump(ue);
      });
    }
    ack_touched_.clear();
  }

  // Releases whatever the window admits into the core network.
  void pump(int ue) {
    auto& f = flows_[static_cast<std::size_t>(ue)];
    const SimTime now = engine_.now();
    while (const std::int32_t size = f.transport->take_packet()) {
      Packet p;
      p.id = next_packet_id_++;
      p.flow_id = ue;
      p.size_bytes = size;
      p.created_at = now;
      p.donor_ingress_at = now + cfg_.core_delay;
      ++f.counters.generated;
      core_pipe_.push_back(p);
    }
  }

  // --- applications ---------------------------------------------------------

  void start_apps() {
    if (cfg_.traffic == TrafficKind::kCbr) return;
    for (std::size_t i = 0; i < flows_.size(); ++i) {
      auto& f = flows_[i];
      if (!f.simulated) continue;
      std::uniform_int_distribution<std::int64_t> jitter(0, std::max<std::int64_t>(0, cfg_.app_start_spread.us - 1));
      const SimTime start{jitter(f.rng)};
      const int ue = static_cast<int>(i);
      if (cfg_.traffic == TrafficKind::kDash) {
        f.dash.client = std::make_unique<DashClient>(cfg_.dash);
        engine_.schedule(start, [this, ue] { dash_request(ue); });
      } else {
        engine_.schedule(start, [this, ue] { http_new_page(ue); });
      }
    }
  }

  void send_object(int ue, std::int64_t bytes) {
    auto& f = flows_[static_cast<std::size_t>(ue)];
    f.transport->send(static_cast<int>(f.next_object++), bytes);
    pump(ue);
  }

  void dash_request(int ue) {
    auto& f = flows_[static_cast<std::size_t>(ue)];
    f.dash.representation = f.dash.client->select_representation();
    f.dash.requested_at = engine_.now();
    const auto bytes = static_cast<std::int64_t>(std::llround(f.dash.client->segment_bytes(f.dash.representation)));
    engine_.schedule_in(cfg_.request_delay, [this, ue, bytes] { send_object(ue, bytes); });
  }

  void http_new_page(int ue) {
    auto& f = flows_[static_cast<std::size_t>(ue)];
    f.http.page = http_generate_page(cfg_.http, f.rng);
    f.http.first_request_at = engine_.now();
    f.http.main_done = false;
    f.http.embedded_left = static_cast<int>(f.http.page.embedded_bytes.size());
    const std::int64_t bytes = f.http.page.main_bytes;
    engine_.schedule_in(cfg_.request_delay, [this, ue, bytes] { send_object(ue, bytes); });
  }

  void on_object_complete(int ue, int /*object*/, SimTime at) {
    auto& f = flows_[static_cast<std::size_t>(ue)];
    if (cfg_.traffic == TrafficKind::kDash) {
      const double dl = (at - f.dash.requested_at).seconds();
      const double bits = f.dash.client->segment_bytes(f.dash.representation) * 8.0;
      f.dash.client->on_segment(at.seconds(), bits, dl);
      const SimTime next = std::max(at, SimTime::from_seconds(f.dash.client->next_request_time(at.seconds())));
      engine_.schedule(next, [this, ue] { dash_request(ue); });
      return;
    }
    auto& h = f.http;
    if (!h.main_done) {
      h.main_done = true;
      if (h.embedded_left > 0) {
        engine_.schedule_in(cfg_.request_delay, [this, ue] {
          auto& fl = flows_[static_cast<std::size_t>(ue)];
          for (auto bytes : fl.http.page.embedded_bytes) {
            fl.transport->send(static_cast<int>(fl.next_object++), bytes);
          }
          pump(ue);
        });
        return;
      }
    } else {
      --h.embedded_left;
      if (h.embedded_left > 0) return;
    }
    f.page_times.push_back((at - h.first_request_at).seconds());
    const double reading = http_reading_time_s(cfg_.http, f.rng);
    engine_.schedule(at + SimTime::from_seconds(reading), [this, ue] { http_new_page(ue); });
  }

  // --- results --------------------------------------------------------------

  RunMetrics collect() {
    if (cfg_.check_invariants) report_.conservation_ok = conservation_holds();
    RunMetrics m;
    m.seed = seed_;
    m.scenario = std::string(to_string(net_.kind));
    m.policy = net_.kind == DeploymentKind::kIab ? std::string(to_string(net_.policy.kind)) : "none";
    m.target_cell = net_.target_cell.value_or(-1);
    m.window_s = (cfg_.duration - cfg_.warmup).seconds();
    m.mean_iab_hops = net_.tree.mean_iab_hops();
    m.detached_nodes = static_cast<int>(net_.tree.detached.size());
    for (std::size_t ue = 0; ue < flows_.size(); ++ue) {
      auto& f = flows_[ue];
      const int serving = net_.assoc.serving[ue];
      if (!f.simulated && (cfg_.target_tree_only || serving != kNone)) continue;
      UeRecord r;
      r.ue_id = static_cast<int>(ue);
      r.attached_gnb = serving;
      r.in_target = serving != kNone && net_.target_cell && serving == *net_.target_cell;
      r.hops = serving == kNone ? -1 : net_.tree.hop_count[static_cast<std::size_t>(serving)] + 1;
      r.delivered_bytes = f.window_bytes_delivered;
      r.throughput_bps = m.window_s > 0 ? static_cast<double>(f.window_bytes_delivered) * 8.0 / m.window_s : 0.0;
      r.drops = f.drops;
      if (f.dash.client) {
        f.dash.client->finalize(cfg_.duration.seconds());
        r.stalls = f.dash.client->stalls();
      }
      r.page_times_s = f.page_times;
      m.ues.push_back(std::move(r));
    }
    m.target_latency = target_latency_;
    m.network_latency = network_latency_;
    return m;
  }

  const Network& net_;
  SimConfig cfg_;
  std::uint64_t seed_;
  EventEngine engine_;
  std::vector<SimBearer> bearers_;
  std::vector<TreeState> trees_;
  RouteTable routes_;
  std::vector<FlowState> flows_;
  std::vector<int> cbr_flows_;
  std::vector<std::int64_t> cbr_due_;
  std::deque<Packet> core_pipe_;
  std::vector<int> ack_touched_;
  std::uint64_t slot_counter_{0};
  std::uint64_t next_packet_id_{0};
  LatencyHistogram target_latency_;
  LatencyHistogram network_latency_;
  InvariantReport report_;
  bool started_{false};
};

}  // namespace iabsim
