#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "iabsim/simulation.hpp"

using namespace iabsim;

namespace {

// Donor 0 feeds relay 1 over a link of capacity c; the single UE hangs off the
// relay with the same capacity and cannot hear the donor.
Network chain_network(double c) {
  Network net;
  net.kind = DeploymentKind::kIab;
  net.scenario.gnbs.resize(2);
  net.scenario.gnbs[0] = GnbSite{0, {0, 0}, kGnbHeightM, true, 0};
  net.scenario.gnbs[1] = GnbSite{1, {100, 0}, kGnbHeightM, false, 1};
  net.scenario.ues.push_back(UeSite{0, {150, 0}, kUeHeightM});
  net.links = LinkTable::from_states(2, 1);
  net.links.set_gnb_link(0, 1, make_link(30.0, c));
  net.links.set_ue_link(0, 1, make_link(30.0, c));
  net.links.set_ue_link(0, 0, make_link(-30.0, 0.0));
  net.tree = IabTree::roots_only(net.scenario.gnbs);
  net.tree.attach(1, 0, 30.0);
  net.tree.attach_order.push_back(1);
  net.assoc.serving = {1};
  net.target_cell = 1;
  return net;
}

SimConfig short_config(TrafficKind traffic) {
  SimConfig sc;
  sc.traffic = traffic;
  sc.duration = SimTime::from_seconds(2.0);
  sc.warmup = SimTime::from_seconds(0.5);
  sc.check_invariants = true;
  return sc;
}

Network random_network(std::uint64_t seed, double density, DeploymentKind kind, PolicyKind policy) {
  DeploymentParams dp;
  dp.density_gnb_km2 = density;
  dp.area_km2 = 0.25;
  dp.donor_fraction = 0.3;
  PolicyConfig pc;
  pc.kind = policy;
  return build_network(generate_scenario(dp, seed), kind, RadioConfig{}, pc);
}

}  // namespace

TEST(Chain, HalfDuplexRelayHalvesGoodput) {
  const double c = 1e9;
  const Network net = chain_network(c);
  SimConfig sc = short_config(TrafficKind::kCbr);
  sc.cbr_rate_bps = 0.9 * c;
  Simulation sim(net, sc, 1);
  const auto m = sim.run();
  ASSERT_EQ(m.target_ues().size(), 1u);
  EXPECT_NEAR(m.ues[0].throughput_bps, c / 2, 0.05 * c / 2);
  EXPECT_EQ(sim.invariants().half_duplex_violations, 0u);
  EXPECT_TRUE(sim.invariants().conservation_ok);
}

TEST(Chain, LightLoadIsDeliveredWithinAFrame) {
  const Network net = chain_network(1e9);
  SimConfig sc = short_config(TrafficKind::kCbr);
  sc.cbr_rate_bps = 50e6;
  std::ostringstream trace;
  sc.packet_trace = &trace;
  Simulation sim(net, sc, 1);
  const auto m = sim.run();
  EXPECT_NEAR(m.ues[0].throughput_bps, 50e6, 0.01 * 50e6);
  // Packets wait at most one frame for the snapshot and then cross both hops
  // inside that frame.
  EXPECT_LE(m.target_latency.percentile(100), 2.0 * kFrameDuration.us);
  EXPECT_EQ(sim.invariants().latency_bound_violations, 0u);
}

TEST(Chain, WindowedObjectCompletes) {
  const Network net = chain_network(1e9);
  SimConfig sc = short_config(TrafficKind::kHttp);
  Simulation sim(net, sc, 3);
  const auto m = sim.run();
  ASSERT_FALSE(m.ues[0].page_times_s.empty());
  for (double t : m.ues[0].page_times_s) EXPECT_GT(t, 0.0);
  EXPECT_EQ(sim.invariants().windowed_drops, 0u);
}

// Randomized deployments and traffic: the structural invariants hold at all
// times and at the end of every run.
TEST(SimulationProperty, InvariantsOnRandomRuns) {
  const TrafficKind kinds[] = {TrafficKind::kCbr, TrafficKind::kDash, TrafficKind::kHttp};
  const DeploymentKind deps[] = {DeploymentKind::kIab, DeploymentKind::kOnlyDonors, DeploymentKind::kAllWired};
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto traffic = kinds[seed % 3];
    const auto dep = deps[(seed / 3) % 3];
    const Network net = random_network(seed, 60.0, dep, seed % 2 ? PolicyKind::kHqf : PolicyKind::kWf);
    SimConfig sc = short_config(traffic);
    sc.duration = SimTime::from_seconds(1.0);
    sc.warmup = SimTime::from_seconds(0.2);
    Simulation sim(net, sc, seed);
    for (int k = 1; k <= 4; ++k) {
      sim.run_until(SimTime::from_ms(200 * k));
      ASSERT_TRUE(sim.conservation_holds()) << "seed " << seed;
    }
    sim.run();
    const auto& inv = sim.invariants();
    EXPECT_EQ(inv.half_duplex_violations, 0u) << "seed " << seed;
    EXPECT_GT(inv.frames_checked, 0u);
    EXPECT_TRUE(inv.conservation_ok);
    EXPECT_EQ(inv.fifo_violations, 0u);
    EXPECT_EQ(inv.latency_bound_violations, 0u);
    if (traffic != TrafficKind::kCbr) {
      EXPECT_EQ(inv.windowed_drops, 0u);
    }
  }
}

TEST(Simulation, Deterministic) {
  const Network net = random_network(5, 60.0, DeploymentKind::kIab, PolicyKind::kHqf);
  for (auto traffic : {TrafficKind::kCbr, TrafficKind::kDash}) {
    SimConfig sc = short_config(traffic);
    sc.duration = SimTime::from_seconds(1.0);
    sc.warmup = SimTime::from_seconds(0.2);
    std::ostringstream a, b;
    sc.packet_trace = &a;
    Simulation s1(net, sc, 9);
    const auto m1 = s1.run();
    sc.packet_trace = &b;
    Simulation s2(net, sc, 9);
    const auto m2 = s2.run();
    EXPECT_EQ(a.str(), b.str());
    ASSERT_EQ(m1.ues.size(), m2.ues.size());
    for (std::size_t i = 0; i < m1.ues.size(); ++i) EXPECT_EQ(m1.ues[i].delivered_bytes, m2.ues[i].delivered_bytes);
  }
}

// Donor trees share no radio resources, so simulating only the target tree
// changes nothing for target-cell UEs.
TEST(Simulation, TargetScopeMatchesNetworkScope) {
  for (std::uint64_t seed : {2u, 4u}) {
    const Network net = random_network(seed, 60.0, DeploymentKind::kIab, PolicyKind::kHqf);
    ASSERT_TRUE(net.target_cell);
    for (auto traffic : {TrafficKind::kCbr, TrafficKind::kHttp}) {
      SimConfig sc = short_config(traffic);
      sc.duration = SimTime::from_seconds(1.0);
      sc.warmup = SimTime::from_seconds(0.2);
      Simulation full(net, sc, seed);
      const auto mf = full.run();
      sc.target_tree_only = true;
      Simulation part(net, sc, seed);
      const auto mp = part.run();
      std::map<int, const UeRecord*> by_id;
      for (const auto& u : mf.ues) by_id[u.ue_id] = &u;
      ASSERT_EQ(mf.target_ues().size(), mp.target_ues().size());
      for (const auto* u : mp.target_ues()) {
        const auto* v = by_id.at(u->ue_id);
        EXPECT_EQ(u->delivered_bytes, v->delivered_bytes);
        EXPECT_EQ(u->page_times_s, v->page_times_s);
      }
      EXPECT_EQ(mf.target_latency.count(), mp.target_latency.count());
      EXPECT_EQ(mf.target_latency.mean(), mp.target_latency.mean());
      EXPECT_LE(part.bearer_count(), full.bearer_count());
    }
  }
}

TEST(Simulation, TargetFlagsFollowServingCell) {
  const Network net = random_network(7, 60.0, DeploymentKind::kIab, PolicyKind::kHqf);
  SimConfig sc = short_config(TrafficKind::kCbr);
  sc.duration = SimTime::from_seconds(0.6);
  sc.warmup = SimTime::from_seconds(0.1);
  Simulation sim(net, sc, 7);
  const auto m = sim.run();
  for (const auto& u : m.ues) {
    EXPECT_EQ(u.in_target, u.attached_gnb == *net.target_cell);
    if (u.attached_gnb >= 0) {
      EXPECT_EQ(u.hops, net.tree.hop_count[static_cast<std::size_t>(u.attached_gnb)] + 1);
    }
  }
}
