#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "iabsim/deployment.hpp"
#include "iabsim/metrics.hpp"
#include "iabsim/simulation.hpp"
#include "iabsim/topology.hpp"
#include "iabsim/traffic.hpp"

namespace iabsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNoValidRuns = 3;

struct ExperimentConfig {
  DeploymentParams deployment;
  DeploymentKind scenario{DeploymentKind::kIab};
  PolicyConfig policy;
  RadioConfig radio;
  SimConfig sim;
  int runs{1};
  std::uint64_t base_seed{1};
  std::string out_dir{"out"};
  std::vector<double> sweep_p;
  std::vector<PolicyKind> sweep_policies;
  // Extra candidate seeds tried per requested run when draws are invalid.
  int resample_factor{10};
  int threads{0};  // 0: IAB_SIM_THREADS or hardware concurrency

  void validate() const {
    if (!(deployment.density_gnb_km2 > 0)) throw ConfigError("density must be positive");
    if (!(deployment.area_km2 > 0)) throw ConfigError("area must be positive");
    if (!(deployment.ue_density_factor >= 0)) throw ConfigError("ue_density_factor must be >= 0");
    if (!(deployment.donor_fraction > 0) || deployment.donor_fraction > 1)
      throw ConfigError("p must lie in (0, 1]");
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (!(sim.duration > sim.warmup)) throw ConfigError("duration must exceed warmup");
    if (sim.warmup.us < 0) throw ConfigError("warmup must be non-negative");
    if (sim.cbr_rate_bps < 0) throw ConfigError("cbr rate must be non-negative");
    if (sim.window_bytes < sim.packet_bytes) throw ConfigError("window must hold at least one packet");
    for (double p : sweep_p)
      if (!(p > 0) || p > 1) throw ConfigError("sweep p values must lie in (0, 1]");
    policy.validate();
    radio.validate();
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(v);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

}  // namespace detail

// Applies one key = value setting. Shared by config files and CLI flags.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using detail::to_double;
  using detail::to_int;
  if (key == "density") c.deployment.density_gnb_km2 = to_double(key, value);
  else if (key == "p") c.deployment.donor_fraction = to_double(key, value);
  else if (key == "area_km2") c.deployment.area_km2 = to_double(key, value);
  else if (key == "ue_density_factor") c.deployment.ue_density_factor = to_double(key, value);
  else if (key == "scenario") c.scenario = parse_deployment_kind(value);
  else if (key == "policy") c.policy.kind = parse_policy_kind(value);
  else if (key == "beta") c.policy.beta_db_per_hop = to_double(key, value);
  else if (key == "min_snr_db") c.policy.min_snr_db = to_double(key, value);
  else if (key == "traffic") c.sim.traffic = parse_traffic_kind(value);
  else if (key == "cbr_rate_mbps") c.sim.cbr_rate_bps = to_double(key, value) * 1e6;
  else if (key == "duration") c.sim.duration = SimTime::from_seconds(to_double(key, value));
  else if (key == "warmup") c.sim.warmup = SimTime::from_seconds(to_double(key, value));
  else if (key == "runs") c.runs = static_cast<int>(to_int(key, value));
  else if (key == "seed") c.base_seed = static_cast<std::uint64_t>(to_int(key, value));
  else if (key == "out") c.out_dir = value;
  else if (key == "scope") {
    if (value == "target") c.sim.target_tree_only = true;
    else if (value == "network") c.sim.target_tree_only = false;
    else throw ConfigError("scope must be 'target' or 'network'");
  }
  else if (key == "queue_bytes") c.sim.queue_capacity_bytes = to_int(key, value);
  else if (key == "window_bytes") c.sim.window_bytes = to_int(key, value);
  else if (key == "packet_bytes") c.sim.packet_bytes = static_cast<std::int32_t>(to_int(key, value));
  else if (key == "core_delay_ms") c.sim.core_delay = SimTime::from_seconds(to_double(key, value) / 1e3);
  else if (key == "request_delay_ms") c.sim.request_delay = SimTime::from_seconds(to_double(key, value) / 1e3);
  else if (key == "dash_max_buffer_s") c.sim.dash.max_buffer_s = to_double(key, value);
  else if (key == "dash_startup_s") c.sim.dash.startup_buffer_s = to_double(key, value);
  else if (key == "http_reading_s") c.sim.http.reading_mean_s = to_double(key, value);
  else if (key == "carrier_ghz") c.radio.carrier_ghz = to_double(key, value);
  else if (key == "bandwidth_mhz") c.radio.bandwidth_hz = to_double(key, value) * 1e6;
  else if (key == "tx_power_dbm") c.radio.tx_power_dbm = to_double(key, value);
  else if (key == "noise_figure_db") c.radio.noise_figure_db = to_double(key, value);
  else if (key == "gnb_elements") c.radio.gnb_elements = static_cast<int>(to_int(key, value));
  else if (key == "ue_elements") c.radio.ue_elements = static_cast<int>(to_int(key, value));
  else if (key == "se_cap") c.radio.se_cap_bps_hz = to_double(key, value);
  else if (key == "threads") c.threads = static_cast<int>(to_int(key, value));
  else if (key == "p_values") {
    c.sweep_p.clear();
    for (const auto& s : detail::split_list(value)) c.sweep_p.push_back(to_double(key, s));
    if (c.sweep_p.empty()) throw ConfigError("p_values must not be empty");
  } else if (key == "policies") {
    c.sweep_policies.clear();
    for (const auto& s : detail::split_list(value)) c.sweep_policies.push_back(parse_policy_kind(s));
    if (c.sweep_policies.empty()) throw ConfigError("policies must not be empty");
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

// Flat key = value file; '#' starts a comment.
inline void load_config(ExperimentConfig& c, std::istream& is) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

// One (scenario, policy, p) combination.
struct CellSpec {
  DeploymentKind scenario{DeploymentKind::kIab};
  PolicyConfig policy;
  double p{0.3};
};

struct SummaryRow {
  std::string scenario;
  std::string policy;
  double p{0.0};
  std::string metric;
  Summary summary;
};

struct ExperimentResult {
  int exit_code{kExitOk};
  std::string message;
  std::vector<RunMetrics> runs;  // ordered by (run, scenario, p, policy)
  std::vector<SummaryRow> summary;
  std::vector<InvariantReport> invariants;
};

inline int thread_budget(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("IAB_SIM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Optional debug outputs for the first simulated run.
struct DebugOutputs {
  std::string scenario_dump;
  std::string tree_dump;
  std::string frame_trace;
  std::string packet_trace;
};

inline bool draw_is_valid(const Network& net) {
  if (!net.target_cell) return false;
  return std::any_of(net.assoc.serving.begin(), net.assoc.serving.end(),
                     [&](int g) { return g == *net.target_cell; });
}

/// Runs `runs` paired draws of every cell. Run r starts from seed
/// base_seed + r; a draw that is invalid for any cell of the group is
/// replaced by the next unused seed beyond base_seed + runs - 1, so all
/// cells of a group always share their deployments.
inline ExperimentResult run_cells(const ExperimentConfig& cfg, const std::vector<CellSpec>& cells,
                                  const DebugOutputs& debug = {}) {
  ExperimentResult result;
  struct Job {
    int run;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  std::uint64_t spare = cfg.base_seed + static_cast<std::uint64_t>(cfg.runs);
  const std::uint64_t spare_end = spare + static_cast<std::uint64_t>(cfg.runs) * static_cast<std::uint64_t>(cfg.resample_factor);
  auto group_valid = [&](std::uint64_t seed) {
    for (const auto& cell : cells) {
      DeploymentParams dp = cfg.deployment;
      dp.donor_fraction = cell.p;
      const Scenario full = generate_scenario(dp, seed);
      if (full.gnbs.empty()) return false;
      if (!draw_is_valid(build_network(full, cell.scenario, cfg.radio, cell.policy))) return false;
    }
    return true;
  };
  for (int r = 0; r < cfg.runs; ++r) {
    std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(r);
    bool ok = group_valid(seed);
    while (!ok && spare < spare_end) {
      seed = spare++;
      ok = group_valid(seed);
    }
    if (ok) jobs.push_back({r, seed});
  }
  if (jobs.empty()) {
    result.exit_code = kExitNoValidRuns;
    result.message = "no valid runs: every draw lacked an attachable target cell";
    return result;
  }

  const std::size_t n_tasks = jobs.size() * cells.size();
  std::vector<RunMetrics> metrics(n_tasks);
  std::vector<InvariantReport> reports(n_tasks);
  std::atomic<std::size_t> next{0};
  std::mutex debug_mu;
  auto worker = [&] {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      const Job& job = jobs[t / cells.size()];
      const CellSpec& cell = cells[t % cells.size()];
      DeploymentParams dp = cfg.deployment;
      dp.donor_fraction = cell.p;
      const Scenario full = generate_scenario(dp, job.seed);
      const Network net = build_network(full, cell.scenario, cfg.radio, cell.policy);
      SimConfig sc = cfg.sim;
      std::ofstream frame_os, packet_os;
      const bool first = t == 0;
      if (first) {
        std::lock_guard lock(debug_mu);
        if (!debug.scenario_dump.empty()) {
          std::ofstream os(debug.scenario_dump);
          dump_scenario(net.scenario, os);
        }
        if (!debug.tree_dump.empty()) {
          std::ofstream os(debug.tree_dump);
          dump_tree(net.tree, os);
        }
        if (!debug.frame_trace.empty()) {
          frame_os.open(debug.frame_trace);
          sc.frame_trace = &frame_os;
        }
        if (!debug.packet_trace.empty()) {
          packet_os.open(debug.packet_trace);
          packet_os << "flow,created_us,donor_ingress_us,delivered_us,hops\n";
          sc.packet_trace = &packet_os;
        }
      }
      Simulation sim(net, sc, job.seed);
      RunMetrics m = sim.run();
      m.run = job.run;
      m.p = cell.p;
      m.density = cfg.deployment.density_gnb_km2;
      metrics[t] = std::move(m);
      reports[t] = sim.invariants();
    }
  };
  const int n_threads = std::min<int>(thread_budget(cfg.threads), static_cast<int>(n_tasks));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Single ordered writer view: (run, scenario, p, policy).
  std::vector<std::size_t> order(n_tasks);
  for (std::size_t i = 0; i < n_tasks; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = metrics[a];
    const auto& y = metrics[b];
    return std::tie(x.run, x.scenario, x.p, x.policy) < std::tie(y.run, y.scenario, y.p, y.policy);
  });
  for (std::size_t i : order) {
    result.runs.push_back(std::move(metrics[i]));
    result.invariants.push_back(reports[i]);
  }

  for (const auto& cell : cells) {
    const std::string scen(to_string(cell.scenario));
    const std::string pol = cell.scenario == DeploymentKind::kIab ? std::string(to_string(cell.policy.kind)) : "none";
    std::vector<RunMetrics> subset;
    for (const auto& r : result.runs)
      if (r.scenario == scen && r.policy == pol && r.p == cell.p) subset.push_back(r);
    for (const auto& stat : standard_statistics()) {
      result.summary.push_back({scen, pol, cell.p, stat.name, aggregate_runs(subset, stat)});
    }
  }
  return result;
}

inline CellSpec base_cell(const ExperimentConfig& cfg) {
  return CellSpec{cfg.scenario, cfg.policy, cfg.deployment.donor_fraction};
}

inline ExperimentResult run_single(const ExperimentConfig& cfg, const DebugOutputs& debug = {}) {
  return run_cells(cfg, {base_cell(cfg)}, debug);
}

// Cartesian product of p values and policies on the IAB deployment, with
// common random numbers: every cell sees the same seeds whenever valid.
inline ExperimentResult run_sweep(const ExperimentConfig& cfg, const DebugOutputs& debug = {}) {
  if (cfg.sweep_policies.empty()) throw ConfigError("sweep needs at least one policy");
  if (cfg.sweep_p.empty()) throw ConfigError("sweep needs at least one p value");
  std::vector<CellSpec> cells;
  for (double p : cfg.sweep_p) {
    for (PolicyKind k : cfg.sweep_policies) {
      CellSpec cell = base_cell(cfg);
      cell.scenario = DeploymentKind::kIab;
      cell.p = p;
      cell.policy.kind = k;
      cells.push_back(cell);
    }
  }
  return run_cells(cfg, cells, debug);
}

// All-wired, IAB and only-donors on identical draws.
inline ExperimentResult run_compare(const ExperimentConfig& cfg, const DebugOutputs& debug = {}) {
  const double p = cfg.deployment.donor_fraction;
  std::vector<CellSpec> cells = {{DeploymentKind::kAllWired, cfg.policy, p},
                                 {DeploymentKind::kIab, cfg.policy, p},
                                 {DeploymentKind::kOnlyDonors, cfg.policy, p}};
  return run_cells(cfg, cells, debug);
}

// --- CSV output --------------------------------------------------------------

inline constexpr std::string_view kPerUeHeader =
    "run,seed,scenario,policy,p,density,ue_id,target_cell,attached_gnb,hops,throughput_bps,drops";
inline constexpr std::string_view kLatencyHeader = "run,scenario,policy,p,pctl50_us,pctl95_us,mean_us";
inline constexpr std::string_view kDashHeader = "run,scenario,p,ue_id,stall_count,mean_stall_s,total_stall_s";
inline constexpr std::string_view kHttpHeader = "run,scenario,p,ue_id,pages,mean_page_time_s";
inline constexpr std::string_view kSummaryHeader = "scenario,policy,p,metric,mean,ci95";

inline void write_per_ue(const std::vector<RunMetrics>& runs, std::ostream& os) {
  os << kPerUeHeader << '\n';
  for (const auto& r : runs) {
    for (const auto& u : r.ues) {
      os << r.run << ',' << r.seed << ',' << r.scenario << ',' << r.policy << ',' << fmt_num(r.p) << ','
         << fmt_num(r.density) << ',' << u.ue_id << ',' << (u.in_target ? 1 : 0) << ',' << u.attached_gnb
         << ',' << u.hops << ',' << fmt_num(u.throughput_bps) << ',' << u.drops << '\n';
    }
  }
}

inline void write_latency(const std::vector<RunMetrics>& runs, std::ostream& os) {
  os << kLatencyHeader << '\n';
  for (const auto& r : runs) {
    os << r.run << ',' << r.scenario << ',' << r.policy << ',' << fmt_num(r.p) << ','
       << fmt_num(r.target_latency.percentile(50)) << ',' << fmt_num(r.target_latency.percentile(95)) << ','
       << fmt_num(r.target_latency.mean()) << '\n';
  }
}

inline void write_dash(const std::vector<RunMetrics>& runs, std::ostream& os) {
  os << kDashHeader << '\n';
  for (const auto& r : runs) {
    for (const auto* u : r.target_ues()) {
      double total = 0.0;
      for (const auto& e : u->stalls) total += e.duration_s;
      const double mean = u->stalls.empty() ? 0.0 : total / static_cast<double>(u->stalls.size());
      os << r.run << ',' << r.scenario << ',' << fmt_num(r.p) << ',' << u->ue_id << ',' << u->stalls.size()
         << ',' << fmt_num(mean) << ',' << fmt_num(total) << '\n';
    }
  }
}

inline void write_http(const std::vector<RunMetrics>& runs, std::ostream& os) {
  os << kHttpHeader << '\n';
  for (const auto& r : runs) {
    for (const auto* u : r.target_ues()) {
      double total = 0.0;
      for (double t : u->page_times_s) total += t;
      const double mean = u->page_times_s.empty() ? std::nan("") : total / static_cast<double>(u->page_times_s.size());
      os << r.run << ',' << r.scenario << ',' << fmt_num(r.p) << ',' << u->ue_id << ',' << u->page_times_s.size()
         << ',' << fmt_num(mean) << '\n';
    }
  }
}

inline void write_summary(const std::vector<SummaryRow>& rows, std::ostream& os) {
  os << kSummaryHeader << '\n';
  for (const auto& s : rows) {
    os << s.scenario << ',' << s.policy << ',' << fmt_num(s.p) << ',' << s.metric << ','
       << fmt_num(s.summary.mean) << ',' << fmt_num(s.summary.ci95) << '\n';
  }
}

inline void write_outputs(const ExperimentResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream os(dir / name);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    return os;
  };
  {
    auto os = open("per_ue.csv");
    write_per_ue(res.runs, os);
  }
  {
    auto os = open("latency.csv");
    write_latency(res.runs, os);
  }
  {
    auto os = open("dash.csv");
    write_dash(res.runs, os);
  }
  {
    auto os = open("http.csv");
    write_http(res.runs, os);
  }
  {
    auto os = open("summary.csv");
    write_summary(res.summary, os);
  }
}

}  // namespace iabsim
