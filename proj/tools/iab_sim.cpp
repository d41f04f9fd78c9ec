// iab-sim: command-line experiment runner.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "iabsim/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> density, p, policy, beta, traffic, scenario, runs, seed, duration, warmup, out, scope;
  std::optional<std::string> p_values, policies, threads;
  iabsim::DebugOutputs debug;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "key = value config file");
  sub->add_option("--density", o.density, "gNB density per km^2");
  sub->add_option("--p", o.p, "fraction of gNBs that are donors");
  sub->add_option("--policy", o.policy, "hqf | wf | biased");
  sub->add_option("--beta", o.beta, "bias per hop in dB");
  sub->add_option("--traffic", o.traffic, "cbr | dash | http");
  sub->add_option("--scenario", o.scenario, "all-wired | iab | only-donors");
  sub->add_option("--runs", o.runs, "number of runs");
  sub->add_option("--seed", o.seed, "base seed");
  sub->add_option("--duration", o.duration, "simulated seconds per run");
  sub->add_option("--warmup", o.warmup, "seconds excluded from statistics");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--scope", o.scope, "network | target (simulate only the target donor tree)");
  sub->add_option("--threads", o.threads, "worker threads");
  sub->add_option("--dump-scenario", o.debug.scenario_dump, "write the first run's deployment");
  sub->add_option("--dump-tree", o.debug.tree_dump, "write the first run's backhaul tree");
  sub->add_option("--frame-trace", o.debug.frame_trace, "write the first run's slot allocations");
  sub->add_option("--packet-trace", o.debug.packet_trace, "write the first run's delivered packets");
}

iabsim::ExperimentConfig resolve(const Overrides& o) {
  iabsim::ExperimentConfig cfg;
  if (!o.config.empty()) {
    std::ifstream is(o.config);
    if (!is) throw iabsim::ConfigError("cannot open config " + o.config);
    iabsim::load_config(cfg, is);
  }
  auto apply = [&](const char* key, const std::optional<std::string>& v) {
    if (v) iabsim::apply_setting(cfg, key, *v);
  };
  apply("density", o.density);
  apply("p", o.p);
  apply("policy", o.policy);
  apply("beta", o.beta);
  apply("traffic", o.traffic);
  apply("scenario", o.scenario);
  apply("runs", o.runs);
  apply("seed", o.seed);
  apply("duration", o.duration);
  apply("warmup", o.warmup);
  apply("out", o.out);
  apply("scope", o.scope);
  apply("p_values", o.p_values);
  apply("policies", o.policies);
  apply("threads", o.threads);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IAB mmWave network simulator"};
  app.require_subcommand(1);
  Overrides o;
  auto* run = app.add_subcommand("run", "independent runs of one configuration");
  auto* sweep = app.add_subcommand("sweep", "p x policy grid on shared seeds");
  auto* compare = app.add_subcommand("compare", "all-wired, IAB and only-donors on shared draws");
  for (auto* sub : {run, sweep, compare}) add_common(sub, o);
  sweep->add_option("--p-values", o.p_values, "comma-separated donor fractions");
  sweep->add_option("--policies", o.policies, "comma-separated policies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : iabsim::kExitConfig;
  }

  iabsim::ExperimentResult res;
  try {
    auto cfg = resolve(o);
    if (sweep->parsed()) {
      if (cfg.sweep_p.empty()) cfg.sweep_p = {cfg.deployment.donor_fraction};
      if (cfg.sweep_policies.empty()) cfg.sweep_policies = {cfg.policy.kind};
      res = iabsim::run_sweep(cfg, o.debug);
    } else if (compare->parsed()) {
      res = iabsim::run_compare(cfg, o.debug);
    } else {
      res = iabsim::run_single(cfg, o.debug);
    }
    if (res.exit_code != iabsim::kExitOk) {
      std::cerr << "iab-sim: " << res.message << '\n';
      return res.exit_code;
    }
    iabsim::write_outputs(res, cfg.out_dir);
  } catch (const iabsim::ConfigError& e) {
    std::cerr << "iab-sim: config error: " << e.what() << '\n';
    return iabsim::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "iab-sim: " << e.what() << '\n';
    return 1;
  }
  return iabsim::kExitOk;
}
