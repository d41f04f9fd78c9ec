#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iabsim/engine.hpp"
#include "iabsim/traffic.hpp"

namespace iabsim {

// Nearest-rank percentile of an ascending sample.
inline double percentile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile of an empty sample");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::ptrdiff_t>(std::ceil(q / 100.0 * n)) - 1;
  rank = std::clamp<std::ptrdiff_t>(rank, 0, static_cast<std::ptrdiff_t>(sorted.size()) - 1);
  return sorted[static_cast<std::size_t>(rank)];
}

inline double percentile_of(std::vector<double> samples, double q) {
  std::sort(samples.begin(), samples.end());
  return percentile(samples, q);
}

// Empirical CDF with duplicates collapsed onto their last rank.
inline std::vector<std::pair<double, double>> cdf_points(std::vector<double> samples) {
  std::vector<std::pair<double, double>> out;
  if (samples.empty()) return out;
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
    out.emplace_back(samples[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

struct Summary {
  double mean{0.0};
  double ci95{0.0};  // normal-approximation half-width
  std::size_t n{0};
};

inline Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  s.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

/// Exact latency distribution at 1 us resolution. Counts grow on demand, so
/// memory follows the largest latency seen, not the sample count.
class LatencyHistogram {
 public:
  void add(std::int64_t us, std::uint64_t count = 1) {
    if (us < 0) us = 0;
    const auto idx = static_cast<std::size_t>(us);
    if (idx >= counts_.size()) counts_.resize(std::max(idx + 1, counts_.size() * 2), 0);
    counts_[idx] += count;
    total_ += count;
    sum_ += static_cast<double>(us) * static_cast<double>(count);
  }

  std::uint64_t count() const { return total_; }
  double mean() const { return total_ == 0 ? 0.0 : sum_ / static_cast<double>(total_); }

  // Nearest-rank, same definition as percentile().
  double percentile(double q) const {
    if (total_ == 0) return 0.0;
    auto rank = static_cast<std::uint64_t>(std::ceil(q / 100.0 * static_cast<double>(total_)));
    rank = std::clamp<std::uint64_t>(rank, 1, total_);
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      acc += counts_[i];
      if (acc >= rank) return static_cast<double>(i);
    }
    return static_cast<double>(counts_.size() - 1);
  }

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_{0};
  double sum_{0.0};
};

struct UeRecord {
  int ue_id{0};
  bool in_target{false};
  int attached_gnb{-1};
  int hops{-1};  // wireless hops from the donor, access link included
  std::int64_t delivered_bytes{0};
  double throughput_bps{0.0};
  std::int64_t drops{0};
  std::vector<StallEvent> stalls;
  std::vector<double> page_times_s;
};

// Per-run results. Headline statistics use target-cell UEs only; the
// network_* fields cover every simulated UE.
struct RunMetrics {
  int run{0};
  std::uint64_t seed{0};
  std::string scenario;
  std::string policy;
  double p{0.0};
  double density{0.0};
  int target_cell{-1};
  double window_s{0.0};
  double mean_iab_hops{0.0};
  int detached_nodes{0};
  std::vector<UeRecord> ues;
  LatencyHistogram target_latency;
  LatencyHistogram network_latency;

  std::vector<const UeRecord*> target_ues() const {
    std::vector<const UeRecord*> out;
    for (const auto& u : ues)
      if (u.in_target) out.push_back(&u);
    return out;
  }

  std::vector<double> target_throughputs() const {
    std::vector<double> v;
    for (const auto* u : target_ues()) v.push_back(u->throughput_bps);
    std::sort(v.begin(), v.end());
    return v;
  }

  double throughput_percentile(double q) const {
    const auto v = target_throughputs();
    return v.empty() ? 0.0 : percentile(v, q);
  }

  double target_total_throughput() const {
    double s = 0.0;
    for (const auto* u : target_ues()) s += u->throughput_bps;
    return s;
  }

  double network_total_throughput() const {
    double s = 0.0;
    for (const auto& u : ues) s += u.throughput_bps;
    return s;
  }

  // Mean stall duration over target-cell stall events; 0 without stalls.
  double mean_stall_s() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto* u : target_ues()) {
      for (const auto& e : u->stalls) {
        sum += e.duration_s;
        ++n;
      }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
  }

  std::size_t stall_count() const {
    std::size_t n = 0;
    for (const auto* u : target_ues()) n += u->stalls.size();
    return n;
  }

  // Mean page-load time over target-cell pages; NaN without pages.
  double mean_page_time_s() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto* u : target_ues()) {
      for (double t : u->page_times_s) {
        sum += t;
        ++n;
      }
    }
    return n == 0 ? std::nan("") : sum / static_cast<double>(n);
  }

  std::int64_t target_drops() const {
    std::int64_t n = 0;
    for (const auto* u : target_ues()) n += u->drops;
    return n;
  }
};

struct StatisticDescriptor {
  std::string name;
  std::function<double(const RunMetrics&)> eval;
};

// Mean and CI of a per-run statistic. NaN values (statistic undefined for a
// run) are skipped.
inline Summary aggregate_runs(std::span<const RunMetrics> runs, const StatisticDescriptor& stat) {
  std::vector<double> values;
  values.reserve(runs.size());
  for (const auto& r : runs) {
    const double v = stat.eval(r);
    if (!std::isnan(v)) values.push_back(v);
  }
  return summarize(values);
}

inline const std::vector<StatisticDescriptor>& standard_statistics() {
  static const std::vector<StatisticDescriptor> stats = {
      {"throughput_p5_bps", [](const RunMetrics& r) { return r.throughput_percentile(5); }},
      {"throughput_p50_bps", [](const RunMetrics& r) { return r.throughput_percentile(50); }},
      {"throughput_p95_bps", [](const RunMetrics& r) { return r.throughput_percentile(95); }},
      {"throughput_total_target_bps", [](const RunMetrics& r) { return r.target_total_throughput(); }},
      {"throughput_total_network_bps", [](const RunMetrics& r) { return r.network_total_throughput(); }},
      {"latency_mean_us", [](const RunMetrics& r) { return r.target_latency.mean(); }},
      {"latency_p95_us", [](const RunMetrics& r) { return r.target_latency.percentile(95); }},
      {"network_latency_mean_us", [](const RunMetrics& r) { return r.network_latency.mean(); }},
      {"iab_hops_mean", [](const RunMetrics& r) { return r.mean_iab_hops; }},
      {"target_ues", [](const RunMetrics& r) { return static_cast<double>(r.target_ues().size()); }},
      {"drops_target", [](const RunMetrics& r) { return static_cast<double>(r.target_drops()); }},
      {"stall_mean_s", [](const RunMetrics& r) { return r.mean_stall_s(); }},
      {"stall_count", [](const RunMetrics& r) { return static_cast<double>(r.stall_count()); }},
      {"page_time_mean_s", [](const RunMetrics& r) { return r.mean_page_time_s(); }},
  };
  return stats;
}

inline const StatisticDescriptor& statistic(const std::string& name) {
  for (const auto& s : standard_statistics())
    if (s.name == name) return s;
  throw std::invalid_argument("unknown statistic " + name);
}

// Shortest round-trip decimal form; stable across runs for byte-identical CSVs.
inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace iabsim
