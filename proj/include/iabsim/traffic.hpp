#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "iabsim/deployment.hpp"
#include "iabsim/engine.hpp"
#include "iabsim/forwarding.hpp"

namespace iabsim {

enum class TrafficKind { kCbr, kDash, kHttp };

inline std::string_view to_string(TrafficKind k) {
  switch (k) {
    case TrafficKind::kCbr: return "cbr";
    case TrafficKind::kDash: return "dash";
    case TrafficKind::kHttp: return "http";
  }
  return "?";
}

inline TrafficKind parse_traffic_kind(std::string_view s) {
  if (s == "cbr" || s == "CBR" || s == "udp") return TrafficKind::kCbr;
  if (s == "dash" || s == "DASH") return TrafficKind::kDash;
  if (s == "http" || s == "HTTP") return TrafficKind::kHttp;
  throw ConfigError("unknown traffic '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Constant bitrate (UDP, no congestion control)

inline constexpr double kDefaultCbrRateBps = 220e6;

/// Packet k (k >= 1) of a flow started at `start` is created at
/// start + floor(k * packet_bits / rate), so a window of length T holds
/// floor(T * rate / packet_bits) packets with no cumulative rounding drift.
struct CbrFlow {
  double rate_bps{kDefaultCbrRateBps};
  std::int32_t packet_bytes{kDefaultPacketBytes};
  int ue_id{0};
  SimTime start{};
  std::int64_t next_index{1};

  bool active() const { return rate_bps > 0.0; }
  double interarrival_us() const { return packet_bytes * 8.0 * 1e6 / rate_bps; }

  SimTime creation_time(std::int64_t k) const {
    return start + SimTime{static_cast<std::int64_t>(std::floor(static_cast<double>(k) * interarrival_us()))};
  }
  SimTime next_arrival() const { return creation_time(next_index); }

  // Number of packets created in (start, t] that have not been emitted yet.
  std::int64_t due_by(SimTime t) const {
    if (!active() || t <= start) return 0;
    const double span = static_cast<double>((t - start).us);
    auto k = static_cast<std::int64_t>(std::floor(span / interarrival_us()));
    while (k + 1 >= next_index && creation_time(k + 1) <= t) ++k;
    while (k >= next_index && creation_time(k) > t) --k;
    return std::max<std::int64_t>(0, k - next_index + 1);
  }
};

struct CbrEmission {
  Packet packet;
  SimTime next_arrival;
};

// Emits the packet due at `now` and reports when the following one is due.
inline std::optional<CbrEmission> cbr_tick(CbrFlow& flow, SimTime now) {
  if (!flow.active()) return std::nullopt;
  Packet p;
  p.flow_id = flow.ue_id;
  p.size_bytes = flow.packet_bytes;
  p.created_at = now;
  ++flow.next_index;
  return CbrEmission{p, flow.next_arrival()};
}

// ---------------------------------------------------------------------------
// DASH client: throughput-based adaptation with an EWMA estimate

enum class PlaybackState { kBuffering, kPlaying, kStalled };

struct DashParams {
  std::vector<double> representations_bps{1e6, 2.5e6, 5e6, 8e6, 16e6, 35e6};
  double segment_duration_s{2.0};
  double startup_buffer_s{4.0};
  double max_buffer_s{30.0};
  double ewma_alpha{0.5};
  double safety_margin{0.8};
};

struct StallEvent {
  double start_s{0.0};
  double duration_s{0.0};
};

class DashClient {
 public:
  explicit DashClient(DashParams params = {}) : params_(std::move(params)) {
    std::sort(params_.representations_bps.begin(), params_.representations_bps.end());
    if (params_.representations_bps.empty()) throw ConfigError("DASH ladder must not be empty");
  }

  const DashParams& params() const { return params_; }
  PlaybackState state() const { return state_; }
  double buffer_s() const { return buffer_s_; }
  std::optional<double> throughput_estimate_bps() const { return estimate_; }
  const std::vector<StallEvent>& stalls() const { return stalls_; }
  int segments() const { return segments_; }

  double total_stall_s() const {
    double s = 0.0;
    for (const auto& e : stalls_) s += e.duration_s;
    return s;
  }

  // Highest rung not above margin x estimate; the lowest rung when nothing
  // fits or no estimate exists yet.
  double select_representation() const {
    const auto& ladder = params_.representations_bps;
    if (!estimate_) return ladder.front();
    const double budget = params_.safety_margin * *estimate_;
    double pick = ladder.front();
    for (double r : ladder)
      if (r <= budget) pick = r;
    return pick;
  }

  double segment_bytes(double representation_bps) const {
    return representation_bps * params_.segment_duration_s / 8.0;
  }

  // Plays out the buffer up to t, entering STALLED when it runs dry.
  void advance(double t) {
    if (t <= clock_s_) return;
    if (state_ == PlaybackState::kPlaying) {
      const double dt = t - clock_s_;
      if (buffer_s_ > dt) {
        buffer_s_ -= dt;
      } else {
        stall_start_s_ = clock_s_ + buffer_s_;
        buffer_s_ = 0.0;
        state_ = PlaybackState::kStalled;
      }
    }
    clock_s_ = t;
  }

  // A segment of `bits` finished at t after `download_time_s` since its request.
  void on_segment(double t, double bits, double download_time_s) {
    advance(t);
    buffer_s_ += params_.segment_duration_s;
    ++segments_;
    if (download_time_s > 0.0) {
      const double sample = bits / download_time_s;
      estimate_ = estimate_ ? params_.ewma_alpha * sample + (1.0 - params_.ewma_alpha) * *estimate_
                            : sample;
    }
    switch (state_) {
      case PlaybackState::kBuffering:
        if (buffer_s_ >= params_.startup_buffer_s) state_ = PlaybackState::kPlaying;
        break;
      case PlaybackState::kStalled:
        stalls_.push_back({stall_start_s_, t - stall_start_s_});
        state_ = PlaybackState::kPlaying;
        break;
      case PlaybackState::kPlaying:
        break;
    }
  }

  // Earliest time the next request may go out: immediately unless the buffer
  // is already at its ceiling.
  double next_request_time(double t) const {
    const double room = params_.max_buffer_s - params_.segment_duration_s;
    if (state_ == PlaybackState::kPlaying && buffer_s_ > room) return t + (buffer_s_ - room);
    return t;
  }

  // Closes an open stall at end of simulation.
  void finalize(double t_end) {
    advance(t_end);
    if (state_ == PlaybackState::kStalled) {
      stalls_.push_back({stall_start_s_, t_end - stall_start_s_});
      stall_start_s_ = t_end;
    }
  }

 private:
  DashParams params_;
  PlaybackState state_{PlaybackState::kBuffering};
  double buffer_s_{0.0};
  double clock_s_{0.0};
  double stall_start_s_{0.0};
  std::optional<double> estimate_;
  std::vector<StallEvent> stalls_;
  int segments_{0};
};

// ---------------------------------------------------------------------------
// 3GPP HTTP browsing model

struct HttpParams {
  double main_mean_bytes{10710.0};
  double main_sigma_log{1.37};
  double main_min_bytes{100.0};
  double main_max_bytes{2e6};
  double embedded_mean_bytes{7758.0};
  double embedded_sigma_log{2.36};
  double embedded_min_bytes{50.0};
  double embedded_max_bytes{2e6};
  double count_alpha{1.1};
  double count_k{2.0};
  double count_m{55.0};
  double reading_mean_s{30.0};
};

// Lognormal parameterized by its (untruncated) mean and log-sigma,
// truncated to [lo, hi] by rejection.
template <class Urbg>
double truncated_lognormal(double mean, double sigma_log, double lo, double hi, Urbg& rng) {
  const double mu = std::log(mean) - 0.5 * sigma_log * sigma_log;
  std::lognormal_distribution<double> dist(mu, sigma_log);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double x = dist(rng);
    if (x >= lo && x <= hi) return x;
  }
  return std::clamp(dist(rng), lo, hi);
}

// Embedded-object count: Pareto(alpha, k) capped at m, shifted down by k and
// rounded, giving integers in [0, m - k].
template <class Urbg>
int embedded_object_count(const HttpParams& p, Urbg& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = u(rng);
  while (v <= 0.0) v = u(rng);
  const double x = std::min(p.count_k / std::pow(v, 1.0 / p.count_alpha), p.count_m);
  return static_cast<int>(std::lround(x - p.count_k));
}

struct WebPage {
  std::int64_t main_bytes{0};
  std::vector<std::int64_t> embedded_bytes;

  std::int64_t total_bytes() const {
    std::int64_t s = main_bytes;
    for (auto b : embedded_bytes) s += b;
    return s;
  }
};

template <class Urbg>
WebPage http_generate_page(const HttpParams& p, Urbg& rng) {
  WebPage page;
  page.main_bytes = std::llround(
      truncated_lognormal(p.main_mean_bytes, p.main_sigma_log, p.main_min_bytes, p.main_max_bytes, rng));
  const int n = embedded_object_count(p, rng);
  page.embedded_bytes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    page.embedded_bytes.push_back(std::llround(truncated_lognormal(
        p.embedded_mean_bytes, p.embedded_sigma_log, p.embedded_min_bytes, p.embedded_max_bytes, rng)));
  }
  return page;
}

template <class Urbg>
double http_reading_time_s(const HttpParams& p, Urbg& rng) {
  std::exponential_distribution<double> d(1.0 / p.reading_mean_s);
  return d(rng);
}

// ---------------------------------------------------------------------------
// Windowed reliable transport (fixed-window stand-in for TCP)

inline constexpr std::int64_t kDefaultWindowBytes = 256 * 1024;

/// Sender-side state of one download flow. Objects are streamed back to back
/// as packets of at most packet_bytes; no more than window bytes are
/// unacknowledged at any time. Completion is signalled when the receiver has
/// the object's last byte.
class WindowedFlow {
 public:
  WindowedFlow(std::int64_t window_bytes = kDefaultWindowBytes, std::int32_t packet_bytes = kDefaultPacketBytes)
      : window_(window_bytes), packet_bytes_(packet_bytes) {}

  std::int64_t window_bytes() const { return window_; }
  std::int64_t inflight_bytes() const { return inflight_; }
  std::int64_t delivered_bytes() const { return delivered_; }
  std::int64_t backlog_bytes() const { return queued_total_ - released_; }
  bool idle() const { return backlog_bytes() == 0 && inflight_ == 0; }

  void send(int object_id, std::int64_t bytes) {
    if (bytes <= 0) bytes = 1;
    objects_.push_back({object_id, bytes});
    queued_total_ += bytes;
    completions_.push_back({queued_total_, object_id});
  }

  // Size of the next packet the window admits, or 0.
  std::int32_t next_packet_size() const {
    if (objects_.empty()) return 0;
    const auto size = static_cast<std::int32_t>(std::min<std::int64_t>(packet_bytes_, objects_.front().remaining));
    return inflight_ + size <= window_ ? size : 0;
  }

  std::int32_t take_packet() {
    const std::int32_t size = next_packet_size();
    if (size == 0) return 0;
    auto& obj = objects_.front();
    obj.remaining -= size;
    if (obj.remaining == 0) objects_.pop_front();
    inflight_ += size;
    released_ += size;
    return size;
  }

  // Receiver got `bytes`; returns ids of objects now complete.
  std::vector<int> on_delivered(std::int64_t bytes) {
    delivered_ += bytes;
    std::vector<int> done;
    while (!completions_.empty() && completions_.front().end_offset <= delivered_) {
      done.push_back(completions_.front().object_id);
      completions_.pop_front();
    }
    return done;
  }

  void on_ack(std::int64_t bytes) { inflight_ -= bytes; }

 private:
  struct Pending {
    int object_id;
    std::int64_t remaining;
  };
  struct Completion {
    std::int64_t end_offset;
    int object_id;
  };

  std::int64_t window_;
  std::int32_t packet_bytes_;
  std::deque<Pending> objects_;
  std::deque<Completion> completions_;
  std::int64_t inflight_{0};
  std::int64_t released_{0};
  std::int64_t delivered_{0};
  std::int64_t queued_total_{0};
};

}  // namespace iabsim
