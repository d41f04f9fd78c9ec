#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace iabsim {

// Simulation time in integer microseconds since start.
struct SimTime {
  std::int64_t us{0};

  constexpr SimTime() = default;
  constexpr explicit SimTime(std::int64_t micros) : us(micros) {}

  static constexpr SimTime from_seconds(double s) {
    return SimTime{static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))};
  }
  static constexpr SimTime from_ms(std::int64_t ms) { return SimTime{ms * 1000}; }

  constexpr double seconds() const { return static_cast<double>(us) * 1e-6; }

  constexpr auto operator<=>(const SimTime&) const = default;
  constexpr SimTime operator+(SimTime o) const { return SimTime{us + o.us}; }
  constexpr SimTime operator-(SimTime o) const { return SimTime{us - o.us}; }
  constexpr SimTime& operator+=(SimTime o) {
    us += o.us;
    return *this;
  }
};

using EventHandle = std::uint64_t;

struct RunStats {
  std::uint64_t events_processed{0};
  SimTime final_time{};
};

// Single-threaded discrete-event core. Events fire in (fire_at, seq) order;
// seq is issued at scheduling time, so same-time events are FIFO.
class EventEngine {
 public:
  using Action = std::function<void()>;

  SimTime now() const { return now_; }
  std::size_t pending() const { return queue_.size(); }

  EventHandle schedule(SimTime fire_at, Action action) {
    if (fire_at < now_) {
      throw std::logic_error("event scheduled in the past: " + std::to_string(fire_at.us) +
                             " < " + std::to_string(now_.us));
    }
    const EventHandle seq = next_seq_++;
    queue_.push(Entry{fire_at, seq, std::move(action)});
    return seq;
  }

  EventHandle schedule_in(SimTime delay, Action action) {
    return schedule(now_ + delay, std::move(action));
  }

  RunStats run_until(SimTime t_end) {
    RunStats stats;
    while (!queue_.empty() && queue_.top().fire_at <= t_end) {
      // priority_queue::top is const; the action is moved out before pop.
      Entry e = std::move(const_cast<Entry&>(queue_.top()));
      queue_.pop();
      now_ = e.fire_at;
      e.action();
      ++stats.events_processed;
    }
    if (now_ < t_end) now_ = t_end;
    stats.final_time = now_;
    total_processed_ += stats.events_processed;
    return stats;
  }

  std::uint64_t total_processed() const { return total_processed_; }

 private:
  struct Entry {
    SimTime fire_at;
    EventHandle seq;
    Action action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  SimTime now_{};
  EventHandle next_seq_{0};
  std::uint64_t total_processed_{0};
};

}  // namespace iabsim
