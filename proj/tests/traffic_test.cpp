#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <vector>

#include "iabsim/traffic.hpp"

using namespace iabsim;

TEST(Cbr, InterArrival) {
  CbrFlow f;
  EXPECT_NEAR(f.interarrival_us(), 11200.0 / 220e6 * 1e6, 1e-9);
  EXPECT_NEAR(f.interarrival_us(), 50.9, 0.01);
}

TEST(Cbr, PacketsPerSecond) {
  CbrFlow f;
  EXPECT_EQ(f.due_by(SimTime::from_seconds(1.0)), 19642);
  std::int64_t n = 0;
  SimTime t = f.next_arrival();
  while (t <= SimTime::from_seconds(1.0)) {
    auto e = cbr_tick(f, t);
    ASSERT_TRUE(e);
    EXPECT_EQ(e->packet.size_bytes, 1400);
    ASSERT_GT(e->next_arrival, t);
    t = e->next_arrival;
    ++n;
  }
  EXPECT_EQ(n, 19642);
}

TEST(Cbr, NoDriftOverLongRuns) {
  CbrFlow f;
  f.start = SimTime::from_seconds(0.37);
  const double expected = std::floor(10.0 * 220e6 / 11200.0);
  EXPECT_EQ(f.due_by(f.start + SimTime::from_seconds(10.0)), static_cast<std::int64_t>(expected));
}

TEST(Cbr, ZeroRateIsSilent) {
  CbrFlow f;
  f.rate_bps = 0.0;
  EXPECT_FALSE(cbr_tick(f, SimTime{0}));
  EXPECT_EQ(f.due_by(SimTime::from_seconds(1.0)), 0);
}

TEST(Dash, Selection) {
  DashClient c;
  EXPECT_EQ(c.select_representation(), 1e6);
  c.on_segment(0.1, 10e6, 1.0);
  EXPECT_EQ(*c.throughput_estimate_bps(), 10e6);
  EXPECT_EQ(c.select_representation(), 8e6);

  DashClient slow;
  slow.on_segment(0.1, 0.5e6, 1.0);
  EXPECT_EQ(slow.select_representation(), 1e6);

  DashClient fast;
  fast.on_segment(0.1, 1e9, 1.0);
  EXPECT_EQ(fast.select_representation(), 35e6);
}

TEST(Dash, EwmaUpdate) {
  DashClient c;
  c.on_segment(1.0, 10e6, 1.0);
  c.on_segment(2.0, 20e6, 1.0);
  EXPECT_DOUBLE_EQ(*c.throughput_estimate_bps(), 15e6);
}

TEST(Dash, SelectionMonotoneAndInLadder) {
  const DashParams p;
  double prev = 0.0;
  for (double est = 1e5; est < 2e8; est *= 1.07) {
    DashClient c;
    c.on_segment(1.0, est, 1.0);
    const double r = c.select_representation();
    EXPECT_NE(std::find(p.representations_bps.begin(), p.representations_bps.end(), r), p.representations_bps.end());
    EXPECT_GE(r, prev);
    prev = r;
  }
}

TEST(Dash, StartupIsNotRebuffering) {
  DashClient c;
  c.advance(1.3);
  c.on_segment(1.3, 2e6, 1.3);
  EXPECT_EQ(c.state(), PlaybackState::kBuffering);
  c.on_segment(2.0, 2e6, 0.7);
  EXPECT_EQ(c.state(), PlaybackState::kPlaying);
  EXPECT_TRUE(c.stalls().empty());
}

TEST(Dash, StallOfTwoPointOneSeconds) {
  DashClient c;
  c.on_segment(1.0, 2e6, 1.0);
  c.on_segment(1.0, 2e6, 0.5);
  ASSERT_EQ(c.state(), PlaybackState::kPlaying);
  c.advance(4.5);
  EXPECT_NEAR(c.buffer_s(), 0.5, 1e-12);
  c.on_segment(4.5 + 2.6, 2e6, 2.6);
  ASSERT_EQ(c.stalls().size(), 1u);
  EXPECT_NEAR(c.stalls()[0].duration_s, 2.1, 1e-9);
  EXPECT_NEAR(c.stalls()[0].start_s, 5.0, 1e-9);
  EXPECT_EQ(c.state(), PlaybackState::kPlaying);
}

TEST(Dash, FastDownloadsNeverStall) {
  DashClient c;
  double t = 0.0;
  for (int i = 0; i < 200; ++i) {
    t = c.next_request_time(t) + 1.5;
    c.on_segment(t, 2e6, 1.5);
  }
  c.finalize(t);
  EXPECT_TRUE(c.stalls().empty());
  EXPECT_EQ(c.total_stall_s(), 0.0);
}

TEST(Dash, OpenStallClosedAtEnd) {
  DashClient c;
  c.on_segment(1.0, 2e6, 1.0);
  c.on_segment(1.0, 2e6, 0.5);
  c.finalize(10.0);
  ASSERT_EQ(c.stalls().size(), 1u);
  EXPECT_NEAR(c.stalls()[0].duration_s, 5.0, 1e-12);
}

// Random download times: the recorded stall total matches the time observed
// in STALLED on a fine grid, every stall is positive and the buffer never
// goes negative.
TEST(DashProperty, StallAccounting) {
  std::mt19937_64 rng(11);
  std::exponential_distribution<double> dl(1.0 / 1.8);
  constexpr double kStep = 1e-3;
  for (int trial = 0; trial < 50; ++trial) {
    DashClient c;
    double t = 0.0, observed = 0.0;
    for (int i = 0; i < 40; ++i) {
      const double req = c.next_request_time(t);
      const double end = req + dl(rng);
      for (double s = t + kStep; s < end; s += kStep) {
        c.advance(s);
        ASSERT_GE(c.buffer_s(), 0.0);
        if (c.state() == PlaybackState::kStalled) observed += kStep;
      }
      c.on_segment(end, 2e6, end - req);
      ASSERT_NE(c.state(), PlaybackState::kStalled);
      t = end;
    }
    c.finalize(t);
    for (const auto& e : c.stalls()) ASSERT_GT(e.duration_s, 0.0);
    ASSERT_NEAR(c.total_stall_s(), observed, kStep * (2.0 * c.stalls().size() + 1.0));
  }
}

namespace {

// Mean of a lognormal(mu, s) restricted to [lo, hi].
double truncated_lognormal_mean(double mean, double s, double lo, double hi) {
  const double mu = std::log(mean) - 0.5 * s * s;
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  const double a = (std::log(lo) - mu) / s, b = (std::log(hi) - mu) / s;
  return mean * (phi(b - s) - phi(a - s)) / (phi(b) - phi(a));
}

}  // namespace

TEST(Http, ObjectCountMean) {
  HttpParams p;
  std::mt19937_64 rng(123);
  double sum = 0.0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) {
    const int c = embedded_object_count(p, rng);
    ASSERT_GE(c, 0);
    ASSERT_LE(c, 53);
    sum += c;
  }
  EXPECT_NEAR(sum / n, 5.64, 5.64 * 0.03);
}

TEST(Http, MainObjectMean) {
  HttpParams p;
  std::mt19937_64 rng(321);
  double sum = 0.0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i)
    sum += truncated_lognormal(p.main_mean_bytes, p.main_sigma_log, p.main_min_bytes, p.main_max_bytes, rng);
  const double analytic = truncated_lognormal_mean(p.main_mean_bytes, p.main_sigma_log, p.main_min_bytes, p.main_max_bytes);
  EXPECT_NEAR(sum / n, 10'710.0, 10'710.0 * 0.05);
  EXPECT_NEAR(sum / n, analytic, analytic * 0.05);
}

TEST(Http, SizesWithinBounds) {
  HttpParams p;
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20'000; ++i) {
    const auto page = http_generate_page(p, rng);
    ASSERT_GE(page.main_bytes, 100);
    ASSERT_LE(page.main_bytes, 2'000'000);
    ASSERT_LE(page.embedded_bytes.size(), 53u);
    for (auto b : page.embedded_bytes) {
      ASSERT_GE(b, 50);
      ASSERT_LE(b, 2'000'000);
    }
  }
}

TEST(Http, ReadingTimeMean) {
  HttpParams p;
  std::mt19937_64 rng(17);
  double sum = 0.0;
  for (int i = 0; i < 100'000; ++i) sum += http_reading_time_s(p, rng);
  EXPECT_NEAR(sum / 100'000, 30.0, 30.0 * 0.02);
}

TEST(Window, SinglePacketObject) {
  WindowedFlow w;
  w.send(7, 1400);
  EXPECT_EQ(w.take_packet(), 1400);
  EXPECT_EQ(w.take_packet(), 0);
  EXPECT_EQ(w.on_delivered(1400), (std::vector<int>{7}));
  w.on_ack(1400);
  EXPECT_TRUE(w.idle());
}

TEST(Window, FullWindowPauses) {
  WindowedFlow w;
  w.send(1, 2'000'000);
  std::int64_t released = 0;
  while (auto s = w.take_packet()) released += s;
  EXPECT_LE(released, kDefaultWindowBytes);
  EXPECT_GT(released, kDefaultWindowBytes - 1400);
  EXPECT_EQ(w.next_packet_size(), 0);
  w.on_delivered(1400);
  w.on_ack(1400);
  EXPECT_EQ(w.take_packet(), 1400);
}

TEST(WindowProperty, InflightBoundedAndObjectsCompleteInOrder) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> obj(1, 400'000);
  std::uniform_int_distribution<int> burst(0, 300);
  for (int trial = 0; trial < 50; ++trial) {
    WindowedFlow w;
    std::deque<std::int32_t> pipe;
    int next_obj = 0, expect_done = 0;
    for (int step = 0; step < 2000; ++step) {
      if (step % 40 == 0) w.send(next_obj++, obj(rng));
      for (int k = burst(rng); k > 0; --k) {
        const auto s = w.take_packet();
        if (s == 0) break;
        pipe.push_back(s);
      }
      ASSERT_LE(w.inflight_bytes(), kDefaultWindowBytes);
      for (int k = burst(rng); k > 0 && !pipe.empty(); --k) {
        for (int id : w.on_delivered(pipe.front())) ASSERT_EQ(id, expect_done++);
        w.on_ack(pipe.front());
        pipe.pop_front();
      }
    }
  }
}
