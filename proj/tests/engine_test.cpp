#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "iabsim/engine.hpp"

using iabsim::EventEngine;
using iabsim::SimTime;

TEST(SimTime, Conversions) {
  EXPECT_EQ(SimTime::from_seconds(1.5).us, 1'500'000);
  EXPECT_EQ(SimTime::from_ms(10).us, 10'000);
  EXPECT_DOUBLE_EQ(SimTime{250}.seconds(), 250e-6);
  EXPECT_LT(SimTime{1}, SimTime{2});
  EXPECT_EQ((SimTime{7} + SimTime{5}).us, 12);
}

TEST(EventEngine, FiresInTimeOrder) {
  EventEngine e;
  std::vector<int> log;
  e.schedule(SimTime{5}, [&] { log.push_back(1); });
  e.schedule(SimTime{3}, [&] { log.push_back(2); });
  e.run_until(SimTime{10});
  EXPECT_EQ(log, (std::vector<int>{2, 1}));
}

TEST(EventEngine, SameTimeIsFifo) {
  EventEngine e;
  std::vector<char> log;
  e.schedule(SimTime{5}, [&] { log.push_back('A'); });
  e.schedule(SimTime{5}, [&] { log.push_back('B'); });
  e.run_until(SimTime{5});
  EXPECT_EQ(log, (std::vector<char>{'A', 'B'}));
}

TEST(EventEngine, PastEventIsRejected) {
  EventEngine e;
  e.run_until(SimTime{10});
  EXPECT_THROW(e.schedule(SimTime{9}, [] {}), std::logic_error);
  EXPECT_NO_THROW(e.schedule(SimTime{10}, [] {}));
}

TEST(EventEngine, SelfReschedulingTicks) {
  EventEngine e;
  int ticks = 0;
  std::function<void()> tick = [&] {
    ++ticks;
    e.schedule_in(SimTime::from_ms(1), tick);
  };
  e.schedule(SimTime{0}, tick);
  const auto stats = e.run_until(SimTime::from_seconds(1.0) - SimTime{1});
  EXPECT_EQ(ticks, 1000);
  EXPECT_EQ(stats.events_processed, 1000u);
}

TEST(EventEngine, RunUntilLeavesLaterEventsAndAdvancesClock) {
  EventEngine e;
  bool fired = false;
  e.schedule(SimTime{100}, [&] { fired = true; });
  const auto stats = e.run_until(SimTime{50});
  EXPECT_FALSE(fired);
  EXPECT_EQ(stats.final_time.us, 50);
  EXPECT_EQ(e.pending(), 1u);
  e.run_until(SimTime{100});
  EXPECT_TRUE(fired);
}

// Property: random schedules always pop in non-decreasing (time, seq) order.
TEST(EventEngine, RandomScheduleOrderProperty) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    EventEngine e;
    std::vector<std::pair<std::int64_t, int>> fired;
    std::uniform_int_distribution<std::int64_t> t(0, 20);
    for (int i = 0; i < 200; ++i) {
      const std::int64_t at = t(rng);
      e.schedule(SimTime{at}, [&fired, at, i] { fired.emplace_back(at, i); });
    }
    e.run_until(SimTime{100});
    ASSERT_EQ(fired.size(), 200u);
    for (std::size_t k = 1; k < fired.size(); ++k) {
      ASSERT_LE(fired[k - 1].first, fired[k].first);
      if (fired[k - 1].first == fired[k].first) {
        ASSERT_LT(fired[k - 1].second, fired[k].second);
      }
    }
  }
}
