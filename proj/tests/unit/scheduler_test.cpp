#include <gtest/gtest.h>

#include <chrono>
#include <stdexcept>
#include <thread>

#include "ctst/scheduler.hpp"

using namespace ctst;
using namespace std::chrono_literals;

TEST(ParallelMap, ResultsInIndexOrderRegardlessOfCompletion) {
  const auto out = parallel_map(32, 8, [](std::size_t i) {
    std::this_thread::sleep_for(std::chrono::microseconds((32 - i) * 200));
    return i * i;
  });
  ASSERT_EQ(out.size(), 32u);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], i * i);
}

TEST(ParallelMap, LowestIndexExceptionWins) {
  try {
    parallel_map(10, 4, [](std::size_t i) -> int {
      if (i == 3 || i == 7) throw std::runtime_error("job " + std::to_string(i));
      return 0;
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "job 3");
  }
}

TEST(ConcurrencyGate, NeverExceedsLimit) {
  ConcurrencyGate gate(3);
  parallel_map(24, 12, [&](std::size_t) {
    ConcurrencyGate::Permit p(gate);
    std::this_thread::sleep_for(2ms);
    return 0;
  });
  EXPECT_LE(gate.max_observed(), 3u);
  EXPECT_GE(gate.max_observed(), 2u);
}

TEST(RateLimiter, SpacesAcquisitions) {
  RateLimiter limiter(200.0);  // 5 ms apart
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 11; ++i) limiter.acquire();
  EXPECT_GE(std::chrono::steady_clock::now() - start, 49ms);
  EXPECT_THROW(RateLimiter(0.0), std::invalid_argument);
}
