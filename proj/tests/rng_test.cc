// Copyright 2026 The dexmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dexmpc/rng.h"

#include <atomic>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dexmpc/thread_pool.h"

namespace dexmpc {
namespace {

// known-answer vectors published with the Random123 library
TEST(PhiloxTest, KnownAnswers) {
  using A4 = std::array<uint32_t, 4>;
  EXPECT_EQ(Philox4x32({0, 0, 0, 0}, {0, 0}),
            (A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                       {0xffffffff, 0xffffffff}),
            (A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                       {0xa4093822, 0x299f31d0}),
            (A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRngTest, StreamsAreReproducible) {
  CounterRng a(42, 7, 3), b(42, 7, 3), c(42, 8, 3);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.Normal();
    EXPECT_EQ(x, b.Normal());
    differs |= x != c.Normal();
  }
  EXPECT_TRUE(differs);
}

TEST(CounterRngTest, UniformAndNormalMoments) {
  CounterRng rng(1, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.Uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.Normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(CounterRngTest, BelowStaysInRange) {
  CounterRng rng(9, 1);
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 60000; ++i) {
    const uint32_t k = rng.Below(6);
    ASSERT_LT(k, 6u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(ThreadPoolTest, VisitsEveryIndexOnce) {
  for (int workers : {1, 2, 4}) {
    ThreadPool pool(workers);
    std::vector<std::atomic<int>> hits(257);
    for (int rep = 0; rep < 3; ++rep) {
      pool.ParallelFor(hits.size(), [&](std::size_t i) { ++hits[i]; });
    }
    for (auto& h : hits) EXPECT_EQ(h.load(), 3);
  }
}

TEST(ThreadPoolTest, RethrowsWorkerException) {
  ThreadPool pool(3);
  EXPECT_THROW(pool.ParallelFor(10,
                                [](std::size_t i) {
                                  if (i == 4) throw std::runtime_error("x");
                                }),
               std::runtime_error);
  // pool is still usable afterwards
  std::atomic<int> n{0};
  pool.ParallelFor(5, [&](std::size_t) { ++n; });
  EXPECT_EQ(n.load(), 5);
}

}  // namespace
}  // namespace dexmpc
