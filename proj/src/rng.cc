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

#include <cmath>
#include <numbers>

namespace dexmpc {
namespace {

constexpr uint32_t kPhiloxW32A = 0x9E3779B9;
constexpr uint32_t kPhiloxW32B = 0xBB67AE85;
constexpr uint32_t kPhiloxM4x32A = 0xD2511F53;
constexpr uint32_t kPhiloxM4x32B = 0xCD9E8D57;

inline void MulHiLo(uint32_t a, uint32_t b, uint32_t& lo, uint32_t& hi) {
  const uint64_t product = static_cast<uint64_t>(a) * b;
  lo = static_cast<uint32_t>(product);
  hi = static_cast<uint32_t>(product >> 32);
}

}  // namespace

std::array<uint32_t, 4> Philox4x32(std::array<uint32_t, 4> ctr,
                                   std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    uint32_t lo0, hi0, lo1, hi1;
    MulHiLo(kPhiloxM4x32A, ctr[0], lo0, hi0);
    MulHiLo(kPhiloxM4x32B, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW32A;
    key[1] += kPhiloxW32B;
  }
  return ctr;
}

CounterRng::CounterRng(uint64_t seed, uint64_t stream, uint32_t substream)
    : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
      stream_(stream),
      substream_(substream) {}

void CounterRng::Refill() {
  buffer_ = Philox4x32({block_, substream_, static_cast<uint32_t>(stream_),
                        static_cast<uint32_t>(stream_ >> 32)},
                       key_);
  ++block_;
  used_ = 0;
}

uint32_t CounterRng::NextU32() {
  if (used_ == 4) Refill();
  return buffer_[used_++];
}

double CounterRng::Uniform() {
  // 53 random bits, shifted off zero so log() is always finite
  const uint64_t hi = NextU32() >> 5;
  const uint64_t lo = NextU32() >> 6;
  return (static_cast<double>((hi << 26) | lo) + 0.5) * 0x1.0p-53;
}

double CounterRng::Normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = Uniform();
  const double u2 = Uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(phi);
  has_spare_normal_ = true;
  return r * std::cos(phi);
}

uint32_t CounterRng::Below(uint32_t n) {
  // Lemire's multiply-shift with rejection; unbiased
  uint64_t m = static_cast<uint64_t>(NextU32()) * n;
  uint32_t low = static_cast<uint32_t>(m);
  if (low < n) {
    const uint32_t threshold = (0u - n) % n;
    while (low < threshold) {
      m = static_cast<uint64_t>(NextU32()) * n;
      low = static_cast<uint32_t>(m);
    }
  }
  return static_cast<uint32_t>(m >> 32);
}

}  // namespace dexmpc
