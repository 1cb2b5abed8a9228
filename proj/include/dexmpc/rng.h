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

#ifndef DEXMPC_RNG_H_
#define DEXMPC_RNG_H_

#include <array>
#include <cstdint>

namespace dexmpc {

// Philox4x32-10 block cipher (Salmon et al., SC'11). Maps a 128-bit counter
// and 64-bit key to 128 random bits; no internal state.
std::array<uint32_t, 4> Philox4x32(std::array<uint32_t, 4> counter,
                                   std::array<uint32_t, 2> key);

// Counter-based random stream identified by (seed, stream, substream).
// The n-th draw depends only on the identifiers and n, so streams can be
// consumed from any thread in any order with identical results.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t stream, uint32_t substream = 0);

  uint32_t NextU32();
  // uniform in the open interval (0, 1)
  double Uniform();
  // standard normal via Box-Muller
  double Normal();
  // uniform integer in [0, n)
  uint32_t Below(uint32_t n);

 private:
  void Refill();

  std::array<uint32_t, 2> key_;
  uint64_t stream_;
  uint32_t substream_;
  uint32_t block_ = 0;
  std::array<uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace dexmpc

#endif  // DEXMPC_RNG_H_
