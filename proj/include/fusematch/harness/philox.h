// Copyright 2026 Fusematch Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef FUSEMATCH_HARNESS_PHILOX_H
#define FUSEMATCH_HARNESS_PHILOX_H

#include <array>
#include <cstdint>

namespace fm {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// the output is a pure function of (counter, key), which makes every
/// sampled bit reproducible from its coordinates alone.
class Philox4x32 {
   public:
    using Counter = std::array<uint32_t, 4>;
    using Key = std::array<uint32_t, 2>;

    static Counter generate(Counter counter, Key key) {
        for (int round = 0; round < 10; round++) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            uint64_t p0 = (uint64_t)kMul0 * counter[0];
            uint64_t p1 = (uint64_t)kMul1 * counter[2];
            counter = {
                (uint32_t)(p1 >> 32) ^ counter[1] ^ key[0],
                (uint32_t)p1,
                (uint32_t)(p0 >> 32) ^ counter[3] ^ key[1],
                (uint32_t)p0,
            };
        }
        return counter;
    }

    /// Uniform double in [0, 1) with 53 random bits, from stream `a` and
    /// position `b` under `seed`.
    static double uniform(uint64_t seed, uint64_t a, uint64_t b) {
        Counter c = generate(
            {(uint32_t)a, (uint32_t)(a >> 32), (uint32_t)b, (uint32_t)(b >> 32)},
            {(uint32_t)seed, (uint32_t)(seed >> 32)});
        uint64_t bits = ((uint64_t)c[0] << 32 | c[1]) >> 11;
        return (double)bits * 0x1.0p-53;
    }

   private:
    static constexpr uint32_t kMul0 = 0xD2511F53;
    static constexpr uint32_t kMul1 = 0xCD9E8D57;
    static constexpr uint32_t kWeyl0 = 0x9E3779B9;
    static constexpr uint32_t kWeyl1 = 0xBB67AE85;
};

}  // namespace fm

#endif  // FUSEMATCH_HARNESS_PHILOX_H
