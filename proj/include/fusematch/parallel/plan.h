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


#ifndef FUSEMATCH_PARALLEL_PLAN_H
#define FUSEMATCH_PARALLEL_PLAN_H

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fm {

using FusePair = std::pair<uint64_t, uint64_t>;

/// Two layers of fuses over a row of blocks: layer 1 joins each even block
/// with the odd block after it, layer 2 joins each odd block with the even
/// block after it. Every internal cut is fused by exactly one layer.
struct BlockPlan {
    uint32_t block_cycles = 0;
    uint64_t total_blocks = 0;
    std::vector<FusePair> layer1;
    std::vector<FusePair> layer2;

    bool operator==(const BlockPlan &other) const = default;
};

BlockPlan plan_fusion(uint64_t num_blocks, uint32_t block_cycles = 0);

/// The layer-1 unit (index k covers blocks 2k and 2k+1) containing `block`.
inline uint64_t layer1_unit(uint64_t block) {
    return block / 2;
}

struct CodeDescriptor {
    /// "surface" or "repetition"; ignored when block_cycles is given.
    std::string family;
    uint32_t distance = 0;
    std::optional<uint32_t> block_cycles;
};

/// Cycles per block: the preset for the named code, or the explicit value.
/// Throws std::invalid_argument for an explicit value below 2 or a code
/// without a preset.
uint32_t choose_block_size(const CodeDescriptor &code);

}  // namespace fm

#endif  // FUSEMATCH_PARALLEL_PLAN_H
