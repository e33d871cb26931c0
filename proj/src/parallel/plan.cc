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


#include "fusematch/parallel/plan.h"

#include <stdexcept>

namespace fm {

BlockPlan plan_fusion(uint64_t num_blocks, uint32_t block_cycles) {
    if (num_blocks == 0) {
        throw std::invalid_argument("a fusion plan needs at least one block");
    }
    BlockPlan plan;
    plan.block_cycles = block_cycles;
    plan.total_blocks = num_blocks;
    for (uint64_t b = 0; b + 1 < num_blocks; b++) {
        (b % 2 == 0 ? plan.layer1 : plan.layer2).emplace_back(b, b + 1);
    }
    return plan;
}

uint32_t choose_block_size(const CodeDescriptor &code) {
    if (code.block_cycles) {
        if (*code.block_cycles < 2) {
            throw std::invalid_argument(
                "blocks need at least 2 cycles, got " + std::to_string(*code.block_cycles));
        }
        return *code.block_cycles;
    }
    if (code.family == "surface" && (code.distance == 3 || code.distance == 5)) {
        return 10;
    }
    if (code.family == "repetition" && code.distance == 29) {
        return 90;
    }
    throw std::invalid_argument(
        "no block-size preset for " + code.family + " code of distance " + std::to_string(code.distance) +
        "; pass an explicit block size");
}

}  // namespace fm
