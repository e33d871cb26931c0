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

#ifndef FUSEMATCH_ENGINE_BLOSSOM_H
#define FUSEMATCH_ENGINE_BLOSSOM_H

#include <cstdint>
#include <span>
#include <vector>

namespace fm {

struct IntegerEdge {
    int32_t i;
    int32_t j;
    int64_t weight;
};

/// Edmonds' weighted blossom algorithm with primal-dual updates, O(n^3).
/// Integer weights keep every dual update exact. With `max_cardinality` the
/// result has maximum weight among matchings of maximum cardinality.
/// Returns mate[v] (or -1) for every vertex.
std::vector<int32_t> max_weight_matching(
    int32_t num_vertices, std::span<const IntegerEdge> edges, bool max_cardinality);

}  // namespace fm

#endif  // FUSEMATCH_ENGINE_BLOSSOM_H
