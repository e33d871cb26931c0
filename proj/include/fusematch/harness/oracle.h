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


#ifndef FUSEMATCH_HARNESS_ORACLE_H
#define FUSEMATCH_HARNESS_ORACLE_H

#include <span>

#include "fusematch/engine/matcher.h"

namespace fm {

constexpr size_t kOracleMaxEvents = 14;

/// Exhaustive minimum-weight matching: shortest paths from every event, then
/// a dynamic program over all subsets of events. Among optima within 1e-12
/// (relative) the lexicographically smallest sorted pair list wins, with
/// event targets ordered before the boundary. Throws std::invalid_argument
/// above kOracleMaxEvents events.
Matching oracle_decode(const MatchingGraph &graph, std::span<const DetectorId> events);

}  // namespace fm

#endif  // FUSEMATCH_HARNESS_ORACLE_H
