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

#ifndef FUSEMATCH_COMMON_H
#define FUSEMATCH_COMMON_H

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace fm {

/// Bit i set means logical observable i is flipped.
using ObservableMask = uint64_t;

constexpr uint32_t kMaxObservables = 64;

/// Global detector index (cycle * detectors_per_cycle + local index).
using DetectorId = uint64_t;

/// Placeholder endpoint used by edges that terminate on the graph boundary.
constexpr DetectorId kBoundaryDetector = std::numeric_limits<DetectorId>::max();

/// Malformed input: DEM text, stream framing, JSON files. Maps to exit code 2.
class FormatError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// An API was called outside its contract. Maps to exit code 3.
class ContractViolation : public std::logic_error {
   public:
    using std::logic_error::logic_error;
};

std::string mask_to_hex(ObservableMask mask);
ObservableMask mask_from_hex(const std::string &text);

}  // namespace fm

#endif  // FUSEMATCH_COMMON_H
