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

#ifndef FUSEMATCH_MODEL_NOISE_MODEL_H
#define FUSEMATCH_MODEL_NOISE_MODEL_H

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fusematch/common.h"

namespace fm {

/// One graphlike component of an error mechanism: one or two detectors plus
/// the observables it flips. `second == kBoundaryDetector` for a single
/// detector part. Always stored with first < second.
struct GraphlikePart {
    DetectorId first = 0;
    DetectorId second = kBoundaryDetector;
    ObservableMask observables = 0;

    bool is_boundary() const {
        return second == kBoundaryDetector;
    }
    bool operator==(const GraphlikePart &other) const = default;
    auto operator<=>(const GraphlikePart &other) const = default;
};

struct ErrorMechanism {
    double probability = 0;
    std::vector<GraphlikePart> parts;

    bool operator==(const ErrorMechanism &other) const = default;
};

/// Detector error model plus the periodicity metadata used for streaming.
struct NoiseModel {
    uint32_t detectors_per_cycle = 0;
    uint32_t num_observables = 0;
    uint32_t period = 1;
    uint32_t prologue_cycles = 0;
    uint32_t epilogue_cycles = 0;
    std::vector<ErrorMechanism> mechanisms;

    /// Number of cycles needed to hold every detector referenced by a mechanism.
    uint64_t num_cycles() const;
    uint64_t num_detectors() const {
        return num_cycles() * detectors_per_cycle;
    }
    uint64_t cycle_of(DetectorId d) const {
        return d / detectors_per_cycle;
    }

    bool operator==(const NoiseModel &other) const = default;
};

/// Parse failure with the 1-based line and column of the offending token.
class DemParseError : public FormatError {
   public:
    DemParseError(size_t line, size_t column, const std::string &message);
    size_t line;
    size_t column;
};

NoiseModel parse_dem(std::string_view text);
NoiseModel read_dem_file(const std::string &path);

/// Sorts parts within each mechanism and mechanisms by
/// (first detector, second detector, probability).
NoiseModel canonicalize(NoiseModel model);

/// Canonical text form: headers first, then mechanisms in canonical order.
std::string serialize_dem(const NoiseModel &model);

/// Streaming view of a periodic model. Mechanisms are classified by the cycle
/// of their lowest detector: prologue cycles are kept in place, epilogue
/// cycles move with the end of the shot, and bulk cycles are copies of the
/// first bulk period.
class PeriodicModel {
   public:
    /// Throws std::invalid_argument if the bulk of `model` does not repeat.
    explicit PeriodicModel(NoiseModel model);

    const NoiseModel &base() const {
        return base_;
    }
    uint32_t detectors_per_cycle() const {
        return base_.detectors_per_cycle;
    }
    /// Largest (max cycle - min cycle) over all mechanisms.
    uint32_t span() const {
        return span_;
    }
    bool supports_cycles(uint64_t total_cycles) const;

    /// Mechanisms (translated to their position in a shot of `total_cycles`)
    /// whose lowest detector lies in cycles [lo, hi).
    std::vector<ErrorMechanism> mechanisms_in_cycles(uint64_t lo, uint64_t hi, uint64_t total_cycles) const;

    /// The whole model re-laid for a shot of `total_cycles` cycles.
    NoiseModel extrapolate(uint64_t total_cycles) const;

   private:
    NoiseModel base_;
    uint64_t base_cycles_ = 0;
    uint32_t span_ = 0;
    std::vector<std::vector<uint32_t>> by_min_cycle_;
};

}  // namespace fm

#endif  // FUSEMATCH_MODEL_NOISE_MODEL_H
