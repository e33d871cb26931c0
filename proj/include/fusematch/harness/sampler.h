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


#ifndef FUSEMATCH_HARNESS_SAMPLER_H
#define FUSEMATCH_HARNESS_SAMPLER_H

#include <vector>

#include "fusematch/model/noise_model.h"

namespace fm {

struct ShotSample {
    uint64_t shot = 0;
    uint64_t num_cycles = 0;
    uint32_t detectors_per_cycle = 0;
    /// Fired detectors, ascending.
    std::vector<DetectorId> detectors;
    /// XOR of the observable masks of the mechanisms that fired.
    ObservableMask observables = 0;

    uint64_t num_detectors() const {
        return num_cycles * detectors_per_cycle;
    }
    bool operator==(const ShotSample &other) const = default;
};

/// Samples shot `shot` of `model` as laid out (no extrapolation). Mechanism k
/// fires iff Philox4x32::uniform(seed, shot, k) < p_k.
ShotSample sample_shot(const NoiseModel &model, uint64_t shot, uint64_t seed);

/// Samples shots [first_shot, first_shot + shots) for a shot length of
/// `cycles` (extrapolating periodic models when it differs from the model's
/// own length), spread over `threads` workers. Results do not depend on the
/// thread count.
std::vector<ShotSample> sample_shots(
    const NoiseModel &model, uint64_t shots, uint64_t cycles, uint64_t seed, unsigned threads = 1,
    uint64_t first_shot = 0);

/// Resolves the model for a shot length: the model itself when it already
/// spans `cycles`, otherwise its periodic extrapolation.
NoiseModel model_for_cycles(const NoiseModel &model, uint64_t cycles);

/// Fraction of detector slots that fired. Throws std::invalid_argument for an
/// empty sample set.
double detection_fraction(const std::vector<ShotSample> &samples);

}  // namespace fm

#endif  // FUSEMATCH_HARNESS_SAMPLER_H
