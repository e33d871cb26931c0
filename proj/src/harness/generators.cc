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


#include "fusematch/harness/generators.h"

#include <array>
#include <stdexcept>

namespace fm {

namespace {

GraphlikePart make_part(DetectorId a, DetectorId b, ObservableMask obs) {
    GraphlikePart part;
    part.first = std::min(a, b);
    part.second = std::max(a, b);
    part.observables = obs;
    return part;
}

GraphlikePart boundary_part(DetectorId a, ObservableMask obs) {
    GraphlikePart part;
    part.first = a;
    part.observables = obs;
    return part;
}

}  // namespace

NoiseModel repetition_code_model(uint32_t distance, uint64_t cycles, double p) {
    if (distance < 2 || cycles < 2) {
        throw std::invalid_argument("repetition code needs distance >= 2 and at least 2 cycles");
    }
    NoiseModel m;
    m.detectors_per_cycle = distance - 1;
    m.num_observables = 1;
    m.period = 1;
    m.prologue_cycles = 0;
    m.epilogue_cycles = 1;
    const uint32_t n = distance - 1;
    for (uint64_t c = 0; c < cycles; c++) {
        const DetectorId base = c * n;
        for (uint32_t q = 0; q < distance; q++) {
            ErrorMechanism e{p, {}};
            if (q == 0) {
                e.parts.push_back(boundary_part(base, 1));
            } else if (q == distance - 1) {
                e.parts.push_back(boundary_part(base + n - 1, 0));
            } else {
                e.parts.push_back(make_part(base + q - 1, base + q, 0));
            }
            m.mechanisms.push_back(std::move(e));
        }
        if (c + 1 < cycles) {
            for (uint32_t s = 0; s < n; s++) {
                m.mechanisms.push_back({p, {make_part(base + s, base + n + s, 0)}});
            }
        }
    }
    return m;
}

NoiseModel toy_surface_code_model(uint64_t cycles, ToySurfaceRates rates) {
    if (cycles < 2) {
        throw std::invalid_argument("the toy surface code needs at least 2 cycles");
    }
    // Stabilizers touching each data qubit of the 3x3 patch (-1 = none).
    constexpr std::array<std::array<int, 2>, 9> kZChecks{{
        {0, -1}, {0, -1}, {2, -1}, {0, 3}, {0, 1}, {1, 2}, {3, -1}, {1, -1}, {1, -1},
    }};
    constexpr std::array<std::array<int, 2>, 9> kXChecks{{
        {2, -1}, {0, 2}, {0, -1}, {1, -1}, {0, 1}, {0, -1}, {1, -1}, {1, 3}, {3, -1},
    }};
    constexpr uint32_t kDetectors = 8;

    NoiseModel m;
    m.detectors_per_cycle = kDetectors;
    m.num_observables = 2;
    m.period = 1;
    m.prologue_cycles = 0;
    m.epilogue_cycles = 1;

    for (uint64_t c = 0; c < cycles; c++) {
        const DetectorId base = c * kDetectors;
        for (int q = 0; q < 9; q++) {
            // An X error is seen by the Z checks and flips L0 on the top row;
            // a Z error is seen by the X checks and flips L1 on the left column.
            auto part_for = [&](const std::array<int, 2> &checks, DetectorId offset, ObservableMask obs) {
                if (checks[1] < 0) {
                    return boundary_part(base + offset + checks[0], obs);
                }
                return make_part(base + offset + checks[0], base + offset + checks[1], obs);
            };
            GraphlikePart x_part = part_for(kZChecks[q], 0, q < 3 ? 1 : 0);
            GraphlikePart z_part = part_for(kXChecks[q], 4, q % 3 == 0 ? 2 : 0);
            m.mechanisms.push_back({rates.x, {x_part}});
            m.mechanisms.push_back({rates.z, {z_part}});
            m.mechanisms.push_back({rates.y, {x_part, z_part}});
        }
        if (c + 1 < cycles) {
            for (uint32_t s = 0; s < kDetectors; s++) {
                m.mechanisms.push_back({rates.measurement, {make_part(base + s, base + kDetectors + s, 0)}});
            }
        }
    }
    return m;
}

}  // namespace fm
