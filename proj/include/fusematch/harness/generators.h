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


#ifndef FUSEMATCH_HARNESS_GENERATORS_H
#define FUSEMATCH_HARNESS_GENERATORS_H

#include "fusematch/model/noise_model.h"

namespace fm {

/// Phenomenological repetition-code memory experiment. Detector cycle c has
/// distance - 1 detectors; every data qubit flips with probability `p` in
/// every cycle and every stabilizer measurement between consecutive cycles
/// fails with probability `p`. Observable 0 is the parity of data qubit 0.
NoiseModel repetition_code_model(uint32_t distance, uint64_t cycles, double p);

/// Distance-3 rotated surface code with a phenomenological noise model in
/// which Y errors are listed as two-part mechanisms (X part ^ Z part).
/// Detectors 0-3 of each cycle check Z stabilizers, 4-7 check X
/// stabilizers. L0 is the X logical and L1 the Z logical.
struct ToySurfaceRates {
    double x = 0.002;
    double z = 0.002;
    double y = 0.01;
    double measurement = 0.002;
};
NoiseModel toy_surface_code_model(uint64_t cycles, ToySurfaceRates rates);

}  // namespace fm

#endif  // FUSEMATCH_HARNESS_GENERATORS_H
