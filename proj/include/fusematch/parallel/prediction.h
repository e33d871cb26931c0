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


#ifndef FUSEMATCH_PARALLEL_PREDICTION_H
#define FUSEMATCH_PARALLEL_PREDICTION_H

#include <cstdint>
#include <optional>

#include "fusematch/engine/matcher.h"

namespace fm {

/// Final decoder output for one shot.
struct Prediction {
    uint64_t shot = 0;
    ObservableMask observables = 0;
    /// Some region was still matched to a block boundary after all fuses.
    bool heralded = false;
    /// Total weight of the assembled matching.
    double weight = 0;
    /// The assembled matching, when the pipeline was asked to keep it.
    std::optional<Matching> matching;
};

}  // namespace fm

#endif  // FUSEMATCH_PARALLEL_PREDICTION_H
