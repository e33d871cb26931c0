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


#include "fusematch/harness/sampler.h"

#include <algorithm>
#include <stdexcept>
#include <thread>

#include "fusematch/harness/philox.h"

namespace fm {

ShotSample sample_shot(const NoiseModel &model, uint64_t shot, uint64_t seed) {
    ShotSample s;
    s.shot = shot;
    s.num_cycles = model.num_cycles();
    s.detectors_per_cycle = model.detectors_per_cycle;
    for (uint64_t k = 0; k < model.mechanisms.size(); k++) {
        const ErrorMechanism &m = model.mechanisms[k];
        if (!(Philox4x32::uniform(seed, shot, k) < m.probability)) {
            continue;
        }
        for (const auto &part : m.parts) {
            s.detectors.push_back(part.first);
            if (!part.is_boundary()) {
                s.detectors.push_back(part.second);
            }
            s.observables ^= part.observables;
        }
    }
    // XOR accumulation: a detector fired an even number of times is quiet.
    std::sort(s.detectors.begin(), s.detectors.end());
    size_t out = 0;
    for (size_t i = 0; i < s.detectors.size();) {
        size_t j = i;
        while (j < s.detectors.size() && s.detectors[j] == s.detectors[i]) {
            j++;
        }
        if ((j - i) % 2 == 1) {
            s.detectors[out++] = s.detectors[i];
        }
        i = j;
    }
    s.detectors.resize(out);
    return s;
}

NoiseModel model_for_cycles(const NoiseModel &model, uint64_t cycles) {
    if (cycles == 0 || cycles == model.num_cycles()) {
        return model;
    }
    return PeriodicModel(model).extrapolate(cycles);
}

std::vector<ShotSample> sample_shots(
    const NoiseModel &model, uint64_t shots, uint64_t cycles, uint64_t seed, unsigned threads, uint64_t first_shot) {
    NoiseModel laid_out = model_for_cycles(model, cycles);
    std::vector<ShotSample> out(shots);
    threads = std::max(1u, std::min<unsigned>(threads, (unsigned)std::max<uint64_t>(1, shots)));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; t++) {
        pool.emplace_back([&, t] {
            for (uint64_t i = t; i < shots; i += threads) {
                out[i] = sample_shot(laid_out, first_shot + i, seed);
            }
        });
    }
    for (auto &th : pool) {
        th.join();
    }
    return out;
}

double detection_fraction(const std::vector<ShotSample> &samples) {
    if (samples.empty()) {
        throw std::invalid_argument("detection_fraction needs at least one sample");
    }
    uint64_t fired = 0;
    uint64_t slots = 0;
    for (const auto &s : samples) {
        fired += s.detectors.size();
        slots += s.num_detectors();
    }
    if (slots == 0) {
        throw std::invalid_argument("samples contain no detector slots");
    }
    return (double)fired / (double)slots;
}

}  // namespace fm
