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

#include "fusematch/model/matching_graph.h"

#include <algorithm>
#include <cmath>
#include <map>

namespace fm {

double weight_from_probability(double p) {
    return std::log((1 - p) / p);
}

std::span<const uint32_t> MatchingGraph::incident_edges(DetectorId d) const {
    if (!contains(d)) {
        return {};
    }
    size_t k = d - first_detector();
    return {adjacency_.data() + adjacency_offsets_[k], adjacency_.data() + adjacency_offsets_[k + 1]};
}

std::optional<uint32_t> MatchingGraph::find_edge(DetectorId u, DetectorId v) const {
    if (u > v) {
        std::swap(u, v);
    }
    for (uint32_t e : incident_edges(u)) {
        if (edges[e].u == u && edges[e].v == v) {
            return e;
        }
    }
    return std::nullopt;
}

bool MatchingGraph::has_boundary_edges() const {
    return std::any_of(edges.begin(), edges.end(), [](const Edge &e) {
        return e.is_boundary();
    });
}

MatchingGraph build_matching_graph(
    uint32_t detectors_per_cycle,
    uint32_t num_observables,
    uint64_t first_cycle,
    uint64_t num_cycles,
    std::span<const ErrorMechanism> mechanisms) {
    MatchingGraph g;
    g.detectors_per_cycle = detectors_per_cycle;
    g.num_observables = num_observables;
    g.first_cycle = first_cycle;
    g.num_cycles = num_cycles;

    struct Accum {
        double probability;
        ObservableMask observables;
    };
    using Key = std::pair<DetectorId, DetectorId>;
    std::map<Key, Accum> merged;
    std::vector<std::vector<Key>> hyperedges;

    auto check_detector = [&](DetectorId d) {
        if (!g.contains(d)) {
            throw std::invalid_argument(
                "detector D" + std::to_string(d) + " lies outside cycles [" + std::to_string(first_cycle) + ", " +
                std::to_string(first_cycle + num_cycles) + ")");
        }
    };

    for (const auto &m : mechanisms) {
        if (!(m.probability > 0 && m.probability <= 0.5)) {
            throw std::invalid_argument(
                "mechanism probability " + std::to_string(m.probability) + " is outside (0, 0.5]");
        }
        std::vector<Key> keys;
        for (const auto &part : m.parts) {
            check_detector(part.first);
            if (!part.is_boundary()) {
                check_detector(part.second);
            }
            Key key{part.first, part.second};
            if (std::find(keys.begin(), keys.end(), key) != keys.end()) {
                throw std::invalid_argument(
                    "degenerate decomposition: two parts of one mechanism map to edge (D" + std::to_string(key.first) +
                    (part.is_boundary() ? ", boundary)" : ", D" + std::to_string(key.second) + ")"));
            }
            keys.push_back(key);
            auto [it, inserted] = merged.try_emplace(key, Accum{m.probability, part.observables});
            if (!inserted) {
                // Parallel mechanisms keep the first observable mask; a
                // disagreement would mean a distance-two code.
                it->second.probability = std::min(0.5, merge_probabilities(it->second.probability, m.probability));
            }
        }
        if (keys.size() >= 2) {
            hyperedges.push_back(std::move(keys));
        }
    }

    std::map<Key, uint32_t> ids;
    g.edges.reserve(merged.size());
    for (const auto &[key, acc] : merged) {
        ids[key] = (uint32_t)g.edges.size();
        g.edges.push_back(Edge{key.first, key.second, acc.probability, weight_from_probability(acc.probability),
                               acc.observables});
    }

    g.correlations.resize(g.edges.size());
    std::map<std::pair<uint32_t, uint32_t>, double> joint;
    for (size_t h = 0, mi = 0; mi < mechanisms.size(); mi++) {
        if (mechanisms[mi].parts.size() < 2) {
            continue;
        }
        const auto &keys = hyperedges[h++];
        for (size_t i = 0; i < keys.size(); i++) {
            for (size_t j = i + 1; j < keys.size(); j++) {
                uint32_t a = ids[keys[i]];
                uint32_t b = ids[keys[j]];
                auto pair_key = std::minmax(a, b);
                auto [it, inserted] = joint.try_emplace({pair_key.first, pair_key.second}, mechanisms[mi].probability);
                if (!inserted) {
                    it->second = std::min(0.5, merge_probabilities(it->second, mechanisms[mi].probability));
                }
            }
        }
    }
    for (const auto &[pair, p] : joint) {
        g.correlations[pair.first].push_back({pair.second, p});
        g.correlations[pair.second].push_back({pair.first, p});
    }
    for (auto &list : g.correlations) {
        std::sort(list.begin(), list.end(), [](const CorrelationEntry &a, const CorrelationEntry &b) {
            return a.partner < b.partner;
        });
    }

    const size_t n = num_cycles * detectors_per_cycle;
    g.adjacency_offsets_.assign(n + 1, 0);
    const DetectorId base = g.first_detector();
    for (const auto &e : g.edges) {
        g.adjacency_offsets_[e.u - base + 1]++;
        if (!e.is_boundary()) {
            g.adjacency_offsets_[e.v - base + 1]++;
        }
    }
    for (size_t k = 0; k < n; k++) {
        g.adjacency_offsets_[k + 1] += g.adjacency_offsets_[k];
    }
    g.adjacency_.resize(g.adjacency_offsets_[n]);
    std::vector<uint32_t> fill(g.adjacency_offsets_.begin(), g.adjacency_offsets_.end() - 1);
    for (uint32_t e = 0; e < g.edges.size(); e++) {
        g.adjacency_[fill[g.edges[e].u - base]++] = e;
        if (!g.edges[e].is_boundary()) {
            g.adjacency_[fill[g.edges[e].v - base]++] = e;
        }
    }
    return g;
}

MatchingGraph build_matching_graph(const NoiseModel &model) {
    if (model.detectors_per_cycle == 0) {
        throw std::invalid_argument("detectors_per_cycle must be positive");
    }
    return build_matching_graph(
        model.detectors_per_cycle, model.num_observables, 0, model.num_cycles(), model.mechanisms);
}

}  // namespace fm
