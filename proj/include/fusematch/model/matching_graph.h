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

#ifndef FUSEMATCH_MODEL_MATCHING_GRAPH_H
#define FUSEMATCH_MODEL_MATCHING_GRAPH_H

#include <optional>
#include <span>
#include <vector>

#include "fusematch/model/noise_model.h"

namespace fm {

/// Log-likelihood ratio weight ln((1 - p) / p).
double weight_from_probability(double p);

/// Probability that exactly one of two independent mechanisms fires.
inline double merge_probabilities(double p1, double p2) {
    return p1 * (1 - p2) + p2 * (1 - p1);
}

struct Edge {
    DetectorId u = 0;
    DetectorId v = kBoundaryDetector;  // kBoundaryDetector for boundary edges
    double probability = 0;
    double weight = 0;
    ObservableMask observables = 0;

    bool is_boundary() const {
        return v == kBoundaryDetector;
    }
    bool operator==(const Edge &other) const = default;
};

struct CorrelationEntry {
    uint32_t partner = 0;
    double joint_probability = 0;

    bool operator==(const CorrelationEntry &other) const = default;
};

/// Weighted matching graph over a contiguous cycle range. Edges are merged
/// per endpoint pair and sorted by (u, v), so an edge's id is its rank in
/// that order. Immutable once built.
class MatchingGraph {
   public:
    uint32_t detectors_per_cycle = 0;
    uint32_t num_observables = 0;
    uint64_t first_cycle = 0;
    uint64_t num_cycles = 0;

    std::vector<Edge> edges;
    /// Per-edge partners from decomposed hyperedges; symmetric.
    std::vector<std::vector<CorrelationEntry>> correlations;

    DetectorId first_detector() const {
        return first_cycle * detectors_per_cycle;
    }
    DetectorId end_detector() const {
        return (first_cycle + num_cycles) * detectors_per_cycle;
    }
    bool contains(DetectorId d) const {
        return d >= first_detector() && d < end_detector();
    }
    /// Ids of the edges touching `d`, in ascending order.
    std::span<const uint32_t> incident_edges(DetectorId d) const;
    std::optional<uint32_t> find_edge(DetectorId u, DetectorId v) const;
    bool has_boundary_edges() const;

    friend MatchingGraph build_matching_graph(
        uint32_t, uint32_t, uint64_t, uint64_t, std::span<const ErrorMechanism>);

   private:
    std::vector<uint32_t> adjacency_offsets_;
    std::vector<uint32_t> adjacency_;
};

/// Builds the graph for cycles [first_cycle, first_cycle + num_cycles).
/// Every detector of every mechanism must lie in that range. Throws
/// std::invalid_argument for p > 0.5 or a hyperedge whose parts collapse onto
/// the same edge.
MatchingGraph build_matching_graph(
    uint32_t detectors_per_cycle,
    uint32_t num_observables,
    uint64_t first_cycle,
    uint64_t num_cycles,
    std::span<const ErrorMechanism> mechanisms);

MatchingGraph build_matching_graph(const NoiseModel &model);

}  // namespace fm

#endif  // FUSEMATCH_MODEL_MATCHING_GRAPH_H
