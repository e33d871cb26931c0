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


#ifndef FUSEMATCH_CORRELATIONS_PREWEIGHT_H
#define FUSEMATCH_CORRELATIONS_PREWEIGHT_H

#include <span>
#include <vector>

#include "fusematch/engine/local_graph.h"

namespace fm {

/// Edges whose error is made likely by the detection pattern: both endpoints
/// fired, or a boundary edge whose fired endpoint has no fired neighbour.
/// Ascending edge ids of the view.
struct SeedEdgeSet {
    std::vector<uint32_t> edges;

    bool operator==(const SeedEdgeSet &other) const = default;
};

/// `events` are detector offsets relative to the view's first detector,
/// sorted ascending. Offsets outside [0, num_nodes) describe fired detectors
/// just beyond the cuts, so cut edges and adjacency across a cut are judged
/// with the real neighbours.
SeedEdgeSet select_seed_edges(const LocalGraph &view, std::span<const int64_t> events);

/// Probability of the partner edge after conditioning on the seed edge's
/// error: q = p_joint / p_edge XOR-composed with the partner's own
/// probability, capped at 0.5 so the weight stays non-negative.
double posterior_probability(double p_edge, double p_joint, double p_partner);

struct ReweightEntry {
    uint32_t edge = 0;
    double original_weight = 0;
    double new_weight = 0;

    bool operator==(const ReweightEntry &other) const = default;
};

/// Record of one preweight pass, used to restore the overlay exactly.
class ReweightLog {
   public:
    const std::vector<ReweightEntry> &entries() const {
        return entries_;
    }
    bool undone() const {
        return undone_;
    }
    bool empty() const {
        return entries_.empty();
    }

   private:
    friend ReweightLog apply_preweights(const LocalGraph &, std::span<double>, const SeedEdgeSet &);
    friend void undo_reweights(std::span<double>, ReweightLog &);

    std::vector<ReweightEntry> entries_;
    bool undone_ = false;
};

/// Lowers the weights of every partner of every seed edge in `weights` (an
/// overlay of the view). Seeds are applied in ascending id; an edge hit by
/// several seeds composes the updates and appears once in the log.
ReweightLog apply_preweights(const LocalGraph &view, std::span<double> weights, const SeedEdgeSet &seeds);

/// Restores the weights recorded in `log`. Undoing twice is a contract
/// violation.
void undo_reweights(std::span<double> weights, ReweightLog &log);

}  // namespace fm

#endif  // FUSEMATCH_CORRELATIONS_PREWEIGHT_H
