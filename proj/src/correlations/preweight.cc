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


#include "fusematch/correlations/preweight.h"

#include <algorithm>
#include <cmath>
#include <map>

namespace fm {

namespace {

bool fired(std::span<const int64_t> events, int64_t offset) {
    return std::binary_search(events.begin(), events.end(), offset);
}

int64_t far_end(const LocalEdge &e) {
    return e.is_cut() ? e.outer_offset : (int64_t)e.v;
}

}  // namespace

SeedEdgeSet select_seed_edges(const LocalGraph &view, std::span<const int64_t> events) {
    SeedEdgeSet seeds;
    for (int64_t ev : events) {
        if (ev < 0 || ev >= (int64_t)view.num_nodes) {
            continue;
        }
        const uint32_t u = (uint32_t)ev;
        bool lonely = true;
        for (uint32_t k : view.incident(u)) {
            const LocalEdge &e = view.edges[k];
            if (e.v == kGraphBoundaryNode) {
                continue;
            }
            int64_t other = e.u == u ? far_end(e) : (int64_t)e.u;
            if (fired(events, other)) {
                lonely = false;
                // Internal edges are reached from both ends; record once.
                if (e.is_cut() || u == e.u) {
                    seeds.edges.push_back(k);
                }
            }
        }
        if (lonely) {
            for (uint32_t k : view.incident(u)) {
                if (view.edges[k].v == kGraphBoundaryNode) {
                    seeds.edges.push_back(k);
                }
            }
        }
    }
    std::sort(seeds.edges.begin(), seeds.edges.end());
    return seeds;
}

double posterior_probability(double p_edge, double p_joint, double p_partner) {
    double q = p_joint / p_edge;
    double p = q + p_partner - 2 * q * p_partner;
    return std::min(p, 0.5);
}

ReweightLog apply_preweights(const LocalGraph &view, std::span<double> weights, const SeedEdgeSet &seeds) {
    if (weights.size() != view.edges.size()) {
        throw ContractViolation("weight overlay size does not match the view");
    }
    ReweightLog log;
    // Current probability of each touched partner; composition happens in
    // probability space and the weight is written once at the end.
    std::map<uint32_t, double> updated;
    for (uint32_t seed : seeds.edges) {
        const double p_seed = view.edges[seed].probability;
        for (const auto &partner : view.partners[seed]) {
            auto it = updated.find(partner.edge);
            if (it == updated.end()) {
                double w = weights[partner.edge];
                double p = w == view.weights[partner.edge] ? view.edges[partner.edge].probability : 1 / (1 + std::exp(w));
                it = updated.emplace(partner.edge, p).first;
            }
            it->second = posterior_probability(p_seed, partner.joint_probability, it->second);
        }
    }
    for (const auto &[edge, p] : updated) {
        double w = weight_from_probability(p);
        if (w > weights[edge]) {
            // Never raise a weight, even by rounding.
            w = weights[edge];
        }
        log.entries_.push_back({edge, weights[edge], w});
        weights[edge] = w;
    }
    return log;
}

void undo_reweights(std::span<double> weights, ReweightLog &log) {
    if (log.undone_) {
        throw ContractViolation("reweight log undone twice");
    }
    for (auto it = log.entries_.rbegin(); it != log.entries_.rend(); ++it) {
        if (it->edge >= weights.size()) {
            throw ContractViolation("reweight log does not belong to this overlay");
        }
        weights[it->edge] = it->original_weight;
    }
    log.undone_ = true;
}

}  // namespace fm
