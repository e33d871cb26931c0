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

#include "fusematch/engine/local_graph.h"

#include <algorithm>

namespace fm {

void LocalGraph::build_adjacency() {
    offsets_.assign(num_nodes + 1, 0);
    for (const auto &e : edges) {
        offsets_[e.u + 1]++;
        if (!is_sink_node(e.v)) {
            offsets_[e.v + 1]++;
        }
    }
    for (uint32_t k = 0; k < num_nodes; k++) {
        offsets_[k + 1] += offsets_[k];
    }
    incident_.resize(offsets_[num_nodes]);
    std::vector<uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (uint32_t k = 0; k < edges.size(); k++) {
        incident_[fill[edges[k].u]++] = k;
        if (!is_sink_node(edges[k].v)) {
            incident_[fill[edges[k].v]++] = k;
        }
    }
}

LocalGraph LocalGraph::restrict(const MatchingGraph &graph, uint64_t first_cycle, uint64_t num_cycles) {
    if (first_cycle < graph.first_cycle || first_cycle + num_cycles > graph.first_cycle + graph.num_cycles) {
        throw std::invalid_argument("requested cycle range is outside the matching graph");
    }
    LocalGraph out;
    out.detectors_per_cycle = graph.detectors_per_cycle;
    out.num_cycles = (uint32_t)num_cycles;
    out.num_nodes = (uint32_t)(num_cycles * graph.detectors_per_cycle);
    const DetectorId lo = first_cycle * graph.detectors_per_cycle;
    const DetectorId hi = lo + out.num_nodes;

    std::vector<uint32_t> ids;
    for (DetectorId d = lo; d < hi; d++) {
        for (uint32_t e : graph.incident_edges(d)) {
            ids.push_back(e);
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    out.edges.reserve(ids.size());
    out.weights.reserve(ids.size());
    for (uint32_t id : ids) {
        const Edge &e = graph.edges[id];
        LocalEdge le;
        le.probability = e.probability;
        le.observables = e.observables;
        if (e.is_boundary()) {
            le.u = (uint32_t)(e.u - lo);
            le.v = kGraphBoundaryNode;
        } else if (e.u < lo) {
            le.u = (uint32_t)(e.v - lo);
            le.v = kLeadingCutNode;
            le.outer_offset = (int64_t)e.u - (int64_t)lo;
        } else if (e.v >= hi) {
            le.u = (uint32_t)(e.u - lo);
            le.v = kTrailingCutNode;
            le.outer_offset = (int64_t)(e.v - lo);
        } else {
            le.u = (uint32_t)(e.u - lo);
            le.v = (uint32_t)(e.v - lo);
        }
        out.edges.push_back(le);
        out.weights.push_back(e.weight);
    }

    out.partners.resize(ids.size());
    for (size_t k = 0; k < ids.size(); k++) {
        for (const auto &c : graph.correlations[ids[k]]) {
            auto it = std::lower_bound(ids.begin(), ids.end(), c.partner);
            if (it == ids.end() || *it != c.partner) {
                continue;
            }
            uint32_t local = (uint32_t)(it - ids.begin());
            if (out.edges[local].is_cut()) {
                continue;
            }
            out.partners[k].push_back({local, c.joint_probability});
        }
    }
    out.build_adjacency();
    return out;
}

LocalGraph LocalGraph::whole(const MatchingGraph &graph) {
    return restrict(graph, graph.first_cycle, graph.num_cycles);
}

LocalGraph LocalGraph::join(const LocalGraph &a, const LocalGraph &b) {
    if (a.detectors_per_cycle != b.detectors_per_cycle) {
        throw ContractViolation("cannot join views with different detectors_per_cycle");
    }
    LocalGraph out;
    out.detectors_per_cycle = a.detectors_per_cycle;
    out.num_cycles = a.num_cycles + b.num_cycles;
    out.num_nodes = a.num_nodes + b.num_nodes;
    const int64_t shift = a.num_nodes;
    out.edges.reserve(a.edges.size() + b.edges.size());
    for (const auto &e : a.edges) {
        LocalEdge le = e;
        if (e.v == kTrailingCutNode) {
            if (e.outer_offset >= (int64_t)out.num_nodes) {
                throw ContractViolation("an edge spans more than the joined view");
            }
            le.v = (uint32_t)e.outer_offset;
            le.outer_offset = 0;
        }
        out.edges.push_back(le);
    }
    for (const auto &e : b.edges) {
        if (e.v == kLeadingCutNode) {
            if (e.outer_offset + shift < 0) {
                throw ContractViolation("an edge spans more than the joined view");
            }
            continue;  // already present as one of a's trailing cut edges
        }
        LocalEdge le = e;
        le.u += (uint32_t)shift;
        if (!is_sink_node(e.v)) {
            le.v += (uint32_t)shift;
        } else if (e.v == kTrailingCutNode) {
            le.outer_offset += shift;
        }
        out.edges.push_back(le);
    }
    out.weights = join_weights(a, a.weights, b, b.weights);
    out.partners.resize(out.edges.size());
    out.build_adjacency();
    return out;
}

std::vector<double> LocalGraph::join_weights(
    const LocalGraph & /*a*/, std::span<const double> wa, const LocalGraph &b, std::span<const double> wb) {
    std::vector<double> out(wa.begin(), wa.end());
    out.reserve(wa.size() + wb.size());
    for (size_t k = 0; k < b.edges.size(); k++) {
        if (b.edges[k].v != kLeadingCutNode) {
            out.push_back(wb[k]);
        }
    }
    return out;
}

bool LocalGraph::has_sink(uint32_t sink) const {
    return std::any_of(edges.begin(), edges.end(), [&](const LocalEdge &e) {
        return e.v == sink;
    });
}

size_t LocalGraph::structural_bytes() const {
    size_t bytes = sizeof(LocalGraph);
    bytes += edges.capacity() * sizeof(LocalEdge);
    bytes += weights.capacity() * sizeof(double);
    bytes += partners.capacity() * sizeof(std::vector<LocalPartner>);
    for (const auto &p : partners) {
        bytes += p.capacity() * sizeof(LocalPartner);
    }
    bytes += offsets_.capacity() * sizeof(uint32_t);
    bytes += incident_.capacity() * sizeof(uint32_t);
    return bytes;
}

bool LocalGraph::operator==(const LocalGraph &other) const {
    return detectors_per_cycle == other.detectors_per_cycle && num_cycles == other.num_cycles &&
           num_nodes == other.num_nodes && edges == other.edges && weights == other.weights &&
           partners == other.partners;
}

}  // namespace fm
