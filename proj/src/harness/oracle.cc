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


#include "fusematch/harness/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

namespace fm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Paths {
    std::vector<double> dist;
    std::vector<ObservableMask> obs;
    double boundary = kInf;
    ObservableMask boundary_obs = 0;
};

/// Plain Dijkstra from one detector over the whole graph. The boundary is a
/// terminal: paths may end there but not pass through it.
Paths shortest_paths(const MatchingGraph &g, DetectorId source) {
    const DetectorId base = g.first_detector();
    const size_t n = g.end_detector() - base;
    Paths p;
    p.dist.assign(n, kInf);
    p.obs.assign(n, 0);
    using Item = std::pair<double, DetectorId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    p.dist[source - base] = 0;
    heap.push({0, source});
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > p.dist[u - base]) {
            continue;
        }
        for (uint32_t k : g.incident_edges(u)) {
            const Edge &e = g.edges[k];
            const ObservableMask o = p.obs[u - base] ^ e.observables;
            if (e.is_boundary()) {
                if (d + e.weight < p.boundary) {
                    p.boundary = d + e.weight;
                    p.boundary_obs = o;
                }
                continue;
            }
            DetectorId v = e.u == u ? e.v : e.u;
            if (d + e.weight < p.dist[v - base]) {
                p.dist[v - base] = d + e.weight;
                p.obs[v - base] = o;
                heap.push({d + e.weight, v});
            }
        }
    }
    return p;
}

bool ties(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
}

}  // namespace

Matching oracle_decode(const MatchingGraph &graph, std::span<const DetectorId> events_in) {
    std::vector<DetectorId> events(events_in.begin(), events_in.end());
    std::sort(events.begin(), events.end());
    if (events.size() > kOracleMaxEvents) {
        throw std::invalid_argument(
            "oracle_decode enumerates at most " + std::to_string(kOracleMaxEvents) + " events, got " +
            std::to_string(events.size()));
    }
    if (std::adjacent_find(events.begin(), events.end()) != events.end()) {
        throw std::invalid_argument("duplicate detection event");
    }
    for (DetectorId d : events) {
        if (!graph.contains(d)) {
            throw std::invalid_argument("detection event D" + std::to_string(d) + " is outside the graph");
        }
    }
    const size_t m = events.size();
    std::vector<Paths> paths;
    for (DetectorId d : events) {
        paths.push_back(shortest_paths(graph, d));
    }
    auto pair_cost = [&](size_t i, size_t j) {
        return paths[i].dist[events[j] - graph.first_detector()];
    };

    // best[mask]: minimum cost of matching the events in mask. The lowest
    // event of the mask is matched first, so the choice made for it is the
    // first entry of the sorted pair list; ties keep the smaller target.
    const size_t full = (size_t{1} << m) - 1;
    std::vector<double> best(full + 1, kInf);
    std::vector<int> choice(full + 1, -1);  // partner index, or m for boundary
    best[0] = 0;
    for (size_t mask = 1; mask <= full; mask++) {
        const int i = std::countr_zero(mask);
        const size_t rest = mask & ~(size_t{1} << i);
        auto consider = [&](double cost, int option) {
            if (cost == kInf) {
                return;
            }
            if (best[mask] == kInf || (cost < best[mask] && !ties(cost, best[mask]))) {
                best[mask] = cost;
                choice[mask] = option;
            }
        };
        for (size_t j = i + 1; j < m; j++) {
            if (rest >> j & 1) {
                consider(best[rest & ~(size_t{1} << j)] + pair_cost(i, j), (int)j);
            }
        }
        consider(best[rest] + paths[i].boundary, (int)m);
    }
    if (best[full] == kInf) {
        throw std::invalid_argument("events cannot be perfectly matched in this graph");
    }

    Matching out;
    for (size_t mask = full; mask;) {
        const int i = std::countr_zero(mask);
        const int c = choice[mask];
        if (c == (int)m) {
            out.pairs.push_back({events[i], MatchTarget::graph_boundary(), paths[i].boundary, paths[i].boundary_obs});
            mask &= ~(size_t{1} << i);
        } else {
            out.pairs.push_back(
                {events[i], MatchTarget::to_event(events[c]), pair_cost(i, c),
                 paths[i].obs[events[c] - graph.first_detector()]});
            mask &= ~((size_t{1} << i) | (size_t{1} << c));
        }
    }
    out.finalize();
    return out;
}

}  // namespace fm
