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

#include "fusematch/engine/matcher.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <string>

#include "fusematch/engine/blossom.h"

namespace fm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using HeapItem = std::pair<double, uint32_t>;
using MinHeap = std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>>;

uint32_t other_end(const LocalEdge &e, uint32_t node) {
    return e.u == node ? e.v : e.u;
}

/// Scratch buffers reused across calls on the same thread.
struct Scratch {
    std::vector<double> dist;
    std::vector<ObservableMask> obs;
    std::vector<int32_t> event_of_node;
    std::vector<uint32_t> touched;

    void reset(uint32_t num_nodes) {
        dist.assign(num_nodes, kInf);
        obs.assign(num_nodes, 0);
        event_of_node.assign(num_nodes, -1);
        touched.clear();
    }
};

thread_local Scratch scratch;

/// Multi-source Dijkstra from one sink over the view. Ties between equal
/// distances resolve toward the lower node index, so paths (and their
/// observable masks) are deterministic.
void sink_field(
    const LocalGraph &graph,
    std::span<const double> weights,
    uint32_t sink,
    std::vector<double> &dist,
    std::vector<ObservableMask> &obs) {
    dist.assign(graph.num_nodes, kInf);
    obs.assign(graph.num_nodes, 0);
    MinHeap heap;
    for (uint32_t k = 0; k < graph.edges.size(); k++) {
        const LocalEdge &e = graph.edges[k];
        if (e.v != sink) {
            continue;
        }
        double c = e.is_cut() ? weights[k] / 2 : weights[k];
        if (c < dist[e.u]) {
            dist[e.u] = c;
            obs[e.u] = e.observables;
        }
    }
    for (uint32_t u = 0; u < graph.num_nodes; u++) {
        if (dist[u] < kInf) {
            heap.push({dist[u], u});
        }
    }
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) {
            continue;
        }
        for (uint32_t k : graph.incident(u)) {
            const LocalEdge &e = graph.edges[k];
            if (is_sink_node(e.v)) {
                continue;
            }
            uint32_t v = other_end(e, u);
            double nd = d + weights[k];
            if (nd < dist[v]) {
                dist[v] = nd;
                obs[v] = obs[u] ^ e.observables;
                heap.push({nd, v});
            }
        }
    }
}

/// Keys of the fields cached per structure under template weights.
constexpr uint64_t kSinkFieldKey = 1ull << 32;
constexpr uint64_t kBestSinkKey = 2ull << 32;
constexpr uint64_t kCutDistanceKey = 3ull << 32;

/// Returns the field under `key`, from the structure's cache when `weights`
/// are its template weights, otherwise computed into `scratch`.
template <class Compute>
const DerivedFields::Field &derived_field(
    const LocalGraph &graph,
    std::span<const double> weights,
    uint64_t key,
    std::shared_ptr<const DerivedFields::Field> &holder,
    DerivedFields::Field &scratch,
    Compute compute) {
    if (graph.is_template(weights)) {
        holder = graph.derived().get(key, compute);
        return *holder;
    }
    compute(scratch);
    return scratch;
}

struct Candidate {
    uint32_t i;
    uint32_t j;
    double weight;
    ObservableMask observables;
};

uint32_t find_root(std::vector<uint32_t> &parent, uint32_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

/// Scale factor turning real path weights into integers for the blossom
/// solver. Keeps the largest weight below 2^50 so dual arithmetic never
/// overflows, with at most 40 fractional bits.
double quantization_scale(double max_weight) {
    int bits = max_weight >= 1 ? std::ilogb(max_weight) + 1 : 0;
    return std::ldexp(1.0, std::min(40, 50 - bits));
}

void check_weights(const LocalGraph &graph, std::span<const double> weights) {
    if (weights.size() != graph.edges.size()) {
        throw ContractViolation("weight overlay size does not match the view");
    }
    for (double w : weights) {
        if (!(w >= 0) || std::isinf(w)) {
            throw ContractViolation("edge weights must be finite and non-negative");
        }
    }
}

}  // namespace

std::strong_ordering MatchTarget::operator<=>(const MatchTarget &other) const {
    if (auto c = kind <=> other.kind; c != 0) {
        return c;
    }
    switch (kind) {
        case TargetKind::kEvent:
            return event <=> other.event;
        case TargetKind::kGraphBoundary:
            return std::strong_ordering::equal;
        case TargetKind::kBlockBoundary:
            if (auto c = side <=> other.side; c != 0) {
                return c;
            }
            return cut_cycle <=> other.cut_cycle;
    }
    return std::strong_ordering::equal;
}

void Matching::finalize() {
    std::sort(pairs.begin(), pairs.end(), [](const MatchedPair &a, const MatchedPair &b) {
        if (a.event != b.event) {
            return a.event < b.event;
        }
        return a.target < b.target;
    });
    total_weight = 0;
    observables = 0;
    for (const auto &p : pairs) {
        total_weight += p.weight;
        observables ^= p.observables;
    }
}

std::vector<LocalPair> solve_local(
    const LocalGraph &graph, std::span<const double> weights, std::span<const uint32_t> events, SinkPolicy policy) {
    check_weights(graph, weights);
    const uint32_t n = (uint32_t)events.size();
    std::vector<LocalPair> out;
    if (n == 0) {
        return out;
    }
    for (uint32_t i = 0; i < n; i++) {
        if (events[i] >= graph.num_nodes || (i > 0 && events[i] <= events[i - 1])) {
            throw ContractViolation("events must be sorted, distinct and inside the view");
        }
    }

    // Cheapest admissible sink per event. Sinks are visited in tie-break
    // order, so a strict comparison keeps the earliest on equal cost.
    std::vector<double> sink_cost(n, kInf);
    std::vector<uint32_t> sink_code(n, kGraphBoundaryNode);
    std::vector<ObservableMask> sink_obs(n, 0);
    {
        std::vector<uint32_t> sinks{kGraphBoundaryNode};
        if (policy.leading) {
            sinks.push_back(kLeadingCutNode);
        }
        if (policy.trailing) {
            sinks.push_back(kTrailingCutNode);
        }
        DerivedFields::Field scratch_field;
        std::shared_ptr<const DerivedFields::Field> holder;
        for (uint32_t sink : sinks) {
            if (!graph.has_sink(sink)) {
                continue;
            }
            const auto &f = derived_field(graph, weights, kSinkFieldKey | sink, holder, scratch_field, [&](auto &out) {
                sink_field(graph, weights, sink, out.dist, out.obs);
            });
            for (uint32_t i = 0; i < n; i++) {
                if (f.dist[events[i]] < sink_cost[i]) {
                    sink_cost[i] = f.dist[events[i]];
                    sink_code[i] = sink;
                    sink_obs[i] = f.obs[events[i]];
                }
            }
        }
    }
    const double max_sink = *std::max_element(sink_cost.begin(), sink_cost.end());

    // Candidate pairs: a pair costing more than sending both events to their
    // sinks can never be part of an optimal matching.
    Scratch &s = scratch;
    s.reset(graph.num_nodes);
    for (uint32_t i = 0; i < n; i++) {
        s.event_of_node[events[i]] = (int32_t)i;
    }
    std::vector<Candidate> candidates;
    for (uint32_t i = 0; i < n; i++) {
        const double radius = sink_cost[i] + max_sink;
        MinHeap heap;
        const uint32_t src = events[i];
        s.dist[src] = 0;
        s.obs[src] = 0;
        s.touched.push_back(src);
        heap.push({0.0, src});
        while (!heap.empty()) {
            auto [d, u] = heap.top();
            heap.pop();
            if (d > s.dist[u]) {
                continue;
            }
            int32_t j = s.event_of_node[u];
            if (j > (int32_t)i && d <= sink_cost[i] + sink_cost[j]) {
                candidates.push_back({i, (uint32_t)j, d, s.obs[u]});
            }
            for (uint32_t k : graph.incident(u)) {
                const LocalEdge &e = graph.edges[k];
                if (is_sink_node(e.v)) {
                    continue;
                }
                uint32_t v = other_end(e, u);
                double nd = d + weights[k];
                if (nd < s.dist[v] && nd <= radius) {
                    if (s.dist[v] == kInf) {
                        s.touched.push_back(v);
                    }
                    s.dist[v] = nd;
                    s.obs[v] = s.obs[u] ^ e.observables;
                    heap.push({nd, v});
                }
            }
        }
        for (uint32_t v : s.touched) {
            s.dist[v] = kInf;
        }
        s.touched.clear();
    }
    for (uint32_t i = 0; i < n; i++) {
        s.event_of_node[events[i]] = -1;
    }

    std::vector<uint32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    for (const auto &c : candidates) {
        uint32_t a = find_root(parent, c.i);
        uint32_t b = find_root(parent, c.j);
        if (a != b) {
            parent[std::max(a, b)] = std::min(a, b);
        }
    }
    std::vector<std::vector<uint32_t>> members(n);
    for (uint32_t i = 0; i < n; i++) {
        members[find_root(parent, i)].push_back(i);
    }
    std::vector<std::vector<const Candidate *>> component_edges(n);
    for (const auto &c : candidates) {
        component_edges[find_root(parent, c.i)].push_back(&c);
    }

    std::vector<int64_t> partner(n, -2);  // -1 = sink, -2 = unassigned
    std::vector<const Candidate *> partner_edge(n, nullptr);
    auto unmatched = [&](uint32_t i) {
        return std::invalid_argument(
            "detection event at view node " + std::to_string(events[i]) +
            " cannot be matched: no boundary is reachable and its component has odd parity");
    };

    for (uint32_t root = 0; root < n; root++) {
        const auto &comp = members[root];
        if (comp.empty()) {
            continue;
        }
        const auto &cedges = component_edges[root];
        if (comp.size() == 1) {
            if (sink_cost[comp[0]] == kInf) {
                throw unmatched(comp[0]);
            }
            partner[comp[0]] = -1;
            continue;
        }
        if (comp.size() == 2 && cedges.size() == 1) {
            const Candidate *c = cedges[0];
            partner[c->i] = c->j;
            partner[c->j] = c->i;
            partner_edge[c->i] = partner_edge[c->j] = c;
            continue;
        }

        // Each event gets a twin standing in for its sink; twins pair with
        // each other for free, so any subset of events may go to sinks.
        const uint32_t m = (uint32_t)comp.size();
        std::vector<int32_t> local_of(n, -1);
        for (uint32_t a = 0; a < m; a++) {
            local_of[comp[a]] = (int32_t)a;
        }
        std::vector<int32_t> twin(m, -1);
        int32_t num_vertices = (int32_t)m;
        for (uint32_t a = 0; a < m; a++) {
            if (sink_cost[comp[a]] < kInf) {
                twin[a] = num_vertices++;
            }
        }
        const int32_t num_twins = num_vertices - (int32_t)m;
        int32_t dummy = -1;
        if (num_vertices % 2 == 1 && num_twins > 0) {
            dummy = num_vertices++;
        }

        double max_weight = 0;
        for (const Candidate *c : cedges) {
            max_weight = std::max(max_weight, c->weight);
        }
        for (uint32_t a = 0; a < m; a++) {
            if (twin[a] >= 0) {
                max_weight = std::max(max_weight, sink_cost[comp[a]]);
            }
        }
        const double scale = quantization_scale(max_weight);
        const int64_t ceiling = std::llround(max_weight * scale) + 1;
        auto integer_weight = [&](double w) {
            return ceiling - std::llround(w * scale);
        };

        std::vector<IntegerEdge> iedges;
        for (const Candidate *c : cedges) {
            iedges.push_back({local_of[c->i], local_of[c->j], integer_weight(c->weight)});
        }
        for (uint32_t a = 0; a < m; a++) {
            if (twin[a] >= 0) {
                iedges.push_back({(int32_t)a, twin[a], integer_weight(sink_cost[comp[a]])});
            }
        }
        for (int32_t t1 = (int32_t)m; t1 < (int32_t)m + num_twins; t1++) {
            for (int32_t t2 = t1 + 1; t2 < (int32_t)m + num_twins; t2++) {
                iedges.push_back({t1, t2, ceiling});
            }
            if (dummy >= 0) {
                iedges.push_back({t1, dummy, ceiling});
            }
        }

        std::vector<int32_t> mate = max_weight_matching(num_vertices, iedges, true);
        for (uint32_t a = 0; a < m; a++) {
            int32_t b = mate[a];
            if (b < 0) {
                throw unmatched(comp[a]);
            }
            if (b < (int32_t)m) {
                partner[comp[a]] = comp[b];
            } else {
                partner[comp[a]] = -1;
            }
        }
        for (const Candidate *c : cedges) {
            if (partner[c->i] == (int64_t)c->j) {
                partner_edge[c->i] = partner_edge[c->j] = c;
            }
        }
    }

    for (uint32_t i = 0; i < n; i++) {
        if (partner[i] == -1) {
            out.push_back({events[i], sink_code[i], sink_cost[i], sink_obs[i]});
        } else if (partner[i] > (int64_t)i) {
            const Candidate *c = partner_edge[i];
            out.push_back({events[i], events[partner[i]], c->weight, c->observables});
        }
    }
    return out;
}

namespace {

MatchTarget target_from_local(uint32_t target, DetectorId first_detector, uint64_t first_cycle, uint64_t end_cycle) {
    switch (target) {
        case kGraphBoundaryNode:
            return MatchTarget::graph_boundary();
        case kLeadingCutNode:
            return MatchTarget::block_boundary(BoundarySide::kLeading, first_cycle);
        case kTrailingCutNode:
            return MatchTarget::block_boundary(BoundarySide::kTrailing, end_cycle);
        default:
            return MatchTarget::to_event(first_detector + target);
    }
}

void append_global(
    std::vector<MatchedPair> &pairs,
    const std::vector<LocalPair> &local,
    DetectorId first_detector,
    uint64_t first_cycle,
    uint64_t end_cycle) {
    for (const auto &p : local) {
        pairs.push_back(
            {first_detector + p.event, target_from_local(p.target, first_detector, first_cycle, end_cycle), p.weight,
             p.observables});
    }
}

std::vector<uint32_t> to_local_events(std::span<const DetectorId> events, DetectorId lo, DetectorId hi) {
    std::vector<uint32_t> local;
    local.reserve(events.size());
    for (DetectorId d : events) {
        if (d < lo || d >= hi) {
            throw std::invalid_argument(
                "detection event D" + std::to_string(d) + " is outside the decoded range [" + std::to_string(lo) +
                ", " + std::to_string(hi) + ")");
        }
        local.push_back((uint32_t)(d - lo));
    }
    std::sort(local.begin(), local.end());
    if (std::adjacent_find(local.begin(), local.end()) != local.end()) {
        throw std::invalid_argument("duplicate detection event");
    }
    return local;
}

}  // namespace

ExactDecoder::ExactDecoder(const MatchingGraph &graph)
    : view_(LocalGraph::whole(graph)), first_detector_(graph.first_detector()) {
}

Matching ExactDecoder::decode(std::span<const DetectorId> events) const {
    return decode(events, view_.weights);
}

Matching ExactDecoder::decode(std::span<const DetectorId> events, std::span<const double> weights) const {
    auto local = to_local_events(events, first_detector_, first_detector_ + view_.num_nodes);
    auto pairs = solve_local(view_, weights, local, SinkPolicy{false, false});
    Matching m;
    append_global(m.pairs, pairs, first_detector_, 0, 0);
    m.finalize();
    return m;
}

Matching decode_exact(const MatchingGraph &graph, std::span<const DetectorId> events) {
    return ExactDecoder(graph).decode(events);
}

void BlockResult::collect_open_regions() {
    open_regions.clear();
    for (const auto &p : matching.pairs) {
        if (p.target.is_block_boundary()) {
            open_regions.push_back({p.event, p.target.side, p.target.cut_cycle, p.weight});
        }
    }
}

BlockResult decode_block(const BlockView &view, std::span<const DetectorId> events, SinkPolicy policy) {
    if (!view.graph) {
        throw ContractViolation("decode_block called with an empty view");
    }
    BlockResult r;
    r.first_block = view.first_block;
    r.last_block = view.last_block;
    r.first_cycle = view.first_cycle;
    r.num_cycles = view.graph->num_cycles;
    r.detectors_per_cycle = view.graph->detectors_per_cycle;
    auto local = to_local_events(events, view.first_detector(), view.end_detector());
    auto pairs = solve_local(*view.graph, view.weights, local, policy);
    append_global(r.matching.pairs, pairs, view.first_detector(), view.first_cycle, view.end_cycle());
    r.matching.finalize();
    r.collect_open_regions();
    return r;
}

namespace {

/// Distance from every node of the joined view to the shared cut, measured
/// like a cut match: half of the crossing edge plus the path to its end.
std::vector<double> compute_distance_to_cut(const LocalGraph &graph, std::span<const double> weights, uint32_t split) {
    std::vector<double> dist(graph.num_nodes, kInf);
    for (uint32_t k = 0; k < graph.edges.size(); k++) {
        const LocalEdge &e = graph.edges[k];
        if (is_sink_node(e.v) || (e.u < split) == (e.v < split)) {
            continue;
        }
        dist[e.u] = std::min(dist[e.u], weights[k] / 2);
        dist[e.v] = std::min(dist[e.v], weights[k] / 2);
    }
    MinHeap heap;
    for (uint32_t u = 0; u < graph.num_nodes; u++) {
        if (dist[u] < kInf) {
            heap.push({dist[u], u});
        }
    }
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) {
            continue;
        }
        for (uint32_t k : graph.incident(u)) {
            const LocalEdge &e = graph.edges[k];
            if (is_sink_node(e.v)) {
                continue;
            }
            uint32_t v = other_end(e, u);
            if (d + weights[k] < dist[v]) {
                dist[v] = d + weights[k];
                heap.push({dist[v], v});
            }
        }
    }
    return dist;
}

/// Cheapest sink (graph boundary or either outer cut) for every node.
std::vector<double> compute_best_sink_distance(const LocalGraph &graph, std::span<const double> weights) {
    std::vector<double> best(graph.num_nodes, kInf);
    std::vector<double> dist;
    std::vector<ObservableMask> obs;
    for (uint32_t sink : {kGraphBoundaryNode, kLeadingCutNode, kTrailingCutNode}) {
        if (!graph.has_sink(sink)) {
            continue;
        }
        sink_field(graph, weights, sink, dist, obs);
        for (uint32_t u = 0; u < graph.num_nodes; u++) {
            best[u] = std::min(best[u], dist[u]);
        }
    }
    return best;
}

const std::vector<double> &distance_to_cut(
    const LocalGraph &graph, std::span<const double> weights, uint32_t split,
    std::shared_ptr<const DerivedFields::Field> &holder, DerivedFields::Field &scratch) {
    return derived_field(graph, weights, kCutDistanceKey | split, holder, scratch, [&](auto &out) {
               out.dist = compute_distance_to_cut(graph, weights, split);
           }).dist;
}

const std::vector<double> &best_sink_distance(
    const LocalGraph &graph, std::span<const double> weights,
    std::shared_ptr<const DerivedFields::Field> &holder, DerivedFields::Field &scratch) {
    return derived_field(graph, weights, kBestSinkKey, holder, scratch, [&](auto &out) {
               out.dist = compute_best_sink_distance(graph, weights);
           }).dist;
}

/// Absorbs rounding in the reach comparison; reopening too much is harmless.
constexpr double kReachSlack = 1e-9;

}  // namespace

BlockResult fuse(const BlockResult &a, const BlockResult &b, const BlockView &joined, FuseOptions options) {
    if (a.first_cycle + a.num_cycles != b.first_cycle || a.last_block + 1 != b.first_block) {
        throw ContractViolation(
            "fuse requires adjacent blocks, got [" + std::to_string(a.first_block) + ", " +
            std::to_string(a.last_block) + "] and [" + std::to_string(b.first_block) + ", " +
            std::to_string(b.last_block) + "]");
    }
    if (!joined.graph || joined.first_cycle != a.first_cycle ||
        joined.graph->num_cycles != a.num_cycles + b.num_cycles ||
        a.detectors_per_cycle != joined.graph->detectors_per_cycle ||
        b.detectors_per_cycle != joined.graph->detectors_per_cycle) {
        throw ContractViolation("joined view does not span the two fused results");
    }

    BlockResult r;
    r.first_block = a.first_block;
    r.last_block = b.last_block;
    r.first_cycle = a.first_cycle;
    r.num_cycles = a.num_cycles + b.num_cycles;
    r.detectors_per_cycle = a.detectors_per_cycle;
    const uint64_t shared = b.first_cycle;
    const DetectorId lo = joined.first_detector();
    const DetectorId hi = joined.end_detector();
    auto inside = [&](DetectorId d) {
        return d >= lo && d < hi;
    };

    // Classify. Pairs settled outside this range, or waiting on a cut other
    // than the joined view's own, stay as they are.
    std::vector<MatchedPair> fixed;
    std::vector<MatchedPair> candidates;
    std::vector<MatchedPair> released;
    std::set<std::pair<DetectorId, MatchTarget>> seen;
    for (const BlockResult *side : {&a, &b}) {
        for (const auto &p : side->matching.pairs) {
            if (!seen.insert({p.event, p.target}).second) {
                continue;
            }
            const bool event_inside = inside(p.event);
            if (p.target.is_event()) {
                if (event_inside && inside(p.target.event)) {
                    candidates.push_back(p);
                } else {
                    fixed.push_back(p);
                }
            } else if (p.target.is_block_boundary()) {
                if (p.target.cut_cycle == shared) {
                    released.push_back(p);
                } else if (event_inside && (p.target.cut_cycle == r.first_cycle ||
                                            p.target.cut_cycle == r.first_cycle + r.num_cycles)) {
                    candidates.push_back(p);
                } else {
                    fixed.push_back(p);
                }
            } else if (event_inside) {
                candidates.push_back(p);
            } else {
                fixed.push_back(p);
            }
        }
    }

    std::vector<MatchedPair> &pairs = r.matching.pairs;
    pairs = fixed;
    if (released.empty()) {
        pairs.insert(pairs.end(), candidates.begin(), candidates.end());
    } else {
        std::vector<uint32_t> local;
        for (const auto &p : released) {
            local.push_back((uint32_t)(p.event - lo));
        }
        std::vector<char> reopen(candidates.size(), 1);
        if (options.freeze_interior) {
            // A released region can travel at most as far as its cheapest
            // sink in the joined view. Any pair within that reach (plus the
            // pair's own weight) may be displaced, and a displaced pair frees
            // its events to travel in turn, so the reach grows until no
            // further pair qualifies.
            const LocalGraph &jg = *joined.graph;
            std::shared_ptr<const DerivedFields::Field> cut_holder;
            std::shared_ptr<const DerivedFields::Field> sink_holder;
            DerivedFields::Field cut_scratch;
            DerivedFields::Field sink_scratch;
            const std::vector<double> &cut_dist = distance_to_cut(
                jg, joined.weights, (uint32_t)(a.num_cycles * a.detectors_per_cycle), cut_holder, cut_scratch);
            const std::vector<double> &sink_dist = best_sink_distance(jg, joined.weights, sink_holder, sink_scratch);
            double reach = 0;
            for (const auto &p : released) {
                reach = std::max(reach, cut_dist[p.event - lo] + sink_dist[p.event - lo]);
            }
            std::vector<double> near(candidates.size());
            std::vector<double> far(candidates.size());
            for (size_t k = 0; k < candidates.size(); k++) {
                const auto &p = candidates[k];
                near[k] = far[k] = cut_dist[p.event - lo];
                if (p.target.is_event()) {
                    near[k] = std::min(near[k], cut_dist[p.target.event - lo]);
                    far[k] = std::max(far[k], cut_dist[p.target.event - lo]);
                }
                reopen[k] = 0;
            }
            for (bool grew = true; grew;) {
                grew = false;
                for (size_t k = 0; k < candidates.size(); k++) {
                    if (!reopen[k] && near[k] <= reach + candidates[k].weight + kReachSlack) {
                        reopen[k] = 1;
                        reach = std::max(reach, far[k] + candidates[k].weight);
                        grew = true;
                    }
                }
            }
        }
        for (size_t k = 0; k < candidates.size(); k++) {
            const auto &p = candidates[k];
            if (!reopen[k]) {
                pairs.push_back(p);
                continue;
            }
            local.push_back((uint32_t)(p.event - lo));
            if (p.target.is_event()) {
                local.push_back((uint32_t)(p.target.event - lo));
            }
        }
        std::sort(local.begin(), local.end());
        auto solved = solve_local(*joined.graph, joined.weights, local, options.outer_cuts);
        append_global(pairs, solved, lo, joined.first_cycle, joined.end_cycle());
    }
    r.matching.finalize();
    r.collect_open_regions();
    return r;
}

BlockResult project(const BlockResult &result, uint64_t first_block, uint64_t first_cycle, uint64_t num_cycles) {
    if (first_cycle < result.first_cycle || first_cycle + num_cycles > result.first_cycle + result.num_cycles) {
        throw ContractViolation("projection range lies outside the result");
    }
    BlockResult r;
    r.first_block = first_block;
    r.last_block = first_block;
    r.first_cycle = first_cycle;
    r.num_cycles = num_cycles;
    r.detectors_per_cycle = result.detectors_per_cycle;
    for (const auto &p : result.matching.pairs) {
        if (r.contains(p.event) || (p.target.is_event() && r.contains(p.target.event))) {
            r.matching.pairs.push_back(p);
        }
    }
    r.matching.finalize();
    r.collect_open_regions();
    return r;
}

}  // namespace fm
