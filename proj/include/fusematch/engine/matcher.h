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

#ifndef FUSEMATCH_ENGINE_MATCHER_H
#define FUSEMATCH_ENGINE_MATCHER_H

#include <compare>
#include <memory>
#include <span>
#include <vector>

#include "fusematch/engine/local_graph.h"

namespace fm {

enum class TargetKind : uint8_t {
    kEvent = 0,
    kGraphBoundary = 1,
    kBlockBoundary = 2,
};

enum class BoundarySide : uint8_t {
    kLeading = 0,
    kTrailing = 1,
};

/// What a detection event is matched to. Block boundaries also record the
/// cycle at which the cut lies, so a result projected onto a smaller range
/// still knows which cut each open region is waiting on.
struct MatchTarget {
    TargetKind kind = TargetKind::kGraphBoundary;
    DetectorId event = 0;
    BoundarySide side = BoundarySide::kLeading;
    uint64_t cut_cycle = 0;

    static MatchTarget to_event(DetectorId d) {
        return {TargetKind::kEvent, d, BoundarySide::kLeading, 0};
    }
    static MatchTarget graph_boundary() {
        return {};
    }
    static MatchTarget block_boundary(BoundarySide side, uint64_t cut_cycle) {
        return {TargetKind::kBlockBoundary, 0, side, cut_cycle};
    }

    bool is_event() const {
        return kind == TargetKind::kEvent;
    }
    bool is_block_boundary() const {
        return kind == TargetKind::kBlockBoundary;
    }
    bool operator==(const MatchTarget &other) const = default;
    /// Events first (by index), then the graph boundary, then cuts.
    std::strong_ordering operator<=>(const MatchTarget &other) const;
};

/// One matched pair. Event-to-event pairs are stored once, with `event` the
/// smaller index.
struct MatchedPair {
    DetectorId event = 0;
    MatchTarget target;
    double weight = 0;
    ObservableMask observables = 0;

    bool operator==(const MatchedPair &other) const = default;
};

struct Matching {
    /// Sorted by (event, target).
    std::vector<MatchedPair> pairs;
    double total_weight = 0;
    ObservableMask observables = 0;

    /// Recomputes total_weight and observables from `pairs` after sorting.
    void finalize();
    bool operator==(const Matching &other) const = default;
};

/// Which block-boundary cuts may absorb events. The graph boundary is always
/// admissible when the view has boundary edges.
struct SinkPolicy {
    bool leading = true;
    bool trailing = true;
};

/// A matched pair in view-local node numbering. `target` is a node index or
/// one of the sink codes from local_graph.h.
struct LocalPair {
    uint32_t event = 0;
    uint32_t target = 0;
    double weight = 0;
    ObservableMask observables = 0;
};

/// Minimum-weight matching of `events` (sorted, distinct, view-local) inside
/// one view. Events may pair with each other along shortest paths, or run to
/// the graph boundary or an admissible cut. Matching to a cut costs the
/// distance to the inner endpoint of a crossing edge plus half that edge's
/// weight. Throws std::invalid_argument if some event cannot be matched.
std::vector<LocalPair> solve_local(
    const LocalGraph &graph, std::span<const double> weights, std::span<const uint32_t> events, SinkPolicy policy);

/// Monolithic decoder over a whole MatchingGraph. Builds the view once and
/// reuses it for every decode.
class ExactDecoder {
   public:
    explicit ExactDecoder(const MatchingGraph &graph);

    Matching decode(std::span<const DetectorId> events) const;
    /// Same, with per-edge weights replacing the graph's own (e.g. after
    /// preweighting). `weights` is indexed like graph.edges.
    Matching decode(std::span<const DetectorId> events, std::span<const double> weights) const;

    const LocalGraph &view() const {
        return view_;
    }
    DetectorId first_detector() const {
        return first_detector_;
    }

   private:
    LocalGraph view_;
    DetectorId first_detector_ = 0;
};

Matching decode_exact(const MatchingGraph &graph, std::span<const DetectorId> events);

/// A block-scoped graph view: a shared structure plus the weights to decode
/// with (a block's overlay, or the template weights).
struct BlockView {
    std::shared_ptr<const LocalGraph> graph;
    std::span<const double> weights;
    uint64_t first_cycle = 0;
    uint64_t first_block = 0;
    uint64_t last_block = 0;

    DetectorId first_detector() const {
        return first_cycle * graph->detectors_per_cycle;
    }
    DetectorId end_detector() const {
        return first_detector() + graph->num_nodes;
    }
    uint64_t end_cycle() const {
        return first_cycle + graph->num_cycles;
    }
};

struct OpenRegion {
    DetectorId event = 0;
    BoundarySide side = BoundarySide::kLeading;
    uint64_t cut_cycle = 0;
    double weight = 0;
};

/// Matching outcome for a contiguous block range. Pairs may reference events
/// outside the range; such pairs were settled elsewhere and are carried along
/// unchanged.
struct BlockResult {
    uint64_t first_block = 0;
    uint64_t last_block = 0;
    uint64_t first_cycle = 0;
    uint64_t num_cycles = 0;
    uint32_t detectors_per_cycle = 0;
    Matching matching;
    /// Events matched to a block boundary, with their residual weights.
    std::vector<OpenRegion> open_regions;

    DetectorId first_detector() const {
        return first_cycle * detectors_per_cycle;
    }
    DetectorId end_detector() const {
        return (first_cycle + num_cycles) * detectors_per_cycle;
    }
    bool contains(DetectorId d) const {
        return d >= first_detector() && d < end_detector();
    }
    /// Fills open_regions from the matching.
    void collect_open_regions();
};

BlockResult decode_block(const BlockView &view, std::span<const DetectorId> events, SinkPolicy policy = {});

struct FuseOptions {
    /// Keep pairs far from the shared cut fixed instead of re-solving them.
    bool freeze_interior = true;
    /// Whether re-solved regions may end on the joined view's outer cuts.
    /// A second-layer fuse over projections turns these off: its outer cuts
    /// were already settled by the first layer.
    SinkPolicy outer_cuts;
};

/// Re-solves the matching of two adjacent results across their shared cut.
/// `joined` must span exactly a's and b's cycles. Pairs matched to the shared
/// cut are released; with freeze_interior, other pairs are re-opened only if
/// they lie within reach of the released regions.
BlockResult fuse(const BlockResult &a, const BlockResult &b, const BlockView &joined, FuseOptions options = {});

/// Restricts a result to a sub-range of its cycles. Pairs with one endpoint
/// inside are kept (the other side becomes external); cut matches keep the
/// cycle of their cut.
BlockResult project(const BlockResult &result, uint64_t first_block, uint64_t first_cycle, uint64_t num_cycles);

}  // namespace fm

#endif  // FUSEMATCH_ENGINE_MATCHER_H
