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

#ifndef FUSEMATCH_ENGINE_LOCAL_GRAPH_H
#define FUSEMATCH_ENGINE_LOCAL_GRAPH_H

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "fusematch/model/matching_graph.h"

namespace fm {

/// Sink codes used in LocalEdge::v.
constexpr uint32_t kGraphBoundaryNode = 0xFFFFFFFFu;
constexpr uint32_t kLeadingCutNode = 0xFFFFFFFEu;
constexpr uint32_t kTrailingCutNode = 0xFFFFFFFDu;

inline bool is_sink_node(uint32_t v) {
    return v >= kTrailingCutNode;
}

/// An edge of a LocalGraph. Node indices are relative to the first detector
/// of the view, so the same structure serves every translated copy of a block.
struct LocalEdge {
    uint32_t u = 0;
    uint32_t v = 0;
    /// For cut edges: the outside detector minus the view's first detector.
    int64_t outer_offset = 0;
    double probability = 0;
    ObservableMask observables = 0;

    bool is_cut() const {
        return v == kLeadingCutNode || v == kTrailingCutNode;
    }
    bool operator==(const LocalEdge &other) const = default;
};

struct LocalPartner {
    uint32_t edge = 0;
    double joint_probability = 0;

    bool operator==(const LocalPartner &other) const = default;
};

/// Per-node data derived from a graph's template weights (shortest-path
/// fields and the like), computed once on first use and then shared by every
/// decode of the structure. Thread-safe. Copies start empty.
class DerivedFields {
   public:
    struct Field {
        std::vector<double> dist;
        std::vector<ObservableMask> obs;
    };

    DerivedFields() = default;
    DerivedFields(const DerivedFields &) {}
    DerivedFields &operator=(const DerivedFields &) {
        std::lock_guard lock(mutex_);
        fields_.clear();
        return *this;
    }

    /// The field stored under `key`, running `compute` if it is missing.
    template <class Compute>
    std::shared_ptr<const Field> get(uint64_t key, Compute compute) const {
        {
            std::lock_guard lock(mutex_);
            auto it = fields_.find(key);
            if (it != fields_.end()) {
                return it->second;
            }
        }
        auto field = std::make_shared<Field>();
        compute(*field);
        std::lock_guard lock(mutex_);
        return fields_.emplace(key, std::move(field)).first->second;
    }

   private:
    mutable std::mutex mutex_;
    mutable std::map<uint64_t, std::shared_ptr<const Field>> fields_;
};

/// The matching graph restricted to a contiguous cycle range. Edges leaving
/// the range become edges to the leading or trailing cut. Edges are kept in
/// canonical order (sorted by their global endpoint pair), which is
/// translation invariant.
class LocalGraph {
   public:
    uint32_t detectors_per_cycle = 0;
    uint32_t num_cycles = 0;
    uint32_t num_nodes = 0;

    std::vector<LocalEdge> edges;
    /// Template weights, one per edge.
    std::vector<double> weights;
    /// Correlation partners per edge. Only non-cut edges appear as partners.
    std::vector<std::vector<LocalPartner>> partners;

    std::span<const uint32_t> incident(uint32_t node) const {
        return {incident_.data() + offsets_[node], incident_.data() + offsets_[node + 1]};
    }

    /// Restriction of `graph` to cycles [first_cycle, first_cycle + num_cycles).
    static LocalGraph restrict(const MatchingGraph &graph, uint64_t first_cycle, uint64_t num_cycles);
    static LocalGraph whole(const MatchingGraph &graph);
    /// Union of two adjacent views; `b` must start where `a` ends. Edges on
    /// the shared cut become ordinary edges. Joined views carry no partners.
    static LocalGraph join(const LocalGraph &a, const LocalGraph &b);
    /// Weights of `join(a, b)` assembled from the two views' overlays.
    static std::vector<double> join_weights(
        const LocalGraph &a, std::span<const double> wa, const LocalGraph &b, std::span<const double> wb);

    bool has_sink(uint32_t sink) const;
    /// True when `w` is this graph's own template weight array.
    bool is_template(std::span<const double> w) const {
        return w.data() == weights.data() && w.size() == weights.size();
    }
    const DerivedFields &derived() const {
        return derived_;
    }
    size_t structural_bytes() const;
    bool operator==(const LocalGraph &other) const;

   private:
    void build_adjacency();
    std::vector<uint32_t> offsets_;
    std::vector<uint32_t> incident_;
    DerivedFields derived_;
};

}  // namespace fm

#endif  // FUSEMATCH_ENGINE_LOCAL_GRAPH_H
