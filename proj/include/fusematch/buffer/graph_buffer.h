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


#ifndef FUSEMATCH_BUFFER_GRAPH_BUFFER_H
#define FUSEMATCH_BUFFER_GRAPH_BUFFER_H

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <thread>
#include <tuple>
#include <vector>

#include "fusematch/engine/matcher.h"
#include "fusematch/model/noise_model.h"

namespace fm {

/// Where a block sits in its shot. `total_cycles` is 0 while the shot length
/// is still unknown; the block must then lie clear of the epilogue.
struct BlockSpec {
    uint64_t block = 0;
    uint64_t first_cycle = 0;
    uint32_t num_cycles = 0;
    uint64_t total_cycles = 0;

    bool operator==(const BlockSpec &other) const = default;
};

/// Raised when a reader asks for a block whose slot can only be freed by
/// slots that are still held.
class BufferDeadlock : public ContractViolation {
   public:
    using ContractViolation::ContractViolation;
};

struct GraphBufferOptions {
    /// Number of slots; a power of two, at least 8.
    size_t capacity = 128;
    /// Compare each overlay against its template on release.
#ifdef NDEBUG
    bool verify_release = false;
#else
    bool verify_release = true;
#endif
};

/// Fixed-capacity sliding window of block graph views, maintained by its own
/// grapher thread. Blocks are announced in order; the grapher publishes each
/// one into slot (block mod capacity) once the previous occupant has been
/// retired. Structures are shared: every bulk block of the same phase points
/// at one template, so the bulk is never rebuilt.
class GraphBuffer {
   public:
    GraphBuffer(std::shared_ptr<const PeriodicModel> model, GraphBufferOptions options = {});
    ~GraphBuffer();
    GraphBuffer(const GraphBuffer &) = delete;
    GraphBuffer &operator=(const GraphBuffer &) = delete;

    /// Queues a block for publication. Blocks must be announced with
    /// consecutive indices starting at 0.
    void announce(const BlockSpec &spec);

    /// Blocks until `block` is published, then registers the caller as a
    /// reader and returns its view (weights are the current overlay, or the
    /// template if the overlay is clean).
    BlockView ensure_window(uint64_t block);
    /// Wakes every waiting reader with a ContractViolation and stops the
    /// grapher. Used when the owner abandons work in flight.
    void shutdown();

    /// Drops one reader. The overlay must be back at the template weights.
    void release_view(uint64_t block);

    /// Mutable weights of a held block, copied from the template on first use.
    std::span<double> overlay(uint64_t block);
    /// Structure of blocks `block` and `block + 1` joined; both must be held.
    std::shared_ptr<const LocalGraph> joined(uint64_t block);

    uint64_t lo_block() const;
    uint64_t hi_block() const;
    size_t capacity() const {
        return slots_.size();
    }
    uint32_t readers(uint64_t block) const;
    const PeriodicModel &model() const {
        return *model_;
    }

    /// Bytes of graph structure, overlays and slot bookkeeping currently held.
    size_t structural_bytes() const;
    size_t peak_structural_bytes() const;
    /// Number of structures built so far (bulk blocks reuse their template).
    uint64_t structures_built() const;

    /// The block's structure built from scratch out of the model.
    static LocalGraph build_structure(const PeriodicModel &model, const BlockSpec &spec);

   private:
    enum class SlotState : uint8_t { kEmpty, kPublished, kHeld, kRetired };

    struct Slot {
        SlotState state = SlotState::kEmpty;
        BlockSpec spec;
        std::shared_ptr<const LocalGraph> graph;
        uint64_t template_checksum = 0;
        std::vector<double> overlay;
        bool overlay_active = false;
        uint32_t readers = 0;
    };

    using StructureKey = std::tuple<int, uint64_t, uint64_t, uint64_t>;

    void grapher_loop();
    StructureKey key_for(const BlockSpec &spec) const;
    std::shared_ptr<const LocalGraph> structure_for(const BlockSpec &spec);
    Slot &slot_of(uint64_t block);
    const Slot *held_slot(uint64_t block) const;
    size_t structural_bytes_locked() const;
    void update_peak_locked();
    void prune_caches_locked();

    std::shared_ptr<const PeriodicModel> model_;
    GraphBufferOptions options_;

    mutable std::mutex mutex_;
    std::condition_variable published_;
    std::condition_variable work_;
    std::vector<Slot> slots_;
    std::deque<BlockSpec> announced_;
    uint64_t next_announce_ = 0;
    uint64_t lo_ = 0;
    uint64_t hi_ = 0;
    bool stopping_ = false;
    size_t peak_bytes_ = 0;
    uint64_t built_ = 0;

    // Shared structure caches, guarded by mutex_.
    std::map<StructureKey, std::shared_ptr<const LocalGraph>> structures_;
    struct Join {
        std::shared_ptr<const LocalGraph> a;
        std::shared_ptr<const LocalGraph> b;
        std::shared_ptr<const LocalGraph> joined;
    };
    std::map<std::pair<const LocalGraph *, const LocalGraph *>, Join> joins_;

    std::thread grapher_;
};

}  // namespace fm

#endif  // FUSEMATCH_BUFFER_GRAPH_BUFFER_H
