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


#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "fusematch/buffer/graph_buffer.h"
#include "fusematch/correlations/preweight.h"
#include "fusematch/harness/generators.h"
#include "fusematch/model/matching_graph.h"

using namespace fm;

namespace {

/// Period-2 bulk with a one-cycle prologue and epilogue whose rates differ
/// from the bulk, so every region of the shot has its own structure.
NoiseModel alternating_model(uint64_t cycles) {
    NoiseModel m;
    m.detectors_per_cycle = 3;
    m.num_observables = 1;
    m.period = 2;
    m.prologue_cycles = 1;
    m.epilogue_cycles = 1;
    for (uint64_t c = 0; c < cycles; c++) {
        const bool edge_cycle = c == 0 || c + 1 == cycles;
        const double p = edge_cycle ? 0.03 : (c % 2 ? 0.01 : 0.02);
        const DetectorId b = 3 * c;
        m.mechanisms.push_back({p, {GraphlikePart{b, kBoundaryDetector, 1}}});
        m.mechanisms.push_back({p, {GraphlikePart{b, b + 1, 0}}});
        m.mechanisms.push_back({p / 2, {GraphlikePart{b + 1, b + 2, 0}}});
        m.mechanisms.push_back({p, {GraphlikePart{b + 2, kBoundaryDetector, 0}}});
        if (c + 1 < cycles) {
            m.mechanisms.push_back({p, {GraphlikePart{b, b + 3, 0}}});
            m.mechanisms.push_back({p, {GraphlikePart{b + 1, b + 4, 0}, GraphlikePart{b + 2, b + 5, 0}}});
            m.mechanisms.push_back({p / 3, {GraphlikePart{b + 2, b + 4, 0}}});
        }
    }
    return m;
}

std::vector<BlockSpec> plan_blocks(uint64_t total, uint32_t m, uint64_t first_block = 0) {
    std::vector<BlockSpec> out;
    for (uint64_t c = 0; c < total; c += m) {
        out.push_back({first_block + out.size(), c, (uint32_t)std::min<uint64_t>(m, total - c), total});
    }
    return out;
}

std::shared_ptr<const PeriodicModel> periodic(NoiseModel m) {
    return std::make_shared<const PeriodicModel>(std::move(m));
}

GraphBufferOptions small(size_t capacity = 8) {
    GraphBufferOptions o;
    o.capacity = capacity;
    o.verify_release = true;
    return o;
}

}  // namespace

TEST(GraphBuffer, RejectsBadCapacity) {
    auto model = periodic(repetition_code_model(3, 4, 0.01));
    GraphBufferOptions o;
    o.capacity = 4;
    EXPECT_THROW(GraphBuffer(model, o), std::invalid_argument);
    o.capacity = 24;
    EXPECT_THROW(GraphBuffer(model, o), std::invalid_argument);
}

TEST(GraphBuffer, AcquireReleaseCountsReaders) {
    GraphBuffer buf(periodic(repetition_code_model(5, 4, 0.01)), small());
    for (const auto &s : plan_blocks(40, 10)) {
        buf.announce(s);
    }
    BlockView v = buf.ensure_window(1);
    EXPECT_EQ(v.first_cycle, 10u);
    EXPECT_EQ(buf.readers(1), 1u);
    buf.ensure_window(1);
    EXPECT_EQ(buf.readers(1), 2u);
    buf.release_view(1);
    buf.release_view(1);
    EXPECT_EQ(buf.readers(1), 0u);
    EXPECT_THROW(buf.release_view(1), ContractViolation);
    EXPECT_THROW(buf.release_view(3), ContractViolation);
}

TEST(GraphBuffer, AnnouncementsMustBeInOrder) {
    GraphBuffer buf(periodic(repetition_code_model(5, 4, 0.01)), small());
    EXPECT_THROW(buf.announce({1, 10, 10, 40}), ContractViolation);
    EXPECT_THROW(buf.announce({0, 35, 10, 40}), ContractViolation);
}

TEST(GraphBuffer, DirtyOverlayIsCaughtOnRelease) {
    GraphBuffer buf(periodic(toy_surface_code_model(4, {0.01, 0.01, 0.02, 0.01})), small());
    for (const auto &s : plan_blocks(40, 10)) {
        buf.announce(s);
    }
    BlockView v = buf.ensure_window(2);
    std::span<double> w = buf.overlay(2);
    std::vector<int64_t> events{0, 1};
    ReweightLog log = apply_preweights(*v.graph, w, select_seed_edges(*v.graph, events));
    ASSERT_FALSE(log.empty());
    EXPECT_THROW(buf.release_view(2), ContractViolation);
    undo_reweights(w, log);
    EXPECT_NO_THROW(buf.release_view(2));
}

TEST(GraphBuffer, WindowSlidesAndNeverRewinds) {
    GraphBuffer buf(periodic(repetition_code_model(3, 4, 0.01)), small(8));
    for (const auto &s : plan_blocks(1000, 5)) {
        buf.announce(s);
    }
    for (uint64_t b = 0; b < 100; b++) {
        buf.ensure_window(b);
        EXPECT_LE(buf.hi_block() - buf.lo_block(), 8u);
        EXPECT_LE(buf.lo_block(), b);
        buf.release_view(b);
    }
    // Block 104 evicts everything below 97. The grapher may already be
    // further ahead, but never more than a window past the held block.
    buf.ensure_window(104);
    EXPECT_GE(buf.lo_block(), 97u);
    EXPECT_LE(buf.lo_block(), 104u);
    EXPECT_LE(buf.hi_block() - buf.lo_block(), 8u);
    EXPECT_THROW(buf.ensure_window(50), ContractViolation);
    buf.release_view(104);
}

TEST(GraphBuffer, DeadlockGuardFires) {
    GraphBuffer buf(periodic(repetition_code_model(3, 4, 0.01)), small(8));
    for (const auto &s : plan_blocks(200, 5)) {
        buf.announce(s);
    }
    buf.ensure_window(0);
    for (uint64_t b = 1; b < 8; b++) {
        buf.ensure_window(b);
        buf.release_view(b);
    }
    EXPECT_THROW(buf.ensure_window(8), BufferDeadlock);
    buf.release_view(0);
    EXPECT_NO_THROW(buf.ensure_window(8));
    buf.release_view(8);
}

TEST(GraphBuffer, WaitingReaderIsServedOnceSlotsRetire) {
    GraphBuffer buf(periodic(repetition_code_model(3, 4, 0.01)), small(8));
    for (const auto &s : plan_blocks(200, 5)) {
        buf.announce(s);
    }
    for (uint64_t b = 0; b < 8; b++) {
        buf.ensure_window(b);
    }
    std::atomic<bool> done{false};
    // Block 9 needs the slots of blocks 0 and 1. Block 0 is released below,
    // block 1 only after the reader has started waiting.
    buf.release_view(0);
    std::thread reader([&] {
        buf.ensure_window(8);
        buf.release_view(8);
        done = true;
    });
    reader.join();
    EXPECT_TRUE(done);
    for (uint64_t b = 1; b < 8; b++) {
        buf.release_view(b);
    }
}

TEST(GraphBuffer, ViewsMatchFromScratchConstruction) {
    struct Case {
        NoiseModel model;
        uint64_t total;
        uint32_t m;
    };
    std::vector<Case> cases{
        {repetition_code_model(5, 4, 0.02), 63, 10},
        {toy_surface_code_model(4, {0.01, 0.02, 0.03, 0.004}), 41, 7},
        {alternating_model(6), 48, 5},
        {alternating_model(6), 50, 4},
    };
    for (const auto &c : cases) {
        auto model = periodic(c.model);
        MatchingGraph full = build_matching_graph(model->extrapolate(c.total));
        GraphBuffer buf(model, small(16));
        auto specs = plan_blocks(c.total, c.m);
        for (const auto &s : specs) {
            buf.announce(s);
        }
        for (const auto &s : specs) {
            BlockView v = buf.ensure_window(s.block);
            LocalGraph expected = LocalGraph::restrict(full, s.first_cycle, s.num_cycles);
            EXPECT_EQ(*v.graph, expected) << "block " << s.block;
            EXPECT_TRUE(std::equal(v.weights.begin(), v.weights.end(), expected.weights.begin(), expected.weights.end()));
            if (s.block > 0) {
                std::shared_ptr<const LocalGraph> j = buf.joined(s.block - 1);
                EXPECT_EQ(*j, LocalGraph::join(LocalGraph::restrict(full, s.first_cycle - c.m, c.m), expected));
                buf.release_view(s.block - 1);
            }
            if (s.block + 1 == specs.size()) {
                buf.release_view(s.block);
            }
        }
    }
}

TEST(GraphBuffer, BulkBlocksReuseTheTemplate) {
    GraphBuffer buf(periodic(alternating_model(6)), small(8));
    auto specs = plan_blocks(402, 4);
    for (const auto &s : specs) {
        buf.announce(s);
    }
    for (const auto &s : specs) {
        buf.ensure_window(s.block);
        buf.release_view(s.block);
    }
    // M = 4 keeps the bulk phase fixed: the start block, one bulk template
    // and the two blocks near the end are all that ever get built.
    EXPECT_LE(buf.structures_built(), 4u);
}

TEST(GraphBuffer, UnknownShotLengthMatchesKnown) {
    auto model = periodic(repetition_code_model(5, 4, 0.02));
    for (uint64_t first : {0u, 10u, 20u}) {
        BlockSpec open{0, first, 10, 0};
        BlockSpec known{0, first, 10, 100};
        EXPECT_EQ(GraphBuffer::build_structure(*model, open), GraphBuffer::build_structure(*model, known));
    }
}

TEST(GraphBuffer, StructuralMemoryIsIndependentOfShotLength) {
    auto run = [](uint64_t cycles) {
        GraphBuffer buf(periodic(repetition_code_model(9, 4, 0.02)), small(32));
        auto specs = plan_blocks(cycles, 10);
        for (const auto &s : specs) {
            buf.announce(s);
        }
        for (const auto &s : specs) {
            BlockView v = buf.ensure_window(s.block);
            if (s.block > 0) {
                buf.joined(s.block - 1);
                buf.release_view(s.block - 1);
            }
        }
        buf.release_view(specs.back().block);
        return buf.peak_structural_bytes();
    };
    size_t small_run = run(1000);
    size_t large_run = run(100000);
    EXPECT_LE((double)large_run, 1.1 * small_run);
}

TEST(GraphBuffer, ConcurrentReadersSeeCompleteViews) {
    auto model = periodic(toy_surface_code_model(4, {0.01, 0.02, 0.03, 0.004}));
    const uint64_t total = 400;
    MatchingGraph full = build_matching_graph(model->extrapolate(total));
    GraphBuffer buf(model, small(8));
    auto specs = plan_blocks(total, 5);
    for (const auto &s : specs) {
        buf.announce(s);
    }
    std::atomic<int> mismatches{0};
    std::vector<std::atomic<bool>> released(specs.size());
    std::vector<std::thread> readers;
    // Reader k handles the blocks congruent to k mod 4, in order. Like the
    // pipeline's dispatcher, nobody asks for block b before every block that
    // shares its slot has been released; otherwise the guard rightly fires.
    for (int k = 0; k < 4; k++) {
        readers.emplace_back([&, k] {
            for (uint64_t b = k; b < specs.size(); b += 4) {
                for (uint64_t older = 0; older + 8 <= b; older++) {
                    while (!released[older].load()) {
                        std::this_thread::yield();
                    }
                }
                BlockView v = buf.ensure_window(b);
                if (!(*v.graph == LocalGraph::restrict(full, specs[b].first_cycle, specs[b].num_cycles))) {
                    mismatches++;
                }
                buf.release_view(b);
                released[b] = true;
            }
        });
    }
    for (auto &t : readers) {
        t.join();
    }
    EXPECT_EQ(mismatches, 0);
}
