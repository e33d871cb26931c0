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

#include <cmath>
#include <random>

#include "fusematch/correlations/preweight.h"
#include "fusematch/engine/matcher.h"
#include "fusematch/harness/generators.h"

using namespace fm;

namespace {

LocalGraph view_of(const std::string &body) {
    return LocalGraph::whole(build_matching_graph(parse_dem("detectors_per_cycle 6\nobservables 1\n" + body)));
}

std::optional<uint32_t> edge_id(const LocalGraph &g, uint32_t u, uint32_t v) {
    for (uint32_t k = 0; k < g.edges.size(); k++) {
        if (g.edges[k].u == u && g.edges[k].v == v) {
            return k;
        }
    }
    return std::nullopt;
}

}  // namespace

TEST(SelectSeeds, BothEndpointsFired) {
    LocalGraph g = view_of("error 0.01 D0 D1\nerror 0.01 D1 D2\n");
    std::vector<int64_t> events{0, 1};
    EXPECT_EQ(select_seed_edges(g, events).edges, std::vector<uint32_t>{*edge_id(g, 0, 1)});
}

TEST(SelectSeeds, IsolatedBoundaryEvent) {
    LocalGraph g = view_of("error 0.01 D0\nerror 0.01 D0 D1\n");
    std::vector<int64_t> events{0};
    EXPECT_EQ(select_seed_edges(g, events).edges, std::vector<uint32_t>{*edge_id(g, 0, kGraphBoundaryNode)});
}

TEST(SelectSeeds, FiredNeighbourSuppressesBoundarySeed) {
    LocalGraph g = view_of("error 0.01 D0\nerror 0.01 D0 D1\n");
    std::vector<int64_t> events{0, 1};
    EXPECT_EQ(select_seed_edges(g, events).edges, std::vector<uint32_t>{*edge_id(g, 0, 1)});
}

TEST(SelectSeeds, LooksAcrossCuts) {
    MatchingGraph full = build_matching_graph(repetition_code_model(3, 6, 0.02));
    LocalGraph block = LocalGraph::restrict(full, 2, 2);  // detectors 4..7
    // Detector 3 (outside, before the block) and 5 (local 1) fired: the
    // timelike cut edge (3, 5) is a seed and detector 5 is not lonely.
    std::vector<int64_t> events{-1, 1};
    SeedEdgeSet seeds = select_seed_edges(block, events);
    ASSERT_EQ(seeds.edges.size(), 1u);
    EXPECT_EQ(block.edges[seeds.edges[0]].v, kLeadingCutNode);
    EXPECT_EQ(block.edges[seeds.edges[0]].u, 1u);
}

TEST(SelectSeeds, IgnoresWeights) {
    LocalGraph g = LocalGraph::whole(build_matching_graph(toy_surface_code_model(3, {})));
    LocalGraph heavier = LocalGraph::whole(build_matching_graph(toy_surface_code_model(3, {0.01, 0.01, 0.03, 0.01})));
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; trial++) {
        std::vector<int64_t> events;
        for (int64_t d = 0; d < 24; d++) {
            if (rng() % 5 == 0) {
                events.push_back(d);
            }
        }
        EXPECT_EQ(select_seed_edges(g, events), select_seed_edges(heavier, events));
    }
}

TEST(Posterior, DocumentedExample) {
    double p = posterior_probability(0.01, 0.004, 0.004);
    EXPECT_NEAR(p, 0.4008, 1e-15);
    EXPECT_NEAR(weight_from_probability(p), std::log(0.5992 / 0.4008), 1e-12);
    EXPECT_NEAR(weight_from_probability(p), 0.4020, 5e-4);
    EXPECT_NEAR(weight_from_probability(0.004), 5.517, 5e-4);
}

TEST(Posterior, NeverRaisesProbabilityAndCapsAtHalf) {
    for (double q : {0.0, 0.1, 0.5, 0.9, 1.0}) {
        for (double p : {1e-4, 0.01, 0.2, 0.5}) {
            double post = posterior_probability(1.0, q, p);
            EXPECT_GE(post, p - 1e-15);
            EXPECT_LE(post, 0.5);
        }
    }
}

TEST(ApplyPreweights, EmptySeedsChangeNothing) {
    LocalGraph g = LocalGraph::whole(build_matching_graph(toy_surface_code_model(3, {})));
    std::vector<double> w = g.weights;
    ReweightLog log = apply_preweights(g, w, SeedEdgeSet{});
    EXPECT_TRUE(log.empty());
    EXPECT_EQ(w, g.weights);
}

TEST(ApplyPreweights, LowersPartnerOfSeed) {
    LocalGraph g = view_of("error 0.006 D0 D1\nerror 0.004 D0 D1 ^ D2 D3\n");
    uint32_t e = *edge_id(g, 0, 1);
    uint32_t e2 = *edge_id(g, 2, 3);
    std::vector<double> w = g.weights;
    ReweightLog log = apply_preweights(g, w, SeedEdgeSet{{e}});
    ASSERT_EQ(log.entries().size(), 1u);
    double expected = posterior_probability(g.edges[e].probability, 0.004, 0.004);
    EXPECT_EQ(log.entries()[0].edge, e2);
    EXPECT_EQ(log.entries()[0].original_weight, g.weights[e2]);
    EXPECT_NEAR(w[e2], weight_from_probability(expected), 1e-12);
    EXPECT_LT(w[e2], g.weights[e2]);
    EXPECT_EQ(w[e], g.weights[e]);
}

TEST(ApplyPreweights, SeedWithoutPartnersLogsNothing) {
    LocalGraph g = view_of("error 0.006 D0 D1\nerror 0.004 D2 D3 ^ D4 D5\n");
    std::vector<double> w = g.weights;
    EXPECT_TRUE(apply_preweights(g, w, SeedEdgeSet{{*edge_id(g, 0, 1)}}).empty());
}

TEST(ApplyPreweights, MultipleSeedsComposeIntoOneEntry) {
    LocalGraph g = view_of("error 0.004 D0 D1 ^ D2 D3\nerror 0.003 D4 D5 ^ D2 D3\n");
    uint32_t a = *edge_id(g, 0, 1);
    uint32_t b = *edge_id(g, 4, 5);
    uint32_t target = *edge_id(g, 2, 3);
    std::vector<double> w = g.weights;
    ReweightLog log = apply_preweights(g, w, SeedEdgeSet{{a, b}});
    ASSERT_EQ(log.entries().size(), 1u);
    double p = g.edges[target].probability;
    p = posterior_probability(g.edges[a].probability, 0.004, p);
    p = posterior_probability(g.edges[b].probability, 0.003, p);
    EXPECT_NEAR(w[target], weight_from_probability(p), 1e-12);
}

TEST(UndoReweights, RestoresBitExactly) {
    LocalGraph g = LocalGraph::whole(build_matching_graph(toy_surface_code_model(5, {})));
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; trial++) {
        std::vector<int64_t> events;
        for (int64_t d = 0; d < 40; d++) {
            if (rng() % 4 == 0) {
                events.push_back(d);
            }
        }
        std::vector<double> w = g.weights;
        ReweightLog log = apply_preweights(g, w, select_seed_edges(g, events));
        for (const auto &e : log.entries()) {
            EXPECT_LE(e.new_weight, e.original_weight);
            EXPECT_GE(e.new_weight, 0);
        }
        undo_reweights(w, log);
        EXPECT_EQ(w, g.weights);
        EXPECT_THROW(undo_reweights(w, log), ContractViolation);
    }
}

TEST(UndoReweights, OverlappingAppliesUndoInReverse) {
    LocalGraph g = view_of(
        "error 0.004 D0 D1 ^ D2 D3\nerror 0.003 D4 D5 ^ D2 D3\n"
        "error 0.02 D0 D1\nerror 0.02 D4 D5\nerror 0.01 D2 D3\n");
    std::vector<double> w = g.weights;
    ReweightLog first = apply_preweights(g, w, SeedEdgeSet{{*edge_id(g, 0, 1)}});
    std::vector<double> middle = w;
    ReweightLog second = apply_preweights(g, w, SeedEdgeSet{{*edge_id(g, 4, 5)}});
    EXPECT_NE(w, middle);
    undo_reweights(w, second);
    EXPECT_EQ(w, middle);
    undo_reweights(w, first);
    EXPECT_EQ(w, g.weights);
}

TEST(Preweights, NoCorrelationsMeansSameMatching) {
    MatchingGraph graph = build_matching_graph(repetition_code_model(5, 10, 0.05));
    ExactDecoder decoder(graph);
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; trial++) {
        std::vector<DetectorId> events;
        std::vector<int64_t> offsets;
        for (DetectorId d = 0; d < graph.end_detector(); d++) {
            if (rng() % 6 == 0) {
                events.push_back(d);
                offsets.push_back((int64_t)d);
            }
        }
        std::vector<double> w = decoder.view().weights;
        ReweightLog log = apply_preweights(decoder.view(), w, select_seed_edges(decoder.view(), offsets));
        EXPECT_TRUE(log.empty());
        EXPECT_EQ(decoder.decode(events, w), decoder.decode(events));
    }
}
