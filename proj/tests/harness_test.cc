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
#include <functional>
#include <random>

#include "fusematch/harness/generators.h"
#include "fusematch/harness/oracle.h"
#include "fusematch/harness/philox.h"
#include "fusematch/harness/sampler.h"
#include "fusematch/harness/statistics.h"

using namespace fm;

TEST(Philox, KnownAnswerVectors) {
    using C = Philox4x32::Counter;
    EXPECT_EQ(Philox4x32::generate({0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(
        Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
        (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(
        Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
        (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, UniformIsInUnitInterval) {
    double sum = 0;
    for (uint64_t i = 0; i < 100000; i++) {
        double u = Philox4x32::uniform(42, i, 7);
        ASSERT_GE(u, 0);
        ASSERT_LT(u, 1);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000, 0.5, 4 * std::sqrt(1.0 / 12 / 100000));
}

TEST(SampleShots, ZeroProbabilityNeverFires) {
    NoiseModel m = repetition_code_model(3, 4, 0.1);
    for (auto &mech : m.mechanisms) {
        mech.probability = 0;
    }
    for (const auto &s : sample_shots(m, 100, 4, 1)) {
        EXPECT_TRUE(s.detectors.empty());
        EXPECT_EQ(s.observables, 0u);
    }
}

TEST(SampleShots, CertainMechanismAlwaysFires) {
    NoiseModel m;
    m.detectors_per_cycle = 2;
    m.num_observables = 1;
    m.mechanisms = {{1.0, {GraphlikePart{0, 1, 1}}}};
    for (const auto &s : sample_shots(m, 100, 1, 3)) {
        EXPECT_EQ(s.detectors, (std::vector<DetectorId>{0, 1}));
        EXPECT_EQ(s.observables, 1u);
    }
}

TEST(SampleShots, FiringRateWithinBinomialBound) {
    NoiseModel m;
    m.detectors_per_cycle = 1;
    m.mechanisms = {{0.1, {GraphlikePart{0, kBoundaryDetector, 0}}}};
    const uint64_t n = 100000;
    uint64_t fired = 0;
    for (const auto &s : sample_shots(m, n, 1, 2024, 4)) {
        fired += s.detectors.size();
    }
    double rate = (double)fired / n;
    EXPECT_NEAR(rate, 0.1, 3 * std::sqrt(0.1 * 0.9 / n));
}

TEST(SampleShots, ReproducibleAndThreadIndependent) {
    NoiseModel m = toy_surface_code_model(5, {0.01, 0.01, 0.02, 0.01});
    auto one = sample_shots(m, 500, 5, 77, 1);
    EXPECT_EQ(one, sample_shots(m, 500, 5, 77, 1));
    EXPECT_EQ(one, sample_shots(m, 500, 5, 77, 8));
    EXPECT_NE(one, sample_shots(m, 500, 5, 78, 1));
    // Shot identity is part of the stream: an offset batch matches the tail.
    auto tail = sample_shots(m, 100, 5, 77, 2, 400);
    EXPECT_TRUE(std::equal(tail.begin(), tail.end(), one.begin() + 400));
}

TEST(SampleShots, DetectionsAreXorOfFiredMechanisms) {
    NoiseModel m = toy_surface_code_model(4, {0.05, 0.05, 0.1, 0.05});
    for (uint64_t shot = 0; shot < 200; shot++) {
        ShotSample s = sample_shot(m, shot, 9);
        std::vector<int> parity(m.num_detectors(), 0);
        ObservableMask obs = 0;
        for (uint64_t k = 0; k < m.mechanisms.size(); k++) {
            if (Philox4x32::uniform(9, shot, k) < m.mechanisms[k].probability) {
                for (const auto &part : m.mechanisms[k].parts) {
                    parity[part.first] ^= 1;
                    if (!part.is_boundary()) {
                        parity[part.second] ^= 1;
                    }
                    obs ^= part.observables;
                }
            }
        }
        std::vector<DetectorId> expected;
        for (DetectorId d = 0; d < parity.size(); d++) {
            if (parity[d]) {
                expected.push_back(d);
            }
        }
        EXPECT_EQ(s.detectors, expected);
        EXPECT_EQ(s.observables, obs);
    }
}

TEST(SampleShots, ExtrapolatesPeriodicModels) {
    NoiseModel m = repetition_code_model(5, 4, 0.05);
    auto a = sample_shots(m, 50, 30, 5);
    auto b = sample_shots(repetition_code_model(5, 30, 0.05), 50, 30, 5);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a[0].num_cycles, 30u);
}

TEST(DetectionFraction, Extremes) {
    ShotSample zero;
    zero.num_cycles = 2;
    zero.detectors_per_cycle = 4;
    EXPECT_EQ(detection_fraction({zero}), 0.0);
    ShotSample ones = zero;
    ones.detectors = {0, 1, 2, 3, 4, 5, 6, 7};
    EXPECT_EQ(detection_fraction({ones}), 1.0);
    EXPECT_THROW(detection_fraction({}), std::invalid_argument);
}

TEST(DetectionFraction, HalfProbabilityMechanism) {
    NoiseModel m;
    m.detectors_per_cycle = 2;
    m.mechanisms = {{0.5, {GraphlikePart{0, 1, 0}}}};
    const uint64_t n = 20000;
    double f = detection_fraction(sample_shots(m, n, 1, 11));
    EXPECT_NEAR(f, 0.5, 3 * std::sqrt(0.25 / n));
}

TEST(OnePointEpsilon, Examples) {
    EXPECT_EQ(one_point_epsilon(0, 50), 0);
    double p = logical_error_probability(0.001, 1000);
    EXPECT_NEAR(p, 0.5 * (1 - std::pow(0.998, 1000)), 1e-12);
    // The commonly quoted 0.432392 is a rounding slip; the exact value is 0.432468.
    EXPECT_NEAR(p, 0.432392, 1e-4);
    EXPECT_NEAR(one_point_epsilon(p, 1000), 0.001, 1e-15);
    EXPECT_NEAR(one_point_epsilon(0.432392, 1000), 0.001, 1e-6);
    EXPECT_EQ(one_point_epsilon(0.123, 1), 0.123);
    EXPECT_THROW(one_point_epsilon(0.5, 10), std::invalid_argument);
    EXPECT_THROW(one_point_epsilon(0.1, 0), std::invalid_argument);
}

TEST(OnePointEpsilon, RoundTripGrid) {
    for (double eps : {1e-5, 1e-4, 1e-3, 1e-2, 0.05, 0.1}) {
        for (double t : {1.0, 2.0, 10.0, 100.0, 1000.0, 10000.0}) {
            double p = logical_error_probability(eps, t);
            if (p > 0.49) {
                continue;  // saturated: the inverse is ill-conditioned there
            }
            EXPECT_NEAR(one_point_epsilon(p, t), eps, 1e-9 * eps) << eps << " " << t;
        }
    }
}

TEST(FitEpsilon, NoiselessRecovery) {
    std::vector<FitPoint> pts;
    for (double t : {10.0, 50.0, 100.0, 250.0}) {
        pts.push_back({t, logical_error_probability(0.003, t), 100000});
    }
    FitResult r = fit_epsilon(pts);
    EXPECT_NEAR(r.epsilon, 0.003, 1e-9);
    EXPECT_EQ(r.points_used, 4u);
}

TEST(FitEpsilon, SinglePointMatchesOnePoint) {
    FitResult r = fit_epsilon({{1, 0.07, 1000}});
    EXPECT_NEAR(r.epsilon, one_point_epsilon(0.07, 1), 1e-15);
    FitResult r2 = fit_epsilon({{40, 0.2, 1000}});
    EXPECT_NEAR(r2.epsilon, one_point_epsilon(0.2, 40), 1e-15);
}

TEST(FitEpsilon, MinCyclesAndErrors) {
    std::vector<FitPoint> pts{{5, 0.6, 100}, {10, 0.7, 100}};
    EXPECT_THROW(fit_epsilon(pts), std::invalid_argument);
    std::vector<FitPoint> ok;
    for (double t : {10.0, 100.0, 200.0}) {
        ok.push_back({t, logical_error_probability(0.002, t), 1000});
    }
    ok.push_back({5, 0.3, 1000});  // far off the line, dropped by the window
    EXPECT_NEAR(fit_epsilon(ok, {90}).epsilon, 0.002, 1e-9);
    EXPECT_EQ(fit_epsilon(ok, {90}).points_used, 2u);
}

TEST(FitEpsilon, CalibratedOnNoisyData) {
    // Binomially noisy points from epsilon = 0.003: the 3-sigma interval
    // should cover the truth in at least 99% of trials.
    std::mt19937_64 rng(12345);
    int covered = 0;
    const int trials = 300;
    for (int trial = 0; trial < trials; trial++) {
        std::vector<FitPoint> pts;
        for (double t : {10.0, 50.0, 100.0, 250.0}) {
            double p = logical_error_probability(0.003, t);
            std::binomial_distribution<uint64_t> draw(100000, p);
            pts.push_back({t, draw(rng) / 100000.0, 100000});
        }
        FitResult r = fit_epsilon(pts);
        covered += std::abs(r.epsilon - 0.003) <= 3 * r.sigma;
    }
    EXPECT_GE(covered, trials * 99 / 100);
}

TEST(ComputeLambda, GeometricTriple) {
    LambdaResult r = compute_lambda({{3, 8e-3, 0}, {5, 4e-3, 0}, {7, 2e-3, 0}});
    EXPECT_NEAR(r.lambda, 2.0, 1e-12);
    EXPECT_NEAR(r.delta, 0, 1e-12);
}

TEST(ComputeLambda, FlatIsOne) {
    LambdaResult r = compute_lambda({{3, 5e-3, 0}, {5, 5e-3, 0}});
    EXPECT_NEAR(r.lambda, 1.0, 1e-12);
}

TEST(ComputeLambda, ScaleInvariantAndPropagatesError) {
    std::vector<LambdaPoint> pts{{3, 9e-3, 4e-4}, {5, 4e-3, 2e-4}, {7, 2.1e-3, 1e-4}};
    LambdaResult a = compute_lambda(pts);
    for (auto &p : pts) {
        p.epsilon *= 0.37;
        p.sigma *= 0.37;
    }
    LambdaResult b = compute_lambda(pts);
    EXPECT_NEAR(a.lambda, b.lambda, 1e-12);
    EXPECT_NEAR(a.lambda, std::exp(-a.slope), 1e-15);
    EXPECT_NEAR(a.delta, std::exp(-a.slope) * a.slope_sigma, 1e-15);
    EXPECT_GT(a.delta, 0);
    EXPECT_THROW(compute_lambda({{3, 1e-3, 0}}), std::invalid_argument);
    EXPECT_THROW(compute_lambda({{3, 1e-3, 0}, {3, 2e-3, 0}}), std::invalid_argument);
}

namespace {

/// Brute force over every partial pairing (events left unpaired go to the
/// boundary), on Bellman-Ford distances. Deliberately different from the
/// oracle's Dijkstra + subset DP.
double brute_force_weight(const MatchingGraph &g, const std::vector<DetectorId> &events) {
    const size_t n = g.end_detector();
    auto relax = [&](DetectorId s) {
        std::vector<double> d(n + 1, INFINITY);
        d[s] = 0;
        for (size_t round = 0; round <= n; round++) {
            for (const auto &e : g.edges) {
                if (e.is_boundary()) {
                    d[n] = std::min(d[n], d[e.u] + e.weight);
                } else {
                    d[e.v] = std::min(d[e.v], d[e.u] + e.weight);
                    d[e.u] = std::min(d[e.u], d[e.v] + e.weight);
                }
            }
        }
        return d;
    };
    std::vector<std::vector<double>> dist;
    for (DetectorId e : events) {
        dist.push_back(relax(e));
    }
    std::function<double(std::vector<int> &)> go = [&](std::vector<int> &left) -> double {
        if (left.empty()) {
            return 0;
        }
        int i = left.back();
        left.pop_back();
        double best = dist[i][n] + go(left);
        for (size_t k = 0; k < left.size(); k++) {
            int j = left[k];
            left.erase(left.begin() + k);
            best = std::min(best, dist[i][events[j]] + go(left));
            left.insert(left.begin() + k, j);
        }
        left.push_back(i);
        return best;
    };
    std::vector<int> all(events.size());
    std::iota(all.begin(), all.end(), 0);
    return go(all);
}

}  // namespace

TEST(OracleDecode, SmallCases) {
    MatchingGraph g = build_matching_graph(repetition_code_model(5, 3, 0.1));
    EXPECT_EQ(oracle_decode(g, {}).total_weight, 0);
    std::vector<DetectorId> two{1, 2};
    Matching m = oracle_decode(g, two);
    ASSERT_EQ(m.pairs.size(), 1u);
    EXPECT_EQ(m.pairs[0].target, MatchTarget::to_event(2));
    std::vector<DetectorId> many(15);
    std::iota(many.begin(), many.end(), 0);
    EXPECT_THROW(oracle_decode(g, many), std::invalid_argument);
}

TEST(OracleDecode, AgreesWithBruteForceAndEngine) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 60; trial++) {
        double p = 0.01 + 0.2 * (rng() % 100) / 100.0;
        MatchingGraph g = build_matching_graph(repetition_code_model(4 + trial % 3, 3, p));
        std::vector<DetectorId> events;
        for (DetectorId d = 0; d < g.end_detector(); d++) {
            if (rng() % 3 == 0 && events.size() < 8) {
                events.push_back(d);
            }
        }
        Matching o = oracle_decode(g, events);
        EXPECT_NEAR(o.total_weight, brute_force_weight(g, events), 1e-9);
        EXPECT_NEAR(o.total_weight, decode_exact(g, events).total_weight, 1e-9);
    }
}

TEST(OracleDecode, TieBreakPrefersSmallestPairList) {
    // Path B-0-1-2-3-B with uniform weights.
    NoiseModel m;
    m.detectors_per_cycle = 4;
    double p = 0.1;
    m.mechanisms = {
        {p, {GraphlikePart{0, kBoundaryDetector, 0}}}, {p, {GraphlikePart{0, 1, 0}}},
        {p, {GraphlikePart{1, 2, 0}}},                 {p, {GraphlikePart{2, 3, 0}}},
        {p, {GraphlikePart{3, kBoundaryDetector, 0}}},
    };
    MatchingGraph g = build_matching_graph(m);
    std::vector<DetectorId> ends{0, 3};
    EXPECT_EQ(oracle_decode(g, ends).pairs[0].target, MatchTarget::graph_boundary());
    std::vector<DetectorId> four{0, 1, 2, 3};
    EXPECT_EQ(oracle_decode(g, four).pairs[0].target, MatchTarget::to_event(1));
    // {0, 2}: (0,2) and 0->B + 2->B both cost 2w; events sort before the boundary.
    std::vector<DetectorId> split{0, 2};
    Matching tie = oracle_decode(g, split);
    ASSERT_EQ(tie.pairs.size(), 1u);
    EXPECT_EQ(tie.pairs[0].target, MatchTarget::to_event(2));
}
