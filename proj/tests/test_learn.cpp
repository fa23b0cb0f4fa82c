#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace safesched;
using fixtures::baseline;
using fixtures::stochastic;
using fixtures::point;

TEST(RequiredSamples, HandEvaluated) {
    EXPECT_EQ(required_samples(2, 0.5, 0.5), 10u);
    EXPECT_EQ(required_samples(1, 1.0, 0.5), 1u);
    const auto y = required_samples(2, 0.0607, 0.1);
    EXPECT_LE(y > 1000 ? y - 1000 : 1000 - y, 2u);
    EXPECT_THROW(required_samples(2, 0.0, 0.1), ModelError);
}

TEST(RequiredSamples, InvertsToPublishedEpsilon) {
    // per-point count 500 at r = 2, gamma = 0.1
    const double eps = std::sqrt((std::log(4.0) - std::log(0.1)) / (2.0 * 500.0));
    EXPECT_NEAR(eps, 0.0607, 5e-5);
}

TEST(EmpiricalDist, CountsOverTotal) {
    EmpiricalDist d(3);
    for (int i = 0; i < 6; ++i) d.record(3);
    for (int i = 0; i < 4; ++i) d.record(2);
    EXPECT_EQ(d.total(), 10u);
    EXPECT_DOUBLE_EQ(d.estimate()[3], 0.6);
    EXPECT_DOUBLE_EQ(d.estimate()[2], 0.4);
}

TEST(EmpiricalDist, ClampsBeyondBound) {
    EmpiricalDist d(2);
    d.record(5);
    d.record(1);
    EXPECT_EQ(d.clamped(), 1u);
    EXPECT_EQ(d.counts()[2], 1u);
    EXPECT_THROW(EmpiricalDist(2).estimate(), LearningError);
}

TEST(SampleRoute, DeterministicCompletionIsExact) {
    const std::vector<RouteSpec> specs = {fixtures::soft(1, point(2, 2), 3, point(4, 4))};
    const auto pm = prune(build(specs, RewardParams{}, Mode::preemptible));
    for (std::uint64_t n : {1u, 7u, 100u}) {
        Plant plant(specs, RewardParams{}, n);
        const auto d = sample_route(plant, pm, 1, SampleTarget::completion, n);
        EXPECT_EQ(d.total(), n);
        EXPECT_EQ(d.estimate(), ProbVec(point(2, 2)));
    }
}

TEST(SampleRoute, InterarrivalCountsStepsBetweenArrivals) {
    const auto pm = prune(build(stochastic(), RewardParams{}, Mode::preemptible));
    Plant plant(stochastic(), RewardParams{}, 3);
    EXPECT_EQ(sample_route(plant, pm, 1, SampleTarget::interarrival, 20).estimate(), ProbVec(point(8, 8)));
    EXPECT_EQ(sample_route(plant, pm, 2, SampleTarget::interarrival, 20).estimate(), ProbVec(point(4, 4)));
}

TEST(SampleRoute, CensoredInstancesAreDiscarded) {
    // Completion needs 3 work steps, but a new instance always replaces the
    // old one on that very step: nothing is ever observed completing.
    const std::vector<RouteSpec> specs = {fixtures::soft(1, point(3, 3), 3, point(3, 3))};
    const auto pm = prune(build(specs, RewardParams{}, Mode::preemptible));
    Plant plant(specs, RewardParams{}, 1);
    EXPECT_THROW(sample_route(plant, pm, 1, SampleTarget::completion, 5), LearningError);
}

TEST(SampleRoute, RefusesUnschedulable) {
    const auto h = fixtures::hard(1, point(3, 3), 3, point(8, 8));
    auto h2 = h;
    h2.id = 2;
    const auto pm = prune(build({h, h2}, RewardParams{}, Mode::preemptible));
    Plant plant({h, h2}, RewardParams{}, 1);
    EXPECT_THROW(sample_route(plant, pm, 1, SampleTarget::completion, 1), UnsafeError);
}

TEST(EstimateSystem, DeterministicPlantIsRecoveredExactly) {
    const auto truth = baseline();
    const auto pm = prune(build(truth, RewardParams{}, Mode::preemptible));
    Plant plant(truth, RewardParams{}, 9);
    const auto est = estimate_system(plant, pm, SamplingConfig{2, 0.0607, 0.1, 50});
    EXPECT_EQ(est.specs, truth);
    EXPECT_TRUE(est.warnings.empty());
    EXPECT_EQ(plant.terminal_entries(), 0u);

    for (Mode mode : {Mode::preemptible, Mode::nonpreemptible})
        EXPECT_EQ(build(est.specs, RewardParams{}, mode).states, build(truth, RewardParams{}, mode).states);
}

TEST(EstimateSystem, SamplingNeverMissesAHardDeadline) {
    const auto truth = stochastic();
    const auto pm = prune(build(truth, RewardParams{}, Mode::preemptible));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Plant plant(truth, RewardParams{}, seed);
        std::uint64_t terminal_rows = 0;
        const auto est = estimate_system(plant, pm, SamplingConfig{}, [&](const SampleTraceRow& row) {
            terminal_rows += row.obs.terminal;
        });
        EXPECT_EQ(plant.terminal_entries(), 0u);
        EXPECT_EQ(terminal_rows, 0u);
        for (const auto& s : est.specs) {
            double a = 0.0, b = 0.0;
            for (double x : s.p_init.mass()) a += x;
            for (double x : s.q_init.mass()) b += x;
            EXPECT_NEAR(a, 1.0, 1e-9);
            EXPECT_NEAR(b, 1.0, 1e-9);
        }
    }
}

TEST(EstimateSystem, ErrorShrinksWithMoreSamples) {
    const std::vector<RouteSpec> specs = {fixtures::soft(1, {0, 0.5, 0.5}, 3, point(4, 4))};
    const auto pm = prune(build(specs, RewardParams{}, Mode::preemptible));
    double small = 0.0, large = 0.0;
    const int runs = 40;
    for (int r = 0; r < runs; ++r) {
        Plant plant(specs, RewardParams{}, derive_seed(77, {static_cast<std::uint64_t>(r)}));
        small += linf_distance(sample_route(plant, pm, 1, SampleTarget::completion, 50).estimate(), specs[0].p_init);
        large += linf_distance(sample_route(plant, pm, 1, SampleTarget::completion, 1000).estimate(), specs[0].p_init);
    }
    EXPECT_LT(large / runs, small / runs);
}

TEST(BeliefTracker, RejectsImpossibleObservation) {
    const auto m = build(baseline(), RewardParams{}, Mode::preemptible);
    BeliefTracker belief(m, Mode::preemptible);
    Observation obs;
    obs.completed = 1;  // cannot complete after a single work step
    EXPECT_THROW(belief.advance(Action::work(1), obs), LearningError);
}

TEST(BeliefTracker, FollowsThePlant) {
    const auto m = build(stochastic(), RewardParams{}, Mode::preemptible);
    const auto pm = prune(m);
    Plant plant(stochastic(), RewardParams{}, 4);
    BeliefTracker belief(pm.mdp(), Mode::preemptible);
    for (int i = 0; i < 500; ++i) {
        const auto idx = belief.index().value();
        const auto safe = safe_actions(pm, idx);
        const Action a = safe[static_cast<std::size_t>(i) % safe.size()];
        belief.advance(a, plant.step(a));
    }
    EXPECT_EQ(plant.terminal_entries(), 0u);
}
