#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "reference_model.hpp"

using namespace safesched;
using fixtures::baseline;
using fixtures::stochastic;
using fixtures::point;

namespace {

// Hard request untouched with deadline 4 (needs up to 4 steps) and with
// deadline 3 (can no longer be guaranteed), reached by idling from the start.
std::size_t idle_state(const ExplicitMdp& m, int idles) {
    const auto s = fixtures::step_n(SystemState::initial(m.specs), Action::idle(), idles, m.specs);
    return m.find(s).value();
}

}  // namespace

TEST(Prune, ForcedAndDoomedStates) {
    const auto pm = prune(build(stochastic(), RewardParams{}, Mode::preemptible));
    ASSERT_TRUE(pm.schedulable);
    const std::size_t forced = idle_state(pm.mdp(), 3);
    const std::size_t doomed = idle_state(pm.mdp(), 4);
    EXPECT_EQ(safe_actions(pm, forced), std::vector<Action>{Action::work(1)});
    EXPECT_TRUE(pm.pruned[doomed]);
    EXPECT_TRUE(pm.safe_slots[doomed].empty());
    EXPECT_THROW(safe_actions(pm, doomed), UnsafeError);
    EXPECT_TRUE(pm.pruned[*pm.mdp().terminal_index]);
    EXPECT_THROW(safe_actions(pm, *pm.mdp().terminal_index), UnsafeError);
}

TEST(Prune, NoTerminalMeansIdentity) {
    const std::vector<RouteSpec> specs = {fixtures::soft(1, point(2, 2), 3, point(4, 4))};
    const auto pm = prune(build(specs, RewardParams{}, Mode::preemptible));
    EXPECT_FALSE(pm.mdp().terminal_index.has_value());
    EXPECT_EQ(pm.pruned_state_count(), 0u);
    EXPECT_EQ(pm.pruned_action_count(), 0u);
    EXPECT_TRUE(pm.schedulable);
    EXPECT_EQ(safe_actions(pm, 0), all_actions(1));
}

TEST(Prune, FullySafeStateKeepsEverything) {
    const auto pm = prune(build(baseline(), RewardParams{}, Mode::preemptible));
    EXPECT_EQ(safe_actions(pm, 0), all_actions(2));
}

TEST(Prune, TwoIdenticalHardRoutesAreUnschedulable) {
    using ref::Rational;
    const ref::Route r{true, ref::dist(3, {{3, Rational{1}}}), 3, ref::dist(8, {{8, Rational{1}}})};
    const std::vector<RouteSpec> specs = {ref::to_spec(r, 1), ref::to_spec(r, 2)};
    for (Mode mode : {Mode::preemptible, Mode::nonpreemptible}) {
        const auto pm = prune(build(specs, RewardParams{}, mode));
        EXPECT_FALSE(pm.schedulable) << to_string(mode);
        EXPECT_TRUE(pm.pruned[0]);
    }

    // Exhaustive check on the independent model: every length-3 action
    // sequence leaves some hard request incomplete at its deadline.
    const ref::Model oracle({r, r}, -10, -10000, false);
    for (int a = 0; a < 27; ++a) {
        ref::State s = oracle.initial();
        bool missed = false;
        for (int k = 0, code = a; k < 3 && !missed; ++k, code /= 3) {
            const auto edges = oracle.step(s, code % 3);
            ASSERT_EQ(edges.size(), 1u);
            s = edges[0].next;
            missed = s.term;
        }
        EXPECT_TRUE(missed) << "sequence " << a;
    }
}

TEST(Prune, IdempotentOnRestrictedModel) {
    for (Mode mode : {Mode::preemptible, Mode::nonpreemptible}) {
        const auto pm = prune(build(stochastic(), RewardParams{}, mode));
        const auto again = prune(restrict_to_safe(pm));
        EXPECT_EQ(again.pruned_state_count(), 0u);
        EXPECT_EQ(again.pruned_action_count(), 0u);
        EXPECT_EQ(again.mdp().size(), pm.mdp().size() - pm.pruned_state_count());
    }
}

TEST(Prune, IndependentOfRewardMagnitudes) {
    for (Mode mode : {Mode::preemptible, Mode::nonpreemptible}) {
        const auto a = prune(build(stochastic(), RewardParams{-10, -10000}, mode));
        const auto b = prune(build(stochastic(), RewardParams{-1, -1e9}, mode));
        EXPECT_EQ(a.pruned, b.pruned);
        EXPECT_EQ(a.safe_slots, b.safe_slots);
    }
}

TEST(Prune, SafeActionsNeverTouchPrunedStates) {
    for (Mode mode : {Mode::preemptible, Mode::nonpreemptible}) {
        const auto pm = prune(build(stochastic(), RewardParams{}, mode));
        for (std::size_t s = 0; s < pm.mdp().size(); ++s) {
            if (pm.pruned[s]) continue;
            EXPECT_FALSE(pm.safe_slots[s].empty());
            for (std::size_t k : pm.safe_slots[s])
                for (const auto& o : pm.mdp().transitions[s][k]) EXPECT_FALSE(pm.pruned[o.next]);
        }
    }
}

TEST(Prune, ReportShape) {
    const auto pm = prune(build(stochastic(), RewardParams{}, Mode::preemptible));
    const json r = pruning_report(pm);
    EXPECT_EQ(r["states"], pm.mdp().size());
    EXPECT_EQ(r["pruned_states"], pm.pruned_state_count());
    EXPECT_EQ(r["pruned_actions"], pm.pruned_action_count());
    EXPECT_EQ(r["schedulable"], true);
    EXPECT_EQ(r["pruned_state_ids"].size(), pm.pruned_state_count());
}

// Uniform random walk over safe actions of the model; must never reach the
// terminal state.
class RandomSafeWalk : public ::testing::TestWithParam<std::tuple<Mode, int>> {};

TEST_P(RandomSafeWalk, NeverReachesTerminal) {
    const auto [mode, seed] = GetParam();
    const auto pm = prune(build(stochastic(), RewardParams{}, mode));
    const auto& m = pm.mdp();
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::size_t s = 0;
    std::size_t terminal_hits = 0;
    for (int step = 0; step < 100000; ++step) {
        const auto& slots = pm.safe_slots[s];
        ASSERT_FALSE(slots.empty());
        const auto& outs = m.transitions[s][slots[rng() % slots.size()]];
        double u = std::uniform_real_distribution<double>(0, 1)(rng), acc = 0.0;
        std::size_t next = outs.back().next;
        for (const auto& o : outs) {
            acc += o.prob;
            if (u < acc) {
                next = o.next;
                break;
            }
        }
        terminal_hits += m.states[next].terminal;
        ASSERT_TRUE(pm.is_safe(next));
        s = next;
    }
    EXPECT_EQ(terminal_hits, 0u);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomSafeWalk,
                         ::testing::Combine(::testing::Values(Mode::preemptible, Mode::nonpreemptible),
                                            ::testing::Values(1, 2, 3)));
