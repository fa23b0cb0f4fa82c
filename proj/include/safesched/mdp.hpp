#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "safesched/model.hpp"
#include "safesched/transition.hpp"

namespace safesched {

enum class StateClass { restricted, unrestricted };

/// Restricted iff exactly one action is enabled (only possible in
/// non-preemptible mode, while a request is in progress).
inline StateClass classify_state(const SystemState& s, std::size_t route_count, Mode mode) {
    return enabled_actions(s, route_count, mode).size() == 1 ? StateClass::restricted : StateClass::unrestricted;
}

inline constexpr int kDefaultChainBound = 100000;

/// Collapses the forced chain that follows `a` in non-preemptible mode: keeps
/// applying the single enabled action through restricted states until an
/// unrestricted state or the terminal state is reached. Probabilities
/// multiply, rewards add, duration counts the concrete steps.
inline std::vector<TransitionOutcome> macro_successors(const SystemState& s, Action a, const RewardParams& params,
                                                       const std::vector<RouteSpec>& specs,
                                                       int step_bound = kDefaultChainBound) {
    const std::size_t w = specs.size();
    if (classify_state(s, w, Mode::nonpreemptible) == StateClass::restricted)
        throw SemanticsError("macro_successors called on a restricted state");

    std::vector<TransitionOutcome> done;
    std::vector<TransitionOutcome> frontier = successors(s, a, params, specs, Mode::nonpreemptible);
    while (!frontier.empty()) {
        std::vector<TransitionOutcome> next_frontier;
        for (auto& o : frontier) {
            if (o.next.terminal || classify_state(o.next, w, Mode::nonpreemptible) == StateClass::unrestricted) {
                detail::merge_into(done, std::move(o));
                continue;
            }
            if (o.duration >= step_bound)
                throw ModelError("forced chain exceeds " + std::to_string(step_bound) + " steps");
            const Action forced = Action::work(*o.next.in_progress);
            for (auto& step : successors(o.next, forced, params, specs, Mode::nonpreemptible)) {
                TransitionOutcome c;
                c.next = std::move(step.next);
                c.prob = o.prob * step.prob;
                c.reward = o.reward + step.reward;
                c.duration = o.duration + step.duration;
                c.completed = step.completed != 0 ? step.completed : o.completed;
                c.arrivals = o.arrivals | step.arrivals;
                next_frontier.push_back(std::move(c));
            }
        }
        frontier = std::move(next_frontier);
    }
    return done;
}

/// Transition with the successor stored as a state index.
struct Outcome {
    std::size_t next = 0;
    double prob = 1.0;
    double reward = 0.0;
    int duration = 1;

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

/// Enumerated MDP. State 0 is the all-initial configuration; actions are
/// stored in canonical order and transitions[s][k] belongs to actions_of[s][k].
struct ExplicitMdp {
    std::vector<RouteSpec> specs;
    RewardParams params;
    Mode mode = Mode::preemptible;
    std::vector<SystemState> states;
    std::vector<std::vector<Action>> actions_of;
    std::vector<std::vector<std::vector<Outcome>>> transitions;
    std::optional<std::size_t> terminal_index;
    std::unordered_map<SystemState, std::size_t, SystemStateHash> index;

    std::size_t size() const { return states.size(); }
    std::size_t size_without_terminal() const { return states.size() - (terminal_index ? 1 : 0); }
    std::size_t route_count() const { return specs.size(); }

    std::optional<std::size_t> find(const SystemState& s) const {
        auto it = index.find(s);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }

    /// Position of `a` in actions_of[s], if enabled.
    std::optional<std::size_t> action_slot(std::size_t s, Action a) const {
        const auto& acts = actions_of.at(s);
        for (std::size_t k = 0; k < acts.size(); ++k)
            if (acts[k] == a) return k;
        return std::nullopt;
    }

    const std::vector<Outcome>& outcomes(std::size_t s, Action a) const {
        auto k = action_slot(s, a);
        if (!k) throw SemanticsError(to_string(a) + " not enabled in state " + std::to_string(s));
        return transitions[s][*k];
    }
};

struct BuildOptions {
    std::size_t state_cap = 5'000'000;
    int chain_step_bound = kDefaultChainBound;
};

/// Breadth-first closure of the transition relation from the initial
/// configuration. In non-preemptible mode only unrestricted states (and the
/// terminal state) are stored; transitions are macro-transitions.
inline ExplicitMdp build(const std::vector<RouteSpec>& specs, const RewardParams& params, Mode mode,
                         const BuildOptions& opts = {}) {
    validate_specs(specs);
    params.validate();

    ExplicitMdp m;
    m.specs = specs;
    m.params = params;
    m.mode = mode;

    auto intern = [&m, &opts](SystemState s) -> std::size_t {
        if (auto it = m.index.find(s); it != m.index.end()) return it->second;
        if (m.states.size() >= opts.state_cap)
            throw StateExplosion("state explosion: more than " + std::to_string(opts.state_cap) +
                                 " states (raise the state cap)");
        const std::size_t id = m.states.size();
        if (s.terminal) m.terminal_index = id;
        m.index.emplace(s, id);
        m.states.push_back(std::move(s));
        return id;
    };

    intern(SystemState::initial(specs));
    for (std::size_t cur = 0; cur < m.states.size(); ++cur) {
        const SystemState s = m.states[cur];
        auto acts = enabled_actions(s, specs.size(), mode);
        std::vector<std::vector<Outcome>> per_action;
        per_action.reserve(acts.size());
        for (Action a : acts) {
            auto raw = (mode == Mode::nonpreemptible && !s.terminal)
                           ? macro_successors(s, a, params, specs, opts.chain_step_bound)
                           : successors(s, a, params, specs, mode);
            std::vector<Outcome> outs;
            outs.reserve(raw.size());
            for (auto& o : raw) outs.push_back({intern(std::move(o.next)), o.prob, o.reward, o.duration});
            per_action.push_back(std::move(outs));
        }
        m.actions_of.push_back(std::move(acts));
        m.transitions.push_back(std::move(per_action));
    }
    return m;
}

}  // namespace safesched
