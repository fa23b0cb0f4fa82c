#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "safesched/model.hpp"

namespace safesched {

inline std::vector<Action> enabled_actions(const SystemState& s, std::size_t route_count, Mode mode) {
    if (!s.terminal && mode == Mode::nonpreemptible && s.in_progress) {
        const RouteId locked = *s.in_progress;
        if (!s.request(locked).completed()) return {Action::work(locked)};
    }
    return all_actions(route_count);
}

namespace detail {

struct Branch {
    double prob;
    bool event;               // completion / arrival happens
    std::optional<ProbVec> rest;  // successor distribution when no event
};

// Event-vs-no-event split of a distribution that is still counting down.
inline std::vector<Branch> split(const ProbVec& v) {
    if (v[1] > 0.0 && v.nonzero_count() == 1) return {{1.0, true, std::nullopt}};
    if (v[1] == 0.0) return {{1.0, false, shift_decrement(v)}};
    auto c = condition_nonevent(v);
    return {{c.event_prob, true, std::nullopt}, {1.0 - c.event_prob, false, std::move(c.rest)}};
}

inline bool hard_request_expired(const SystemState& s, const std::vector<RouteSpec>& specs) {
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (specs[i].hard() && s.requests[i].deadline == 0 && !s.requests[i].completed()) return true;
    return false;
}

inline void merge_into(std::vector<TransitionOutcome>& out, TransitionOutcome o) {
    for (auto& e : out) {
        if (e.reward == o.reward && e.duration == o.duration && e.next == o.next) {
            e.prob += o.prob;
            return;
        }
    }
    out.push_back(std::move(o));
}

}  // namespace detail

/// One concrete time step of the scheduling MDP.
///
/// Composition per step: terminal self-loop; expired hard request -> terminal;
/// progress on the worked request; independent arrival resolution for every
/// route (a replacement overrides any progress on that request); deadline
/// decrement; penalties. Any outcome that leaves a hard request incomplete at
/// deadline 0 goes to the terminal state instead, charged j_hard once.
/// Outcomes with equal (next, reward) are merged.
inline std::vector<TransitionOutcome> successors(const SystemState& s, Action a, const RewardParams& params,
                                                 const std::vector<RouteSpec>& specs,
                                                 Mode mode = Mode::preemptible) {
    const std::size_t w = specs.size();
    if (a.route < 0 || static_cast<std::size_t>(a.route) > w)
        throw ModelError("malformed action " + to_string(a) + " for " + std::to_string(w) + " routes");

    if (s.terminal) return {{s, 1.0, 0.0, 1, 0, 0}};
    if (s.requests.size() != w) throw ModelError("state holds " + std::to_string(s.requests.size()) +
                                                 " requests but system has " + std::to_string(w) + " routes");
    if (detail::hard_request_expired(s, specs)) return {{SystemState::make_terminal(), 1.0, params.j_hard, 1, 0, 0}};

    if (mode == Mode::nonpreemptible && s.in_progress && !s.request(*s.in_progress).completed() &&
        a != Action::work(*s.in_progress))
        throw SemanticsError(to_string(a) + " not enabled while route " + std::to_string(*s.in_progress) +
                             " is in progress");

    // Progress on the worked request. Working a completed request is idling.
    const RouteId worked = (!a.is_idle() && !s.request(a.route).completed()) ? a.route : 0;
    std::vector<detail::Branch> work_branches;
    if (worked != 0)
        work_branches = detail::split(s.request(worked).p);
    else
        work_branches = {{1.0, false, std::nullopt}};

    std::vector<std::vector<detail::Branch>> arrival_branches;
    arrival_branches.reserve(w);
    for (const auto& r : s.requests) arrival_branches.push_back(detail::split(r.q));

    std::optional<RouteId> lock = s.in_progress;
    if (mode == Mode::nonpreemptible && worked != 0) lock = worked;

    std::vector<TransitionOutcome> out;
    std::vector<std::size_t> pick(w, 0);
    for (const auto& wb : work_branches) {
        std::fill(pick.begin(), pick.end(), 0);
        while (true) {
            TransitionOutcome o;
            o.prob = wb.prob;
            o.next.requests.reserve(w);
            std::optional<RouteId> next_lock = lock;
            int soft_misses = 0;
            bool hard_miss = false;

            for (std::size_t i = 0; i < w; ++i) {
                const auto id = static_cast<RouteId>(i + 1);
                const auto& arr = arrival_branches[i][pick[i]];
                const auto& cur = s.requests[i];
                o.prob *= arr.prob;
                if (arr.event) {
                    o.next.requests.push_back(RequestState::initial(specs[i]));
                    o.arrivals |= std::uint64_t{1} << i;
                    if (next_lock == id) next_lock.reset();
                    continue;
                }
                RequestState nr{cur.p, cur.deadline > 0 ? cur.deadline - 1 : 0, *arr.rest};
                if (id == worked) {
                    if (wb.event) {
                        nr.p = ProbVec::point(0, cur.p.bound());
                        o.completed = id;
                    } else {
                        nr.p = *wb.rest;
                    }
                }
                if (next_lock == id && nr.completed()) next_lock.reset();
                if (!nr.completed() && nr.deadline == 0) {
                    if (specs[i].hard())
                        hard_miss = true;
                    else if (cur.deadline > 0)
                        ++soft_misses;
                }
                o.next.requests.push_back(std::move(nr));
            }

            if (hard_miss) {
                o.next = SystemState::make_terminal();
                o.reward = params.j_hard;
                o.completed = 0;
                o.arrivals = 0;
            } else {
                o.next.in_progress = mode == Mode::nonpreemptible ? next_lock : std::nullopt;
                o.reward = soft_misses == 0 ? 0.0 : soft_misses * params.j_soft;
            }
            detail::merge_into(out, std::move(o));

            // odometer over per-route arrival branches
            std::size_t k = 0;
            while (k < w && ++pick[k] == arrival_branches[k].size()) pick[k++] = 0;
            if (k == w) break;
        }
    }
    return out;
}

}  // namespace safesched
