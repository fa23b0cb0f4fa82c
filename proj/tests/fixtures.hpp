#pragma once

#include <vector>

#include "safesched/safesched.hpp"

namespace fixtures {

using namespace safesched;

inline RouteSpec route(RouteId id, RouteClass c, std::vector<double> p, int d, std::vector<double> q) {
    return {id, c, ProbVec(std::move(p)), d, ProbVec(std::move(q))};
}

inline RouteSpec hard(RouteId id, std::vector<double> p, int d, std::vector<double> q) {
    return route(id, RouteClass::hard, std::move(p), d, std::move(q));
}

inline RouteSpec soft(RouteId id, std::vector<double> p, int d, std::vector<double> q) {
    return route(id, RouteClass::soft, std::move(p), d, std::move(q));
}

inline std::vector<double> point(std::size_t t, std::size_t bound) {
    std::vector<double> v(bound + 1, 0.0);
    v[t] = 1.0;
    return v;
}

/// Hard p3=1, D=7, q8=1; soft p2=1, D=3, q4=1.
inline std::vector<RouteSpec> baseline() {
    return {hard(1, point(3, 3), 7, point(8, 8)), soft(2, point(2, 2), 3, point(4, 4))};
}

/// Hard completion {0,0,0,.5,.5}, otherwise as the baseline.
inline std::vector<RouteSpec> stochastic() {
    return {hard(1, {0, 0, 0, 0.5, 0.5}, 7, point(8, 8)), soft(2, point(2, 2), 3, point(4, 4))};
}

/// Applies `a` n times; every step must be deterministic.
inline SystemState step_n(SystemState s, Action a, int n, const std::vector<RouteSpec>& specs,
                          Mode mode = Mode::preemptible) {
    const RewardParams params;
    for (int i = 0; i < n; ++i) {
        auto outs = successors(s, a, params, specs, mode);
        if (outs.size() != 1) throw std::logic_error("step_n: nondeterministic step");
        s = outs.front().next;
    }
    return s;
}

}  // namespace fixtures
