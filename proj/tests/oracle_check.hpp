#pragma once

// Compares build / prune / value_iteration / macro transitions against the
// reference model on one small system.

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "reference_model.hpp"
#include "safesched/safesched.hpp"

namespace oracle {

using namespace safesched;

inline constexpr double kDiscount = 0.9;
inline constexpr int kHorizon = 400;
inline constexpr double kValueTolerance = 1e-3;

struct Report {
    bool states_equal = true;
    bool safety_equal = true;
    bool values_equal = true;
    bool roundtrip_equal = true;
    bool schedulable = false;
    std::size_t states = 0;
    double max_value_error = 0.0;
    std::string detail;

    bool ok() const { return states_equal && safety_equal && values_equal && roundtrip_equal; }
};

inline ref::Dist random_dist(std::mt19937_64& rng, int bound, double extra_support) {
    std::bernoulli_distribution keep(extra_support);
    std::uniform_int_distribution<int> weight(1, 3);
    std::vector<int> w(static_cast<std::size_t>(bound + 1), 0);
    w[static_cast<std::size_t>(bound)] = weight(rng);
    for (int t = 1; t < bound; ++t)
        if (keep(rng)) w[static_cast<std::size_t>(t)] = weight(rng);
    int total = 0;
    for (int x : w) total += x;
    ref::Dist d;
    for (int x : w) d.push_back(ref::Rational{x, total});
    return d;
}

/// 1..3 routes; K <= D <= M <= 5.
inline std::vector<ref::Route> random_system(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int w = std::uniform_int_distribution<int>(1, 3)(rng);
    std::vector<ref::Route> routes;
    for (int i = 0; i < w; ++i) {
        const int m = std::uniform_int_distribution<int>(1, 5)(rng);
        const int d = std::uniform_int_distribution<int>(1, m)(rng);
        const int k = std::uniform_int_distribution<int>(1, d)(rng);
        const bool hard = std::bernoulli_distribution(0.5)(rng);
        routes.push_back({hard, random_dist(rng, k, 0.5), d, random_dist(rng, m, 0.3)});
    }
    return routes;
}

inline std::vector<RouteSpec> specs_of(const std::vector<ref::Route>& routes) {
    std::vector<RouteSpec> specs;
    for (std::size_t i = 0; i < routes.size(); ++i) specs.push_back(ref::to_spec(routes[i], static_cast<RouteId>(i + 1)));
    return specs;
}

inline Report check(const std::vector<ref::Route>& routes, Mode mode) {
    Report rep;
    std::ostringstream why;
    const bool npe = mode == Mode::nonpreemptible;
    const auto specs = specs_of(routes);
    const ref::Model model(routes, -10, -10000, npe);
    const auto m = std::make_shared<const ExplicitMdp>(build(specs, RewardParams{}, mode));
    const auto pm = prune(m);
    rep.states = m->size();
    rep.schedulable = pm.schedulable;

    // (a) stored state sets
    const auto concrete = model.reachable();
    std::map<ref::State, std::size_t> index_of;
    for (const auto& s : concrete) {
        if (!s.term && model.restricted(s)) continue;
        const auto idx = m->find(model.to_system_state(s));
        if (!idx) {
            rep.states_equal = false;
            why << "reference state missing from build; ";
            continue;
        }
        index_of[s] = *idx;
    }
    if (index_of.size() != m->size()) {
        rep.states_equal = false;
        why << "build has " << m->size() << " states, reference " << index_of.size() << "; ";
    }

    // safety against the naive fixpoint
    const auto safe = model.safe_states(concrete);
    for (const auto& [s, idx] : index_of)
        if (pm.is_safe(idx) != (safe.count(s) == 1)) rep.safety_equal = false;
    if (pm.schedulable != (safe.count(model.initial()) == 1)) rep.safety_equal = false;
    if (!rep.safety_equal) why << "pruned set differs; ";

    // (b) values against finite-horizon expectimax
    if (pm.schedulable && rep.safety_equal) {
        const auto vi = value_iteration(pm, kDiscount, 1e-11);
        const auto exact = model.expectimax(safe, kDiscount, kHorizon);
        // |V* - V_H| <= d^H * max|r| / (1 - d); at most 3 soft misses per step
        const double correction = std::pow(kDiscount, kHorizon) * 30.0 / (1.0 - kDiscount);
        for (const auto& [s, idx] : index_of) {
            if (!pm.is_safe(idx)) continue;
            const double err = std::abs(vi.values.value[idx] - exact.at(s));
            rep.max_value_error = std::max(rep.max_value_error, err);
            if (err > kValueTolerance + correction) rep.values_equal = false;
        }
        if (!rep.values_equal) why << "value error " << rep.max_value_error << "; ";
    }

    // (c) macro transitions unroll into concrete paths and re-collapse
    if (npe) {
        struct Path {
            SystemState at;
            double prob;
            double reward;
            int duration;
        };
        for (std::size_t s = 0; s < m->size(); ++s) {
            if (m->states[s].terminal) continue;
            for (std::size_t k = 0; k < m->actions_of[s].size(); ++k) {
                std::map<std::tuple<std::size_t, double, int>, double> collapsed;
                std::vector<Path> todo;
                for (auto& o : successors(m->states[s], m->actions_of[s][k], m->params, m->specs, mode))
                    todo.push_back({o.next, o.prob, o.reward, 1});
                while (!todo.empty()) {
                    Path p = todo.back();
                    todo.pop_back();
                    if (p.at.terminal || classify_state(p.at, specs.size(), mode) == StateClass::unrestricted) {
                        const auto idx = m->find(p.at);
                        if (!idx) {
                            rep.roundtrip_equal = false;
                            continue;
                        }
                        collapsed[{*idx, p.reward, p.duration}] += p.prob;
                        continue;
                    }
                    const Action forced = enabled_actions(p.at, specs.size(), mode).front();
                    for (auto& o : successors(p.at, forced, m->params, m->specs, mode))
                        todo.push_back({o.next, p.prob * o.prob, p.reward + o.reward, p.duration + 1});
                }
                const auto& outs = m->transitions[s][k];
                if (outs.size() != collapsed.size()) rep.roundtrip_equal = false;
                for (const auto& o : outs) {
                    const auto it = collapsed.find({o.next, o.reward, o.duration});
                    if (it == collapsed.end() || std::abs(it->second - o.prob) > 1e-10) rep.roundtrip_equal = false;
                }
            }
        }
        if (!rep.roundtrip_equal) why << "macro round trip differs; ";
    }
    rep.detail = why.str();
    return rep;
}

}  // namespace oracle
