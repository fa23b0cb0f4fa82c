#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "safesched/error.hpp"
#include "safesched/prob_vec.hpp"

namespace safesched {

enum class RouteClass { hard, soft };
enum class Mode { preemptible, nonpreemptible };

inline std::string to_string(RouteClass c) { return c == RouteClass::hard ? "hard" : "soft"; }
inline std::string to_string(Mode m) { return m == Mode::preemptible ? "pe" : "npe"; }

/// Route ids are 1-based; the system holds at most 64 routes (arrival sets
/// are bitmasks).
using RouteId = int;
inline constexpr std::size_t kMaxRoutes = 64;

/// Immutable template a request is (re)instantiated from.
struct RouteSpec {
    RouteId id = 1;
    RouteClass route_class = RouteClass::soft;
    ProbVec p_init;  ///< completion-time distribution (bound K)
    int d_init = 1;  ///< deadline D
    ProbVec q_init;  ///< inter-arrival distribution (bound M)

    bool hard() const { return route_class == RouteClass::hard; }

    /// Enforces non-degenerate initial values and K <= D <= M, where K and M
    /// are the largest completion / inter-arrival times with nonzero mass.
    void validate() const {
        const std::string where = "route " + std::to_string(id);
        if (p_init.size() < 2) throw ModelError(where + ": completion distribution missing");
        if (q_init.size() < 2) throw ModelError(where + ": interarrival distribution missing");
        if (p_init[0] != 0.0)
            throw ModelError(where + ": completion distribution must have p[0] = 0");
        if (q_init[0] != 0.0)
            throw ModelError(where + ": interarrival distribution must have q[0] = 0");
        if (d_init <= 0) throw ModelError(where + ": deadline must be positive");
        const auto k = static_cast<int>(p_init.max_support());
        const auto m = static_cast<int>(q_init.max_support());
        if (k > d_init)
            throw ModelError(where + ": completion support K=" + std::to_string(k) +
                             " exceeds deadline D=" + std::to_string(d_init));
        if (d_init > m)
            throw ModelError(where + ": deadline D=" + std::to_string(d_init) +
                             " exceeds interarrival support M=" + std::to_string(m));
    }

    friend bool operator==(const RouteSpec&, const RouteSpec&) = default;
};

/// Checks every spec and that ids run 1..W in order.
inline void validate_specs(const std::vector<RouteSpec>& specs) {
    if (specs.empty()) throw ModelError("routes: at least one route is required");
    if (specs.size() > kMaxRoutes) throw ModelError("routes: more than 64 routes");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].id != static_cast<RouteId>(i + 1))
            throw ModelError("routes[" + std::to_string(i) + "]: id must be " + std::to_string(i + 1));
        specs[i].validate();
    }
}

struct RequestState {
    ProbVec p;
    int deadline = 0;
    ProbVec q;

    bool completed() const { return p.is_done(); }

    static RequestState initial(const RouteSpec& spec) { return {spec.p_init, spec.d_init, spec.q_init}; }

    friend bool operator==(const RequestState&, const RequestState&) = default;
};

struct SystemState {
    std::vector<RequestState> requests;  ///< one per route, index = route id - 1
    bool terminal = false;
    std::optional<RouteId> in_progress;  ///< non-preemptible lock

    static SystemState initial(const std::vector<RouteSpec>& specs) {
        SystemState s;
        s.requests.reserve(specs.size());
        for (const auto& spec : specs) s.requests.push_back(RequestState::initial(spec));
        return s;
    }

    static SystemState make_terminal() {
        SystemState s;
        s.terminal = true;
        return s;
    }

    const RequestState& request(RouteId id) const { return requests.at(static_cast<std::size_t>(id - 1)); }

    friend bool operator==(const SystemState&, const SystemState&) = default;

    std::size_t hash() const {
        std::size_t h = terminal ? 0x51ed270b27fULL : 0x2545f4914f6cdd1dULL;
        auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
        for (const auto& r : requests) {
            mix(r.p.hash());
            mix(static_cast<std::size_t>(r.deadline));
            mix(r.q.hash());
        }
        mix(in_progress ? static_cast<std::size_t>(*in_progress) : 0xffffULL);
        return h;
    }
};

struct SystemStateHash {
    std::size_t operator()(const SystemState& s) const noexcept { return s.hash(); }
};

/// Idle (route 0) or Work(route).
struct Action {
    RouteId route = 0;

    static constexpr Action idle() { return {0}; }
    static constexpr Action work(RouteId id) { return {id}; }
    constexpr bool is_idle() const { return route == 0; }

    /// Canonical order: Idle < Work(1) < ... < Work(W).
    friend constexpr auto operator<=>(const Action&, const Action&) = default;
};

inline std::string to_string(Action a) { return a.is_idle() ? "idle" : "work(" + std::to_string(a.route) + ")"; }

/// Full canonical action set {Idle, Work(1..W)}.
inline std::vector<Action> all_actions(std::size_t route_count) {
    std::vector<Action> out;
    out.reserve(route_count + 1);
    out.push_back(Action::idle());
    for (std::size_t i = 1; i <= route_count; ++i) out.push_back(Action::work(static_cast<RouteId>(i)));
    return out;
}

struct RewardParams {
    double j_soft = -10.0;
    double j_hard = -10000.0;

    void validate() const {
        if (!(j_soft < 0.0)) throw ModelError("rewards.j_soft must be negative");
        if (!(j_hard < j_soft)) throw ModelError("rewards.j_hard must be below rewards.j_soft");
    }

    friend bool operator==(const RewardParams&, const RewardParams&) = default;
};

struct TransitionOutcome {
    SystemState next;
    double prob = 1.0;
    double reward = 0.0;
    int duration = 1;
    // Observable events (first concrete step that produced them, or any step of
    // a macro chain).
    RouteId completed = 0;       ///< route that completed, 0 for none
    std::uint64_t arrivals = 0;  ///< bit (id-1) set when route id was replaced
};

}  // namespace safesched
