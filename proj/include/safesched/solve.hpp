#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "safesched/rng.hpp"
#include "safesched/safety.hpp"

namespace safesched {

/// Expected discounted total reward per state; NaN for pruned states.
struct ValueTable {
    std::vector<double> value;
};

/// Chosen action per state; empty for pruned states.
struct PolicyTable {
    std::vector<std::optional<Action>> action;
};

struct ViResult {
    ValueTable values;
    PolicyTable policy;
    int iterations = 0;
    std::vector<double> residuals;  ///< max |v_new - v_old| after each sweep
};

namespace detail {

inline double q_value(const std::vector<Outcome>& outs, const std::vector<double>& v, double discount) {
    double q = 0.0;
    for (const auto& o : outs) q += o.prob * (o.reward + std::pow(discount, o.duration) * v[o.next]);
    return q;
}

inline bool strictly_better(double q, double best) {
    return q > best + 1e-9 * std::max(1.0, std::abs(best));
}

}  // namespace detail

/// Synchronous value iteration over safe actions only. Macro-transitions are
/// discounted by discount^duration. The greedy policy breaks near-ties
/// (relative 1e-9) in canonical action order.
inline ViResult value_iteration(const PrunedMdp& pm, double discount = 0.99, double tol = 1e-6,
                                int max_iterations = 1'000'000) {
    if (!pm.schedulable) throw UnsafeError("value iteration refused: system is not schedulable");
    if (!(discount > 0.0 && discount < 1.0)) throw ModelError("discount must lie in (0, 1)");
    if (!(tol > 0.0)) throw ModelError("tolerance must be positive");

    const ExplicitMdp& m = pm.mdp();
    const std::size_t n = m.size();
    std::vector<double> v(n, 0.0), next(n, 0.0);

    ViResult res;
    while (res.iterations < max_iterations) {
        double residual = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            if (pm.pruned[s]) continue;
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t k : pm.safe_slots[s]) best = std::max(best, detail::q_value(m.transitions[s][k], v, discount));
            next[s] = best;
            residual = std::max(residual, std::abs(best - v[s]));
        }
        v.swap(next);
        ++res.iterations;
        res.residuals.push_back(residual);
        if (residual <= tol) break;
    }

    res.values.value.assign(n, std::numeric_limits<double>::quiet_NaN());
    res.policy.action.assign(n, std::nullopt);
    for (std::size_t s = 0; s < n; ++s) {
        if (pm.pruned[s]) continue;
        res.values.value[s] = v[s];
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k : pm.safe_slots[s]) {
            const double q = detail::q_value(m.transitions[s][k], v, discount);
            if (!res.policy.action[s] || detail::strictly_better(q, best)) {
                best = q;
                res.policy.action[s] = m.actions_of[s][k];
            }
        }
    }
    return res;
}

/// Earliest deadline first over the safe actions: the incomplete hard request
/// with the smallest deadline, else the incomplete soft one, else Idle. Ties
/// go to the lower route id.
inline Action edf_action(const SystemState& s, std::span<const Action> safe, const std::vector<RouteSpec>& specs) {
    std::optional<Action> best_hard, best_soft;
    int hard_deadline = 0, soft_deadline = 0;
    for (Action a : safe) {
        if (a.is_idle() || s.terminal) continue;
        const auto& r = s.request(a.route);
        if (r.completed()) continue;
        const bool hard = specs.at(static_cast<std::size_t>(a.route - 1)).hard();
        auto& best = hard ? best_hard : best_soft;
        int& dl = hard ? hard_deadline : soft_deadline;
        if (!best || r.deadline < dl || (r.deadline == dl && a.route < best->route)) {
            best = a;
            dl = r.deadline;
        }
    }
    if (best_hard) return *best_hard;
    if (best_soft) return *best_soft;
    if (std::find(safe.begin(), safe.end(), Action::idle()) != safe.end() || safe.empty()) return Action::idle();
    return safe.front();
}

enum class Rollout { edf, random };

inline std::string to_string(Rollout r) { return r == Rollout::edf ? "edf" : "random"; }

struct MctsConfig {
    int depth = 20;           ///< decisions (macro-steps) per simulation
    int simulations = 1000;   ///< per decision
    double exploration_c = 10.0;
    Rollout rollout = Rollout::edf;
    std::uint64_t seed = 0;
    double discount = 0.99;

    void validate() const {
        if (depth < 1) throw ModelError("mcts.depth must be >= 1");
        if (simulations < 1) throw ModelError("mcts.simulations must be >= 1");
        if (!(exploration_c >= 0.0)) throw ModelError("mcts.exploration_c must be nonnegative");
        if (!(discount > 0.0 && discount <= 1.0)) throw ModelError("mcts.discount must lie in (0, 1]");
    }
};

namespace detail {

inline std::size_t sample_outcome(const std::vector<Outcome>& outs, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < outs.size(); ++i) {
        acc += outs[i].prob;
        if (u < acc) return i;
    }
    return outs.size() - 1;
}

class UctSearch {
public:
    UctSearch(const PrunedMdp& pm, const MctsConfig& cfg) : pm_(pm), m_(pm.mdp()), cfg_(cfg), rng_(cfg.seed) {}

    Action run(std::size_t root_state) {
        const auto& slots = pm_.safe_slots[root_state];
        if (slots.size() == 1) return m_.actions_of[root_state][slots.front()];
        nodes_.push_back(make_node(root_state));
        for (int i = 0; i < cfg_.simulations; ++i) simulate(0, cfg_.depth);

        const Node& root = nodes_[0];
        std::optional<std::size_t> best;
        double best_mean = 0.0;
        for (std::size_t e = 0; e < root.edges.size(); ++e) {
            const Edge& edge = root.edges[e];
            if (edge.visits == 0) continue;
            const double mean = edge.total / edge.visits;
            if (!best || strictly_better(mean, best_mean)) {
                best = e;
                best_mean = mean;
            }
        }
        return m_.actions_of[root_state][slots[best.value_or(0)]];
    }

private:
    struct Edge {
        std::size_t slot;
        int visits = 0;
        double total = 0.0;
        std::vector<std::pair<std::size_t, std::size_t>> children;  // outcome index -> node
    };
    struct Node {
        std::size_t state;
        int visits = 0;
        std::vector<Edge> edges;
    };

    Node make_node(std::size_t state) const {
        Node n{state, 0, {}};
        for (std::size_t k : pm_.safe_slots[state]) n.edges.push_back(Edge{k, 0, 0.0, {}});
        return n;
    }

    std::size_t select(const Node& node) {
        std::size_t untried = 0;
        for (const auto& edge : node.edges) untried += edge.visits == 0;
        if (untried > 0) {
            std::size_t pick = uniform_index(rng_, untried);
            for (std::size_t e = 0; e < node.edges.size(); ++e)
                if (node.edges[e].visits == 0 && pick-- == 0) return e;
        }
        const double log_n = std::log(static_cast<double>(node.visits));
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t e = 0; e < node.edges.size(); ++e) {
            const Edge& edge = node.edges[e];
            const double score = edge.total / edge.visits + cfg_.exploration_c * std::sqrt(log_n / edge.visits);
            if (score > best_score) {
                best_score = score;
                best = e;
            }
        }
        return best;
    }

    double simulate(std::size_t node_id, int depth_left) {
        if (depth_left == 0) return 0.0;
        const std::size_t e = select(nodes_[node_id]);
        const std::size_t state = nodes_[node_id].state;
        const auto& outs = m_.transitions[state][nodes_[node_id].edges[e].slot];
        const std::size_t oi = sample_outcome(outs, rng_);
        const Outcome& o = outs[oi];

        double future = 0.0;
        std::optional<std::size_t> child;
        for (auto [idx, c] : nodes_[node_id].edges[e].children)
            if (idx == oi) child = c;
        if (child) {
            future = simulate(*child, depth_left - 1);
        } else {
            const std::size_t c = nodes_.size();
            nodes_.push_back(make_node(o.next));
            nodes_[node_id].edges[e].children.emplace_back(oi, c);
            future = rollout(o.next, depth_left - 1);
        }
        const double ret = o.reward + std::pow(cfg_.discount, o.duration) * future;

        Edge& edge = nodes_[node_id].edges[e];
        ++edge.visits;
        edge.total += ret;
        ++nodes_[node_id].visits;
        return ret;
    }

    double rollout(std::size_t state, int depth_left) {
        double ret = 0.0, scale = 1.0;
        std::vector<Action> safe;
        for (int d = 0; d < depth_left; ++d) {
            const auto& slots = pm_.safe_slots[state];
            std::size_t slot;
            if (slots.size() == 1) {
                slot = slots.front();
            } else if (cfg_.rollout == Rollout::random) {
                slot = slots[uniform_index(rng_, slots.size())];
            } else {
                safe.clear();
                for (std::size_t k : slots) safe.push_back(m_.actions_of[state][k]);
                const Action a = edf_action(m_.states[state], safe, m_.specs);
                slot = *m_.action_slot(state, a);
            }
            const auto& outs = m_.transitions[state][slot];
            const Outcome& o = outs[sample_outcome(outs, rng_)];
            ret += scale * o.reward;
            scale *= std::pow(cfg_.discount, o.duration);
            state = o.next;
        }
        return ret;
    }

    const PrunedMdp& pm_;
    const ExplicitMdp& m_;
    MctsConfig cfg_;
    Rng rng_;
    std::vector<Node> nodes_;
};

}  // namespace detail

/// UCT search from state `s` over safe actions only: selection by mean +
/// c * sqrt(ln N / n), one expansion per simulation, rollout to the remaining
/// depth with the configured policy, discounted backup. Returns the root
/// action with the best mean return; deterministic for a fixed seed.
inline Action mcts_action(const PrunedMdp& pm, std::size_t s, const MctsConfig& cfg) {
    cfg.validate();
    if (!pm.is_safe(s)) throw UnsafeError("mcts refused: state " + std::to_string(s) + " is unsafe");
    return detail::UctSearch(pm, cfg).run(s);
}

}  // namespace safesched
