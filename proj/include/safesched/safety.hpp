#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "safesched/mdp.hpp"

namespace safesched {

/// Safe sub-MDP: the states and actions that can never reach the terminal
/// state.
struct PrunedMdp {
    std::shared_ptr<const ExplicitMdp> base;
    /// safe_slots[s] lists positions into base->actions_of[s]; empty for pruned s.
    std::vector<std::vector<std::size_t>> safe_slots;
    std::vector<bool> pruned;
    bool schedulable = false;

    const ExplicitMdp& mdp() const { return *base; }
    bool is_safe(std::size_t s) const { return s < pruned.size() && !pruned[s]; }

    std::size_t pruned_state_count() const {
        std::size_t n = 0;
        for (bool p : pruned) n += p;
        return n;
    }

    std::size_t pruned_action_count() const {
        std::size_t total = 0, kept = 0;
        for (std::size_t s = 0; s < pruned.size(); ++s) {
            total += base->actions_of[s].size();
            kept += safe_slots[s].size();
        }
        return total - kept;
    }
};

/// Backward-reachability fixpoint. Seeds with the terminal state, then
/// repeatedly drops every action with a positive-probability edge into a
/// pruned state and prunes states left without actions. Rewards play no part.
inline PrunedMdp prune(std::shared_ptr<const ExplicitMdp> base) {
    const ExplicitMdp& m = *base;
    const std::size_t n = m.size();

    PrunedMdp pm;
    pm.pruned.assign(n, false);
    pm.safe_slots.resize(n);

    // reverse index: target -> (source, slot)
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> preds(n);
    std::vector<std::vector<bool>> alive(n);
    std::vector<std::size_t> live_count(n);
    for (std::size_t s = 0; s < n; ++s) {
        alive[s].assign(m.actions_of[s].size(), true);
        live_count[s] = m.actions_of[s].size();
        for (std::size_t k = 0; k < m.transitions[s].size(); ++k)
            for (const auto& o : m.transitions[s][k])
                if (o.prob > 0.0) preds[o.next].emplace_back(s, k);
    }

    std::vector<std::size_t> worklist;
    if (m.terminal_index) {
        pm.pruned[*m.terminal_index] = true;
        worklist.push_back(*m.terminal_index);
    }
    while (!worklist.empty()) {
        const std::size_t t = worklist.back();
        worklist.pop_back();
        for (auto [s, k] : preds[t]) {
            if (pm.pruned[s] || !alive[s][k]) continue;
            alive[s][k] = false;
            if (--live_count[s] == 0) {
                pm.pruned[s] = true;
                worklist.push_back(s);
            }
        }
    }

    for (std::size_t s = 0; s < n; ++s) {
        if (pm.pruned[s]) continue;
        for (std::size_t k = 0; k < alive[s].size(); ++k)
            if (alive[s][k]) pm.safe_slots[s].push_back(k);
    }
    pm.schedulable = n > 0 && !pm.pruned[0];
    pm.base = std::move(base);
    return pm;
}

inline PrunedMdp prune(ExplicitMdp m) { return prune(std::make_shared<const ExplicitMdp>(std::move(m))); }

inline std::vector<Action> safe_actions(const PrunedMdp& pm, std::size_t s) {
    if (!pm.is_safe(s)) throw UnsafeError("state " + std::to_string(s) + " is unsafe (pruned)");
    std::vector<Action> out;
    out.reserve(pm.safe_slots[s].size());
    for (std::size_t k : pm.safe_slots[s]) out.push_back(pm.base->actions_of[s][k]);
    return out;
}

/// The safe sub-MDP as a standalone ExplicitMdp (safe states re-indexed in
/// order, only safe actions kept). Requires a schedulable system so that the
/// initial state stays at index 0.
inline ExplicitMdp restrict_to_safe(const PrunedMdp& pm) {
    if (!pm.schedulable) throw UnsafeError("system is not schedulable; nothing to restrict to");
    const ExplicitMdp& m = *pm.base;
    std::vector<std::size_t> remap(m.size(), static_cast<std::size_t>(-1));
    ExplicitMdp r;
    r.specs = m.specs;
    r.params = m.params;
    r.mode = m.mode;
    for (std::size_t s = 0; s < m.size(); ++s) {
        if (pm.pruned[s]) continue;
        remap[s] = r.states.size();
        r.index.emplace(m.states[s], r.states.size());
        r.states.push_back(m.states[s]);
    }
    for (std::size_t s = 0; s < m.size(); ++s) {
        if (pm.pruned[s]) continue;
        std::vector<Action> acts;
        std::vector<std::vector<Outcome>> trans;
        for (std::size_t k : pm.safe_slots[s]) {
            acts.push_back(m.actions_of[s][k]);
            auto outs = m.transitions[s][k];
            for (auto& o : outs) o.next = remap[o.next];
            trans.push_back(std::move(outs));
        }
        r.actions_of.push_back(std::move(acts));
        r.transitions.push_back(std::move(trans));
    }
    return r;
}

}  // namespace safesched
