#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "safesched/learn.hpp"
#include "safesched/safety.hpp"
#include "safesched/solve.hpp"

namespace safesched {

using nlohmann::json;

// JSON layouts are documented in docs/formats.md.

inline json to_json(const ProbVec& v) { return json(std::vector<double>(v.key().begin(), v.key().end())); }

inline json to_json(const RouteSpec& r) {
    return {{"id", r.id},
            {"class", to_string(r.route_class)},
            {"completion", to_json(r.p_init)},
            {"deadline", r.d_init},
            {"interarrival", to_json(r.q_init)}};
}

inline json to_json(Action a) { return a.is_idle() ? json("idle") : json(a.route); }

inline json to_json(const SystemState& s) {
    if (s.terminal) return {{"terminal", true}};
    json reqs = json::array();
    for (const auto& r : s.requests)
        reqs.push_back({{"p", to_json(r.p)}, {"deadline", r.deadline}, {"q", to_json(r.q)}});
    json out = {{"terminal", false}, {"requests", std::move(reqs)}};
    out["in_progress"] = s.in_progress ? json(*s.in_progress) : json(nullptr);
    return out;
}

/// {"mode", "routes", "rewards", "initial", "terminal", "states": [{"id",
/// "state", "actions": [{"action", "outcomes": [{"next", "prob", "reward",
/// "duration"}]}]}]}
inline json to_json(const ExplicitMdp& m) {
    json routes = json::array();
    for (const auto& r : m.specs) routes.push_back(to_json(r));
    json states = json::array();
    for (std::size_t s = 0; s < m.size(); ++s) {
        json acts = json::array();
        for (std::size_t k = 0; k < m.actions_of[s].size(); ++k) {
            json outs = json::array();
            for (const auto& o : m.transitions[s][k])
                outs.push_back({{"next", o.next}, {"prob", o.prob}, {"reward", o.reward}, {"duration", o.duration}});
            acts.push_back({{"action", to_json(m.actions_of[s][k])}, {"outcomes", std::move(outs)}});
        }
        states.push_back({{"id", s}, {"state", to_json(m.states[s])}, {"actions", std::move(acts)}});
    }
    return {{"mode", to_string(m.mode)},
            {"routes", std::move(routes)},
            {"rewards", {{"j_soft", m.params.j_soft}, {"j_hard", m.params.j_hard}}},
            {"initial", 0},
            {"terminal", m.terminal_index ? json(*m.terminal_index) : json(nullptr)},
            {"state_count", m.size()},
            {"state_count_without_terminal", m.size_without_terminal()},
            {"states", std::move(states)}};
}

inline json pruning_report(const PrunedMdp& pm) {
    json pruned = json::array();
    for (std::size_t s = 0; s < pm.pruned.size(); ++s)
        if (pm.pruned[s]) pruned.push_back(s);
    return {{"mode", to_string(pm.mdp().mode)},
            {"states", pm.mdp().size()},
            {"pruned_states", pm.pruned_state_count()},
            {"pruned_actions", pm.pruned_action_count()},
            {"schedulable", pm.schedulable},
            {"pruned_state_ids", std::move(pruned)}};
}

/// {"values": {"<state>": v|null}, "policy": {"<state>": action|null}}
inline json to_json(const ValueTable& values, const PolicyTable& policy) {
    json v = json::object(), p = json::object();
    for (std::size_t s = 0; s < values.value.size(); ++s)
        v[std::to_string(s)] = std::isnan(values.value[s]) ? json(nullptr) : json(values.value[s]);
    for (std::size_t s = 0; s < policy.action.size(); ++s)
        p[std::to_string(s)] = policy.action[s] ? to_json(*policy.action[s]) : json(nullptr);
    return {{"values", std::move(v)}, {"policy", std::move(p)}};
}

inline json to_json(const PolicyTable& policy) {
    json p = json::object();
    for (std::size_t s = 0; s < policy.action.size(); ++s)
        p[std::to_string(s)] = policy.action[s] ? to_json(*policy.action[s]) : json(nullptr);
    return p;
}

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ModelError(where + "." + key + ": missing");
    return j.at(key);
}

template <typename T>
T get_as(const json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ModelError(where + ": wrong type");
    }
}

inline ProbVec parse_dist(const json& j, const std::string& where) {
    if (!j.is_array()) throw ModelError(where + ": expected an array of probabilities");
    try {
        return ProbVec(get_as<std::vector<double>>(j, where));
    } catch (const ModelError& e) {
        throw ModelError(where + ": " + e.what());
    }
}

}  // namespace detail

inline RouteSpec parse_route(const json& j, RouteId id, const std::string& where) {
    RouteSpec r;
    r.id = id;
    if (j.contains("id") && detail::get_as<int>(j["id"], where + ".id") != id)
        throw ModelError(where + ".id: must equal its position (" + std::to_string(id) + ")");
    const auto cls = detail::get_as<std::string>(detail::field(j, "class", where), where + ".class");
    if (cls == "hard")
        r.route_class = RouteClass::hard;
    else if (cls == "soft")
        r.route_class = RouteClass::soft;
    else
        throw ModelError(where + ".class: expected \"hard\" or \"soft\", got \"" + cls + "\"");
    r.p_init = detail::parse_dist(detail::field(j, "completion", where), where + ".completion");
    r.d_init = detail::get_as<int>(detail::field(j, "deadline", where), where + ".deadline");
    r.q_init = detail::parse_dist(detail::field(j, "interarrival", where), where + ".interarrival");
    if (r.d_init == 0) throw ModelError(where + ".deadline: must be nonzero");
    try {
        r.validate();
    } catch (const ModelError& e) {
        throw ModelError(where + ": " + e.what());
    }
    return r;
}

inline std::vector<RouteSpec> parse_routes(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ModelError(where + ": expected a nonempty array of routes");
    std::vector<RouteSpec> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(parse_route(j[i], static_cast<RouteId>(i + 1), where + "[" + std::to_string(i) + "]"));
    validate_specs(out);
    return out;
}

inline json to_json(const std::vector<RouteSpec>& routes) {
    json out = json::array();
    for (const auto& r : routes) out.push_back(to_json(r));
    return out;
}

}  // namespace safesched
