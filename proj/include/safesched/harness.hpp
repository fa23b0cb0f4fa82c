#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "safesched/io.hpp"
#include "safesched/learn.hpp"
#include "safesched/solve.hpp"

namespace safesched {

enum class Solver { vi, mcts_edf, mcts_random, edf };

inline std::string to_string(Solver s) {
    switch (s) {
        case Solver::vi: return "vi";
        case Solver::mcts_edf: return "mcts-edf";
        case Solver::mcts_random: return "mcts-random";
        case Solver::edf: return "edf";
    }
    return "?";
}

inline Solver parse_solver(const std::string& s) {
    if (s == "vi") return Solver::vi;
    if (s == "mcts-edf") return Solver::mcts_edf;
    if (s == "mcts-random") return Solver::mcts_random;
    if (s == "edf") return Solver::edf;
    throw ModelError("solver: expected vi|mcts-edf|mcts-random|edf, got \"" + s + "\"");
}

inline Mode parse_mode(const std::string& s) {
    if (s == "pe" || s == "preemptible") return Mode::preemptible;
    if (s == "npe" || s == "nonpreemptible") return Mode::nonpreemptible;
    throw ModelError("mode: expected pe|npe, got \"" + s + "\"");
}

struct SuiteEntry {
    std::string label;
    std::vector<RouteSpec> routes;
};

struct ExperimentConfig {
    std::vector<RouteSpec> routes;
    RewardParams rewards;
    Mode mode = Mode::preemptible;
    Solver solver = Solver::vi;
    std::optional<SamplingConfig> sampling;  ///< nullopt: use the true specs ("oracle")
    int trials = 1000;
    int traversals_per_trial = 10;
    int report_stride = 50;
    std::uint64_t seed = 1;
    double discount = 0.99;
    double tolerance = 1e-6;
    MctsConfig mcts;
    std::optional<int> max_traversal_steps;  ///< default 10 * M * W
    std::vector<SuiteEntry> suite;           ///< bench only

    void validate() const {
        if (!routes.empty()) validate_specs(routes);
        rewards.validate();
        if (trials < 1) throw ModelError("trials must be >= 1");
        if (traversals_per_trial < 1) throw ModelError("traversals_per_trial must be >= 1");
        if (report_stride < 1 || trials % report_stride != 0)
            throw ModelError("report_stride must be positive and divide trials evenly");
        if (!(discount > 0.0 && discount < 1.0)) throw ModelError("discount must lie in (0, 1)");
        if (!(tolerance > 0.0)) throw ModelError("tolerance must be positive");
        if (sampling) sampling->validate();
        mcts.validate();
    }

    int traversal_guard() const {
        if (max_traversal_steps) return *max_traversal_steps;
        std::size_t m = 1;
        for (const auto& r : routes) m = std::max(m, r.q_init.bound());
        return static_cast<int>(10 * m * routes.size());
    }
};

/// Parses the JSON configuration documented in docs/formats.md.
inline ExperimentConfig parse_config(const json& j) {
    using detail::get_as;
    if (!j.is_object()) throw ModelError("config: expected a JSON object");
    ExperimentConfig cfg;
    if (j.contains("routes")) cfg.routes = parse_routes(j["routes"], "routes");
    if (j.contains("suite")) {
        const auto& s = j["suite"];
        if (!s.is_array()) throw ModelError("suite: expected an array");
        for (std::size_t i = 0; i < s.size(); ++i) {
            const std::string where = "suite[" + std::to_string(i) + "]";
            cfg.suite.push_back({get_as<std::string>(detail::field(s[i], "label", where), where + ".label"),
                                 parse_routes(detail::field(s[i], "routes", where), where + ".routes")});
        }
    }
    if (cfg.routes.empty() && cfg.suite.empty()) throw ModelError("routes: missing");
    if (j.contains("rewards")) {
        const auto& r = j["rewards"];
        cfg.rewards.j_soft = get_as<double>(detail::field(r, "j_soft", "rewards"), "rewards.j_soft");
        cfg.rewards.j_hard = get_as<double>(detail::field(r, "j_hard", "rewards"), "rewards.j_hard");
    }
    if (j.contains("mode")) cfg.mode = parse_mode(get_as<std::string>(j["mode"], "mode"));
    if (j.contains("solver")) cfg.solver = parse_solver(get_as<std::string>(j["solver"], "solver"));
    if (j.contains("sampling")) {
        const auto& s = j["sampling"];
        if (s.is_string()) {
            if (s.get<std::string>() != "oracle") throw ModelError("sampling: expected \"oracle\" or an object");
        } else {
            SamplingConfig sc;
            if (s.contains("support_size")) sc.support_size = get_as<std::uint64_t>(s["support_size"], "sampling.support_size");
            if (s.contains("epsilon")) sc.epsilon = get_as<double>(s["epsilon"], "sampling.epsilon");
            if (s.contains("confidence_gamma"))
                sc.confidence_gamma = get_as<double>(s["confidence_gamma"], "sampling.confidence_gamma");
            if (s.contains("samples"))
                sc.samples = get_as<std::uint64_t>(s["samples"], "sampling.samples");
            else
                sc.samples = required_samples(sc.support_size, sc.epsilon, sc.confidence_gamma);
            cfg.sampling = sc;
        }
    }
    if (j.contains("trials")) cfg.trials = get_as<int>(j["trials"], "trials");
    if (j.contains("traversals_per_trial")) cfg.traversals_per_trial = get_as<int>(j["traversals_per_trial"], "traversals_per_trial");
    if (j.contains("report_stride")) cfg.report_stride = get_as<int>(j["report_stride"], "report_stride");
    if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j["seed"], "seed");
    if (j.contains("discount")) cfg.discount = get_as<double>(j["discount"], "discount");
    if (j.contains("tolerance")) cfg.tolerance = get_as<double>(j["tolerance"], "tolerance");
    if (j.contains("max_traversal_steps")) cfg.max_traversal_steps = get_as<int>(j["max_traversal_steps"], "max_traversal_steps");
    cfg.mcts.exploration_c = std::abs(cfg.rewards.j_soft);
    if (j.contains("mcts")) {
        const auto& m = j["mcts"];
        if (m.contains("depth")) cfg.mcts.depth = get_as<int>(m["depth"], "mcts.depth");
        if (m.contains("simulations")) cfg.mcts.simulations = get_as<int>(m["simulations"], "mcts.simulations");
        if (m.contains("exploration_c")) cfg.mcts.exploration_c = get_as<double>(m["exploration_c"], "mcts.exploration_c");
    }
    cfg.mcts.discount = cfg.discount;
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": " + std::strerror(errno));
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ModelError(path + ": malformed JSON: " + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// logging

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

/// SAFESCHED_LOG=quiet|info|debug (default info).
inline LogLevel log_level() {
    const char* v = std::getenv("SAFESCHED_LOG");
    if (!v) return LogLevel::info;
    const std::string s(v);
    if (s == "quiet" || s == "0") return LogLevel::quiet;
    if (s == "debug" || s == "2") return LogLevel::debug;
    return LogLevel::info;
}

inline void log(LogLevel level, const std::string& msg) {
    if (static_cast<int>(level) <= static_cast<int>(log_level())) std::cerr << "[safesched] " << msg << '\n';
}

// ---------------------------------------------------------------------------
// pipeline

/// The agent's model after (optional) learning, pruned and ready to solve.
struct PreparedModel {
    std::vector<RouteSpec> specs;  ///< true or estimated
    PrunedMdp pruned;
    std::optional<ViResult> vi;
    std::vector<std::string> warnings;
};

inline PreparedModel prepare_model(const ExperimentConfig& cfg, const TraceSink& trace = {}) {
    PreparedModel pm;
    pm.specs = cfg.routes;
    if (cfg.sampling) {
        // Sample the plant over the safe concrete model; only support shapes
        // matter for pruning.
        auto safe_for_sampling = prune(build(cfg.routes, cfg.rewards, Mode::preemptible));
        if (!safe_for_sampling.schedulable)
            throw UnsafeError("unschedulable system: " + pruning_report(safe_for_sampling).dump());
        Plant plant(cfg.routes, cfg.rewards, derive_seed(cfg.seed, {0xA11CE}));
        auto est = estimate_system(plant, safe_for_sampling, *cfg.sampling, trace);
        pm.specs = std::move(est.specs);
        pm.warnings = std::move(est.warnings);
        for (const auto& w : pm.warnings) log(LogLevel::info, "learning: " + w);
    }
    pm.pruned = prune(build(pm.specs, cfg.rewards, cfg.mode));
    if (!pm.pruned.schedulable) throw UnsafeError("unschedulable system: " + pruning_report(pm.pruned).dump());
    if (cfg.solver == Solver::vi) pm.vi = value_iteration(pm.pruned, cfg.discount, cfg.tolerance);
    return pm;
}

/// Chooses an action at an unrestricted model state.
inline Action decide(const ExperimentConfig& cfg, const PreparedModel& model, std::size_t state, std::uint64_t seed) {
    const auto& pm = model.pruned;
    switch (cfg.solver) {
        case Solver::vi: return *model.vi->policy.action.at(state);
        case Solver::edf: return edf_action(pm.mdp().states[state], safe_actions(pm, state), pm.mdp().specs);
        case Solver::mcts_edf:
        case Solver::mcts_random: {
            MctsConfig m = cfg.mcts;
            m.rollout = cfg.solver == Solver::mcts_edf ? Rollout::edf : Rollout::random;
            m.seed = seed;
            return mcts_action(pm, state, m);
        }
    }
    throw SemanticsError("unknown solver");
}

struct SeriesRow {
    int trial;
    double mean_cost;
};

/// Running mean of the per-trial cost, sampled every report_stride trials.
struct TrialSeries {
    std::vector<SeriesRow> rows;
};

struct TrialRun {
    TrialSeries series;
    std::vector<double> trial_costs;        ///< undiscounted penalty sum per trial
    std::vector<double> discounted_costs;   ///< same, discounted per step from trial start
    std::uint64_t terminal_entries = 0;
    std::uint64_t steps = 0;
    std::uint64_t truncated_traversals = 0;
    std::vector<RouteSpec> model_specs;
    std::vector<std::string> warnings;
};

/// Full pipeline: (learn) -> build -> prune -> solve, then trials of
/// traversals against the true plant. A traversal runs from the all-initial
/// configuration to its next recurrence.
inline TrialRun run_trials(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.routes.empty()) throw ModelError("routes: missing");
    const PreparedModel model = prepare_model(cfg);
    const ExplicitMdp& m = model.pruned.mdp();
    const int guard = cfg.traversal_guard();

    TrialRun run;
    run.model_specs = model.specs;
    run.warnings = model.warnings;
    double running = 0.0;
    for (int t = 0; t < cfg.trials; ++t) {
        Plant plant(cfg.routes, cfg.rewards, derive_seed(cfg.seed, {1, static_cast<std::uint64_t>(t)}));
        BeliefTracker belief(m, cfg.mode);
        double cost = 0.0, discounted = 0.0, scale = 1.0;
        std::uint64_t decision = 0;
        for (int k = 0; k < cfg.traversals_per_trial; ++k) {
            int steps = 0;
            do {
                Action a;
                if (auto forced = belief.forced_action()) {
                    a = *forced;
                } else {
                    const auto idx = belief.index();
                    if (!idx || !model.pruned.is_safe(*idx))
                        throw UnsafeError("simulation reached a state outside the safe model");
                    a = decide(cfg, model, *idx,
                               derive_seed(cfg.seed, {2, static_cast<std::uint64_t>(t), decision++}));
                }
                const Observation obs = plant.step(a);
                if (obs.terminal) {
                    ++run.terminal_entries;
                    throw UnsafeError("hard deadline missed during simulation (trial " + std::to_string(t) + ")");
                }
                belief.advance(a, obs);
                cost += obs.reward;
                discounted += scale * obs.reward;
                scale *= cfg.discount;
                ++steps;
                ++run.steps;
                if (steps >= guard) {
                    ++run.truncated_traversals;
                    break;
                }
            } while (!belief.at_initial());
        }
        run.trial_costs.push_back(cost);
        run.discounted_costs.push_back(discounted);
        running += cost;
        if ((t + 1) % cfg.report_stride == 0) run.series.rows.push_back({t + 1, running / (t + 1)});
        if ((t + 1) % std::max(1, cfg.trials / 10) == 0)
            log(LogLevel::debug, fmt::format("trial {}/{} running mean {:.3f}", t + 1, cfg.trials, running / (t + 1)));
    }
    return run;
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchRow {
    std::string label;
    std::string mode;
    std::size_t states = 0;                  ///< including the terminal state when reachable
    std::size_t states_without_terminal = 0;
    double seconds = 0.0;                    ///< mean wall-clock time of one VI solve
    int iterations = 0;
    std::string error;

    friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

inline json to_json(const BenchRow& r) {
    return {{"label", r.label},   {"mode", r.mode},         {"states", r.states},
            {"states_without_terminal", r.states_without_terminal},
            {"seconds", r.seconds}, {"iterations", r.iterations}, {"error", r.error}};
}

inline BenchRow bench_row_from_json(const json& j) {
    BenchRow r;
    r.label = j.at("label").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.states = j.at("states").get<std::size_t>();
    r.states_without_terminal = j.at("states_without_terminal").get<std::size_t>();
    r.seconds = j.at("seconds").get<double>();
    r.iterations = j.at("iterations").get<int>();
    r.error = j.value("error", "");
    return r;
}

struct BenchOptions {
    double discount = 0.99;
    double tolerance = 1e-6;
    double min_seconds = 0.05;  ///< repeat each solve until this much time has accumulated
    int min_repeats = 3;
};

/// Builds and VI-solves every suite entry in both modes. Failures become
/// row-level errors.
inline std::vector<BenchRow> bench_scalability(const std::vector<SuiteEntry>& suite, const RewardParams& rewards,
                                               const BenchOptions& opts = {}) {
    using clock = std::chrono::steady_clock;
    std::vector<BenchRow> rows;
    for (const auto& entry : suite) {
        for (Mode mode : {Mode::preemptible, Mode::nonpreemptible}) {
            BenchRow row{entry.label, to_string(mode)};
            try {
                auto pm = prune(build(entry.routes, rewards, mode));
                row.states = pm.mdp().size();
                row.states_without_terminal = pm.mdp().size_without_terminal();
                int reps = 0;
                double total = 0.0;
                while (reps < opts.min_repeats || total < opts.min_seconds) {
                    const auto t0 = clock::now();
                    auto vi = value_iteration(pm, opts.discount, opts.tolerance);
                    total += std::chrono::duration<double>(clock::now() - t0).count();
                    row.iterations = vi.iterations;
                    ++reps;
                }
                row.seconds = total / reps;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// emission

enum class Format { csv, json };

inline Format parse_format(const std::string& s) {
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    throw ModelError("format: expected csv|json, got \"" + s + "\"");
}

inline std::string render(const TrialSeries& series, Format format) {
    if (format == Format::json) {
        json rows = json::array();
        for (const auto& r : series.rows) rows.push_back({{"trial", r.trial}, {"mean_cost", r.mean_cost}});
        return rows.dump(2) + "\n";
    }
    std::string out = "trial,mean_cost\n";
    for (const auto& r : series.rows) out += fmt::format("{},{:.6f}\n", r.trial, r.mean_cost);
    return out;
}

inline std::string render(const std::vector<BenchRow>& rows, Format format) {
    if (format == Format::json) {
        json arr = json::array();
        for (const auto& r : rows) arr.push_back(to_json(r));
        return arr.dump(2) + "\n";
    }
    std::string out = "label,mode,states,seconds\n";
    for (const auto& r : rows) out += fmt::format("{},{},{},{:.9f}\n", r.label, r.mode, r.states, r.seconds);
    return out;
}

inline std::vector<BenchRow> load_bench_rows(const std::string& text) {
    std::vector<BenchRow> rows;
    for (const auto& j : json::parse(text)) rows.push_back(bench_row_from_json(j));
    return rows;
}

/// Writes `text` to `path` ("-" for stdout).
inline void emit_text(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": " + std::strerror(errno));
    out << text;
    if (!out) throw std::runtime_error(path + ": write failed: " + std::strerror(errno));
}

template <typename T>
void emit(const T& data, Format format, const std::string& path) {
    emit_text(render(data, format), path);
}

}  // namespace safesched
