// safesched: command-line front end for building, pruning, learning, solving
// and simulating scheduling MDPs.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "safesched/safesched.hpp"

namespace {

using namespace safesched;

struct Options {
    std::string config;
    std::optional<std::string> mode;
    std::optional<std::string> solver;
    std::optional<std::uint64_t> seed;
    std::string out = "-";
    std::string format;
    std::string trace;
};

void add_common(CLI::App* cmd, Options& o, bool with_solver) {
    cmd->add_option("--config", o.config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--mode", o.mode, "pe | npe")->check(CLI::IsMember({"pe", "npe"}));
    if (with_solver)
        cmd->add_option("--solver", o.solver, "vi | mcts-edf | mcts-random | edf")
            ->check(CLI::IsMember({"vi", "mcts-edf", "mcts-random", "edf"}));
    cmd->add_option("--seed", o.seed, "64-bit seed");
    cmd->add_option("--out", o.out, "output path ('-' for stdout)");
    cmd->add_option("--format", o.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
}

ExperimentConfig resolve(const Options& o) {
    auto cfg = load_config(o.config);
    if (o.mode) cfg.mode = parse_mode(*o.mode);
    if (o.solver) cfg.solver = parse_solver(*o.solver);
    if (o.seed) cfg.seed = *o.seed;
    return cfg;
}

Format format_or(const Options& o, Format fallback) { return o.format.empty() ? fallback : parse_format(o.format); }

int cmd_build(const Options& o) {
    const auto cfg = resolve(o);
    const auto m = build(cfg.routes, cfg.rewards, cfg.mode);
    log(LogLevel::info, fmt::format("{} states ({} without terminal), mode {}", m.size(), m.size_without_terminal(),
                                    to_string(cfg.mode)));
    if (format_or(o, Format::json) == Format::csv) {
        std::string csv = "state,action,next,prob,reward,duration\n";
        for (std::size_t s = 0; s < m.size(); ++s)
            for (std::size_t k = 0; k < m.actions_of[s].size(); ++k)
                for (const auto& e : m.transitions[s][k])
                    csv += fmt::format("{},{},{},{:.12g},{:.12g},{}\n", s, to_string(m.actions_of[s][k]), e.next,
                                       e.prob, e.reward, e.duration);
        emit_text(csv, o.out);
    } else {
        emit_text(to_json(m).dump(2) + "\n", o.out);
    }
    return 0;
}

int cmd_prune(const Options& o) {
    const auto cfg = resolve(o);
    const auto pm = prune(build(cfg.routes, cfg.rewards, cfg.mode));
    emit_text(pruning_report(pm).dump(2) + "\n", o.out);
    return pm.schedulable ? 0 : 2;
}

int cmd_learn(const Options& o) {
    auto cfg = resolve(o);
    if (!cfg.sampling) cfg.sampling = SamplingConfig{};
    const auto safe = prune(build(cfg.routes, cfg.rewards, Mode::preemptible));
    if (!safe.schedulable) {
        std::cerr << pruning_report(safe).dump(2) << '\n';
        return 2;
    }
    std::ofstream trace_out;
    TraceSink sink;
    if (!o.trace.empty()) {
        trace_out.open(o.trace);
        if (!trace_out) throw std::runtime_error(o.trace + ": cannot open");
        trace_out << "step,state_hash,action,completed,arrivals,reward\n";
        sink = [&trace_out](const SampleTraceRow& r) {
            trace_out << fmt::format("{},{:016x},{},{},{},{}\n", r.step, r.state_hash, to_string(r.action),
                                     r.obs.completed, r.obs.arrivals, r.obs.reward);
        };
    }
    Plant plant(cfg.routes, cfg.rewards, cfg.seed);
    const auto est = estimate_system(plant, safe, *cfg.sampling, sink);
    for (const auto& w : est.warnings) log(LogLevel::info, "warning: " + w);
    json out = {{"samples", cfg.sampling->samples}, {"routes", to_json(est.specs)}, {"warnings", est.warnings}};
    emit_text(out.dump(2) + "\n", o.out);
    return 0;
}

int cmd_solve(const Options& o) {
    const auto cfg = resolve(o);
    const auto model = prepare_model(cfg);
    const auto& pm = model.pruned;
    if (cfg.solver == Solver::vi) {
        json out = to_json(model.vi->values, model.vi->policy);
        out["iterations"] = model.vi->iterations;
        emit_text(out.dump(2) + "\n", o.out);
        return 0;
    }
    PolicyTable policy;
    policy.action.assign(pm.mdp().size(), std::nullopt);
    for (std::size_t s = 0; s < pm.mdp().size(); ++s)
        if (pm.is_safe(s)) policy.action[s] = decide(cfg, model, s, derive_seed(cfg.seed, {3, s}));
    emit_text(json{{"policy", to_json(policy)}}.dump(2) + "\n", o.out);
    return 0;
}

int cmd_simulate(const Options& o) {
    const auto cfg = resolve(o);
    const auto run = run_trials(cfg);
    double mean = 0.0, dmean = 0.0;
    for (double c : run.trial_costs) mean += c;
    for (double c : run.discounted_costs) dmean += c;
    mean /= static_cast<double>(run.trial_costs.size());
    dmean /= static_cast<double>(run.discounted_costs.size());
    log(LogLevel::info,
        fmt::format("{} {} : mean cost {:.3f} (discounted {:.3f}) over {} trials, {} steps, {} terminal entries",
                    to_string(cfg.mode), to_string(cfg.solver), mean, dmean, cfg.trials, run.steps,
                    run.terminal_entries));
    emit(run.series, format_or(o, Format::csv), o.out);
    return 0;
}

int cmd_bench(const Options& o) {
    const auto cfg = resolve(o);
    std::vector<SuiteEntry> suite = cfg.suite;
    if (suite.empty()) suite.push_back({"config", cfg.routes});
    BenchOptions opts;
    opts.discount = cfg.discount;
    opts.tolerance = cfg.tolerance;
    const auto rows = bench_scalability(suite, cfg.rewards, opts);
    for (const auto& r : rows)
        if (!r.error.empty()) log(LogLevel::info, r.label + " (" + r.mode + "): " + r.error);
    emit(rows, format_or(o, Format::csv), o.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"safesched: safe scheduler synthesis for hard/soft-deadline request systems"};
    app.require_subcommand(1);
    Options o;

    auto* b = app.add_subcommand("build", "enumerate the explicit MDP");
    add_common(b, o, false);
    auto* p = app.add_subcommand("prune", "backward-reachability pruning report");
    add_common(p, o, false);
    auto* l = app.add_subcommand("learn", "estimate route distributions by safe sampling");
    add_common(l, o, false);
    l->add_option("--trace", o.trace, "write a CSV sampling trace");
    auto* s = app.add_subcommand("solve", "compute a policy (and values for vi)");
    add_common(s, o, true);
    auto* sim = app.add_subcommand("simulate", "run trial campaigns against the plant");
    add_common(sim, o, true);
    auto* be = app.add_subcommand("bench", "state counts and VI solve times for a suite");
    add_common(be, o, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (b->parsed()) return cmd_build(o);
        if (p->parsed()) return cmd_prune(o);
        if (l->parsed()) return cmd_learn(o);
        if (s->parsed()) return cmd_solve(o);
        if (sim->parsed()) return cmd_simulate(o);
        if (be->parsed()) return cmd_bench(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
