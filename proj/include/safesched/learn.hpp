#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "safesched/rng.hpp"
#include "safesched/safety.hpp"
#include "safesched/solve.hpp"

namespace safesched {

class LearningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// y = r * ceil((ln 2r - ln gamma) / (2 eps^2)): samples needed for the
/// empirical distribution over r support points to lie within eps (L-inf)
/// of the truth with probability at least 1 - gamma.
inline std::uint64_t required_samples(std::uint64_t support_size, double epsilon, double confidence_gamma) {
    if (support_size < 1) throw ModelError("support size must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0 + 1e-12)) throw ModelError("epsilon must lie in (0, 1]");
    if (!(confidence_gamma > 0.0 && confidence_gamma < 1.0)) throw ModelError("confidence_gamma must lie in (0, 1)");
    const double r = static_cast<double>(support_size);
    const double per_point = std::ceil((std::log(2.0 * r) - std::log(confidence_gamma)) / (2.0 * epsilon * epsilon));
    return support_size * static_cast<std::uint64_t>(per_point);
}

struct SamplingConfig {
    std::uint64_t support_size = 2;
    double epsilon = 0.0607;
    double confidence_gamma = 0.1;
    std::uint64_t samples = 1000;

    void validate() const {
        if (support_size < 1) throw ModelError("sampling.support_size must be >= 1");
        if (samples < 1) throw ModelError("sampling.samples must be >= 1");
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw ModelError("sampling.epsilon must lie in (0, 1)");
        if (!(confidence_gamma > 0.0 && confidence_gamma < 1.0))
            throw ModelError("sampling.confidence_gamma must lie in (0, 1)");
    }

    /// Config whose sample count is derived from (r, epsilon, gamma).
    static SamplingConfig derived(std::uint64_t r, double epsilon, double confidence_gamma) {
        return {r, epsilon, confidence_gamma, required_samples(r, epsilon, confidence_gamma)};
    }
};

/// Observation counters over time values 0..bound. Values past the bound are
/// clamped to it and counted in `clamped`.
class EmpiricalDist {
public:
    explicit EmpiricalDist(std::size_t bound) : counts_(bound + 1, 0) {}

    void record(std::size_t t) {
        if (t >= counts_.size()) {
            t = counts_.size() - 1;
            ++clamped_;
        }
        ++counts_[t];
        ++total_;
    }

    std::uint64_t total() const { return total_; }
    std::uint64_t clamped() const { return clamped_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }

    /// counts / total
    ProbVec estimate() const {
        if (total_ == 0) throw LearningError("no samples recorded");
        std::vector<double> m(counts_.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<double>(counts_[i]) / static_cast<double>(total_);
        return ProbVec(std::move(m));
    }

private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
    std::uint64_t clamped_ = 0;
};

/// What a plant reveals about one step.
struct Observation {
    RouteId completed = 0;       ///< route completed this step (0: none)
    std::uint64_t arrivals = 0;  ///< bit (id-1): a new instance of route id arrived
    double reward = 0.0;         ///< penalty realized this step
    bool terminal = false;       ///< a hard deadline was missed
};

/// Publicly known facts about a route: class, deadline and declared support
/// bounds. The distributions themselves stay hidden.
struct RouteDeclaration {
    RouteClass route_class;
    int deadline;
    std::size_t completion_bound;
    std::size_t interarrival_bound;
};

/// The hidden true system. Steps concrete (single-step) dynamics and reports
/// only events.
class Plant {
public:
    Plant(std::vector<RouteSpec> truth, RewardParams params, std::uint64_t seed)
        : truth_(std::move(truth)), params_(params), rng_(seed), state_(SystemState::initial(truth_)) {
        validate_specs(truth_);
    }

    std::size_t route_count() const { return truth_.size(); }

    RouteDeclaration declaration(RouteId id) const {
        const auto& s = truth_.at(static_cast<std::size_t>(id - 1));
        return {s.route_class, s.d_init, s.p_init.bound(), s.q_init.bound()};
    }

    Observation step(Action a) {
        auto outs = successors(state_, a, params_, truth_, Mode::preemptible);
        const double u = uniform01(rng_);
        double acc = 0.0;
        std::size_t pick = outs.size() - 1;
        for (std::size_t i = 0; i < outs.size(); ++i) {
            acc += outs[i].prob;
            if (u < acc) {
                pick = i;
                break;
            }
        }
        auto& o = outs[pick];
        Observation obs{o.completed, o.arrivals, o.reward, o.next.terminal && !state_.terminal};
        if (obs.terminal) ++terminal_entries_;
        state_ = std::move(o.next);
        ++elapsed_;
        return obs;
    }

    /// Back to the all-initial configuration (the random stream continues).
    void reset() { state_ = SystemState::initial(truth_); }

    std::uint64_t elapsed() const { return elapsed_; }
    std::uint64_t terminal_entries() const { return terminal_entries_; }

private:
    std::vector<RouteSpec> truth_;
    RewardParams params_;
    Rng rng_;
    SystemState state_;
    std::uint64_t elapsed_ = 0;
    std::uint64_t terminal_entries_ = 0;
};

/// The agent's copy of the system state inside a model, advanced by matching
/// plant observations against the model's own successor outcomes.
class BeliefTracker {
public:
    BeliefTracker(const ExplicitMdp& model, Mode mode)
        : model_(model), mode_(mode), state_(SystemState::initial(model.specs)) {}

    const SystemState& state() const { return state_; }
    bool at_initial() const { return state_ == SystemState::initial(model_.specs); }
    void reset() { state_ = SystemState::initial(model_.specs); }

    /// Model index of the current state; only unrestricted states are indexed
    /// in a non-preemptible model.
    std::optional<std::size_t> index() const { return model_.find(state_); }

    /// The single forced action in a restricted state.
    std::optional<Action> forced_action() const {
        auto acts = enabled_actions(state_, model_.route_count(), mode_);
        if (acts.size() == 1) return acts.front();
        return std::nullopt;
    }

    void advance(Action a, const Observation& obs) {
        auto outs = successors(state_, a, model_.params, model_.specs, mode_);
        for (auto& o : outs) {
            if (o.next.terminal != obs.terminal) continue;
            if (!obs.terminal && (o.completed != obs.completed || o.arrivals != obs.arrivals)) continue;
            state_ = std::move(o.next);
            return;
        }
        throw LearningError("observation (completed=" + std::to_string(obs.completed) +
                            ", arrivals=" + std::to_string(obs.arrivals) +
                            ") is impossible under the model; estimated supports are too narrow");
    }

private:
    const ExplicitMdp& model_;
    Mode mode_;
    SystemState state_;
};

enum class SampleTarget { completion, interarrival };

struct SampleTraceRow {
    std::uint64_t step;
    std::size_t state_hash;
    Action action;
    Observation obs;
};

using TraceSink = std::function<void(const SampleTraceRow&)>;

namespace detail {

inline Action sampling_action(const PrunedMdp& pm, const BeliefTracker& belief, RouteId route) {
    if (auto forced = belief.forced_action()) return *forced;
    const auto idx = belief.index();
    if (!idx) throw LearningError("sampler left the modelled state space");
    const auto safe = safe_actions(pm, *idx);
    if (safe.empty()) throw LearningError("sampler deadlock: no safe action");
    if (std::find(safe.begin(), safe.end(), Action::work(route)) != safe.end()) return Action::work(route);
    return edf_action(belief.state(), safe, pm.mdp().specs);
}

}  // namespace detail

/// Drives the plant, working `route` whenever pruning allows it (otherwise the
/// EDF choice among safe actions), until `n` events of the requested kind have
/// been recorded. Completion samples count dedicated work steps on the
/// current instance; an instance replaced before completing is discarded.
/// Interarrival samples count steps between consecutive arrivals, the start
/// of the run counting as an arrival.
inline EmpiricalDist sample_route(Plant& plant, const PrunedMdp& pm, RouteId route, SampleTarget target,
                                  std::uint64_t n, const TraceSink& trace = {}) {
    if (!pm.schedulable) throw UnsafeError("sampling refused: system is not schedulable");
    if (n < 1) throw ModelError("sample count must be >= 1");
    const auto& m = pm.mdp();
    if (route < 1 || static_cast<std::size_t>(route) > m.route_count())
        throw ModelError("no route " + std::to_string(route));
    const auto& spec = m.specs[static_cast<std::size_t>(route - 1)];
    const std::uint64_t bit = std::uint64_t{1} << (route - 1);

    EmpiricalDist dist(target == SampleTarget::completion ? spec.p_init.bound() : spec.q_init.bound());
    BeliefTracker belief(m, m.mode);
    plant.reset();

    std::uint64_t work_steps = 0, since_arrival = 0, steps = 0;
    const std::uint64_t step_guard = n * 64 * (spec.q_init.bound() + 1) + 1024;
    while (dist.total() < n) {
        if (++steps > step_guard) throw LearningError("sampling made no progress within the step guard");
        const Action a = detail::sampling_action(pm, belief, route);
        const bool working = a == Action::work(route) && !belief.state().request(route).completed();
        const Observation obs = plant.step(a);
        if (obs.terminal) throw LearningError("plant entered the terminal state while sampling");
        if (trace) trace({plant.elapsed(), belief.state().hash(), a, obs});
        belief.advance(a, obs);

        if (working) ++work_steps;
        ++since_arrival;
        if (obs.arrivals & bit) {
            if (target == SampleTarget::interarrival) dist.record(since_arrival);
            since_arrival = 0;
            work_steps = 0;  // censored if it had not completed
        } else if (obs.completed == route && target == SampleTarget::completion) {
            dist.record(work_steps);
            work_steps = 0;
        }
    }
    return dist;
}

struct EstimateResult {
    std::vector<RouteSpec> specs;
    std::vector<std::string> warnings;
};

/// Estimates completion and interarrival distributions of every route with
/// cfg.samples events each. Class and deadline come from the route
/// declarations; rewards are not learned.
inline EstimateResult estimate_system(Plant& plant, const PrunedMdp& pm, const SamplingConfig& cfg,
                                      const TraceSink& trace = {}) {
    cfg.validate();
    EstimateResult res;
    const auto& truth_shape = pm.mdp().specs;
    for (std::size_t i = 0; i < truth_shape.size(); ++i) {
        const auto id = static_cast<RouteId>(i + 1);
        const auto decl = plant.declaration(id);
        auto completion = sample_route(plant, pm, id, SampleTarget::completion, cfg.samples, trace);
        auto interarrival = sample_route(plant, pm, id, SampleTarget::interarrival, cfg.samples, trace);
        for (auto [name, d] : {std::pair{"completion", &completion}, std::pair{"interarrival", &interarrival}})
            if (d->clamped() > 0)
                res.warnings.push_back("route " + std::to_string(id) + ": " + std::to_string(d->clamped()) + " " +
                                       name + " samples clamped to the declared support");
        RouteSpec est{id, decl.route_class, completion.estimate(), decl.deadline, interarrival.estimate()};
        try {
            est.validate();
        } catch (const ModelError& e) {
            res.warnings.push_back(std::string("estimated ") + e.what());
        }
        res.specs.push_back(std::move(est));
    }
    return res;
}

/// Largest absolute entry-wise difference (shorter vector zero-padded).
inline double linf_distance(const ProbVec& a, const ProbVec& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
        const double x = i < a.size() ? a[i] : 0.0;
        const double y = i < b.size() ? b[i] : 0.0;
        d = std::max(d, std::abs(x - y));
    }
    return d;
}

}  // namespace safesched
