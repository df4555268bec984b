#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "thinfilm/errors.hpp"
#include "thinfilm/physics.hpp"
#include "thinfilm/quasistatic.hpp"
#include "thinfilm/state.hpp"
#include "thinfilm/transient.hpp"

namespace thinfilm {

enum class Scheme { Semi1, Rich2, Rich3 };

inline const char* to_string(Scheme s)
{
    switch (s) {
    case Scheme::Semi1: return "SEMI1";
    case Scheme::Rich2: return "RICH2";
    case Scheme::Rich3: return "RICH3";
    }
    return "?";
}

inline Scheme parse_scheme(std::string_view name)
{
    if (name == "SEMI1" || name == "semi1")
        return Scheme::Semi1;
    if (name == "RICH2" || name == "rich2")
        return Scheme::Rich2;
    if (name == "RICH3" || name == "rich3")
        return Scheme::Rich3;
    throw ConfigError("unknown time scheme '" + std::string(name) + "' (expected SEMI1, RICH2 or RICH3)");
}

struct StepperConfig {
    Scheme scheme = Scheme::Semi1;
    double tau = 0.01;
    double t_end = 1.0;
    int snapshot_every = 10;
    ModelKind solver = ModelKind::Transient;

    void validate() const
    {
        if (!(tau > 0.0))
            throw ConfigError("stepper.tau must be positive");
        if (!(t_end >= 0.0))
            throw ConfigError("stepper.t_end must be nonnegative");
        if (snapshot_every < 1)
            throw ConfigError("output.snapshot_every must be at least 1");
    }
};

/// Sub-chain lengths k and combination weights of each scheme: the step is
/// Σ weight_i · q(τ/k_i). Weights sum to one.
struct ExtrapolationRule {
    std::vector<int> substeps;
    std::vector<double> weights;
};

inline ExtrapolationRule extrapolation_rule(Scheme s)
{
    switch (s) {
    case Scheme::Semi1: return {{1}, {1.0}};
    case Scheme::Rich2: return {{2, 1}, {2.0, -1.0}};
    case Scheme::Rich3: return {{4, 2, 1}, {8.0 / 3.0, -2.0, 1.0 / 3.0}};
    }
    return {};
}

/// A base step q(τ) of some solver: returns the advanced state or throws a
/// NumericalEvent.
using BaseStep = std::function<StepResult(const AleState&, double)>;

/// Applied to the combined state after extrapolation.
using Projection = std::function<void(AleState&)>;

inline BaseStep make_base_step(const PhysicsParams& p, const MobilityLaws& laws, StepOptions opt,
                               EventLog* log = nullptr)
{
    if (opt.model == ModelKind::Strong)
        return [=](const AleState& s, double tau) { return quasistatic_step(s, p, laws, tau, opt, log); };
    return [=](const AleState& s, double tau) { return transient_step(s, p, laws, tau, opt, log); };
}

/// For the strong model h is slaved to ψ through the volume-constrained
/// stationary problem; after extrapolation h is recomputed on the combined
/// support so the volume constraint keeps holding exactly.
inline Projection make_projection(const PhysicsParams& p, ModelKind model)
{
    if (model != ModelKind::Strong)
        return {};
    return [=](AleState& s) {
        const StationaryShape shape = stationary_shape(s.fe(), s.psi, s.vol0, p);
        s.h = shape.h;
        s.pi_hat = shape.pi_hat;
    };
}

/// k successive base steps of size τ/k.
inline AleState substep_chain(const BaseStep& base, const AleState& state, double tau, int k)
{
    if (k < 1)
        throw ConfigError("substep_chain needs k >= 1");
    AleState s = state;
    const double dt = tau / k;
    for (int j = 0; j < k; ++j)
        s = base(s, dt).state;
    s.t = state.t + tau;
    return s;
}

/// Affine combination Σ w_i q_i of (ψ, h) coefficient vectors.
inline AleState combine_states(std::span<const AleState> states, std::span<const double> weights)
{
    if (states.empty() || states.size() != weights.size())
        throw AssemblyError("combine_states: states and weights differ in length");
    AleState out = states.front();
    out.psi.setZero();
    out.h.setZero();
    out.pi_hat = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        out.psi += weights[i] * states[i].psi;
        out.h += weights[i] * states[i].h;
        out.pi_hat += weights[i] * states[i].pi_hat;
    }
    return out;
}

/// One macro step with per-step Richardson extrapolation restarted from `state`.
inline AleState extrapolated_step(const BaseStep& base, const AleState& state, double tau, Scheme scheme,
                                  const Projection& project = {})
{
    const ExtrapolationRule rule = extrapolation_rule(scheme);
    std::vector<AleState> ends;
    ends.reserve(rule.substeps.size());
    for (int k : rule.substeps)
        ends.push_back(substep_chain(base, state, tau, k));
    if (ends.size() == 1)
        return std::move(ends.front());
    AleState out = combine_states(ends, rule.weights);
    out.t = state.t + tau;
    if (project)
        project(out);
    return out;
}

enum class ExitReason { Completed, Feasibility, MeshTangled, WidthBelowMinimum };

inline const char* to_string(ExitReason r)
{
    switch (r) {
    case ExitReason::Completed: return "completed";
    case ExitReason::Feasibility: return "feasibility";
    case ExitReason::MeshTangled: return "mesh_tangled";
    case ExitReason::WidthBelowMinimum: return "width_below_minimum";
    }
    return "?";
}

/// Observers of a trajectory. `on_step` sees every accepted state including
/// the initial one; `on_snapshot` sees step 0, every snapshot_every-th step
/// and the final state.
struct RunSinks {
    std::function<void(int step, const AleState&)> on_step;
    std::function<void(int step, const AleState&)> on_snapshot;
    /// Returns a message when the state should end the run (e.g. a ridge
    /// width below its minimum).
    std::function<std::optional<std::string>(const AleState&)> stop_check;
};

struct RunSummary {
    ExitReason reason = ExitReason::Completed;
    AleState final_state;
    int steps = 0;
    EventLog events;
};

/// Steps from `initial` to t_end, or until a terminal event.
inline RunSummary run(const AleState& initial, const StepperConfig& cfg, const PhysicsParams& p,
                      const MobilityLaws& laws, const StepOptions& opt, const RunSinks& sinks = {})
{
    cfg.validate();
    RunSummary summary;
    summary.final_state = initial;
    EventLog& log = summary.events;
    const BaseStep base = make_base_step(p, laws, opt, &log);
    const Projection project = make_projection(p, opt.model);
    AleState& state = summary.final_state;
    if (opt.model != ModelKind::Strong && p.eps_line > 0.0)
        log.record(EventKind::Warning, state.t, "line tension is only used by the strong model; ignored");

    auto snapshot = [&](int step) {
        if (sinks.on_snapshot)
            sinks.on_snapshot(step, state);
    };
    if (sinks.on_step)
        sinks.on_step(0, state);
    snapshot(0);

    const double t0 = initial.t;
    const double t_final = t0 + cfg.t_end;
    const double slack = 1e-9 * cfg.tau;
    int last_snapshot = 0;
    while (state.t < t_final - slack) {
        const double tau = std::min(cfg.tau, t_final - state.t);
        const int step = summary.steps + 1;
        try {
            AleState next = extrapolated_step(base, state, tau, cfg.scheme, project);
            check_mesh(next.fe(), next.psi);
            if (const double hmin = min_nodal(next.h); hmin < -opt.feasibility_tol)
                throw FeasibilityViolation(hmin);
            if (std::abs(t_final - next.t) <= slack)
                next.t = t_final;
            state = std::move(next);
        } catch (const FeasibilityViolation& e) {
            log.record(EventKind::Feasibility, state.t, e.what());
            summary.reason = ExitReason::Feasibility;
            break;
        } catch (const MeshTangled& e) {
            log.record(EventKind::MeshTangled, state.t, e.what());
            summary.reason = ExitReason::MeshTangled;
            break;
        }
        summary.steps = step;
        if (sinks.on_step)
            sinks.on_step(step, state);
        if (step % cfg.snapshot_every == 0) {
            snapshot(step);
            last_snapshot = step;
        }
        if (sinks.stop_check) {
            if (auto msg = sinks.stop_check(state)) {
                log.record(EventKind::WidthBelowMinimum, state.t, *msg);
                summary.reason = ExitReason::WidthBelowMinimum;
                break;
            }
        }
    }
    if (last_snapshot != summary.steps)
        snapshot(summary.steps);
    return summary;
}

} // namespace thinfilm
