#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "thinfilm/diagnostics.hpp"
#include "thinfilm/time_stepper.hpp"

using namespace thinfilm;
using namespace thinfilm::testing;

namespace {

/// Base step with a constant rate: exact for every chain length.
BaseStep constant_rate(const Eigen::VectorXd& dpsi, const Eigen::VectorXd& dh)
{
    return [=](const AleState& s, double tau) {
        StepResult r;
        r.state = s;
        r.state.psi += tau * dpsi;
        r.state.h += tau * dh;
        r.state.t += tau;
        return r;
    };
}

/// Base step of the logistic-type ODE h' = −h² applied nodewise.
BaseStep explicit_decay()
{
    return [](const AleState& s, double tau) {
        StepResult r;
        r.state = s;
        r.state.h = s.h - tau * s.h.cwiseProduct(s.h);
        r.state.t += tau;
        return r;
    };
}

AleState small_state()
{
    AleState st(disc_space(0, 1));
    st.h.setConstant(1.0);
    return st;
}

} // namespace

TEST(Extrapolation, WeightsAreAffine)
{
    for (Scheme s : {Scheme::Semi1, Scheme::Rich2, Scheme::Rich3}) {
        const auto rule = extrapolation_rule(s);
        EXPECT_DOUBLE_EQ(std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0), 1.0);
        EXPECT_EQ(rule.weights.size(), rule.substeps.size());
    }
}

TEST(Extrapolation, Rich2IsExactLinearCombination)
{
    AleState a = small_state(), b = small_state();
    a.h = Eigen::VectorXd::LinSpaced(a.n_dofs(), 0.1, 2.3);
    b.h = Eigen::VectorXd::LinSpaced(b.n_dofs(), -1.7, 0.4);
    a.psi *= 1.25;
    const std::vector<AleState> states{a, b};
    const std::vector<double> w{2.0, -1.0};
    const AleState c = combine_states(states, w);
    for (int i = 0; i < a.n_dofs(); ++i)
        EXPECT_EQ(c.h[i], 2.0 * a.h[i] - b.h[i]);
    for (int i = 0; i < a.psi.size(); ++i)
        EXPECT_EQ(c.psi[i], 2.0 * a.psi[i] - b.psi[i]);
}

TEST(Extrapolation, EqualEndpointsAreReproduced)
{
    const AleState a = small_state();
    const std::vector<AleState> states{a, a, a};
    const auto rule = extrapolation_rule(Scheme::Rich3);
    const AleState c = combine_states(states, rule.weights);
    EXPECT_LT((c.h - a.h).lpNorm<Eigen::Infinity>(), 1e-15);
    EXPECT_LT((c.psi - a.psi).lpNorm<Eigen::Infinity>(), 1e-15);
}

TEST(SubstepChain, SingleSubstepIsBaseStep)
{
    const AleState s = small_state();
    const BaseStep base = explicit_decay();
    const AleState a = substep_chain(base, s, 0.1, 1);
    const AleState b = base(s, 0.1).state;
    EXPECT_EQ(a.h, b.h);
    EXPECT_DOUBLE_EQ(a.t, 0.1);
    EXPECT_THROW(substep_chain(base, s, 0.1, 0), ConfigError);
}

TEST(SubstepChain, ConstantRateIsIntegratedExactly)
{
    const AleState s = small_state();
    const Eigen::VectorXd dpsi = Eigen::VectorXd::LinSpaced(s.psi.size(), -1.0, 1.0);
    const Eigen::VectorXd dh = Eigen::VectorXd::LinSpaced(s.n_dofs(), 0.5, 1.5);
    const BaseStep base = constant_rate(dpsi, dh);
    const AleState one = substep_chain(base, s, 0.2, 1);
    const AleState two = substep_chain(base, s, 0.2, 2);
    EXPECT_LT((one.h - two.h).lpNorm<Eigen::Infinity>(), 1e-15);
    EXPECT_LT((one.psi - two.psi).lpNorm<Eigen::Infinity>(), 1e-15);
    const AleState rich = extrapolated_step(base, s, 0.2, Scheme::Rich3);
    EXPECT_LT((one.h - rich.h).lpNorm<Eigen::Infinity>(), 1e-14);
}

// h' = −h², h(0) = 1 has h(T) = 1/(1+T); the explicit base step is first
// order and extrapolation raises the order by one per level.
TEST(Extrapolation, OrdersOnScalarOde)
{
    const AleState s = small_state();
    const BaseStep base = explicit_decay();
    const double T = 0.5;
    for (auto [scheme, order] : {std::pair{Scheme::Semi1, 1.0}, {Scheme::Rich2, 2.0}, {Scheme::Rich3, 3.0}}) {
        std::vector<double> errors;
        for (int n : {8, 16, 32}) {
            AleState q = s;
            for (int i = 0; i < n; ++i)
                q = extrapolated_step(base, q, T / n, scheme);
            errors.push_back(std::abs(q.h[0] - 1.0 / (1.0 + T)));
        }
        EXPECT_NEAR(std::log2(errors[1] / errors[2]), order, 0.15) << to_string(scheme);
    }
}

TEST(Run, ZeroDurationTakesNoSteps)
{
    AleState st(disc_space(1, 2));
    StepperConfig cfg;
    cfg.t_end = 0.0;
    int snapshots = 0, steps = 0;
    RunSinks sinks;
    sinks.on_snapshot = [&](int, const AleState&) { ++snapshots; };
    sinks.on_step = [&](int, const AleState&) { ++steps; };
    const RunSummary r = run(st, cfg, PhysicsParams{}, MobilityLaws{}, StepOptions{}, sinks);
    EXPECT_EQ(r.steps, 0);
    EXPECT_EQ(snapshots, 1);
    EXPECT_EQ(steps, 1);
    EXPECT_EQ(r.reason, ExitReason::Completed);
}

TEST(Run, FlatFilmStaysAtRest)
{
    AleState st(disc_space(1, 2));
    StepperConfig cfg;
    cfg.tau = 0.01;
    cfg.t_end = 0.1;
    cfg.scheme = Scheme::Rich2;
    std::vector<ScalarRow> rows;
    RunSinks sinks;
    sinks.on_step = [&](int step, const AleState& s) { rows.push_back(monitor(s, PhysicsParams{}, step)); };
    const RunSummary r = run(st, cfg, PhysicsParams{}, MobilityLaws{}, StepOptions{}, sinks);
    EXPECT_EQ(r.steps, 10);
    ASSERT_EQ(rows.size(), 11u);
    for (const auto& row : rows) {
        EXPECT_NEAR(row.energy, rows.front().energy, 1e-8);
        EXPECT_NEAR(row.contact_length, rows.front().contact_length, 1e-8);
        EXPECT_NEAR(row.volume, 0.0, 1e-8);
    }
    EXPECT_DOUBLE_EQ(r.final_state.t, 0.1);
}

TEST(Run, SnapshotCadenceIncludesFinalState)
{
    AleState st(disc_space(0, 1));
    StepperConfig cfg;
    cfg.tau = 0.1;
    cfg.t_end = 0.75;
    cfg.snapshot_every = 3;
    std::vector<int> snaps;
    RunSinks sinks;
    sinks.on_snapshot = [&](int step, const AleState&) { snaps.push_back(step); };
    const RunSummary r = run(st, cfg, PhysicsParams{}, MobilityLaws{}, StepOptions{}, sinks);
    EXPECT_EQ(r.steps, 8);
    EXPECT_EQ(snaps, (std::vector<int>{0, 3, 6, 8}));
    EXPECT_NEAR(r.final_state.t, 0.75, 1e-15);
}

TEST(Run, IsDeterministic)
{
    AleState st(disc_space(1, 2));
    st.vol0 = 1.0;
    st.h = stationary_shape(st.fe(), st.psi, 1.0, PhysicsParams{}).h;
    PhysicsParams p;
    p.s = 0.5;
    p.g_x = {1.0, 0.0};
    StepperConfig cfg;
    cfg.tau = 0.01;
    cfg.t_end = 0.03;
    cfg.scheme = Scheme::Rich2;
    const RunSummary a = run(st, cfg, p, MobilityLaws{}, StepOptions{});
    const RunSummary b = run(st, cfg, p, MobilityLaws{}, StepOptions{});
    EXPECT_EQ(a.final_state.h, b.final_state.h);
    EXPECT_EQ(a.final_state.psi, b.final_state.psi);
}

TEST(Run, FeasibilityViolationEndsRunWithLastGoodState)
{
    AleState st(disc_space(2, 2));
    st.vol0 = 1.0;
    PhysicsParams p;
    p.s = 1.0;
    p.g_x = {8.0, 0.0};
    StepperConfig cfg;
    cfg.tau = 0.01;
    cfg.t_end = 0.1;
    const RunSummary r = run(st, cfg, p, MobilityLaws{}, StepOptions{ModelKind::Strong});
    EXPECT_EQ(r.reason, ExitReason::Feasibility);
    EXPECT_EQ(r.steps, 0);
    EXPECT_EQ(r.events.count(EventKind::Feasibility), 1u);
    EXPECT_EQ(r.final_state.psi, st.psi);
}

TEST(Run, StopCheckEndsRun)
{
    AleState st(disc_space(0, 1));
    StepperConfig cfg;
    cfg.tau = 0.1;
    cfg.t_end = 1.0;
    RunSinks sinks;
    sinks.stop_check = [](const AleState& s) -> std::optional<std::string> {
        if (s.t > 0.25)
            return "width below minimum";
        return std::nullopt;
    };
    const RunSummary r = run(st, cfg, PhysicsParams{}, MobilityLaws{}, StepOptions{}, sinks);
    EXPECT_EQ(r.reason, ExitReason::WidthBelowMinimum);
    EXPECT_EQ(r.steps, 3);
}

TEST(Run, StrongModelExtrapolationKeepsVolume)
{
    AleState st(disc_space(1, 2));
    st.vol0 = 1.0;
    PhysicsParams p;
    p.s = 0.5;
    p.g_x = {1.0, 0.0};
    p.eps_line = 0.05;
    st.h = stationary_shape(st.fe(), st.psi, 1.0, p).h;
    StepperConfig cfg;
    cfg.tau = 0.02;
    cfg.t_end = 0.06;
    cfg.scheme = Scheme::Rich3;
    const RunSummary r = run(st, cfg, p, MobilityLaws{}, StepOptions{ModelKind::Strong});
    EXPECT_NEAR(energy(r.final_state, p).volume, 1.0, 1e-12);
}

TEST(Scheme, ParseNames)
{
    EXPECT_EQ(parse_scheme("RICH3"), Scheme::Rich3);
    EXPECT_EQ(parse_scheme("semi1"), Scheme::Semi1);
    EXPECT_THROW(parse_scheme("RK4"), ConfigError);
}
