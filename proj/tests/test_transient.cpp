#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "thinfilm/quasistatic.hpp"
#include "thinfilm/transient.hpp"

using namespace thinfilm;
using namespace thinfilm::testing;

namespace {

constexpr double pi = std::numbers::pi;

AleState cap(int refinement, int degree)
{
    AleState st(disc_space(refinement, degree));
    st.vol0 = 1.0;
    st.h = stationary_shape(st.fe(), st.psi, 1.0, PhysicsParams{}).h;
    return st;
}

/// Tilted, off-centre cap with a non-circular support.
AleState skewed_cap(int refinement, int degree)
{
    AleState st(disc_space(refinement, degree));
    st.psi = map_nodes(st.fe(), [](const Vec2& x) {
        return Vec2{1.2 * x[0] + 0.1 * x[1] * x[1] + 0.2, 0.9 * x[1] + 0.05 * x[0] * x[1]};
    });
    st.vol0 = 1.0;
    PhysicsParams p;
    p.g_x = {1.0, 0.0};
    st.h = stationary_shape(st.fe(), st.psi, 1.0, p).h;
    return st;
}

PhysicsParams spreading_params()
{
    PhysicsParams p;
    p.s = 0.5;
    p.g_x = {0.5, -0.25};
    p.g_z = 0.3;
    return p;
}

double volume(const AleState& st)
{
    return integrate(st.fe(), st.psi, [&](const CellValues& cv, int q) { return cv.value(st.h, q); });
}

} // namespace

TEST(Step1, SystemIsSymmetric)
{
    const AleState st = skewed_cap(2, 2);
    MobilityLaws laws;
    laws.bulk_law = SlipLaw{0.1};
    laws.theta = -1.0;
    for (ModelKind m : {ModelKind::Transient, ModelKind::Weak}) {
        const LinearSystem sys = assemble_step1(st, spreading_params(), laws, 0.01, m);
        EXPECT_LE(relative_asymmetry(sys.A), 1e-12);
    }
}

TEST(Step1, EulerianVolumeRateVanishes)
{
    const AleState st = skewed_cap(2, 2);
    const auto s1 = step1_solve(st, spreading_params(), MobilityLaws{}, 0.01);
    const SparseMatrix M = mass_matrix(st.fe(), st.psi);
    EXPECT_NEAR((M * s1.hdot).sum(), 0.0, 1e-12);
}

TEST(Step1, WeakModelHasNoContactMultiplier)
{
    const AleState st = cap(1, 2);
    const auto s1 = step1_solve(st, spreading_params(), MobilityLaws{}, 0.01, ModelKind::Weak);
    EXPECT_EQ(s1.zeta.size(), 0);
    EXPECT_EQ(s1.hdot.size(), st.n_dofs());
}

// Zero height, no wetting, no gravity: nothing moves.
TEST(Step1, TrivialStateIsAtRest)
{
    AleState st(disc_space(1, 2));
    const auto s1 = step1_solve(st, PhysicsParams{}, MobilityLaws{}, 0.1);
    EXPECT_LT(s1.hdot.lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(Translation, RecoversRigidTranslation)
{
    const AleState st = skewed_cap(2, 2);
    const Vec2 w{0.3, -0.7};
    const auto est = estimate_translation(st, [&](const FacetValues& fv, int q) { return w.dot(fv.normal(q)); });
    EXPECT_FALSE(est.degenerate);
    EXPECT_LT((est.w - w).norm(), 1e-12);
}

TEST(Translation, ParallelLinesAreDegenerate)
{
    AleState st(ridge_space(1.0, 2.0, 1, 2));
    const auto est = estimate_translation(st, [](const FacetValues& fv, int q) { return fv.normal(q)[0]; });
    EXPECT_TRUE(est.degenerate);
    EXPECT_EQ(est.w, Vec2::Zero());
}

TEST(Extension, RigidMotionsAreReproduced)
{
    const AleState st = skewed_cap(2, 2);
    const int n = st.n_dofs();
    const Vec2 w{0.4, 0.1};
    const double omega = 0.6;
    const auto ext = extend_boundary_velocity(st, [&](const FacetValues& fv, int q) -> Vec2 {
        const Vec2 x = fv.point(q);
        return w + omega * Vec2{-x[1], x[0]};
    });
    for (int i = 0; i < n; ++i) {
        const Vec2 x{st.psi[i], st.psi[n + i]};
        EXPECT_NEAR(ext.psidot[i], w[0] - omega * x[1], 1e-10);
        EXPECT_NEAR(ext.psidot[n + i], w[1] + omega * x[0], 1e-10);
    }
    EXPECT_LT(ext.lambda.lpNorm<Eigen::Infinity>(), 1e-9);
}

// The ψ̇ trace satisfies the weak kinematic constraint
// ∮(ψ̇ − g)·v dγ̄ = 0 for trace test functions v, with g = −∇h ḣ/|∇h|².
TEST(Step2, TraceConstraintHolds)
{
    const AleState st = skewed_cap(2, 2);
    const PhysicsParams p = spreading_params();
    const auto s1 = step1_solve(st, p, MobilityLaws{}, 0.01);
    const auto s2 = step2_reconstruct(st, s1.hdot, p, ModelKind::Transient, TangentialMode::Zero);
    const FeSpace& space = st.fe();
    for (int a = 0; a < 2; ++a) {
        const Eigen::VectorXd r = boundary_load_vector(
            space, st.psi, BoundaryTag::FreeBoundary,
            [&](const FacetValues& fv, int q) {
                const Vec2 grad = fv.gradient(st.h, q);
                const double g = grad[a] * fv.value(s1.hdot, q) / grad.squaredNorm();
                return fv.vector_value(s2.psidot, q)[a] + g;
            },
            Measure::Reference);
        const Eigen::VectorXd scale = boundary_load_vector(
            space, st.psi, BoundaryTag::FreeBoundary,
            [&](const FacetValues& fv, int q) { return std::abs(fv.vector_value(s2.psidot, q)[a]); },
            Measure::Reference);
        EXPECT_LE(r.lpNorm<Eigen::Infinity>(), 1e-9 * scale.lpNorm<Eigen::Infinity>());
    }
    // Normal speed sign: ψ̇·ν − ḣ/|∇h| = 0 at the contact line (outward ν).
    for_each_boundary_facet(space, st.psi, BoundaryTag::FreeBoundary, [&](const FacetValues& fv) {
        for (int q = 0; q < fv.n_points(); ++q) {
            const double V = fv.vector_value(s2.psidot, q).dot(fv.normal(q));
            EXPECT_NEAR(V, fv.value(s1.hdot, q) / fv.gradient(st.h, q).norm(), 0.05 * (1.0 + std::abs(V)));
        }
    });
}

TEST(Step2, RidgeKeepsSlidingWallsFixed)
{
    const double L = 1.0, H = 2.0;
    const auto space = ridge_space(L, H, 1, 2);
    AleState st(space);
    st.psi = ridge_initial_map(*space, H, 0.2);
    st.vol0 = 1.0;
    st.h = stationary_shape(*space, st.psi, 1.0, PhysicsParams{}).h;
    PhysicsParams p;
    p.s = 0.5;
    const auto s1 = step1_solve(st, p, MobilityLaws{}, 0.01);
    const auto s2 = step2_reconstruct(st, s1.hdot, p, ModelKind::Transient, TangentialMode::Zero);
    const int n = space->n_dofs();
    for (int i : space->boundary_dofs(BoundaryTag::Sliding))
        EXPECT_EQ(s2.psidot[n + i], 0.0);
}

TEST(Step3, ContactLineStaysAtZeroHeight)
{
    const AleState st = skewed_cap(2, 2);
    const StepResult r = transient_step(st, spreading_params(), MobilityLaws{}, 0.01, StepOptions{});
    for (int i : st.fe().boundary_dofs(BoundaryTag::FreeBoundary)) {
        EXPECT_EQ(r.rates.hdot_ale[i], 0.0);
        EXPECT_EQ(r.state.h[i], 0.0);
    }
}

TEST(TransientStep, InputIsUntouchedAndTimeAdvances)
{
    const AleState st = skewed_cap(1, 2);
    const AleState copy = st;
    const StepResult r = transient_step(st, spreading_params(), MobilityLaws{}, 0.02, StepOptions{});
    EXPECT_EQ(st.psi, copy.psi);
    EXPECT_EQ(st.h, copy.h);
    EXPECT_DOUBLE_EQ(r.state.t, 0.02);
}

TEST(TransientStep, EnergyDecreasesAndVolumeDriftsSlowly)
{
    const PhysicsParams p = spreading_params();
    MobilityLaws laws;
    laws.bulk_law = SlipLaw{0.1};
    AleState st = skewed_cap(2, 2);
    double e = energy(st, p).total;
    for (int k = 0; k < 5; ++k) {
        st = transient_step(st, p, laws, 0.005, StepOptions{}).state;
        const double e_next = energy(st, p).total;
        EXPECT_LT(e_next, e);
        e = e_next;
    }
    EXPECT_NEAR(volume(st), 1.0, 1e-3);
}

TEST(TransientStep, WeakModelMovesTowardEquilibriumSlope)
{
    PhysicsParams p;
    p.s = 0.5;
    const AleState st = cap(2, 2);
    const StepResult r = transient_step(st, p, MobilityLaws{}, 0.01, StepOptions{ModelKind::Weak});
    const double e0 = energy(st, p).total;
    EXPECT_LT(energy(r.state, p).total, e0);
}

TEST(TransientStep, WeakModelNeedsWetting)
{
    const AleState st = cap(1, 2);
    EXPECT_THROW(transient_step(st, PhysicsParams{}, MobilityLaws{}, 0.01, StepOptions{ModelKind::Weak}), ConfigError);
}

TEST(TransientStep, FoldedMapIsDetected)
{
    const AleState st = cap(1, 2);
    EXPECT_NO_THROW(check_mesh(st.fe(), st.psi));
    const Eigen::VectorXd folded =
        map_nodes(st.fe(), [](const Vec2& x) { return Vec2{x[0] - 3.0 * x[0] * x[0] * x[0], x[1]}; });
    EXPECT_THROW(check_mesh(st.fe(), folded), MeshTangled);
}

TEST(TransientStep, DegenerateTranslationIsLogged)
{
    const double L = 1.0, H = 2.0;
    const auto space = ridge_space(L, H, 1, 2);
    AleState st(space);
    st.h = stationary_shape(*space, st.psi, 1.0, PhysicsParams{}).h;
    PhysicsParams p;
    p.s = 0.5;
    EventLog log;
    transient_step(st, p, MobilityLaws{}, 0.001, StepOptions{ModelKind::Transient, TangentialMode::TravelingWave}, &log);
    EXPECT_EQ(log.count(EventKind::Warning), 1u);
}
