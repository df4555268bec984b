#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "thinfilm/physics.hpp"

using namespace thinfilm;
using namespace thinfilm::testing;

namespace {

constexpr double pi = std::numbers::pi;

AleState cap_state(int refinement, int degree)
{
    AleState st(disc_space(refinement, degree));
    st.h = st.fe().interpolate([](const Vec2& x) { return (2.0 / pi) * (1.0 - x.squaredNorm()); });
    return st;
}

} // namespace

TEST(Mobility, SlipLaw)
{
    MobilityLaws laws;
    laws.bulk_law = SlipLaw{0.1};
    EXPECT_NEAR(mobility_bulk(laws, 1.0), 1.0 / 3.0 + 0.1, 1e-15);
    EXPECT_NEAR(mobility_bulk(laws, 0.5), 0.125 / 3.0 + 0.025, 1e-15);
}

TEST(Mobility, PowerLawClampsNegativeHeights)
{
    MobilityLaws laws;
    laws.bulk_law = PowerLaw{2.0, 3.0};
    EXPECT_DOUBLE_EQ(mobility_bulk(laws, -0.3), 0.0);
    EXPECT_NEAR(mobility_bulk(laws, 0.5), 0.25, 1e-15);
}

TEST(Mobility, ContactLaw)
{
    MobilityLaws laws;
    laws.n0 = 1.0;
    laws.theta = -1.0;
    EXPECT_NEAR(mobility_contact(laws, 2.0, 1e-8), 0.5, 1e-15);
    EXPECT_NEAR(mobility_contact(laws, 0.0, 1e-4), 1e4, 1e-8);
}

TEST(Mobility, Validation)
{
    MobilityLaws laws;
    laws.n0 = 0.0;
    EXPECT_THROW(laws.validate(), ConfigError);
    laws.n0 = 1.0;
    laws.bulk_law = SlipLaw{-1.0};
    EXPECT_THROW(laws.validate(), ConfigError);
    PhysicsParams p;
    p.sigma = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Energy, FlatFilmIsWettingTimesArea)
{
    AleState st(disc_space(3, 2));
    PhysicsParams p;
    p.s = 1.0;
    const auto e = energy(st, p);
    EXPECT_NEAR(e.total, pi, 1e-6);
    EXPECT_DOUBLE_EQ(e.surface, 0.0);
}

TEST(Energy, LineTermIsEpsTimesPerimeter)
{
    AleState st(disc_space(3, 2));
    PhysicsParams p;
    p.eps_line = 0.5;
    const auto e = energy(st, p);
    EXPECT_NEAR(e.line, pi, 1e-6);
    EXPECT_NEAR(e.contact_length, 2.0 * pi, 1e-6);
}

TEST(Energy, TermsAddUp)
{
    AleState st = cap_state(2, 2);
    PhysicsParams p;
    p.sigma = 1.3;
    p.s = 0.4;
    p.g_x = {0.7, -0.2};
    p.g_z = 0.9;
    p.eps_line = 0.05;
    const auto e = energy(st, p);
    EXPECT_NEAR(e.total, e.surface + e.wetting + e.gravity + e.line, 1e-14);
    EXPECT_GT(e.gravity, 0.0);
}

TEST(Energy, ParabolicCapMatchesRadialQuadrature)
{
    // h = c(1 - r²) on the unit disc; independent 1D quadrature in r.
    const double c = 2.0 / pi;
    auto radial = [&](auto f) {
        const int n = 4000;
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = (i + 0.5) / n;
            s += f(r) * 2.0 * pi * r / n;
        }
        return s;
    };
    const double surface = radial([&](double r) { return 0.5 * 4.0 * c * c * r * r; });
    const double volume = radial([&](double r) { return c * (1.0 - r * r); });
    const double gz = radial([&](double r) { return 0.5 * c * c * (1.0 - r * r) * (1.0 - r * r); });

    const AleState st = cap_state(3, 2);
    PhysicsParams p;
    p.g_z = 1.0;
    const auto e = energy(st, p);
    EXPECT_NEAR(e.surface, surface, 1e-5);
    EXPECT_NEAR(e.volume, volume, 1e-5);
    EXPECT_NEAR(e.gravity, gz, 1e-5);
}

TEST(DrivingForce, VanishesForTrivialState)
{
    AleState st(disc_space(2, 2));
    PhysicsParams p;
    const auto f = driving_force_rhs(st, p, 0.0);
    EXPECT_LT(f.rhs.lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(DrivingForce, ImplicitBlockIsScaledStiffness)
{
    AleState st = cap_state(1, 2);
    PhysicsParams p;
    p.sigma = 2.0;
    const auto f = driving_force_rhs(st, p, 0.1);
    const SparseMatrix K = stiffness_matrix(st.fe(), st.psi);
    EXPECT_LT((f.implicit_block - 0.2 * K).norm(), 1e-13 * K.norm());
}

// Along a motion with fixed domain and an interior height rate, the paired
// driving force equals the energy derivative.
TEST(DrivingForce, EnergyDerivativeWithFixedDomain)
{
    AleState st = cap_state(2, 2);
    PhysicsParams p;
    p.sigma = 1.1;
    p.s = 0.3;
    p.g_x = {0.5, 0.25};
    p.g_z = 0.8;
    const Eigen::VectorXd hdot = st.fe().interpolate([](const Vec2& x) {
        return (1.0 - x.squaredNorm()) * (0.3 + x[0] - 0.5 * x[1] * x[1]);
    });
    const double delta = 1e-5;
    AleState plus = st, minus = st;
    plus.h += delta * hdot;
    minus.h -= delta * hdot;
    const double fd = (energy(plus, p).total - energy(minus, p).total) / (2.0 * delta);
    const double paired = driving_force_rhs(st, p, 0.0).rhs.dot(hdot);
    EXPECT_NEAR(paired, fd, 1e-6 * std::abs(fd));
}

// Moving contact line: affine deformation of a ridge rectangle, polynomial
// height vanishing on the free sides, and an affine horizontal velocity.
TEST(DrivingForce, EnergyDerivativeWithMovingContactLine)
{
    const double L = 1.0, H = 2.0;
    const auto space = ridge_space(L, H, 1, 2);
    AleState st(space);
    st.psi = map_nodes(*space, [](const Vec2& x) { return Vec2{1.2 * x[0] + 0.1 * x[1] + 0.05, x[1]}; });
    st.h = space->interpolate([&](const Vec2& x) { return x[0] * (L - x[0]) * (0.8 + 0.3 * x[1]); });
    const double c0 = 0.2, c1 = -0.35;
    const Eigen::VectorXd psidot = map_nodes(*space, [&](const Vec2& x) { return Vec2{c0 + c1 * x[0], 0.0}; });
    const Eigen::VectorXd hbar_dot =
        space->interpolate([&](const Vec2& x) { return x[0] * (L - x[0]) * (0.1 - 0.4 * x[1]); });

    // Eulerian rate ḣ = h̄̇ − ψ̇·∇h; F is constant so this is again in Q2.
    const Mat2 F{{1.2, 0.1}, {0.0, 1.0}};
    const Mat2 Finv = F.inverse();
    const Eigen::VectorXd hdot = space->interpolate([&](const Vec2& x) {
        const Vec2 ref_grad{(L - 2.0 * x[0]) * (0.8 + 0.3 * x[1]), x[0] * (L - x[0]) * 0.3};
        const Vec2 grad = Finv.transpose() * ref_grad;
        const Vec2 v{c0 + c1 * x[0], 0.0};
        return x[0] * (L - x[0]) * (0.1 - 0.4 * x[1]) - v.dot(grad);
    });

    PhysicsParams p;
    p.sigma = 0.9;
    p.s = 0.6;
    p.g_x = {0.4, -0.3};
    p.g_z = 0.7;
    const double delta = 1e-5;
    AleState plus = st, minus = st;
    plus.psi += delta * psidot;
    plus.h += delta * hbar_dot;
    minus.psi -= delta * psidot;
    minus.h -= delta * hbar_dot;
    const double fd = (energy(plus, p).total - energy(minus, p).total) / (2.0 * delta);
    const double paired = driving_force_rhs(st, p, 0.0).rhs.dot(hdot);
    EXPECT_GT(std::abs(fd), 1e-2);
    EXPECT_NEAR(paired, fd, 1e-6 * std::abs(fd));
}
