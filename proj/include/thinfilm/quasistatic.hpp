#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "thinfilm/ale_extension.hpp"
#include "thinfilm/assembly.hpp"
#include "thinfilm/physics.hpp"
#include "thinfilm/state.hpp"

namespace thinfilm {

struct StationaryShape {
    Eigen::VectorXd h;
    double pi_hat = 0.0;
};

/// Volume-constrained minimiser of the energy on the support psi(ω̄):
///   ∫σ∇h·∇v + (g_x·x + g_z h) v = π̂ ∫v,   ∫h = vol0,   h = 0 on FreeBoundary.
inline StationaryShape stationary_shape(const FeSpace& space, const Eigen::VectorXd& psi, double vol0,
                                        const PhysicsParams& p)
{
    if (!(vol0 > 0.0))
        throw ConfigError("target volume must be positive");
    const int n = space.n_dofs();
    const SparseMatrix K = stiffness_matrix(space, psi);
    const SparseMatrix M = mass_matrix(space, psi);
    const Eigen::VectorXd ones_load = load_vector(space, psi, [](const CellValues&, int) { return 1.0; });
    const Eigen::VectorXd gx_load =
        load_vector(space, psi, [&](const CellValues& cv, int q) { return p.g_x.dot(cv.point(q)); });

    Triplets t;
    append_block(t, K, 0, 0, p.sigma);
    if (p.g_z != 0.0)
        append_block(t, M, 0, 0, p.g_z);
    for (int i = 0; i < n; ++i)
        if (ones_load[i] != 0.0) {
            t.emplace_back(i, n, -ones_load[i]);
            t.emplace_back(n, i, -ones_load[i]);
        }
    SparseMatrix A(n + 1, n + 1);
    A.setFromTriplets(t.begin(), t.end());
    Eigen::VectorXd b(n + 1);
    b.head(n) = -gx_load;
    b[n] = -vol0;
    const auto& free = space.boundary_dofs(BoundaryTag::FreeBoundary);
    apply_dirichlet(A, b, free, std::vector<double>(free.size(), 0.0));
    const Eigen::VectorXd x = solve_direct(A, b);
    return {x.head(n), x[n]};
}

/// Boundary velocity of the strong-dissipation limit with semi-implicit line
/// tension, solved componentwise on the FreeBoundary trace space:
///   ∮ẋ·v + τεn ∇_Γẋ·∇_Γv = ∮f·v − εn ∇_Γx·∇_Γv,  f = −n(−σ/2|∇h|² + s)ν.
/// Returns [x-block, y-block] trace coefficients.
inline Eigen::VectorXd contact_velocity(const AleState& state, const PhysicsParams& p, const MobilityLaws& laws,
                                        double tau)
{
    const FeSpace& space = state.fe();
    const int n = space.n_dofs();
    const int nt = space.n_trace_dofs();
    if (nt == 0)
        throw AssemblyError("contact_velocity needs a FreeBoundary");
    auto n_at = [&](const FacetValues& fv, int q) { return laws.contact(fv.gradient(state.h, q).norm(), p.g_min); };

    const SparseMatrix Mg = restrict_to_trace(
        space, boundary_mass_matrix(space, state.psi, BoundaryTag::FreeBoundary, Measure::Physical), true, true);
    const SparseMatrix Sn =
        restrict_to_trace(space, boundary_stiffness_matrix(space, state.psi, BoundaryTag::FreeBoundary, n_at), true, true);

    Eigen::VectorXd result(2 * nt);
    const SparseMatrix A = Mg + (tau * p.eps_line) * Sn;
    for (int a = 0; a < 2; ++a) {
        const Eigen::VectorXd f_full =
            boundary_load_vector(space, state.psi, BoundaryTag::FreeBoundary, [&](const FacetValues& fv, int q) {
                const Vec2 g = fv.gradient(state.h, q);
                const double drive = -0.5 * p.sigma * g.squaredNorm() + p.s;
                return -laws.contact(g.norm(), p.g_min) * drive * fv.normal(q)[a];
            });
        Eigen::VectorXd rhs(nt), xa(nt);
        for (int i = 0; i < n; ++i)
            if (const int ti = space.trace_index(i); ti >= 0) {
                rhs[ti] = f_full[i];
                xa[ti] = state.psi[a * n + i];
            }
        rhs -= p.eps_line * (Sn * xa);
        result.segment(a * nt, nt) = solve_direct(A, rhs);
    }
    return result;
}

/// Strong-dissipation step: move the contact line with contact_velocity,
/// extend into the domain and recompute the volume-constrained stationary
/// height on the new support.
inline StepResult quasistatic_step(const AleState& state, const PhysicsParams& p, const MobilityLaws& laws,
                                              double tau, const StepOptions& opt, EventLog* log = nullptr)
{
    const FeSpace& space = state.fe();
    const Eigen::VectorXd X = contact_velocity(state, p, laws, tau);
    const Eigen::VectorXd Xx = trace_to_full(space, X, 0);
    const Eigen::VectorXd Xy = trace_to_full(space, X, 1);
    auto normal_speed = [&](const FacetValues& fv, int q) {
        return Vec2{fv.value(Xx, q), fv.value(Xy, q)}.dot(fv.normal(q));
    };

    StepResult out;
    KinematicRates& k = out.rates;
    if (opt.tangential == TangentialMode::TravelingWave) {
        const auto est = estimate_translation(state, normal_speed);
        k.w = est.w;
        if (est.degenerate && log)
            log->record(EventKind::Warning, state.t, "translation estimate singular, using w = 0");
    }
    Extension ext = extend_boundary_velocity(state, [&](const FacetValues& fv, int q) -> Vec2 {
        const Vec2 t = fv.tangent(q);
        return normal_speed(fv, q) * fv.normal(q) + k.w.dot(t) * t;
    });
    k.psidot = std::move(ext.psidot);
    k.lambda = std::move(ext.lambda);

    AleState& next = out.state;
    next = state;
    next.psi += tau * k.psidot;
    next.t += tau;
    check_mesh(space, next.psi);
    const StationaryShape shape = stationary_shape(space, next.psi, state.vol0, p);
    next.h = shape.h;
    next.pi_hat = shape.pi_hat;
    k.hdot_ale = (next.h - state.h) / tau;
    const double hmin = min_nodal(next.h);
    if (hmin < -opt.feasibility_tol)
        throw FeasibilityViolation(hmin);
    return out;
}

} // namespace thinfilm
