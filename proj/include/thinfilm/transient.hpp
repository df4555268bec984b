#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "thinfilm/ale_extension.hpp"
#include "thinfilm/assembly.hpp"
#include "thinfilm/physics.hpp"
#include "thinfilm/state.hpp"

namespace thinfilm {

/// Step 1: Eulerian rate ḣ, pressure π and contact multiplier ζ from the
/// semi-implicit block system
///
///   [ −τσK   M    B ] [ḣ]   [⟨DE, ·⟩]
///   [   M   K_m   0 ] [π] = [   0   ]
///   [  Bᵀ    0    N ] [ζ]   [   0   ]
///
/// with K_m = ∫m(h)∇·∇, B = ∮φζ and N = ∮n|∇h|²ζv on the deformed contact
/// line. The weak model drops ζ together with B and N.
struct Step1Result {
    Eigen::VectorXd hdot;
    Eigen::VectorXd pi;
    Eigen::VectorXd zeta;
};

inline LinearSystem assemble_step1(const AleState& state, const PhysicsParams& p, const MobilityLaws& laws, double tau,
                                   ModelKind model = ModelKind::Transient)
{
    const FeSpace& space = state.fe();
    const int n = space.n_dofs();
    const bool with_zeta = model == ModelKind::Transient;
    const int nt = with_zeta ? space.n_trace_dofs() : 0;

    LinearSystem sys;
    sys.layout.add("hdot", n).add("pi", n).add("zeta", nt);

    const DrivingForce de = driving_force_rhs(state, p, tau);
    const SparseMatrix M = mass_matrix(space, state.psi);
    const SparseMatrix Km =
        stiffness_matrix(space, state.psi, [&](const CellValues& cv, int q) { return laws.bulk(cv.value(state.h, q)); });

    Triplets t;
    append_block(t, de.implicit_block, 0, 0, -1.0);
    append_block(t, M, 0, n);
    append_block(t, M, n, 0);
    append_block(t, Km, n, n);
    if (nt > 0) {
        const SparseMatrix B = restrict_to_trace(
            space, boundary_mass_matrix(space, state.psi, BoundaryTag::FreeBoundary, Measure::Physical), false, true);
        const SparseMatrix N = restrict_to_trace(
            space,
            boundary_mass_matrix(space, state.psi, BoundaryTag::FreeBoundary, Measure::Physical,
                                 [&](const FacetValues& fv, int q) {
                                     const double g = regularized_norm(fv.gradient(state.h, q), p.g_min);
                                     return laws.contact(g, p.g_min) * g * g;
                                 }),
            true, true);
        append_block(t, B, 0, 2 * n);
        append_block(t, SparseMatrix(B.transpose()), 2 * n, 0);
        append_block(t, N, 2 * n, 2 * n);
    }
    sys.A.resize(sys.layout.size(), sys.layout.size());
    sys.A.setFromTriplets(t.begin(), t.end());
    sys.b = Eigen::VectorXd::Zero(sys.layout.size());
    sys.b.head(n) = de.rhs;
    return sys;
}

inline Step1Result step1_solve(const AleState& state, const PhysicsParams& p, const MobilityLaws& laws, double tau,
                               ModelKind model = ModelKind::Transient)
{
    const LinearSystem sys = assemble_step1(state, p, laws, tau, model);
    const Eigen::VectorXd x = solve_direct(sys);
    return {sys.layout.extract(x, "hdot"), sys.layout.extract(x, "pi"), sys.layout.extract(x, "zeta")};
}

/// Contact-line velocity implied by ḣ. Since h = 0 on the contact line,
/// ν = −∇h/|∇h| and the normal speed is ḣ/|∇h|; the weak model replaces |∇h|
/// by the equilibrium slope and uses the geometric normal.
class ContactKinematics {
public:
    ContactKinematics(const AleState& state, const Eigen::VectorXd& hdot, const PhysicsParams& p, ModelKind model)
        : state_(state), hdot_(hdot), p_(p), model_(model)
    {
        if (model_ == ModelKind::Weak && !(p_.equilibrium_slope() > 0.0))
            throw ConfigError("the weak model needs a positive spreading coefficient s");
    }

    double normal_speed(const FacetValues& fv, int q) const
    {
        const double slope = model_ == ModelKind::Weak ? p_.equilibrium_slope()
                                                       : regularized_norm(fv.gradient(state_.h, q), p_.g_min);
        return fv.value(hdot_, q) / slope;
    }

    Vec2 velocity(const FacetValues& fv, int q) const
    {
        if (model_ == ModelKind::Weak)
            return normal_speed(fv, q) * fv.normal(q);
        const Vec2 grad = fv.gradient(state_.h, q);
        const double g = regularized_norm(grad, p_.g_min);
        return -fv.value(hdot_, q) / (g * g) * grad;
    }

private:
    const AleState& state_;
    const Eigen::VectorXd& hdot_;
    const PhysicsParams& p_;
    ModelKind model_;
};

struct Step2Result {
    Eigen::VectorXd psidot;
    Eigen::VectorXd lambda;
    Vec2 w = Vec2::Zero();
    bool translation_degenerate = false;
};

/// Step 2: domain velocity ψ̇ from the contact-line kinematics. In traveling
/// wave mode the tangential part (w·t)t of an estimated translation w is added.
inline Step2Result step2_reconstruct(const AleState& state, const Eigen::VectorXd& hdot, const PhysicsParams& p,
                                     ModelKind model, TangentialMode mode)
{
    const ContactKinematics kin(state, hdot, p, model);
    Step2Result r;
    if (mode == TangentialMode::TravelingWave) {
        const auto est =
            estimate_translation(state, [&](const FacetValues& fv, int q) { return kin.normal_speed(fv, q); });
        r.w = est.w;
        r.translation_degenerate = est.degenerate;
    }
    const Vec2 w = r.w;
    Extension ext = extend_boundary_velocity(state, [&](const FacetValues& fv, int q) -> Vec2 {
        const Vec2 t = fv.tangent(q);
        return kin.velocity(fv, q) + w.dot(t) * t;
    });
    r.psidot = std::move(ext.psidot);
    r.lambda = std::move(ext.lambda);
    return r;
}

/// Step 3: ALE height rate h̄̇ = ḣ + ψ̇·∇h, L²-projected with h̄̇ = 0 on the
/// FreeBoundary so the contact line stays at h = 0.
inline Eigen::VectorXd step3_project(const AleState& state, const Eigen::VectorXd& hdot, const Eigen::VectorXd& psidot)
{
    const FeSpace& space = state.fe();
    SparseMatrix M = mass_matrix(space, state.psi);
    Eigen::VectorXd b = load_vector(space, state.psi, [&](const CellValues& cv, int q) {
        return cv.value(hdot, q) + cv.vector_value(psidot, q).dot(cv.gradient(state.h, q));
    });
    const auto& free = space.boundary_dofs(BoundaryTag::FreeBoundary);
    apply_dirichlet(M, b, free, std::vector<double>(free.size(), 0.0));
    return solve_direct(M, b);
}

/// One decoupled semi-implicit step of length tau for the transient or weak
/// model. Throws MeshTangled or FeasibilityViolation; `state` is never modified.
inline StepResult transient_step(const AleState& state, const PhysicsParams& p, const MobilityLaws& laws, double tau,
                                 const StepOptions& opt, EventLog* log = nullptr)
{
    if (opt.model == ModelKind::Strong)
        throw ConfigError("transient_step does not handle the strong-dissipation model");
    StepResult out;
    KinematicRates& k = out.rates;
    Step1Result s1 = step1_solve(state, p, laws, tau, opt.model);
    Step2Result s2 = step2_reconstruct(state, s1.hdot, p, opt.model, opt.tangential);
    k.hdot_ale = step3_project(state, s1.hdot, s2.psidot);
    k.hdot_eulerian = std::move(s1.hdot);
    k.pi = std::move(s1.pi);
    k.zeta = std::move(s1.zeta);
    k.psidot = std::move(s2.psidot);
    k.lambda = std::move(s2.lambda);
    k.w = s2.w;

    if (log) {
        if (s2.translation_degenerate)
            log->record(EventKind::Warning, state.t, "translation estimate singular, using w = 0");
        int flat = 0;
        for_each_boundary_facet(state.fe(), state.psi, BoundaryTag::FreeBoundary, [&](const FacetValues& fv) {
            for (int q = 0; q < fv.n_points(); ++q)
                flat += fv.gradient(state.h, q).norm() < p.g_min;
        });
        if (flat > 0)
            log->record(EventKind::Degeneracy, state.t,
                        std::to_string(flat) + " contact-line points with |grad h| below g_min");
    }

    AleState& next = out.state;
    next = state;
    next.psi += tau * k.psidot;
    next.h += tau * k.hdot_ale;
    next.t += tau;
    check_mesh(next.fe(), next.psi);
    const double hmin = min_nodal(next.h);
    if (hmin < -opt.feasibility_tol)
        throw FeasibilityViolation(hmin);
    return out;
}

} // namespace thinfilm
