#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "thinfilm/assembly.hpp"
#include "thinfilm/state.hpp"

namespace thinfilm {

struct TranslationEstimate {
    Vec2 w = Vec2::Zero();
    bool degenerate = false;
};

/// Least-squares translation velocity from a normal speed V on the contact
/// line: w = (∮ν⊗ν)⁻¹ ∮Vν. Falls back to w = 0 when ∮ν⊗ν is singular, for
/// instance on a pair of parallel straight contact lines.
template <class Speed>
TranslationEstimate estimate_translation(const AleState& state, Speed&& normal_speed)
{
    Mat2 W = Mat2::Zero();
    Vec2 r = Vec2::Zero();
    for_each_boundary_facet(state.fe(), state.psi, BoundaryTag::FreeBoundary, [&](const FacetValues& fv) {
        for (int q = 0; q < fv.n_points(); ++q) {
            const Vec2 nu = fv.normal(q);
            W += fv.ds(q) * nu * nu.transpose();
            r += fv.ds(q) * normal_speed(fv, q) * nu;
        }
    });
    const double scale = W.trace();
    if (!(scale > 0.0) || std::abs(W.determinant()) < 1e-10 * scale * scale)
        return {Vec2::Zero(), true};
    return {W.inverse() * r, false};
}

/// Mass matrix of the FreeBoundary trace space for the reference arc length.
inline SparseMatrix reference_trace_mass(const FeSpace& space, const Eigen::VectorXd& psi)
{
    return restrict_to_trace(space, boundary_mass_matrix(space, psi, BoundaryTag::FreeBoundary, Measure::Reference),
                             true, true);
}

/// Reference-measure L² projection of a vector boundary datum onto the trace
/// space; returns [x-block, y-block] trace coefficients.
template <class Datum>
Eigen::VectorXd project_to_trace(const FeSpace& space, const Eigen::VectorXd& psi, const SparseMatrix& trace_mass,
                                 Datum&& g)
{
    const int n = space.n_dofs();
    const int nt = space.n_trace_dofs();
    Eigen::VectorXd out(2 * nt);
    for (int a = 0; a < 2; ++a) {
        const Eigen::VectorXd full = boundary_load_vector(
            space, psi, BoundaryTag::FreeBoundary, [&](const FacetValues& fv, int q) { return g(fv, q)[a]; },
            Measure::Reference);
        Eigen::VectorXd rhs(nt);
        for (int i = 0; i < n; ++i)
            if (const int ti = space.trace_index(i); ti >= 0)
                rhs[ti] = full[i];
        out.segment(a * nt, nt) = solve_direct(trace_mass, rhs);
    }
    return out;
}

struct Extension {
    Eigen::VectorXd psidot;
    Eigen::VectorXd lambda;
};

/// Harmonic-type extension of a contact-line velocity into the reference
/// domain: ∫𝔻ψ̇:𝔻v J = 0 with ψ̇ prescribed on the FreeBoundary trace (as
/// the projection of `g`) and ψ̇·e_y = 0 on Sliding facets. At dofs shared by
/// both, the x-component comes from the projection. λ is the boundary
/// reaction ∫𝔻ψ̇:𝔻v J + ∮λ·v dγ̄ = 0 tested with trace functions.
template <class Datum>
Extension extend_boundary_velocity(const AleState& state, Datum&& g)
{
    const FeSpace& space = state.fe();
    const int n = space.n_dofs();
    const int nt = space.n_trace_dofs();
    const SparseMatrix Mt = reference_trace_mass(space, state.psi);
    const Eigen::VectorXd G = project_to_trace(space, state.psi, Mt, g);

    std::vector<int> dofs;
    std::vector<double> values;
    for (int i = 0; i < n; ++i)
        if (const int ti = space.trace_index(i); ti >= 0) {
            dofs.push_back(i);
            values.push_back(G[ti]);
        }
    std::vector<char> sliding(n, 0);
    for (int i : space.boundary_dofs(BoundaryTag::Sliding))
        sliding[i] = 1;
    for (int i = 0; i < n; ++i) {
        if (const int ti = space.trace_index(i); ti >= 0 && !sliding[i]) {
            dofs.push_back(n + i);
            values.push_back(G[nt + ti]);
        } else if (sliding[i]) {
            dofs.push_back(n + i);
            values.push_back(0.0);
        }
    }

    const SparseMatrix A = symmetric_gradient_matrix(space, state.psi);
    SparseMatrix Ad = A;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * n);
    apply_dirichlet(Ad, b, dofs, values);
    Extension ext;
    ext.psidot = solve_direct(Ad, b);

    const Eigen::VectorXd residual = -(A * ext.psidot);
    ext.lambda.resize(2 * nt);
    if (nt > 0) {
        for (int a = 0; a < 2; ++a) {
            Eigen::VectorXd r(nt);
            for (int i = 0; i < n; ++i)
                if (const int ti = space.trace_index(i); ti >= 0)
                    r[ti] = residual[a * n + i];
            ext.lambda.segment(a * nt, nt) = solve_direct(Mt, r);
        }
    }
    return ext;
}

/// Scatters trace coefficients of one component back into a full-length
/// scalar coefficient vector (zero away from the FreeBoundary).
inline Eigen::VectorXd trace_to_full(const FeSpace& space, const Eigen::VectorXd& trace_coeffs, int component = 0)
{
    const int n = space.n_dofs();
    const int nt = space.n_trace_dofs();
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        if (const int ti = space.trace_index(i); ti >= 0)
            full[i] = trace_coeffs[component * nt + ti];
    return full;
}

/// Throws MeshTangled if some cell or boundary-facet quadrature point of psi
/// has J <= 0.
inline void check_mesh(const FeSpace& space, const Eigen::VectorXd& psi)
{
    for_each_cell(space, psi, [](const CellValues&) {});
    for_each_boundary_facet(space, psi, std::nullopt, [](const FacetValues&) {});
}

} // namespace thinfilm
