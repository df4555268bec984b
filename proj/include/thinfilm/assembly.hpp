#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "thinfilm/fe_space.hpp"
#include "thinfilm/fe_values.hpp"
#include "thinfilm/linear_system.hpp"

namespace thinfilm {

/// Which arc-length element a boundary integral uses: the deformed one
/// (Ā dγ̄) or the reference one (dγ̄).
enum class Measure { Physical, Reference };

inline constexpr auto unit_coefficient = [](const auto&, int) { return 1.0; };

template <class Fn>
void for_each_cell(const FeSpace& space, const Eigen::VectorXd& psi, Fn&& fn)
{
    CellValues cv(space);
    for (int c = 0; c < space.mesh().n_cells(); ++c) {
        cv.reinit(c, psi);
        fn(cv);
    }
}

/// Visits boundary facets, optionally only those carrying `tag`.
template <class Fn>
void for_each_boundary_facet(const FeSpace& space, const Eigen::VectorXd& psi, std::optional<BoundaryTag> tag, Fn&& fn)
{
    FacetValues fv(space);
    const auto& facets = space.mesh().boundary_facets;
    for (int b = 0; b < static_cast<int>(facets.size()); ++b) {
        if (tag && facets[b].tag != *tag)
            continue;
        fv.reinit(b, psi);
        fn(fv);
    }
}

inline double facet_weight(const FacetValues& fv, int q, Measure m)
{
    return m == Measure::Physical ? fv.ds(q) : fv.ref_ds(q);
}

namespace detail {

inline void scatter(Triplets& t, std::span<const int> dofs, const Eigen::MatrixXd& local, int row_shift = 0,
                    int col_shift = 0)
{
    for (int i = 0; i < local.rows(); ++i)
        for (int j = 0; j < local.cols(); ++j)
            if (local(i, j) != 0.0)
                t.emplace_back(row_shift + dofs[i], col_shift + dofs[j], local(i, j));
}

inline SparseMatrix from_triplets(int rows, int cols, const Triplets& t)
{
    SparseMatrix A(rows, cols);
    A.setFromTriplets(t.begin(), t.end());
    return A;
}

} // namespace detail

/// ∫ c φ_i φ_j J dx̄
template <class Coef = decltype(unit_coefficient)>
SparseMatrix mass_matrix(const FeSpace& space, const Eigen::VectorXd& psi, Coef coef = unit_coefficient)
{
    Triplets t;
    const int nl = space.dofs_per_cell();
    Eigen::MatrixXd local(nl, nl);
    for_each_cell(space, psi, [&](const CellValues& cv) {
        local.setZero();
        for (int q = 0; q < cv.n_points(); ++q) {
            const double w = coef(cv, q) * cv.JxW(q);
            for (int i = 0; i < nl; ++i)
                for (int j = 0; j < nl; ++j)
                    local(i, j) += w * cv.shape(i, q) * cv.shape(j, q);
        }
        detail::scatter(t, cv.dofs(), local);
    });
    return detail::from_triplets(space.n_dofs(), space.n_dofs(), t);
}

/// ∫ c (F^{-T}∇̄φ_i)·(F^{-T}∇̄φ_j) J dx̄
template <class Coef = decltype(unit_coefficient)>
SparseMatrix stiffness_matrix(const FeSpace& space, const Eigen::VectorXd& psi, Coef coef = unit_coefficient)
{
    Triplets t;
    const int nl = space.dofs_per_cell();
    Eigen::MatrixXd local(nl, nl);
    for_each_cell(space, psi, [&](const CellValues& cv) {
        local.setZero();
        for (int q = 0; q < cv.n_points(); ++q) {
            const double w = coef(cv, q) * cv.JxW(q);
            for (int i = 0; i < nl; ++i)
                for (int j = 0; j < nl; ++j)
                    local(i, j) += w * cv.grad(i, q).dot(cv.grad(j, q));
        }
        detail::scatter(t, cv.dofs(), local);
    });
    return detail::from_triplets(space.n_dofs(), space.n_dofs(), t);
}

/// Symmetric-gradient form ∫ 𝔻u : 𝔻v J dx̄ on the component-blocked vector space.
inline SparseMatrix symmetric_gradient_matrix(const FeSpace& space, const Eigen::VectorXd& psi)
{
    Triplets t;
    const int n = space.n_dofs();
    const int nl = space.dofs_per_cell();
    std::array<std::array<Eigen::MatrixXd, 2>, 2> local;
    for (auto& row : local)
        for (auto& m : row)
            m.resize(nl, nl);
    for_each_cell(space, psi, [&](const CellValues& cv) {
        for (auto& row : local)
            for (auto& m : row)
                m.setZero();
        for (int q = 0; q < cv.n_points(); ++q) {
            const double w = cv.JxW(q);
            for (int i = 0; i < nl; ++i)
                for (int j = 0; j < nl; ++j) {
                    const Vec2& gi = cv.grad(i, q);
                    const Vec2& gj = cv.grad(j, q);
                    const double dot = gi.dot(gj);
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b)
                            local[a][b](i, j) += 0.5 * w * ((a == b ? dot : 0.0) + gi[b] * gj[a]);
                }
        }
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                detail::scatter(t, cv.dofs(), local[a][b], a * n, b * n);
    });
    return detail::from_triplets(2 * n, 2 * n, t);
}

/// ∮ c φ_i φ_j over facets with `tag`, as an n_dofs x n_dofs matrix.
template <class Coef = decltype(unit_coefficient)>
SparseMatrix boundary_mass_matrix(const FeSpace& space, const Eigen::VectorXd& psi, BoundaryTag tag,
                                  Measure measure = Measure::Physical, Coef coef = unit_coefficient)
{
    Triplets t;
    for_each_boundary_facet(space, psi, tag, [&](const FacetValues& fv) {
        const auto& nodes = fv.facet_nodes();
        const auto dofs = fv.dofs();
        for (int q = 0; q < fv.n_points(); ++q) {
            const double w = coef(fv, q) * facet_weight(fv, q, measure);
            for (int i : nodes)
                for (int j : nodes)
                    t.emplace_back(dofs[i], dofs[j], w * fv.shape(i, q) * fv.shape(j, q));
        }
    });
    return detail::from_triplets(space.n_dofs(), space.n_dofs(), t);
}

/// ∮ c ∇_Γφ_i · ∇_Γφ_j dγ along the deformed facets with `tag`.
template <class Coef = decltype(unit_coefficient)>
SparseMatrix boundary_stiffness_matrix(const FeSpace& space, const Eigen::VectorXd& psi, BoundaryTag tag,
                                       Coef coef = unit_coefficient)
{
    Triplets t;
    for_each_boundary_facet(space, psi, tag, [&](const FacetValues& fv) {
        const auto& nodes = fv.facet_nodes();
        const auto dofs = fv.dofs();
        for (int q = 0; q < fv.n_points(); ++q) {
            const double w = coef(fv, q) * fv.ds(q);
            for (int i : nodes)
                for (int j : nodes)
                    t.emplace_back(dofs[i], dofs[j], w * fv.surface_derivative(i, q) * fv.surface_derivative(j, q));
        }
    });
    return detail::from_triplets(space.n_dofs(), space.n_dofs(), t);
}

/// ∫ f φ_i J dx̄
template <class F>
Eigen::VectorXd load_vector(const FeSpace& space, const Eigen::VectorXd& psi, F&& f)
{
    Eigen::VectorXd b = Eigen::VectorXd::Zero(space.n_dofs());
    for_each_cell(space, psi, [&](const CellValues& cv) {
        const auto dofs = cv.dofs();
        for (int q = 0; q < cv.n_points(); ++q) {
            const double w = f(cv, q) * cv.JxW(q);
            for (int i = 0; i < cv.n_local(); ++i)
                b[dofs[i]] += w * cv.shape(i, q);
        }
    });
    return b;
}

/// ∮ f φ_i over facets with `tag`.
template <class F>
Eigen::VectorXd boundary_load_vector(const FeSpace& space, const Eigen::VectorXd& psi, BoundaryTag tag, F&& f,
                                     Measure measure = Measure::Physical)
{
    Eigen::VectorXd b = Eigen::VectorXd::Zero(space.n_dofs());
    for_each_boundary_facet(space, psi, tag, [&](const FacetValues& fv) {
        const auto dofs = fv.dofs();
        for (int q = 0; q < fv.n_points(); ++q) {
            const double w = f(fv, q) * facet_weight(fv, q, measure);
            for (int i : fv.facet_nodes())
                b[dofs[i]] += w * fv.shape(i, q);
        }
    });
    return b;
}

template <class F>
double integrate(const FeSpace& space, const Eigen::VectorXd& psi, F&& f)
{
    double s = 0.0;
    for_each_cell(space, psi, [&](const CellValues& cv) {
        for (int q = 0; q < cv.n_points(); ++q)
            s += f(cv, q) * cv.JxW(q);
    });
    return s;
}

template <class F>
double integrate_boundary(const FeSpace& space, const Eigen::VectorXd& psi, std::optional<BoundaryTag> tag, F&& f,
                          Measure measure = Measure::Physical)
{
    double s = 0.0;
    for_each_boundary_facet(space, psi, tag, [&](const FacetValues& fv) {
        for (int q = 0; q < fv.n_points(); ++q)
            s += f(fv, q) * facet_weight(fv, q, measure);
    });
    return s;
}

/// Galerkin L² projection (measure J dx̄) of a quadrature-evaluable expression.
template <class F>
Eigen::VectorXd l2_project(const FeSpace& space, const Eigen::VectorXd& psi, F&& f)
{
    return solve_direct(mass_matrix(space, psi), load_vector(space, psi, f), 1e-10);
}

/// Restriction of an n_dofs x n_dofs boundary matrix to the FreeBoundary trace
/// numbering on the side(s) selected.
inline SparseMatrix restrict_to_trace(const FeSpace& space, const SparseMatrix& A, bool rows, bool cols)
{
    Triplets t;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
            const int r = rows ? space.trace_index(static_cast<int>(it.row())) : static_cast<int>(it.row());
            const int c = cols ? space.trace_index(static_cast<int>(it.col())) : static_cast<int>(it.col());
            if (r >= 0 && c >= 0)
                t.emplace_back(r, c, it.value());
        }
    return detail::from_triplets(rows ? space.n_trace_dofs() : static_cast<int>(A.rows()),
                                 cols ? space.n_trace_dofs() : static_cast<int>(A.cols()), t);
}

/// Appends block `B` at (row0, col0) to a triplet list.
inline void append_block(Triplets& t, const SparseMatrix& B, int row0, int col0, double factor = 1.0)
{
    for (int k = 0; k < B.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(B, k); it; ++it)
            t.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()), factor * it.value());
}

} // namespace thinfilm
