#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "thinfilm/errors.hpp"
#include "thinfilm/fe_space.hpp"
#include "thinfilm/quadrature.hpp"

namespace thinfilm {

namespace detail {

inline void check_map_size(const FeSpace& space, const Eigen::VectorXd& psi)
{
    if (psi.size() != 2 * static_cast<Eigen::Index>(space.n_dofs()))
        throw AssemblyError("deformation map does not belong to the finite element space");
}

inline Mat2 outer(const Vec2& a, const Vec2& b) { return a * b.transpose(); }

} // namespace detail

/// Shape functions, physical gradients and ALE geometry (F = grad psi,
/// J = det F) at the Gauss points of one cell. `psi` is the deformation map
/// as a component-blocked vector field; physical quantities refer to the
/// deformed cell psi(cell).
class CellValues {
public:
    CellValues(const FeSpace& space, int n_points_1d)
        : space_(space), rule_(gauss_legendre(n_points_1d))
    {
        const auto& basis = space.basis();
        const int nq1 = rule_.size();
        n_q_ = nq1 * nq1;
        n_loc_ = basis.size();
        weights_.resize(n_q_);
        values_.resize(n_loc_ * n_q_);
        ref_grads_.resize(n_loc_ * n_q_);
        for (int qy = 0; qy < nq1; ++qy)
            for (int qx = 0; qx < nq1; ++qx) {
                const int q = qx + nq1 * qy;
                const double xi = rule_.points[qx], eta = rule_.points[qy];
                weights_[q] = rule_.weights[qx] * rule_.weights[qy];
                for (int l = 0; l < n_loc_; ++l) {
                    values_[l * n_q_ + q] = basis.value(l, xi, eta);
                    const auto g = basis.gradient(l, xi, eta);
                    ref_grads_[l * n_q_ + q] = Vec2(g[0], g[1]);
                }
            }
        grads_.resize(n_loc_ * n_q_);
        JxW_.resize(n_q_);
        ref_JxW_.resize(n_q_);
        points_.resize(n_q_);
        ref_points_.resize(n_q_);
        F_.resize(n_q_);
        J_.resize(n_q_);
    }

    explicit CellValues(const FeSpace& space)
        : CellValues(space, quadrature_points_for_degree(space.degree()))
    {
    }

    void reinit(int cell, const Eigen::VectorXd& psi)
    {
        detail::check_map_size(space_, psi);
        cell_ = cell;
        dofs_ = space_.cell_dofs(cell);
        const int n = space_.n_dofs();
        const auto& nodes = space_.node_points();
        for (int q = 0; q < n_q_; ++q) {
            Mat2 G = Mat2::Zero(), Gref = Mat2::Zero();
            Vec2 x = Vec2::Zero(), xref = Vec2::Zero();
            for (int l = 0; l < n_loc_; ++l) {
                const int d = dofs_[l];
                const Vec2 X(psi[d], psi[n + d]);
                const double phi = values_[l * n_q_ + q];
                const Vec2& dphi = ref_grads_[l * n_q_ + q];
                x += phi * X;
                xref += phi * nodes[d];
                G += detail::outer(X, dphi);
                Gref += detail::outer(nodes[d], dphi);
            }
            const double det = G.determinant();
            const double det_ref = Gref.determinant();
            if (!(det > 0.0))
                throw MeshTangled(cell, det / det_ref);
            const Mat2 Ginv_t = G.inverse().transpose();
            for (int l = 0; l < n_loc_; ++l)
                grads_[l * n_q_ + q] = Ginv_t * ref_grads_[l * n_q_ + q];
            JxW_[q] = det * weights_[q];
            ref_JxW_[q] = det_ref * weights_[q];
            points_[q] = x;
            ref_points_[q] = xref;
            F_[q] = G * Gref.inverse();
            J_[q] = det / det_ref;
        }
    }

    int cell() const { return cell_; }
    int n_points() const { return n_q_; }
    int n_local() const { return n_loc_; }
    std::span<const int> dofs() const { return dofs_; }

    double shape(int l, int q) const { return values_[l * n_q_ + q]; }
    const Vec2& grad(int l, int q) const { return grads_[l * n_q_ + q]; }
    /// Physical measure J dx̄ times the quadrature weight.
    double JxW(int q) const { return JxW_[q]; }
    /// Reference measure dx̄ times the quadrature weight.
    double ref_JxW(int q) const { return ref_JxW_[q]; }
    const Vec2& point(int q) const { return points_[q]; }
    const Vec2& ref_point(int q) const { return ref_points_[q]; }
    const Mat2& F(int q) const { return F_[q]; }
    double J(int q) const { return J_[q]; }

    double value(const Eigen::VectorXd& u, int q) const
    {
        double v = 0.0;
        for (int l = 0; l < n_loc_; ++l)
            v += u[dofs_[l]] * shape(l, q);
        return v;
    }

    Vec2 gradient(const Eigen::VectorXd& u, int q) const
    {
        Vec2 g = Vec2::Zero();
        for (int l = 0; l < n_loc_; ++l)
            g += u[dofs_[l]] * grad(l, q);
        return g;
    }

    Vec2 vector_value(const Eigen::VectorXd& u, int q) const
    {
        const int n = space_.n_dofs();
        Vec2 v = Vec2::Zero();
        for (int l = 0; l < n_loc_; ++l)
            v += shape(l, q) * Vec2(u[dofs_[l]], u[n + dofs_[l]]);
        return v;
    }

    /// Row c holds the physical gradient of component c.
    Mat2 vector_gradient(const Eigen::VectorXd& u, int q) const
    {
        const int n = space_.n_dofs();
        Mat2 g = Mat2::Zero();
        for (int l = 0; l < n_loc_; ++l)
            g += detail::outer(Vec2(u[dofs_[l]], u[n + dofs_[l]]), grad(l, q));
        return g;
    }

private:
    const FeSpace& space_;
    QuadratureRule1D rule_;
    int n_q_ = 0, n_loc_ = 0, cell_ = -1;
    std::span<const int> dofs_;
    std::vector<double> weights_, values_;
    std::vector<Vec2> ref_grads_, grads_;
    std::vector<double> JxW_, ref_JxW_, J_;
    std::vector<Vec2> points_, ref_points_;
    std::vector<Mat2> F_;
};

/// Values on one boundary facet: arc-length weights in the deformed
/// (Ā dγ̄) and reference (dγ̄) configurations, the Eulerian outer normal,
/// and tangential derivatives of the cell's shape functions.
class FacetValues {
public:
    FacetValues(const FeSpace& space, int n_points_1d)
        : space_(space), rule_(gauss_legendre(n_points_1d))
    {
        const auto& basis = space.basis();
        n_q_ = rule_.size();
        n_loc_ = basis.size();
        for (int f = 0; f < 4; ++f) {
            values_[f].resize(n_loc_ * n_q_);
            ref_grads_[f].resize(n_loc_ * n_q_);
            for (int q = 0; q < n_q_; ++q) {
                const Vec2 xi = facet_to_cell(f, rule_.points[q]);
                for (int l = 0; l < n_loc_; ++l) {
                    values_[f][l * n_q_ + q] = basis.value(l, xi[0], xi[1]);
                    const auto g = basis.gradient(l, xi[0], xi[1]);
                    ref_grads_[f][l * n_q_ + q] = Vec2(g[0], g[1]);
                }
            }
        }
        grads_.resize(n_loc_ * n_q_);
        ds_.resize(n_q_);
        ref_ds_.resize(n_q_);
        normals_.resize(n_q_);
        ref_normals_.resize(n_q_);
        tangents_.resize(n_q_);
        points_.resize(n_q_);
        F_.resize(n_q_);
        J_.resize(n_q_);
        A_.resize(n_q_);
        speed_.resize(n_q_);
    }

    explicit FacetValues(const FeSpace& space)
        : FacetValues(space, quadrature_points_for_degree(space.degree()))
    {
    }

    /// `boundary_facet` indexes ReferenceMesh::boundary_facets.
    void reinit(int boundary_facet, const Eigen::VectorXd& psi)
    {
        detail::check_map_size(space_, psi);
        const auto& bf = space_.mesh().boundary_facets[boundary_facet];
        cell_ = bf.cell;
        facet_ = bf.local_facet;
        tag_ = bf.tag;
        dofs_ = space_.cell_dofs(cell_);
        const int n = space_.n_dofs();
        const auto& nodes = space_.node_points();
        const int dir = (facet_ == 0 || facet_ == 2) ? 0 : 1;
        const double orient = facet_orientation(facet_);
        for (int q = 0; q < n_q_; ++q) {
            Mat2 G = Mat2::Zero(), Gref = Mat2::Zero();
            Vec2 x = Vec2::Zero();
            for (int l = 0; l < n_loc_; ++l) {
                const int d = dofs_[l];
                const Vec2 X(psi[d], psi[n + d]);
                const Vec2& dphi = ref_grads_[facet_][l * n_q_ + q];
                x += values_[facet_][l * n_q_ + q] * X;
                G += detail::outer(X, dphi);
                Gref += detail::outer(nodes[d], dphi);
            }
            const double det = G.determinant();
            const double det_ref = Gref.determinant();
            if (!(det > 0.0))
                throw MeshTangled(cell_, det / det_ref);
            const Vec2 xs = G.col(dir);
            const Vec2 xs_ref = Gref.col(dir);
            const double len = xs.norm(), len_ref = xs_ref.norm();
            tangents_[q] = xs / len;
            normals_[q] = orient * Vec2(tangents_[q][1], -tangents_[q][0]);
            ref_normals_[q] = orient * Vec2(xs_ref[1], -xs_ref[0]) / len_ref;
            ds_[q] = len * rule_.weights[q];
            ref_ds_[q] = len_ref * rule_.weights[q];
            speed_[q] = len;
            points_[q] = x;
            F_[q] = G * Gref.inverse();
            J_[q] = det / det_ref;
            A_[q] = J_[q] * (F_[q].inverse().transpose() * ref_normals_[q]).norm();
            const Mat2 Ginv_t = G.inverse().transpose();
            for (int l = 0; l < n_loc_; ++l)
                grads_[l * n_q_ + q] = Ginv_t * ref_grads_[facet_][l * n_q_ + q];
        }
    }

    int cell() const { return cell_; }
    int local_facet() const { return facet_; }
    BoundaryTag tag() const { return tag_; }
    int n_points() const { return n_q_; }
    int n_local() const { return n_loc_; }
    std::span<const int> dofs() const { return dofs_; }
    const std::vector<int>& facet_nodes() const { return space_.facet_local_nodes(facet_); }

    double shape(int l, int q) const { return values_[facet_][l * n_q_ + q]; }
    const Vec2& grad(int l, int q) const { return grads_[l * n_q_ + q]; }
    /// Tangential derivative d/dγ of shape function l along the deformed facet.
    double surface_derivative(int l, int q) const
    {
        const int dir = (facet_ == 0 || facet_ == 2) ? 0 : 1;
        return ref_grads_[facet_][l * n_q_ + q][dir] / speed_[q];
    }

    /// Ā dγ̄ times the quadrature weight (deformed arc length).
    double ds(int q) const { return ds_[q]; }
    /// dγ̄ times the quadrature weight (reference arc length).
    double ref_ds(int q) const { return ref_ds_[q]; }
    const Vec2& normal(int q) const { return normals_[q]; }
    const Vec2& ref_normal(int q) const { return ref_normals_[q]; }
    /// Unit tangent along the facet parametrisation.
    const Vec2& tangent(int q) const { return tangents_[q]; }
    const Vec2& point(int q) const { return points_[q]; }
    const Mat2& F(int q) const { return F_[q]; }
    double J(int q) const { return J_[q]; }
    /// Nanson area factor J ||F^{-T} ν̄||.
    double A(int q) const { return A_[q]; }

    double value(const Eigen::VectorXd& u, int q) const
    {
        double v = 0.0;
        for (int l = 0; l < n_loc_; ++l)
            v += u[dofs_[l]] * shape(l, q);
        return v;
    }

    Vec2 gradient(const Eigen::VectorXd& u, int q) const
    {
        Vec2 g = Vec2::Zero();
        for (int l = 0; l < n_loc_; ++l)
            g += u[dofs_[l]] * grad(l, q);
        return g;
    }

    Vec2 vector_value(const Eigen::VectorXd& u, int q) const
    {
        const int n = space_.n_dofs();
        Vec2 v = Vec2::Zero();
        for (int l = 0; l < n_loc_; ++l)
            v += shape(l, q) * Vec2(u[dofs_[l]], u[n + dofs_[l]]);
        return v;
    }

private:
    const FeSpace& space_;
    QuadratureRule1D rule_;
    int n_q_ = 0, n_loc_ = 0, cell_ = -1, facet_ = 0;
    BoundaryTag tag_ = BoundaryTag::FreeBoundary;
    std::span<const int> dofs_;
    std::array<std::vector<double>, 4> values_;
    std::array<std::vector<Vec2>, 4> ref_grads_;
    std::vector<Vec2> grads_;
    std::vector<double> ds_, ref_ds_, J_, A_, speed_;
    std::vector<Vec2> normals_, ref_normals_, tangents_, points_;
    std::vector<Mat2> F_;
};

/// Per-point ALE geometry of a cell or boundary facet.
struct GeometryAtQuad {
    std::vector<Mat2> F;
    std::vector<double> J;
    std::vector<double> A;      // boundary only
    std::vector<Vec2> normal;   // boundary only, Eulerian outer normal
    std::vector<Vec2> point;    // psi(x̄)
};

inline GeometryAtQuad geometry_at_cell(const FeSpace& space, const Eigen::VectorXd& psi, int cell)
{
    CellValues cv(space);
    cv.reinit(cell, psi);
    GeometryAtQuad g;
    for (int q = 0; q < cv.n_points(); ++q) {
        g.F.push_back(cv.F(q));
        g.J.push_back(cv.J(q));
        g.point.push_back(cv.point(q));
    }
    return g;
}

/// Boundary geometry; the normal is the unit vector along J F^{-T} ν̄.
inline GeometryAtQuad geometry_at_boundary(const FeSpace& space, const Eigen::VectorXd& psi, int boundary_facet)
{
    FacetValues fv(space);
    fv.reinit(boundary_facet, psi);
    GeometryAtQuad g;
    for (int q = 0; q < fv.n_points(); ++q) {
        g.F.push_back(fv.F(q));
        g.J.push_back(fv.J(q));
        g.A.push_back(fv.A(q));
        const Vec2 nanson = fv.J(q) * fv.F(q).inverse().transpose() * fv.ref_normal(q);
        g.normal.push_back(nanson.normalized());
        g.point.push_back(fv.point(q));
    }
    return g;
}

} // namespace thinfilm
