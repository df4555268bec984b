#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "thinfilm/lagrange.hpp"
#include "thinfilm/mesh.hpp"

namespace thinfilm {

/// Continuous Q_k Lagrange space on a ReferenceMesh. Vector fields use the
/// same scalar numbering, stored component-blocked: [x_0..x_{n-1}, y_0..y_{n-1}].
///
/// Degrees of freedom are numbered vertices first, then edge-interior nodes
/// (ordered from the lower to the higher vertex index), then cell interiors.
/// `node_points()` holds the reference position of every node, i.e. the
/// degree-k interpolant of the curved cell maps; it is the identity map psi.
class FeSpace {
public:
    FeSpace(std::shared_ptr<const ReferenceMesh> mesh, int degree)
        : mesh_(std::move(mesh)), basis_(degree)
    {
        detail::check_degree(degree);
        build_dofs();
        build_boundary_sets();
    }

    const ReferenceMesh& mesh() const { return *mesh_; }
    std::shared_ptr<const ReferenceMesh> mesh_ptr() const { return mesh_; }
    int degree() const { return basis_.degree(); }
    const LagrangeBasisQ& basis() const { return basis_; }
    int n_dofs() const { return n_dofs_; }
    int dofs_per_cell() const { return basis_.size(); }

    std::span<const int> cell_dofs(int cell) const
    {
        return {cell_dofs_.data() + static_cast<std::size_t>(cell) * dofs_per_cell(),
                static_cast<std::size_t>(dofs_per_cell())};
    }

    const std::vector<Vec2>& node_points() const { return node_points_; }

    /// Local node indices along a facet, in the facet's parametrisation order.
    const std::vector<int>& facet_local_nodes(int facet) const { return facet_nodes_[facet]; }

    /// Sorted global dofs on facets carrying `tag`.
    const std::vector<int>& boundary_dofs(BoundaryTag tag) const
    {
        return tag == BoundaryTag::FreeBoundary ? free_dofs_ : sliding_dofs_;
    }

    /// FreeBoundary trace space: trace index of a global dof or -1.
    int trace_index(int dof) const { return trace_index_[dof]; }
    int n_trace_dofs() const { return static_cast<int>(free_dofs_.size()); }

    /// Identity map psi = id as a component-blocked coefficient vector.
    Eigen::VectorXd identity_map() const
    {
        Eigen::VectorXd psi(2 * n_dofs_);
        for (int i = 0; i < n_dofs_; ++i) {
            psi[i] = node_points_[i][0];
            psi[n_dofs_ + i] = node_points_[i][1];
        }
        return psi;
    }

    /// Nodal interpolation of a scalar function of the reference point.
    template <class Fn>
    Eigen::VectorXd interpolate(Fn&& fn) const
    {
        Eigen::VectorXd v(n_dofs_);
        for (int i = 0; i < n_dofs_; ++i)
            v[i] = fn(node_points_[i]);
        return v;
    }

private:
    void build_dofs()
    {
        const ReferenceMesh& m = *mesh_;
        const int k = degree();
        const int nv = static_cast<int>(m.vertices.size());
        cell_dofs_.assign(static_cast<std::size_t>(m.n_cells()) * basis_.size(), -1);

        facet_nodes_.assign(4, {});
        for (int s = 0; s <= k; ++s) {
            facet_nodes_[0].push_back(basis_.index(s, 0));
            facet_nodes_[1].push_back(basis_.index(k, s));
            facet_nodes_[2].push_back(basis_.index(s, k));
            facet_nodes_[3].push_back(basis_.index(0, s));
        }

        int next = nv;
        std::map<std::pair<int, int>, int> edge_first;
        node_points_.assign(nv, Vec2::Zero());
        for (int v = 0; v < nv; ++v)
            node_points_[v] = m.vertices[v];

        for (int c = 0; c < m.n_cells(); ++c) {
            int* dofs = cell_dofs_.data() + static_cast<std::size_t>(c) * basis_.size();
            const auto& verts = m.cells[c];
            dofs[basis_.index(0, 0)] = verts[0];
            dofs[basis_.index(k, 0)] = verts[1];
            dofs[basis_.index(k, k)] = verts[2];
            dofs[basis_.index(0, k)] = verts[3];
            for (int f = 0; f < 4 && k > 1; ++f) {
                const int a = verts[kFacetVertices[f][0]];
                const int b = verts[kFacetVertices[f][1]];
                const auto key = detail::edge_key(a, b);
                auto it = edge_first.find(key);
                const bool fresh = it == edge_first.end();
                const int first = fresh ? next : it->second;
                if (fresh) {
                    edge_first.emplace(key, next);
                    next += k - 1;
                }
                for (int s = 1; s < k; ++s) {
                    // position along the edge measured from the lower vertex
                    const int pos = a < b ? s : k - s;
                    const int dof = first + pos - 1;
                    dofs[facet_nodes_[f][s]] = dof;
                    if (fresh) {
                        node_points_.resize(next, Vec2::Zero());
                        node_points_[dof] = m.cell_point(c, facet_to_cell(f, static_cast<double>(s) / k));
                    }
                }
            }
            for (int j = 1; j < k; ++j)
                for (int i = 1; i < k; ++i) {
                    dofs[basis_.index(i, j)] = next++;
                    node_points_.resize(next, Vec2::Zero());
                    node_points_[next - 1] =
                        m.cell_point(c, Vec2(static_cast<double>(i) / k, static_cast<double>(j) / k));
                }
        }
        n_dofs_ = next;
    }

    void build_boundary_sets()
    {
        const ReferenceMesh& m = *mesh_;
        std::vector<char> is_free(n_dofs_, 0), is_sliding(n_dofs_, 0);
        for (const auto& bf : m.boundary_facets) {
            const auto dofs = cell_dofs(bf.cell);
            for (int l : facet_nodes_[bf.local_facet])
                (bf.tag == BoundaryTag::FreeBoundary ? is_free : is_sliding)[dofs[l]] = 1;
        }
        trace_index_.assign(n_dofs_, -1);
        for (int i = 0; i < n_dofs_; ++i) {
            if (is_free[i]) {
                trace_index_[i] = static_cast<int>(free_dofs_.size());
                free_dofs_.push_back(i);
            }
            if (is_sliding[i])
                sliding_dofs_.push_back(i);
        }
    }

    std::shared_ptr<const ReferenceMesh> mesh_;
    LagrangeBasisQ basis_;
    int n_dofs_ = 0;
    std::vector<int> cell_dofs_;
    std::vector<Vec2> node_points_;
    std::vector<std::vector<int>> facet_nodes_;
    std::vector<int> free_dofs_, sliding_dofs_;
    std::vector<int> trace_index_;
};

/// Coefficient vector tied to the space it lives on.
struct Field {
    std::shared_ptr<const FeSpace> space;
    int components = 1;
    Eigen::VectorXd coeffs;

    Field() = default;
    Field(std::shared_ptr<const FeSpace> s, int comps)
        : space(std::move(s)), components(comps), coeffs(Eigen::VectorXd::Zero(space->n_dofs() * comps))
    {
    }
    Field(std::shared_ptr<const FeSpace> s, int comps, Eigen::VectorXd c)
        : space(std::move(s)), components(comps), coeffs(std::move(c))
    {
        if (coeffs.size() != static_cast<Eigen::Index>(space->n_dofs()) * comps)
            throw AssemblyError("Field: coefficient length does not match the space");
    }
};

/// Initial ridge deformation psi(x, y) = (x, y) + delta cos(2 pi y / H) (x, 0),
/// interpolated at the nodes of `space`.
inline Eigen::VectorXd ridge_initial_map(const FeSpace& space, double H, double delta)
{
    if (!(std::abs(delta) < 1.0))
        throw ConfigError("ridge perturbation |delta| must be below 1");
    Eigen::VectorXd psi = space.identity_map();
    const int n = space.n_dofs();
    for (int i = 0; i < n; ++i) {
        const Vec2& p = space.node_points()[i];
        psi[i] += delta * std::cos(2.0 * std::numbers::pi * p[1] / H) * p[0];
    }
    return psi;
}

} // namespace thinfilm
