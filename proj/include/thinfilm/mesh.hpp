#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "thinfilm/errors.hpp"

namespace thinfilm {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class BoundaryTag { FreeBoundary, Sliding };

/// How boundary facets are represented geometrically. For `UnitCircle` every
/// boundary facet is an arc of the unit circle between its end vertices.
enum class BoundaryShape { Polygon, UnitCircle };

struct BoundaryFacet {
    int cell;
    int local_facet;
    BoundaryTag tag;
};

/// Position of a cell inside its parent: the child covers
/// [child_x/2, (child_x+1)/2] x [child_y/2, (child_y+1)/2] of the parent's
/// unit square.
struct CellAncestry {
    int parent = -1;
    int child_x = 0;
    int child_y = 0;
};

/// Local facet f of a quadrilateral and its parametrisation s in [0,1]:
///   f0: (s, 0)  v0 -> v1      f1: (1, s)  v1 -> v2
///   f2: (s, 1)  v3 -> v2      f3: (0, s)  v0 -> v3
/// f0 and f1 run counter-clockwise, f2 and f3 clockwise.
inline constexpr std::array<std::array<int, 2>, 4> kFacetVertices{{{0, 1}, {1, 2}, {3, 2}, {0, 3}}};

inline Vec2 facet_to_cell(int facet, double s)
{
    switch (facet) {
    case 0: return {s, 0.0};
    case 1: return {1.0, s};
    case 2: return {s, 1.0};
    default: return {0.0, s};
    }
}

/// +1 if the facet parametrisation runs counter-clockwise around the cell.
inline double facet_orientation(int facet) { return facet < 2 ? 1.0 : -1.0; }

/// Fixed reference domain: quadrilateral cells (counter-clockwise vertices),
/// tagged boundary facets and the refinement history. Immutable once built.
class ReferenceMesh {
public:
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 4>> cells;
    std::vector<BoundaryFacet> boundary_facets;
    /// Per cell and local facet: index into boundary_facets or -1.
    std::vector<std::array<int, 4>> facet_to_boundary;
    std::vector<CellAncestry> ancestry;
    BoundaryShape shape = BoundaryShape::Polygon;
    int refinement_level = 0;

    int n_cells() const { return static_cast<int>(cells.size()); }

    /// Point of the (curved) cell for unit-square coordinates `xi`, by
    /// transfinite interpolation of the four facet curves.
    Vec2 cell_point(int cell, const Vec2& xi) const
    {
        const auto& c = cells[cell];
        const Vec2& v0 = vertices[c[0]];
        const Vec2& v1 = vertices[c[1]];
        const Vec2& v2 = vertices[c[2]];
        const Vec2& v3 = vertices[c[3]];
        const double x = xi[0], y = xi[1];
        const Vec2 bottom = facet_curve(cell, 0, x);
        const Vec2 right = facet_curve(cell, 1, y);
        const Vec2 top = facet_curve(cell, 2, x);
        const Vec2 left = facet_curve(cell, 3, y);
        return (1 - y) * bottom + y * top + (1 - x) * left + x * right -
               ((1 - x) * (1 - y) * v0 + x * (1 - y) * v1 + x * y * v2 + (1 - x) * y * v3);
    }

    /// Curve of a local facet in its own parametrisation.
    Vec2 facet_curve(int cell, int facet, double s) const
    {
        const Vec2& a = vertices[cells[cell][kFacetVertices[facet][0]]];
        const Vec2& b = vertices[cells[cell][kFacetVertices[facet][1]]];
        if (shape == BoundaryShape::UnitCircle && facet_to_boundary[cell][facet] >= 0) {
            const double phi_a = std::atan2(a[1], a[0]);
            double delta = std::atan2(b[1], b[0]) - phi_a;
            if (delta > std::numbers::pi)
                delta -= 2 * std::numbers::pi;
            if (delta < -std::numbers::pi)
                delta += 2 * std::numbers::pi;
            const double phi = phi_a + s * delta;
            return {std::cos(phi), std::sin(phi)};
        }
        return (1 - s) * a + s * b;
    }

    /// Signed area of the straight-sided quadrilateral.
    double straight_area(int cell) const
    {
        const auto& c = cells[cell];
        double a = 0.0;
        for (int i = 0; i < 4; ++i) {
            const Vec2& p = vertices[c[i]];
            const Vec2& q = vertices[c[(i + 1) % 4]];
            a += p[0] * q[1] - q[0] * p[1];
        }
        return 0.5 * a;
    }

    /// Jacobian determinant of the bilinear (straight-sided) cell map.
    double straight_jacobian(int cell, const Vec2& xi) const
    {
        const auto& c = cells[cell];
        const Vec2& v0 = vertices[c[0]];
        const Vec2& v1 = vertices[c[1]];
        const Vec2& v2 = vertices[c[2]];
        const Vec2& v3 = vertices[c[3]];
        const Vec2 dx = (1 - xi[1]) * (v1 - v0) + xi[1] * (v2 - v3);
        const Vec2 dy = (1 - xi[0]) * (v3 - v0) + xi[0] * (v2 - v1);
        return dx[0] * dy[1] - dx[1] * dy[0];
    }
};

namespace detail {

inline std::pair<int, int> edge_key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

/// Finds boundary facets (edges owned by a single cell) and tags them.
template <class Tagger>
void tag_boundary(ReferenceMesh& mesh, Tagger&& tag_of)
{
    std::map<std::pair<int, int>, int> count;
    for (const auto& c : mesh.cells)
        for (const auto& fv : kFacetVertices)
            ++count[edge_key(c[fv[0]], c[fv[1]])];
    mesh.boundary_facets.clear();
    mesh.facet_to_boundary.assign(mesh.cells.size(), {-1, -1, -1, -1});
    for (int c = 0; c < mesh.n_cells(); ++c)
        for (int f = 0; f < 4; ++f) {
            const int a = mesh.cells[c][kFacetVertices[f][0]];
            const int b = mesh.cells[c][kFacetVertices[f][1]];
            if (count[edge_key(a, b)] == 1) {
                mesh.facet_to_boundary[c][f] = static_cast<int>(mesh.boundary_facets.size());
                mesh.boundary_facets.push_back({c, f, tag_of(mesh.vertices[a], mesh.vertices[b])});
            }
        }
}

inline void check_orientation(const ReferenceMesh& mesh)
{
    for (int c = 0; c < mesh.n_cells(); ++c)
        if (mesh.straight_area(c) <= 0.0)
            throw ConfigError("mesh cell " + std::to_string(c) + " is not counter-clockwise");
}

inline void check_degree(int degree)
{
    if (degree < 1 || degree > 3)
        throw ConfigError("degree must be 1, 2 or 3 (got " + std::to_string(degree) + ")");
}

} // namespace detail

/// Splits every cell into four. New vertices are images of the parent cell
/// map, so boundary midpoints land on the unit circle for disc meshes.
inline ReferenceMesh refine_uniform(const ReferenceMesh& coarse)
{
    ReferenceMesh fine;
    fine.shape = coarse.shape;
    fine.refinement_level = coarse.refinement_level + 1;
    fine.vertices = coarse.vertices;

    std::map<std::pair<int, int>, int> edge_mid;
    auto midpoint = [&](int cell, int facet) {
        const auto& c = coarse.cells[cell];
        const auto key = detail::edge_key(c[kFacetVertices[facet][0]], c[kFacetVertices[facet][1]]);
        auto it = edge_mid.find(key);
        if (it != edge_mid.end())
            return it->second;
        Vec2 p = coarse.cell_point(cell, facet_to_cell(facet, 0.5));
        if (coarse.shape == BoundaryShape::UnitCircle && coarse.facet_to_boundary[cell][facet] >= 0)
            p.normalize();
        const int id = static_cast<int>(fine.vertices.size());
        fine.vertices.push_back(p);
        edge_mid.emplace(key, id);
        return id;
    };

    std::vector<std::array<int, 4>> child_facet_parent; // per fine cell: boundary index of parent facet or -1
    for (int c = 0; c < coarse.n_cells(); ++c) {
        const auto& v = coarse.cells[c];
        std::array<std::array<int, 3>, 3> lattice{};
        lattice[0][0] = v[0];
        lattice[2][0] = v[1];
        lattice[2][2] = v[2];
        lattice[0][2] = v[3];
        lattice[1][0] = midpoint(c, 0);
        lattice[2][1] = midpoint(c, 1);
        lattice[1][2] = midpoint(c, 2);
        lattice[0][1] = midpoint(c, 3);
        lattice[1][1] = static_cast<int>(fine.vertices.size());
        fine.vertices.push_back(coarse.cell_point(c, Vec2(0.5, 0.5)));

        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a) {
                fine.cells.push_back({lattice[a][b], lattice[a + 1][b], lattice[a + 1][b + 1], lattice[a][b + 1]});
                fine.ancestry.push_back({c, a, b});
                const auto& fb = coarse.facet_to_boundary[c];
                child_facet_parent.push_back({b == 0 ? fb[0] : -1, a == 1 ? fb[1] : -1, b == 1 ? fb[2] : -1,
                                              a == 0 ? fb[3] : -1});
            }
    }

    fine.facet_to_boundary.assign(fine.cells.size(), {-1, -1, -1, -1});
    for (int c = 0; c < fine.n_cells(); ++c)
        for (int f = 0; f < 4; ++f)
            if (const int parent = child_facet_parent[c][f]; parent >= 0) {
                fine.facet_to_boundary[c][f] = static_cast<int>(fine.boundary_facets.size());
                fine.boundary_facets.push_back({c, f, coarse.boundary_facets[parent].tag});
            }
    return fine;
}

/// Unit disc as five structured 2x2 blocks (a central square and four curved
/// blocks, 20 cells in total), refined `refinement` times. All boundary facets are FreeBoundary.
inline ReferenceMesh build_disc_mesh(int refinement, int degree)
{
    detail::check_degree(degree);
    if (refinement < 0)
        throw ConfigError("refinement must be nonnegative");
    ReferenceMesh mesh;
    mesh.shape = BoundaryShape::UnitCircle;
    const double a = 0.4;
    const double r = std::sqrt(0.5);
    mesh.vertices = {{-a, -a}, {a, -a}, {a, a}, {-a, a}, {-r, -r}, {r, -r}, {r, r}, {-r, r}};
    mesh.cells = {
        {0, 1, 2, 3}, // centre
        {4, 5, 1, 0}, // south
        {1, 5, 6, 2}, // east
        {3, 2, 6, 7}, // north
        {4, 0, 3, 7}, // west
    };
    mesh.ancestry.assign(mesh.cells.size(), CellAncestry{});
    detail::tag_boundary(mesh, [](const Vec2&, const Vec2&) { return BoundaryTag::FreeBoundary; });
    detail::check_orientation(mesh);
    // each block is split 2x2 so the coarsest boundary has eight arcs
    mesh = refine_uniform(mesh);
    mesh.refinement_level = 0;
    mesh.ancestry.assign(mesh.cells.size(), CellAncestry{});
    for (int i = 0; i < refinement; ++i)
        mesh = refine_uniform(mesh);
    return mesh;
}

/// Rectangle [0,L]x[0,H]. Facets at x=0 and x=L are FreeBoundary, facets at
/// y=0 and y=H are Sliding. The coarse mesh has one cell across the ridge and
/// roughly square cells along it.
inline ReferenceMesh build_ridge_mesh(double L, double H, int refinement, int degree)
{
    detail::check_degree(degree);
    if (!(L > 0.0) || !(H > 0.0))
        throw ConfigError("ridge dimensions L and H must be positive");
    if (refinement < 0)
        throw ConfigError("refinement must be nonnegative");
    const int ny = std::max(1, static_cast<int>(std::lround(H / L)));
    ReferenceMesh mesh;
    mesh.shape = BoundaryShape::Polygon;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= 1; ++i)
            mesh.vertices.push_back({i * L, j * H / ny});
    for (int j = 0; j < ny; ++j)
        mesh.cells.push_back({2 * j, 2 * j + 1, 2 * j + 3, 2 * j + 2});
    mesh.ancestry.assign(mesh.cells.size(), CellAncestry{});
    const double tol = 1e-12 * std::max(L, H);
    detail::tag_boundary(mesh, [&](const Vec2& p, const Vec2& q) {
        const bool vertical = std::abs(p[0] - q[0]) < tol;
        return vertical ? BoundaryTag::FreeBoundary : BoundaryTag::Sliding;
    });
    detail::check_orientation(mesh);
    for (int i = 0; i < refinement; ++i)
        mesh = refine_uniform(mesh);
    return mesh;
}

} // namespace thinfilm
