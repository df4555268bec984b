#include <cmath>
#include <memory>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "thinfilm/fe_space.hpp"
#include "thinfilm/fe_values.hpp"
#include "thinfilm/mesh.hpp"

using namespace thinfilm;

namespace {

double straight_mesh_area(const ReferenceMesh& m)
{
    double a = 0.0;
    for (int c = 0; c < m.n_cells(); ++c)
        a += m.straight_area(c);
    return a;
}

double curved_area(const FeSpace& space, const Eigen::VectorXd& psi)
{
    CellValues cv(space);
    double a = 0.0;
    for (int c = 0; c < space.mesh().n_cells(); ++c) {
        cv.reinit(c, psi);
        for (int q = 0; q < cv.n_points(); ++q)
            a += cv.JxW(q);
    }
    return a;
}

} // namespace

TEST(DiscMesh, CoarseMeshIsInscribedAndFullyFree)
{
    const auto m = build_disc_mesh(0, 1);
    EXPECT_EQ(m.n_cells(), 20);
    EXPECT_EQ(m.boundary_facets.size(), 8u);
    for (const auto& bf : m.boundary_facets)
        EXPECT_EQ(bf.tag, BoundaryTag::FreeBoundary);
    EXPECT_LT(straight_mesh_area(m), std::numbers::pi);
}

TEST(DiscMesh, PolygonalAreaConvergesAtRateFour)
{
    double prev_err = std::numbers::pi - straight_mesh_area(build_disc_mesh(0, 1));
    for (int r = 1; r <= 5; ++r) {
        const double err = std::numbers::pi - straight_mesh_area(build_disc_mesh(r, 1));
        EXPECT_GT(err, 0.0);
        if (r >= 2) {
            EXPECT_NEAR(prev_err / err, 4.0, 0.2) << "refinement " << r;
        }
        prev_err = err;
    }
}

TEST(DiscMesh, IsoparametricQ2AreaMatchesPi)
{
    auto mesh = std::make_shared<const ReferenceMesh>(build_disc_mesh(2, 2));
    const FeSpace space(mesh, 2);
    EXPECT_NEAR(curved_area(space, space.identity_map()), std::numbers::pi, 1e-5);
}

TEST(DiscMesh, RefinementQuadruplesCellsAndDoublesFacets)
{
    auto m = build_disc_mesh(0, 1);
    for (int r = 0; r < 4; ++r) {
        const auto f = refine_uniform(m);
        EXPECT_EQ(f.n_cells(), 4 * m.n_cells());
        EXPECT_EQ(f.boundary_facets.size(), 2 * m.boundary_facets.size());
        EXPECT_EQ(f.refinement_level, m.refinement_level + 1);
        m = f;
    }
}

TEST(DiscMesh, BoundaryNodesLieOnUnitCircle)
{
    for (int degree = 1; degree <= 3; ++degree) {
        auto mesh = std::make_shared<const ReferenceMesh>(build_disc_mesh(3, degree));
        const FeSpace space(mesh, degree);
        for (int d : space.boundary_dofs(BoundaryTag::FreeBoundary))
            EXPECT_NEAR(space.node_points()[d].norm(), 1.0, 1e-12);
    }
}

TEST(DiscMesh, StraightJacobianPositiveEverywhere)
{
    const auto m = build_disc_mesh(3, 1);
    const auto rule = gauss_legendre(4);
    for (int c = 0; c < m.n_cells(); ++c)
        for (double x : rule.points)
            for (double y : rule.points)
                EXPECT_GT(m.straight_jacobian(c, Vec2(x, y)), 0.0);
}

TEST(DiscMesh, InvalidDegreeRejected)
{
    EXPECT_THROW(build_disc_mesh(0, 4), ConfigError);
    EXPECT_THROW(build_disc_mesh(0, 0), ConfigError);
}

TEST(RidgeMesh, TagsPartitionTheBoundary)
{
    const auto m = build_ridge_mesh(1.0, 4.0, 2, 2);
    double free_len = 0.0, sliding_len = 0.0;
    for (const auto& bf : m.boundary_facets) {
        const Vec2 a = m.facet_curve(bf.cell, bf.local_facet, 0.0);
        const Vec2 b = m.facet_curve(bf.cell, bf.local_facet, 1.0);
        if (bf.tag == BoundaryTag::FreeBoundary) {
            free_len += (b - a).norm();
            EXPECT_NEAR(a[0], b[0], 1e-14);
        } else {
            sliding_len += (b - a).norm();
            EXPECT_NEAR(a[1], b[1], 1e-14);
        }
    }
    EXPECT_NEAR(free_len, 8.0, 1e-12);
    EXPECT_NEAR(sliding_len, 2.0, 1e-12);
}

TEST(RidgeMesh, RefinementKeepsTags)
{
    const auto m0 = build_ridge_mesh(1.0, 2.0, 0, 1);
    const auto m1 = refine_uniform(m0);
    std::set<BoundaryTag> t0, t1;
    for (const auto& bf : m0.boundary_facets)
        t0.insert(bf.tag);
    for (const auto& bf : m1.boundary_facets)
        t1.insert(bf.tag);
    EXPECT_EQ(t0, t1);
}

TEST(RidgeMesh, ZeroPerturbationIsIdentity)
{
    auto mesh = std::make_shared<const ReferenceMesh>(build_ridge_mesh(1.0, 1.0, 1, 2));
    const FeSpace space(mesh, 2);
    EXPECT_EQ(ridge_initial_map(space, 1.0, 0.0), space.identity_map());
}

TEST(RidgeMesh, PerturbedMapAtCornerAndMidline)
{
    auto mesh = std::make_shared<const ReferenceMesh>(build_ridge_mesh(1.0, 1.0, 1, 2));
    const FeSpace space(mesh, 2);
    const auto psi = ridge_initial_map(space, 1.0, 0.1);
    const int n = space.n_dofs();
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const Vec2& p = space.node_points()[i];
        if ((p - Vec2(1.0, 0.0)).norm() < 1e-14) {
            EXPECT_NEAR(psi[i], 1.1, 1e-14);
            EXPECT_NEAR(psi[n + i], 0.0, 1e-14);
            ++hits;
        }
        if ((p - Vec2(1.0, 0.5)).norm() < 1e-14) {
            EXPECT_NEAR(psi[i], 0.9, 1e-14);
            EXPECT_NEAR(psi[n + i], 0.5, 1e-14);
            ++hits;
        }
    }
    EXPECT_EQ(hits, 2);
}

TEST(RidgeMesh, PerturbedMapHasPositiveJacobian)
{
    auto mesh = std::make_shared<const ReferenceMesh>(build_ridge_mesh(1.0, 1.0, 2, 2));
    const FeSpace space(mesh, 2);
    const auto psi = ridge_initial_map(space, 1.0, 0.1);
    CellValues cv(space);
    for (int c = 0; c < mesh->n_cells(); ++c) {
        cv.reinit(c, psi);
        for (int q = 0; q < cv.n_points(); ++q)
            EXPECT_GT(cv.J(q), 0.0);
    }
}

TEST(RidgeMesh, RejectsFoldingPerturbation)
{
    auto mesh = std::make_shared<const ReferenceMesh>(build_ridge_mesh(1.0, 1.0, 0, 1));
    const FeSpace space(mesh, 1);
    EXPECT_THROW(ridge_initial_map(space, 1.0, 1.0), ConfigError);
}

TEST(FeSpace, SharedFacetDofsCoincide)
{
    for (int degree = 1; degree <= 3; ++degree) {
        auto mesh = std::make_shared<const ReferenceMesh>(build_disc_mesh(1, degree));
        const FeSpace space(mesh, degree);
        // every dof's node point must be the same seen from all cells using it
        std::vector<int> seen(space.n_dofs(), 0);
        for (int c = 0; c < mesh->n_cells(); ++c) {
            const auto dofs = space.cell_dofs(c);
            const int k = degree;
            for (int j = 0; j <= k; ++j)
                for (int i = 0; i <= k; ++i) {
                    const int d = dofs[space.basis().index(i, j)];
                    const Vec2 p = mesh->cell_point(c, Vec2(double(i) / k, double(j) / k));
                    EXPECT_LT((p - space.node_points()[d]).norm(), 1e-13);
                    seen[d] = 1;
                }
        }
        for (int s : seen)
            EXPECT_EQ(s, 1);
        const int nc = mesh->n_cells();
        const int nv = static_cast<int>(mesh->vertices.size());
        const int ne = nv + nc - 1; // Euler characteristic of a disc
        EXPECT_EQ(space.n_dofs(), nv + ne * (degree - 1) + nc * (degree - 1) * (degree - 1));
    }
}

TEST(FeSpace, FreeBoundaryDofsAreNotInterior)
{
    auto mesh = std::make_shared<const ReferenceMesh>(build_disc_mesh(2, 3));
    const FeSpace space(mesh, 3);
    const auto& free = space.boundary_dofs(BoundaryTag::FreeBoundary);
    EXPECT_EQ(static_cast<int>(free.size()), static_cast<int>(mesh->boundary_facets.size()) * 3);
    for (int d : free)
        EXPECT_NEAR(space.node_points()[d].norm(), 1.0, 1e-12);
    int interior_on_circle = 0;
    for (int i = 0; i < space.n_dofs(); ++i)
        if (space.trace_index(i) < 0 && std::abs(space.node_points()[i].norm() - 1.0) < 1e-9)
            ++interior_on_circle;
    EXPECT_EQ(interior_on_circle, 0);
}
