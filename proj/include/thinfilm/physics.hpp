#pragma once

#include <algorithm>
#include <cmath>
#include <variant>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "thinfilm/assembly.hpp"
#include "thinfilm/errors.hpp"
#include "thinfilm/state.hpp"

namespace thinfilm {

/// Nondimensional energy coefficients. `g_min` floors |∇h| wherever it
/// appears in a denominator or a contact mobility.
struct PhysicsParams {
    double sigma = 1.0;
    double s = 0.0;
    Vec2 g_x = Vec2::Zero();
    double g_z = 0.0;
    double eps_line = 0.0;
    double g_min = 1e-8;

    void validate() const
    {
        if (!(sigma > 0.0))
            throw ConfigError("physics.sigma must be positive");
        if (!(s >= 0.0))
            throw ConfigError("physics.s must be nonnegative");
        if (!(eps_line >= 0.0))
            throw ConfigError("physics.eps_line must be nonnegative");
        if (!(g_min > 0.0))
            throw ConfigError("g_min must be positive");
    }

    /// Equilibrium contact slope sqrt(2 s / sigma).
    double equilibrium_slope() const { return std::sqrt(2.0 * s / sigma); }
};

/// m(h) = m0 |h|^alpha
struct PowerLaw {
    double m0 = 1.0;
    double alpha = 2.0;
};

/// m(h) = h^3/3 + b h^2
struct SlipLaw {
    double b = 0.0;
};

struct MobilityLaws {
    std::variant<PowerLaw, SlipLaw> bulk_law = PowerLaw{};
    double n0 = 1.0;
    double theta = 0.0;

    void validate() const
    {
        if (const auto* p = std::get_if<PowerLaw>(&bulk_law); p && !(p->m0 > 0.0))
            throw ConfigError("mobility.m.power.m0 must be positive");
        if (const auto* p = std::get_if<SlipLaw>(&bulk_law); p && !(p->b >= 0.0))
            throw ConfigError("mobility.m.slip.b must be nonnegative");
        if (!(n0 > 0.0))
            throw ConfigError("mobility.n.n0 must be positive");
    }

    /// Bulk mobility with negative heights clamped to zero.
    double bulk(double h) const
    {
        const double hp = std::max(h, 0.0);
        if (const auto* p = std::get_if<PowerLaw>(&bulk_law))
            return p->m0 * std::pow(hp, p->alpha);
        const double b = std::get<SlipLaw>(bulk_law).b;
        return hp * hp * hp / 3.0 + b * hp * hp;
    }

    double contact(double grad_norm, double g_min) const
    {
        return n0 * std::pow(std::max(grad_norm, g_min), theta);
    }
};

inline double mobility_bulk(const MobilityLaws& laws, double h) { return laws.bulk(h); }
inline double mobility_contact(const MobilityLaws& laws, double grad_norm, double g_min)
{
    return laws.contact(grad_norm, g_min);
}

struct EnergyReport {
    double total = 0.0;
    double surface = 0.0;
    double wetting = 0.0;
    double gravity = 0.0;
    double line = 0.0;
    double volume = 0.0;
    double support_area = 0.0;
    double contact_length = 0.0;
};

/// E = ∫ σ/2|∇h|² + s + h(g_x·x + g_z h/2) dω + ε |contact line| on the
/// deformed configuration. The contact line is the FreeBoundary part of ∂ω.
inline EnergyReport energy(const AleState& state, const PhysicsParams& p)
{
    EnergyReport r;
    for_each_cell(state.fe(), state.psi, [&](const CellValues& cv) {
        for (int q = 0; q < cv.n_points(); ++q) {
            const double w = cv.JxW(q);
            const double h = cv.value(state.h, q);
            const Vec2 g = cv.gradient(state.h, q);
            r.surface += 0.5 * p.sigma * g.squaredNorm() * w;
            r.support_area += w;
            r.gravity += h * (p.g_x.dot(cv.point(q)) + 0.5 * p.g_z * h) * w;
            r.volume += h * w;
        }
    });
    r.wetting = p.s * r.support_area;
    r.contact_length = integrate_boundary(state.fe(), state.psi, BoundaryTag::FreeBoundary,
                                          [](const FacetValues&, int) { return 1.0; });
    r.line = p.eps_line * r.contact_length;
    r.total = r.surface + r.wetting + r.gravity + r.line;
    return r;
}

/// Explicit driving force ⟨DE, v⟩ and the stiffness τσK whose negative is
/// the semi-implicit correction of the σ-term (e_z evaluated at h + τḣ).
struct DrivingForce {
    Eigen::VectorXd rhs;
    SparseMatrix implicit_block;
};

inline double regularized_norm(const Vec2& grad, double g_min) { return std::max(grad.norm(), g_min); }

inline DrivingForce driving_force_rhs(const AleState& state, const PhysicsParams& p, double implicit_tau)
{
    const FeSpace& space = state.fe();
    DrivingForce f;
    f.rhs = Eigen::VectorXd::Zero(space.n_dofs());
    for_each_cell(space, state.psi, [&](const CellValues& cv) {
        const auto dofs = cv.dofs();
        for (int q = 0; q < cv.n_points(); ++q) {
            const Vec2 ez = p.sigma * cv.gradient(state.h, q);
            const double eh = p.g_x.dot(cv.point(q)) + p.g_z * cv.value(state.h, q);
            for (int i = 0; i < cv.n_local(); ++i)
                f.rhs[dofs[i]] += (ez.dot(cv.grad(i, q)) + eh * cv.shape(i, q)) * cv.JxW(q);
        }
    });
    f.rhs += boundary_load_vector(space, state.psi, BoundaryTag::FreeBoundary, [&](const FacetValues& fv, int q) {
        const Vec2 g = fv.gradient(state.h, q);
        const double e = 0.5 * p.sigma * g.squaredNorm() + p.s;
        return e / regularized_norm(g, p.g_min);
    });
    if (implicit_tau > 0.0)
        f.implicit_block = implicit_tau * p.sigma * stiffness_matrix(space, state.psi);
    else
        f.implicit_block = SparseMatrix(space.n_dofs(), space.n_dofs());
    return f;
}

} // namespace thinfilm
