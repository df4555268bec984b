#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace thinfilm {

/// Gauss-Legendre rule on [0,1]; exact for polynomials of degree 2n-1.
struct QuadratureRule1D {
    std::vector<double> points;
    std::vector<double> weights;

    int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

// Returns (P_n(x), P_n'(x)) by the three-term recurrence.
inline std::pair<double, double> legendre_with_derivative(int n, double x)
{
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

} // namespace detail

inline QuadratureRule1D gauss_legendre(int n)
{
    if (n < 1)
        throw std::invalid_argument("gauss_legendre: need at least one point");
    QuadratureRule1D rule;
    rule.points.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = detail::legendre_with_derivative(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        const double dp = detail::legendre_with_derivative(n, x).second;
        rule.points[n - 1 - i] = 0.5 * (x + 1.0);
        rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

/// Number of Gauss points per direction used for degree-k forms.
/// k+2 points integrate degree 2k+3 exactly, covering the 2k+1 requirement
/// of the mass and stiffness terms with one degree of slack for the
/// isoparametric Jacobian.
inline int quadrature_points_for_degree(int degree) { return degree + 2; }

} // namespace thinfilm
