#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thinfilm/lagrange.hpp"
#include "thinfilm/linear_system.hpp"
#include "thinfilm/quadrature.hpp"

namespace thinfilm {

/// 1D model problem −(μu′)′ + u = x on (0,1) with natural boundary
/// conditions. For μ = x² the exact solution is u = x^c/c − x with
/// c = (√5 − 1)/2, which lies only in a low-order Sobolev space near x = 0.
enum class MuKind { Degenerate, Regular };

inline double mu_value(MuKind kind, double x) { return kind == MuKind::Degenerate ? x * x : 1.0 + x * x; }

inline constexpr double golden_exponent() { return 0.6180339887498949; }

inline double degenerate_exact(double x)
{
    constexpr double c = golden_exponent();
    return std::pow(x, c) / c - x;
}

/// Continuous P_k finite element solution on a uniform mesh of n_cells cells.
class Solution1D {
public:
    Solution1D(int degree, int n_cells, Eigen::VectorXd coeffs)
        : basis_(degree), n_cells_(n_cells), coeffs_(std::move(coeffs))
    {
    }

    int degree() const { return basis_.degree(); }
    int n_cells() const { return n_cells_; }
    const Eigen::VectorXd& coeffs() const { return coeffs_; }

    double operator()(double x) const
    {
        const double h = 1.0 / n_cells_;
        const int e = std::min(n_cells_ - 1, std::max(0, static_cast<int>(std::floor(x / h))));
        const double xi = x / h - e;
        double v = 0.0;
        for (int i = 0; i < basis_.size(); ++i)
            v += coeffs_[e * basis_.degree() + i] * basis_.value(i, xi);
        return v;
    }

private:
    LagrangeBasis1D basis_;
    int n_cells_;
    Eigen::VectorXd coeffs_;
};

inline Solution1D solve_model_problem_1d(MuKind kind, int degree, int n_cells)
{
    const LagrangeBasis1D basis(degree);
    const QuadratureRule1D rule = gauss_legendre(degree + 1);
    const int n = n_cells * degree + 1;
    const double h = 1.0 / n_cells;
    Triplets t;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (int e = 0; e < n_cells; ++e) {
        for (int q = 0; q < rule.size(); ++q) {
            const double x = (e + rule.points[q]) * h;
            const double w = rule.weights[q] * h;
            const double mu = mu_value(kind, x);
            for (int i = 0; i <= degree; ++i) {
                const double vi = basis.value(i, rule.points[q]);
                const double di = basis.derivative(i, rule.points[q]) / h;
                b[e * degree + i] += w * x * vi;
                for (int j = 0; j <= degree; ++j) {
                    const double vj = basis.value(j, rule.points[q]);
                    const double dj = basis.derivative(j, rule.points[q]) / h;
                    t.emplace_back(e * degree + i, e * degree + j, w * (mu * di * dj + vi * vj));
                }
            }
        }
    }
    SparseMatrix A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    return {degree, n_cells, solve_direct(A, b)};
}

/// L² distance between a discrete solution and a reference function. The
/// first cell is split geometrically toward x = 0 to resolve x^c.
template <class Ref>
double l2_error_1d(const Solution1D& u, Ref&& reference)
{
    const QuadratureRule1D rule = gauss_legendre(12);
    const double h = 1.0 / u.n_cells();
    double sum = 0.0;
    auto interval = [&](double a, double b) {
        for (int q = 0; q < rule.size(); ++q) {
            const double x = a + (b - a) * rule.points[q];
            const double d = u(x) - reference(x);
            sum += rule.weights[q] * (b - a) * d * d;
        }
    };
    double right = h;
    for (int level = 0; level < 40; ++level) {
        interval(0.5 * right, right);
        right *= 0.5;
    }
    interval(0.0, right);
    for (int e = 1; e < u.n_cells(); ++e)
        interval(e * h, (e + 1) * h);
    return std::sqrt(sum);
}

/// Chebyshev collocation solution of the regular problem on n+1 Gauss-Lobatto
/// points, evaluated by barycentric interpolation. The solution is analytic,
/// so modest n gives a reference accurate to rounding.
class ChebyshevReference {
public:
    explicit ChebyshevReference(int n = 48) : x_(n + 1), w_(n + 1)
    {
        const double pi = 3.14159265358979323846;
        for (int j = 0; j <= n; ++j) {
            x_[j] = 0.5 * (1.0 - std::cos(pi * j / n));
            w_[j] = ((j % 2) ? -1.0 : 1.0) * ((j == 0 || j == n) ? 0.5 : 1.0);
        }
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n + 1, n + 1);
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j <= n; ++j)
                if (i != j)
                    D(i, j) = (w_[j] / w_[i]) / (x_[i] - x_[j]);
            D(i, i) = -D.row(i).sum();
        }
        Eigen::VectorXd mu(n + 1), rhs(n + 1);
        for (int i = 0; i <= n; ++i) {
            mu[i] = mu_value(MuKind::Regular, x_[i]);
            rhs[i] = x_[i];
        }
        Eigen::MatrixXd A = -D * mu.asDiagonal() * D + Eigen::MatrixXd::Identity(n + 1, n + 1);
        A.row(0) = D.row(0);
        A.row(n) = D.row(n);
        rhs[0] = rhs[n] = 0.0;
        u_ = A.fullPivLu().solve(rhs);
    }

    double operator()(double x) const
    {
        double num = 0.0, den = 0.0;
        for (int j = 0; j < x_.size(); ++j) {
            const double d = x - x_[j];
            if (d == 0.0)
                return u_[j];
            num += w_[j] / d * u_[j];
            den += w_[j] / d;
        }
        return num / den;
    }

private:
    Eigen::VectorXd x_, w_, u_;
};

struct Eoc1DRow {
    int n_cells;
    double error;
    double eoc; // NaN in the first row
};

/// Errors and EOCs under uniform refinement with 2^r cells for r in
/// `refinements`. The regular case has no closed form and is compared with
/// a spectral reference.
inline std::vector<Eoc1DRow> appendix_a_oracle(MuKind kind, int degree, const std::vector<int>& refinements)
{
    std::vector<Eoc1DRow> rows;
    std::optional<ChebyshevReference> reference;
    if (kind == MuKind::Regular)
        reference.emplace();
    for (int r : refinements) {
        const int n_cells = 1 << r;
        const Solution1D u = solve_model_problem_1d(kind, degree, n_cells);
        const double err = kind == MuKind::Degenerate ? l2_error_1d(u, degenerate_exact)
                                                      : l2_error_1d(u, [&](double x) { return (*reference)(x); });
        const double eoc = rows.empty() ? std::nan("")
                                        : std::log2(rows.back().error / err) /
                                              std::log2(static_cast<double>(n_cells) / rows.back().n_cells);
        rows.push_back({n_cells, err, eoc});
    }
    return rows;
}

} // namespace thinfilm
