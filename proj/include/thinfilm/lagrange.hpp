#pragma once

#include <array>
#include <stdexcept>
#include <vector>

namespace thinfilm {

/// Lagrange basis of degree k on the equispaced nodes i/k of [0,1].
class LagrangeBasis1D {
public:
    explicit LagrangeBasis1D(int degree) : degree_(degree)
    {
        if (degree < 1 || degree > 3)
            throw std::invalid_argument("LagrangeBasis1D: degree must be 1, 2 or 3");
        nodes_.resize(degree + 1);
        for (int i = 0; i <= degree; ++i)
            nodes_[i] = static_cast<double>(i) / degree;
    }

    int degree() const { return degree_; }
    int size() const { return degree_ + 1; }
    double node(int i) const { return nodes_[i]; }

    double value(int i, double x) const
    {
        double v = 1.0;
        for (int j = 0; j <= degree_; ++j)
            if (j != i)
                v *= (x - nodes_[j]) / (nodes_[i] - nodes_[j]);
        return v;
    }

    double derivative(int i, double x) const
    {
        double sum = 0.0;
        for (int m = 0; m <= degree_; ++m) {
            if (m == i)
                continue;
            double term = 1.0 / (nodes_[i] - nodes_[m]);
            for (int j = 0; j <= degree_; ++j)
                if (j != i && j != m)
                    term *= (x - nodes_[j]) / (nodes_[i] - nodes_[j]);
            sum += term;
        }
        return sum;
    }

private:
    int degree_;
    std::vector<double> nodes_;
};

/// Tensor-product Q_k basis on the unit square. Local node l = i + (k+1) j
/// sits at (i/k, j/k).
class LagrangeBasisQ {
public:
    explicit LagrangeBasisQ(int degree) : basis_(degree) {}

    int degree() const { return basis_.degree(); }
    int size() const { return basis_.size() * basis_.size(); }
    int index(int i, int j) const { return i + basis_.size() * j; }
    const LagrangeBasis1D& basis1d() const { return basis_; }

    double value(int l, double xi, double eta) const
    {
        const int n = basis_.size();
        return basis_.value(l % n, xi) * basis_.value(l / n, eta);
    }

    std::array<double, 2> gradient(int l, double xi, double eta) const
    {
        const int n = basis_.size();
        const int i = l % n, j = l / n;
        return {basis_.derivative(i, xi) * basis_.value(j, eta),
                basis_.value(i, xi) * basis_.derivative(j, eta)};
    }

private:
    LagrangeBasis1D basis_;
};

} // namespace thinfilm
