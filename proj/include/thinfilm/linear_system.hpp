#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "thinfilm/errors.hpp"

namespace thinfilm {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Names and index ranges of the unknown fields stacked in a block system.
class BlockLayout {
public:
    BlockLayout& add(std::string name, int size)
    {
        blocks_.push_back({std::move(name), offset_end(), size});
        return *this;
    }

    int size() const { return offset_end(); }
    int n_blocks() const { return static_cast<int>(blocks_.size()); }

    int offset(const std::string& name) const { return find(name).offset; }
    int block_size(const std::string& name) const { return find(name).size; }

    Eigen::VectorXd extract(const Eigen::VectorXd& x, const std::string& name) const
    {
        const auto& b = find(name);
        return x.segment(b.offset, b.size);
    }

private:
    struct Block {
        std::string name;
        int offset;
        int size;
    };

    int offset_end() const { return blocks_.empty() ? 0 : blocks_.back().offset + blocks_.back().size; }

    const Block& find(const std::string& name) const
    {
        for (const auto& b : blocks_)
            if (b.name == name)
                return b;
        throw AssemblyError("unknown block '" + name + "' in linear system layout");
    }

    std::vector<Block> blocks_;
};

struct LinearSystem {
    SparseMatrix A;
    Eigen::VectorXd b;
    BlockLayout layout;

    LinearSystem() = default;
    explicit LinearSystem(BlockLayout l) : A(l.size(), l.size()), b(Eigen::VectorXd::Zero(l.size())), layout(std::move(l)) {}
};

/// Max-norm asymmetry ‖A − Aᵀ‖_max / ‖A‖_max.
inline double relative_asymmetry(const SparseMatrix& A)
{
    const SparseMatrix D = A - SparseMatrix(A.transpose());
    double dmax = 0.0, amax = 0.0;
    for (int k = 0; k < D.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(D, k); it; ++it)
            dmax = std::max(dmax, std::abs(it.value()));
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it)
            amax = std::max(amax, std::abs(it.value()));
    return amax > 0.0 ? dmax / amax : 0.0;
}

/// Imposes x[dof] = value by symmetric elimination: the known column is moved
/// to the right-hand side, row and column are cleared, and the diagonal gets
/// a scale comparable to the remaining matrix.
inline void apply_dirichlet(SparseMatrix& A, Eigen::VectorXd& b, const std::vector<int>& dofs,
                            const std::vector<double>& values)
{
    if (dofs.empty())
        return;
    const int n = static_cast<int>(A.rows());
    std::vector<char> fixed(n, 0);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < dofs.size(); ++i) {
        fixed[dofs[i]] = 1;
        x0[dofs[i]] = values[i];
    }
    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        scale = std::max(scale, std::abs(A.coeff(i, i)));
    if (scale == 0.0)
        scale = 1.0;

    A.makeCompressed();
    b -= A * x0;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it)
            if (fixed[it.row()] || fixed[it.col()])
                it.valueRef() = 0.0;
    Triplets diag;
    for (std::size_t i = 0; i < dofs.size(); ++i)
        diag.emplace_back(dofs[i], dofs[i], scale);
    SparseMatrix D(n, n);
    D.setFromTriplets(diag.begin(), diag.end());
    A += D;
    A.prune(0.0);
    for (std::size_t i = 0; i < dofs.size(); ++i)
        b[dofs[i]] = scale * values[i];
}

inline void apply_dirichlet(LinearSystem& sys, const std::vector<int>& dofs, const std::vector<double>& values)
{
    apply_dirichlet(sys.A, sys.b, dofs, values);
}

/// Row-sum norm of a sparse matrix.
inline double norm_inf(const SparseMatrix& A)
{
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(A.rows());
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it)
            rows[it.row()] += std::abs(it.value());
    return rows.size() ? rows.maxCoeff() : 0.0;
}

inline bool is_symmetric(const SparseMatrix& A, double rel_tol = 1e-13)
{
    if (A.rows() != A.cols())
        return false;
    const SparseMatrix At = A.transpose();
    return norm_inf(SparseMatrix(A - At)) <= rel_tol * norm_inf(A);
}

namespace detail {

/// Solution of a factored system with up to three sweeps of iterative
/// refinement, or nullopt when its normwise backward error stays above `tol`.
template <class Factorization>
std::optional<Eigen::VectorXd> refined_solve(const Factorization& f, const SparseMatrix& A, const Eigen::VectorXd& b,
                                             double tol, double& err)
{
    const double anorm = norm_inf(A);
    const double bnorm = b.lpNorm<Eigen::Infinity>();
    auto backward_error = [&](const Eigen::VectorXd& x) {
        if (!x.allFinite())
            return double(INFINITY);
        const double scale = anorm * x.lpNorm<Eigen::Infinity>() + bnorm;
        const double res = (A * x - b).lpNorm<Eigen::Infinity>();
        return scale > 0.0 ? res / scale : res;
    };
    Eigen::VectorXd x = f.solve(b);
    err = backward_error(x);
    for (int sweep = 0; sweep < 3 && std::isfinite(err) && err > tol; ++sweep) {
        x += f.solve(Eigen::VectorXd(b - A * x));
        err = backward_error(x);
    }
    if (err <= tol)
        return x;
    return std::nullopt;
}

} // namespace detail

/// Sparse direct solve. Symmetric matrices are first tried with an LDLᵀ
/// factorization (AMD ordering), everything else and every LDLᵀ failure goes
/// to SparseLU with COLAMD ordering. The result is accepted when its normwise
/// backward error ‖Ax − b‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞) is below `tol`.
inline Eigen::VectorXd solve_direct(const SparseMatrix& A, const Eigen::VectorXd& b, double tol = 1e-10)
{
    if (A.rows() != A.cols() || A.rows() != b.size())
        throw AssemblyError("linear system dimensions are inconsistent");
    if (b.size() == 0)
        return {};
    SparseMatrix Ac = A;
    Ac.makeCompressed();
    double err = INFINITY;
    if (is_symmetric(Ac)) {
        Eigen::SimplicialLDLT<SparseMatrix> ldlt;
        ldlt.compute(Ac);
        if (ldlt.info() == Eigen::Success)
            if (auto x = detail::refined_solve(ldlt, Ac, b, tol, err))
                return *x;
    }
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(Ac);
    if (lu.info() != Eigen::Success)
        throw SolverSingular("sparse factorization failed (matrix of size " + std::to_string(A.rows()) + ")");
    if (auto x = detail::refined_solve(lu, Ac, b, tol, err))
        return *x;
    std::ostringstream msg;
    msg << "direct solve backward error " << std::scientific << err << " exceeds tolerance " << tol;
    throw SolverSingular(msg.str());
}

inline Eigen::VectorXd solve_direct(const LinearSystem& sys, double tol = 1e-10)
{
    return solve_direct(sys.A, sys.b, tol);
}

} // namespace thinfilm
