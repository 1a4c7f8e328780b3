#include "esnt/numlin.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace esnt {

namespace {

// Dense, well-spread deterministic start block. Any fixed generic matrix
// works; coordinate vectors do not, since they can be invariant subspaces.
Matrix start_block(Index n, Index b)
{
    Matrix q(n, b);
    for (Index k = 0; k < b; ++k) {
        for (Index i = 0; i < n; ++i) {
            const double x = static_cast<double>(i + 1);
            const double y = static_cast<double>(k + 1);
            q(i, k) = std::sin(0.61803398875 * x * y + 1.41421356237 * x + 0.5 * y);
        }
    }
    return q;
}

Matrix orthonormal_basis(const Matrix& z)
{
    Eigen::HouseholderQR<Matrix> qr(z);
    return qr.householderQ() * Matrix::Identity(z.rows(), z.cols());
}

}  // namespace

SvdResult truncated_svd(const Matrix& m, Index r, const SvdOptions& opts)
{
    const Index small = std::min(m.rows(), m.cols());
    if (r < 1 || r > small) {
        throw std::invalid_argument(fmt::format(
            "truncated_svd rank {} outside [1, {}] for a {}x{} matrix", r, small, m.rows(), m.cols()));
    }
    require_finite(m, "truncated_svd input");

    const bool left_gram = m.rows() <= m.cols();
    const Matrix gram = left_gram ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
    const Index n = gram.rows();
    const Index block = std::min(n, r + std::max<Index>(r, 8));

    Matrix q = orthonormal_basis(start_block(n, block));
    Vector previous = Vector::Constant(r, -1.0);
    Vector sigma(r);
    double change = 0.0;
    int iter = 0;
    bool converged = false;

    while (iter < opts.max_iters) {
        ++iter;
        q = orthonormal_basis(gram * q);
        const Matrix projected = q.transpose() * gram * q;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (projected + projected.transpose()));
        // Eigen sorts ascending; flip to descending.
        const Vector theta = eig.eigenvalues().reverse();
        q = q * eig.eigenvectors().rowwise().reverse();

        for (Index i = 0; i < r; ++i) {
            sigma(i) = std::sqrt(std::max(0.0, theta(i)));
        }
        const double scale = sigma(0) > 0.0 ? sigma(0) : 1.0;
        change = (sigma - previous).cwiseAbs().maxCoeff() / scale;
        previous = sigma;
        if (sigma(0) == 0.0 || (iter > 1 && change < opts.tol)) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw ConvergenceError(
            fmt::format("truncated_svd did not converge in {} iterations (last relative change {:.3e})",
                        opts.max_iters, change),
            change);
    }

    SvdResult out;
    out.singular_values = sigma;
    out.iterations = iter;
    if (left_gram) {
        out.left_vectors = q.leftCols(r);
        return out;
    }
    // Right vectors came out of the Gram side; map them across and re-orthonormalize
    // so columns for zero singular values still form an orthonormal set.
    const Matrix mv = m * q.leftCols(r);
    Matrix u = orthonormal_basis(mv);
    for (Index i = 0; i < r; ++i) {
        if (u.col(i).dot(mv.col(i)) < 0.0) {
            u.col(i) = -u.col(i);
        }
    }
    out.left_vectors = std::move(u);
    return out;
}

Matrix ridge_solve_gram(const Matrix& gram, const Matrix& cross, double lambda)
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument(fmt::format("ridge lambda must be finite and >= 0, got {}", lambda));
    }
    if (gram.rows() != gram.cols() || cross.cols() != gram.rows()) {
        throw std::invalid_argument(fmt::format(
            "ridge system shapes do not conform: gram {}x{}, cross {}x{}", gram.rows(), gram.cols(),
            cross.rows(), cross.cols()));
    }
    Matrix a = gram;
    a.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(a);
    // With lambda > 0 the system is positive definite in exact arithmetic, so
    // only a failed factorization is fatal; at lambda = 0 near-singularity is too.
    if (llt.info() != Eigen::Success || (lambda == 0.0 && llt.rcond() < 1e-14)) {
        throw SingularSystemError(fmt::format(
            "ridge system is singular or numerically indefinite at lambda = {}; use a larger lambda", lambda));
    }
    return llt.solve(cross.transpose()).transpose();
}

Matrix ridge_solve(const Matrix& x, const Matrix& y, double lambda)
{
    if (x.cols() != y.cols() || x.cols() < 1) {
        throw std::invalid_argument(fmt::format(
            "ridge_solve needs matching sample counts >= 1, got {} and {}", x.cols(), y.cols()));
    }
    require_finite(x, "ridge_solve features");
    require_finite(y, "ridge_solve targets");
    return ridge_solve_gram(x * x.transpose(), y * x.transpose(), lambda);
}

}  // namespace esnt
