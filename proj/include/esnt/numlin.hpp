#pragma once

#include "esnt/tensor.hpp"

#include <stdexcept>
#include <string>

namespace esnt {

/// Raised when an iterative solver exhausts its iteration budget.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual)
    {
    }
    double residual() const { return residual_; }

private:
    double residual_;
};

/// Raised for a linear system that has no unique solution.
class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SvdResult {
    Matrix left_vectors;    ///< rows x r, orthonormal columns
    Vector singular_values; ///< length r, nonincreasing, nonnegative
    int iterations = 0;
};

struct SvdOptions {
    double tol = 1e-10;
    int max_iters = 500;
};

/// Dominant r left singular vectors and values of m.
///
/// Works on the smaller Gram matrix (m m^T or m^T m) with block subspace
/// iteration and a Rayleigh-Ritz step per sweep. Converged once the leading
/// r Ritz singular values move less than `tol` (relative to the largest) in
/// one sweep. The start block is a fixed deterministic matrix, so repeated
/// calls give identical results.
SvdResult truncated_svd(const Matrix& m, Index r, const SvdOptions& opts = {});

/// Ridge regression: the W minimizing ||W x - y||^2 + lambda ||W||^2, i.e. the
/// solution of W (x x^T + lambda I) = y x^T.
///
/// x is features x samples, y is outputs x samples; returns outputs x features.
/// Throws SingularSystemError when lambda == 0 and x x^T is singular.
Matrix ridge_solve(const Matrix& x, const Matrix& y, double lambda);

/// Same system given the accumulated Gram matrix x x^T and cross term y x^T.
/// Lets callers build both from many blocks without forming x.
Matrix ridge_solve_gram(const Matrix& gram, const Matrix& cross, double lambda);

}  // namespace esnt
