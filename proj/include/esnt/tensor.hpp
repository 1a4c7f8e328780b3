#pragma once

// Dense third-order tensors and the multilinear operations used throughout
// the library: modal products, unfoldings, inner product and Frobenius norm.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace esnt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Tensor modes, numbered as in the usual multilinear-algebra notation.
enum class Mode : int { One = 1, Two = 2, Three = 3 };

/// Dimensions (I1, I2, I3) of a third-order tensor.
struct Dims3 {
    Index i1 = 0;
    Index i2 = 0;
    Index i3 = 0;

    Index operator[](Mode m) const;
    Index size() const { return i1 * i2 * i3; }
    bool operator==(const Dims3&) const = default;
};

/// Dense I1 x I2 x I3 array of finite doubles.
///
/// Storage is column-major with i1 varying fastest, then i2, then i3, so every
/// frontal slice t(:,:,j) is a contiguous I1 x I2 column-major block. All
/// public contracts are index based; the layout only shows up through
/// `slice()` returning a zero-copy view.
class Tensor3 {
public:
    Tensor3() = default;

    /// Zero tensor of the given dims. Every dim must be positive.
    explicit Tensor3(Dims3 dims);

    /// Takes ownership of `values` laid out as described above.
    /// Rejects a size mismatch and any non-finite value.
    Tensor3(Dims3 dims, std::vector<double> values);

    static Tensor3 constant(Dims3 dims, double value);

    /// Stacks equally sized matrices as frontal slices.
    static Tensor3 from_slices(std::span<const Matrix> slices);

    const Dims3& dims() const { return dims_; }
    Index size() const { return dims_.size(); }

    double operator()(Index i1, Index i2, Index i3) const
    {
        return values_[static_cast<std::size_t>(i1 + dims_.i1 * (i2 + dims_.i2 * i3))];
    }
    double& operator()(Index i1, Index i2, Index i3)
    {
        return values_[static_cast<std::size_t>(i1 + dims_.i1 * (i2 + dims_.i2 * i3))];
    }

    /// Frontal slice t(:,:,j) as an I1 x I2 view.
    Eigen::Map<const Matrix> slice(Index j) const;
    Eigen::Map<Matrix> slice(Index j);

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    bool operator==(const Tensor3&) const = default;

private:
    Dims3 dims_;
    std::vector<double> values_;
};

/// t x_mode m: contracts index `mode` of t against the columns of m.
/// Requires m.cols() == t.dims()[mode].
Tensor3 mode_product(const Tensor3& t, const Matrix& m, Mode mode);

/// Matricization with rows indexed by `mode`. Columns run over the remaining
/// two modes in increasing mode order, the earlier one varying fastest. For
/// mode one this is [t(:,:,1) | t(:,:,2) | ... ].
Matrix unfold(const Tensor3& t, Mode mode);

/// Inverse of unfold for the given target dims.
Tensor3 fold(const Matrix& m, Mode mode, Dims3 dims);

/// Sum of elementwise products. Dims must match.
double inner(const Tensor3& a, const Tensor3& b);

double fro_norm(const Tensor3& t);

/// Throws std::invalid_argument unless every entry of m is finite.
void require_finite(const Matrix& m, const char* what);

}  // namespace esnt
