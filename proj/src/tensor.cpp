#include "esnt/tensor.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace esnt {

namespace {

int mode_number(Mode m) { return static_cast<int>(m); }

void check_mode(Mode m)
{
    if (mode_number(m) < 1 || mode_number(m) > 3) {
        throw std::invalid_argument(fmt::format("invalid tensor mode {}", mode_number(m)));
    }
}

void check_dims(const Dims3& d)
{
    if (d.i1 < 1 || d.i2 < 1 || d.i3 < 1) {
        throw std::invalid_argument(
            fmt::format("tensor dims must be positive, got ({}, {}, {})", d.i1, d.i2, d.i3));
    }
}

// Column count of the mode-m unfolding.
Index other_extent(const Dims3& d, Mode m)
{
    return d.size() / d[m];
}

}  // namespace

Index Dims3::operator[](Mode m) const
{
    switch (m) {
    case Mode::One: return i1;
    case Mode::Two: return i2;
    case Mode::Three: return i3;
    }
    throw std::invalid_argument(fmt::format("invalid tensor mode {}", mode_number(m)));
}

Tensor3::Tensor3(Dims3 dims) : dims_(dims)
{
    check_dims(dims_);
    values_.assign(static_cast<std::size_t>(dims_.size()), 0.0);
}

Tensor3::Tensor3(Dims3 dims, std::vector<double> values) : dims_(dims), values_(std::move(values))
{
    check_dims(dims_);
    if (static_cast<Index>(values_.size()) != dims_.size()) {
        throw std::invalid_argument(fmt::format(
            "tensor of dims ({}, {}, {}) needs {} values, got {}", dims_.i1, dims_.i2, dims_.i3,
            dims_.size(), values_.size()));
    }
    auto bad = std::find_if(values_.begin(), values_.end(), [](double v) { return !std::isfinite(v); });
    if (bad != values_.end()) {
        throw std::invalid_argument(
            fmt::format("tensor value at flat index {} is not finite", bad - values_.begin()));
    }
}

Tensor3 Tensor3::constant(Dims3 dims, double value)
{
    check_dims(dims);
    return Tensor3(dims, std::vector<double>(static_cast<std::size_t>(dims.size()), value));
}

Tensor3 Tensor3::from_slices(std::span<const Matrix> slices)
{
    if (slices.empty()) {
        throw std::invalid_argument("cannot stack an empty list of slices");
    }
    const Index rows = slices.front().rows();
    const Index cols = slices.front().cols();
    Tensor3 out(Dims3{rows, cols, static_cast<Index>(slices.size())});
    for (std::size_t j = 0; j < slices.size(); ++j) {
        if (slices[j].rows() != rows || slices[j].cols() != cols) {
            throw std::invalid_argument(fmt::format(
                "slice {} has dims {}x{}, expected {}x{}", j, slices[j].rows(), slices[j].cols(),
                rows, cols));
        }
        require_finite(slices[j], "tensor slice");
        out.slice(static_cast<Index>(j)) = slices[j];
    }
    return out;
}

Eigen::Map<const Matrix> Tensor3::slice(Index j) const
{
    if (j < 0 || j >= dims_.i3) {
        throw std::out_of_range(fmt::format("slice {} out of range [0, {})", j, dims_.i3));
    }
    return {values_.data() + j * dims_.i1 * dims_.i2, dims_.i1, dims_.i2};
}

Eigen::Map<Matrix> Tensor3::slice(Index j)
{
    if (j < 0 || j >= dims_.i3) {
        throw std::out_of_range(fmt::format("slice {} out of range [0, {})", j, dims_.i3));
    }
    return {values_.data() + j * dims_.i1 * dims_.i2, dims_.i1, dims_.i2};
}

Tensor3 mode_product(const Tensor3& t, const Matrix& m, Mode mode)
{
    check_mode(mode);
    const Dims3& d = t.dims();
    if (m.cols() != d[mode]) {
        throw std::invalid_argument(fmt::format(
            "mode-{} product: matrix has {} columns but tensor mode {} has dimension {}",
            mode_number(mode), m.cols(), mode_number(mode), d[mode]));
    }
    require_finite(m, "mode product matrix");

    Dims3 out_dims = d;
    switch (mode) {
    case Mode::One: out_dims.i1 = m.rows(); break;
    case Mode::Two: out_dims.i2 = m.rows(); break;
    case Mode::Three: out_dims.i3 = m.rows(); break;
    }
    Tensor3 out(out_dims);

    switch (mode) {
    case Mode::One: {
        Eigen::Map<const Matrix> src(t.values().data(), d.i1, d.i2 * d.i3);
        Eigen::Map<Matrix> dst(out.values().data(), out_dims.i1, d.i2 * d.i3);
        dst.noalias() = m * src;
        break;
    }
    case Mode::Two:
        for (Index j = 0; j < d.i3; ++j) {
            out.slice(j).noalias() = t.slice(j) * m.transpose();
        }
        break;
    case Mode::Three: {
        // Rows of this view are (i1, i2) pairs, columns the mode-3 index.
        Eigen::Map<const Matrix> src(t.values().data(), d.i1 * d.i2, d.i3);
        Eigen::Map<Matrix> dst(out.values().data(), d.i1 * d.i2, out_dims.i3);
        dst.noalias() = src * m.transpose();
        break;
    }
    }
    return out;
}

Matrix unfold(const Tensor3& t, Mode mode)
{
    check_mode(mode);
    const Dims3& d = t.dims();
    switch (mode) {
    case Mode::One:
        return Eigen::Map<const Matrix>(t.values().data(), d.i1, d.i2 * d.i3);
    case Mode::Two: {
        Matrix out(d.i2, d.i1 * d.i3);
        for (Index k = 0; k < d.i3; ++k) {
            out.middleCols(k * d.i1, d.i1) = t.slice(k).transpose();
        }
        return out;
    }
    case Mode::Three:
        return Eigen::Map<const Matrix>(t.values().data(), d.i1 * d.i2, d.i3).transpose();
    }
    return {};
}

Tensor3 fold(const Matrix& m, Mode mode, Dims3 dims)
{
    check_mode(mode);
    check_dims(dims);
    if (m.rows() != dims[mode] || m.cols() != other_extent(dims, mode)) {
        throw std::invalid_argument(fmt::format(
            "cannot fold a {}x{} matrix along mode {} into dims ({}, {}, {})", m.rows(), m.cols(),
            mode_number(mode), dims.i1, dims.i2, dims.i3));
    }
    require_finite(m, "folded matrix");
    Tensor3 out(dims);
    switch (mode) {
    case Mode::One:
        Eigen::Map<Matrix>(out.values().data(), dims.i1, dims.i2 * dims.i3) = m;
        break;
    case Mode::Two:
        for (Index k = 0; k < dims.i3; ++k) {
            out.slice(k) = m.middleCols(k * dims.i1, dims.i1).transpose();
        }
        break;
    case Mode::Three:
        Eigen::Map<Matrix>(out.values().data(), dims.i1 * dims.i2, dims.i3) = m.transpose();
        break;
    }
    return out;
}

double inner(const Tensor3& a, const Tensor3& b)
{
    if (a.dims() != b.dims()) {
        throw std::invalid_argument(fmt::format(
            "inner product of tensors with dims ({}, {}, {}) and ({}, {}, {})", a.dims().i1,
            a.dims().i2, a.dims().i3, b.dims().i1, b.dims().i2, b.dims().i3));
    }
    Eigen::Map<const Vector> va(a.values().data(), a.size());
    Eigen::Map<const Vector> vb(b.values().data(), b.size());
    return va.dot(vb);
}

double fro_norm(const Tensor3& t)
{
    return std::sqrt(std::max(0.0, inner(t, t)));
}

void require_finite(const Matrix& m, const char* what)
{
    if (!m.allFinite()) {
        throw std::invalid_argument(fmt::format("{} contains non-finite values", what));
    }
}

}  // namespace esnt
