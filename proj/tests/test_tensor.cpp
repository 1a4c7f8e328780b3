#include "esnt/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace esnt;

namespace {

Tensor3 random_tensor(Dims3 d, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Tensor3 t(d);
    for (double& v : t.values()) v = u(rng);
    return t;
}

Matrix random_matrix(Index r, Index c, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = u(rng);
    return m;
}

// Direct evaluation of the summation definition of the n-mode product.
Tensor3 naive_mode_product(const Tensor3& t, const Matrix& m, Mode mode)
{
    const Dims3 d = t.dims();
    Dims3 out = d;
    if (mode == Mode::One) out.i1 = m.rows();
    if (mode == Mode::Two) out.i2 = m.rows();
    if (mode == Mode::Three) out.i3 = m.rows();
    Tensor3 r(out);
    for (Index a = 0; a < out.i1; ++a)
        for (Index b = 0; b < out.i2; ++b)
            for (Index c = 0; c < out.i3; ++c) {
                double s = 0.0;
                const Index n = d[mode];
                for (Index k = 0; k < n; ++k) {
                    if (mode == Mode::One) s += t(k, b, c) * m(a, k);
                    if (mode == Mode::Two) s += t(a, k, c) * m(b, k);
                    if (mode == Mode::Three) s += t(a, b, k) * m(c, k);
                }
                r(a, b, c) = s;
            }
    return r;
}

double rel_diff(const Tensor3& a, const Tensor3& b)
{
    double num = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        num += d * d;
    }
    return std::sqrt(num) / std::max(1.0, fro_norm(b));
}

}  // namespace

TEST(Tensor3, RejectsSizeMismatchAndNonFinite)
{
    EXPECT_THROW(Tensor3(Dims3{2, 2, 2}, std::vector<double>(7, 0.0)), std::invalid_argument);
    std::vector<double> v(8, 0.0);
    v[3] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(Tensor3(Dims3{2, 2, 2}, v), std::invalid_argument);
    v[3] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(Tensor3(Dims3{2, 2, 2}, v), std::invalid_argument);
    EXPECT_THROW(Tensor3(Dims3{0, 2, 2}), std::invalid_argument);
}

TEST(Tensor3, SliceViewsMatchIndexing)
{
    std::mt19937_64 rng(1);
    const Tensor3 t = random_tensor({3, 4, 2}, rng);
    for (Index j = 0; j < 2; ++j)
        for (Index a = 0; a < 3; ++a)
            for (Index b = 0; b < 4; ++b) EXPECT_EQ(t.slice(j)(a, b), t(a, b, j));
}

TEST(ModeProduct, IdentityLeavesOnesTensorUnchanged)
{
    const Tensor3 t = Tensor3::constant({2, 2, 2}, 1.0);
    EXPECT_EQ(mode_product(t, Matrix::Identity(2, 2), Mode::One), t);
}

TEST(ModeProduct, RowOfOnesSumsFirstIndex)
{
    Tensor3 t({2, 2, 2});
    for (Index a = 0; a < 2; ++a)
        for (Index b = 0; b < 2; ++b)
            for (Index c = 0; c < 2; ++c) t(a, b, c) = static_cast<double>(a + 1);
    const Tensor3 r = mode_product(t, Matrix::Ones(1, 2), Mode::One);
    ASSERT_EQ(r.dims(), (Dims3{1, 2, 2}));
    for (double v : r.values()) EXPECT_EQ(v, 3.0);
    EXPECT_EQ(r, naive_mode_product(t, Matrix::Ones(1, 2), Mode::One));
}

TEST(ModeProduct, AgreesWithTripleLoopOracle)
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<Index> dim(1, 4);
        const Dims3 d{dim(rng), dim(rng), dim(rng)};
        const Tensor3 t = random_tensor(d, rng);
        for (Mode mode : {Mode::One, Mode::Two, Mode::Three}) {
            const Matrix m = random_matrix(dim(rng), d[mode], rng);
            EXPECT_LT(rel_diff(mode_product(t, m, mode), naive_mode_product(t, m, mode)), 1e-12);
        }
    }
}

TEST(ModeProduct, DistinctModesCommute)
{
    std::mt19937_64 rng(3);
    const Tensor3 t = random_tensor({3, 4, 2}, rng);
    const Mode modes[] = {Mode::One, Mode::Two, Mode::Three};
    for (Mode a : modes) {
        for (Mode b : modes) {
            if (a == b) continue;
            const Matrix ma = random_matrix(3, t.dims()[a], rng);
            const Matrix mb = random_matrix(2, t.dims()[b], rng);
            const Tensor3 ab = mode_product(mode_product(t, ma, a), mb, b);
            const Tensor3 ba = mode_product(mode_product(t, mb, b), ma, a);
            EXPECT_LT(rel_diff(ab, ba), 1e-12);
        }
    }
}

TEST(ModeProduct, IdentityIsIdentityMapInEveryMode)
{
    std::mt19937_64 rng(4);
    const Tensor3 t = random_tensor({3, 2, 4}, rng);
    for (Mode mode : {Mode::One, Mode::Two, Mode::Three}) {
        EXPECT_EQ(mode_product(t, Matrix::Identity(t.dims()[mode], t.dims()[mode]), mode), t);
    }
}

TEST(ModeProduct, DimensionMismatchNamesModeAndDims)
{
    const Tensor3 t({2, 3, 4});
    try {
        (void)mode_product(t, Matrix::Ones(2, 5), Mode::Two);
        FAIL() << "expected a throw";
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find('2'), std::string::npos);
        EXPECT_NE(msg.find('3'), std::string::npos);
        EXPECT_NE(msg.find('5'), std::string::npos);
    }
}

TEST(Unfold, ModeOneIsConcatenatedSlices)
{
    std::mt19937_64 rng(5);
    const Tensor3 t = random_tensor({2, 2, 2}, rng);
    const Matrix u = unfold(t, Mode::One);
    ASSERT_EQ(u.rows(), 2);
    ASSERT_EQ(u.cols(), 4);
    EXPECT_EQ(u.leftCols(2), Matrix(t.slice(0)));
    EXPECT_EQ(u.rightCols(2), Matrix(t.slice(1)));
}

TEST(Unfold, SingleNonzeroLandsAtComputedColumn)
{
    // 1-based position (2,1,2) in dims (2,3,2) -> row 2, column (2-1)*3+1 = 4.
    Tensor3 t({2, 3, 2});
    t(1, 0, 1) = 7.0;
    const Matrix u = unfold(t, Mode::One);
    EXPECT_EQ(u(1, 3), 7.0);
    EXPECT_EQ(u.cwiseAbs().sum(), 7.0);

    const Tensor3 back = fold(u, Mode::One, t.dims());
    EXPECT_EQ(back(1, 0, 1), 7.0);
    EXPECT_EQ(back, t);
}

TEST(Unfold, ColumnOrderForModesTwoAndThree)
{
    std::mt19937_64 rng(6);
    const Tensor3 t = random_tensor({2, 3, 4}, rng);
    const Matrix u2 = unfold(t, Mode::Two);  // columns over (i1, i3), i1 fastest
    const Matrix u3 = unfold(t, Mode::Three);  // columns over (i1, i2), i1 fastest
    for (Index a = 0; a < 2; ++a)
        for (Index b = 0; b < 3; ++b)
            for (Index c = 0; c < 4; ++c) {
                EXPECT_EQ(u2(b, a + 2 * c), t(a, b, c));
                EXPECT_EQ(u3(c, a + 2 * b), t(a, b, c));
            }
}

TEST(Unfold, FoldRoundTripsEveryMode)
{
    std::mt19937_64 rng(7);
    const Tensor3 t = random_tensor({3, 4, 5}, rng);
    for (Mode mode : {Mode::One, Mode::Two, Mode::Three}) {
        EXPECT_EQ(fold(unfold(t, mode), mode, t.dims()), t);
    }
}

TEST(Fold, ZeroMatrixGivesZeroTensor)
{
    EXPECT_EQ(fold(Matrix::Zero(2, 4), Mode::One, {2, 2, 2}), Tensor3({2, 2, 2}));
}

TEST(Fold, RejectsInconsistentDims)
{
    EXPECT_THROW(fold(Matrix::Zero(2, 5), Mode::One, {2, 2, 2}), std::invalid_argument);
    EXPECT_THROW(fold(Matrix::Zero(3, 4), Mode::One, {2, 2, 2}), std::invalid_argument);
}

TEST(Inner, Basics)
{
    std::mt19937_64 rng(8);
    const Tensor3 a = random_tensor({2, 3, 2}, rng);
    const Tensor3 b = random_tensor({2, 3, 2}, rng);
    const Tensor3 c = random_tensor({2, 3, 2}, rng);
    EXPECT_EQ(inner(a, Tensor3({2, 3, 2})), 0.0);
    EXPECT_EQ(inner(Tensor3::constant({2, 2, 2}, 1.0), Tensor3::constant({2, 2, 2}, 1.0)), 8.0);
    EXPECT_DOUBLE_EQ(inner(a, b), inner(b, a));

    Tensor3 ac = a;
    for (std::size_t i = 0; i < ac.values().size(); ++i) ac.values()[i] += c.values()[i];
    const double lhs = inner(ac, b);
    const double rhs = inner(a, b) + inner(c, b);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(rhs)));
    EXPECT_THROW((void)inner(a, Tensor3({2, 2, 3})), std::invalid_argument);
}

TEST(FroNorm, Basics)
{
    EXPECT_EQ(fro_norm(Tensor3({2, 2, 2})), 0.0);
    EXPECT_DOUBLE_EQ(fro_norm(Tensor3::constant({2, 2, 2}, 1.0)), std::sqrt(8.0));
    std::mt19937_64 rng(9);
    const Tensor3 t = random_tensor({4, 3, 2}, rng);
    const double n = fro_norm(t);
    EXPECT_LE(std::abs(n * n - inner(t, t)), 1e-12 * inner(t, t));
}
