#include "esnt/classify.hpp"

#include "esnt/data.hpp"
#include "esnt/esn.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace esnt;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
    return m;
}

OutputWeights weights(Matrix w) { return OutputWeights{std::move(w), 0.0}; }

TuckerModel fit(const std::vector<Matrix>& slices, std::vector<int> labels, Index j1, Index j2)
{
    HooiConfig cfg;
    cfg.ranks = {j1, j2};
    cfg.seed = 3;
    return hooi(stack_states(slices), cfg, labels);
}

}  // namespace

TEST(TrainOutputWeights, SeparableIndicatorStatesGiveIdentity)
{
    // Class k slices hold e_k in every column.
    const int k = 3;
    std::vector<Matrix> slices;
    std::vector<int> labels;
    for (int c = 0; c < k; ++c) {
        for (int rep = 0; rep < 2; ++rep) {
            Matrix s = Matrix::Zero(k, 4);
            s.row(c).setOnes();
            slices.push_back(s);
            labels.push_back(c);
        }
    }
    const Tensor3 x = stack_states(slices);
    const OutputWeights w = train_output_weights(x, labels, k, 0.0);
    EXPECT_LT((w.w - Matrix::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-12);
    for (std::size_t j = 0; j < slices.size(); ++j) {
        EXPECT_EQ(classify_block(w, slices[j]).label, labels[j]);
        for (Index t = 0; t < 4; ++t) EXPECT_EQ(classify_pointwise(w, slices[j], t).label, labels[j]);
    }
}

TEST(TrainOutputWeights, MatchesExplicitIndicatorSystem)
{
    const Tensor3 x = stack_states(std::vector<Matrix>{random_matrix(5, 6, 1), random_matrix(5, 6, 2),
                                                       random_matrix(5, 6, 3)});
    const std::vector<int> labels{0, 2, 1};
    std::vector<int> pointwise(18);
    for (std::size_t i = 0; i < pointwise.size(); ++i) pointwise[i] = static_cast<int>(i % 3);

    for (bool use_pointwise : {false, true}) {
        Matrix y = Matrix::Zero(3, 18);
        for (Index j = 0; j < 3; ++j)
            for (Index t = 0; t < 6; ++t) {
                const Index col = j * 6 + t;
                y(use_pointwise ? pointwise[static_cast<std::size_t>(col)] : labels[static_cast<std::size_t>(j)],
                  col) = 1.0;
            }
        const Matrix x3 = unfold(x, Mode::One);
        const Matrix expected =
            y * x3.transpose() * (x3 * x3.transpose() + 0.1 * Matrix::Identity(5, 5)).inverse();
        const OutputWeights w =
            train_output_weights(x, labels, 3, 0.1, use_pointwise ? std::span<const int>(pointwise) : std::span<const int>{});
        EXPECT_LT((w.w - expected).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_EQ(w.lambda, 0.1);
    }
}

TEST(TrainOutputWeights, HugeLambdaShrinksToZero)
{
    const Tensor3 x = stack_states(std::vector<Matrix>{random_matrix(4, 5, 4), random_matrix(4, 5, 5)});
    const std::vector<int> labels{0, 1};
    EXPECT_LE(train_output_weights(x, labels, 2, 1e12).w.norm(), 1e-6);
}

TEST(TrainOutputWeights, RejectsBadLabels)
{
    const Tensor3 x = stack_states(std::vector<Matrix>{random_matrix(4, 5, 6), random_matrix(4, 5, 7)});
    const std::vector<int> short_labels{0};
    const std::vector<int> out_of_range{0, 2};
    const std::vector<int> ok{0, 1};
    EXPECT_THROW(train_output_weights(x, short_labels, 2, 1.0), std::invalid_argument);
    EXPECT_THROW(train_output_weights(x, out_of_range, 2, 1.0), std::invalid_argument);
    EXPECT_THROW(train_output_weights(x, ok, 1, 1.0), std::invalid_argument);
    const std::vector<int> short_pointwise(9, 0);
    EXPECT_THROW(train_output_weights(x, ok, 2, 1.0, short_pointwise), std::invalid_argument);
}

TEST(TrainOutputWeights, SineSquarePointwiseNearChanceWithoutBias)
{
    // N = 10, sin activation, zero bias: the pointwise readout is near chance.
    ReservoirParams p;
    p.nodes = 10;
    p.inputs = 1;
    p.activation = Activation::Sin;
    p.spectral_radius = 0.4;
    p.seed = 8;
    const Reservoir r = make_reservoir(p);
    const data::Dataset d = data::gen_sine_square(20, 100, 100, 9);
    std::vector<Matrix> states;
    std::vector<int> labels;
    std::vector<int> pointwise;
    for (const auto& s : d.samples) {
        states.push_back(run(r, s.input));
        labels.push_back(s.label);
        pointwise.insert(pointwise.end(), s.pointwise_labels.begin(), s.pointwise_labels.end());
    }
    const Tensor3 x = stack_states(states);
    const OutputWeights w = train_output_weights(x, labels, 2, 1e-7, pointwise);
    std::size_t good = 0;
    for (std::size_t j = 0; j < states.size(); ++j)
        for (Index t = 0; t < states[j].cols(); ++t)
            good += classify_pointwise(w, states[j], t).label == pointwise[j * 10000 + static_cast<std::size_t>(t)];
    const double accuracy = 100.0 * static_cast<double>(good) / static_cast<double>(pointwise.size());
    EXPECT_GT(accuracy, 45.0);
    EXPECT_LT(accuracy, 60.0);
}

TEST(ClassifyPointwise, BasicsAndTies)
{
    const OutputWeights w = weights(Matrix::Identity(3, 3));
    Matrix x = Matrix::Zero(3, 2);
    x(1, 0) = 1.0;
    const Prediction p = classify_pointwise(w, x, 0);
    EXPECT_EQ(p.label, 1);
    EXPECT_FALSE(p.tie);
    const Prediction z = classify_pointwise(w, x, 1);
    EXPECT_EQ(z.label, 0);
    EXPECT_TRUE(z.tie);
    EXPECT_THROW(classify_pointwise(w, x, 2), std::invalid_argument);
    EXPECT_THROW(classify_pointwise(w, Matrix::Zero(4, 2), 0), std::invalid_argument);
}

TEST(ClassifyPointwise, RowPermutationEquivariance)
{
    const Matrix w = random_matrix(4, 6, 10);
    const Matrix x = random_matrix(6, 20, 11);
    const std::vector<int> perm{2, 0, 3, 1};  // new row i holds old row perm[i]
    Matrix wp(4, 6);
    for (int i = 0; i < 4; ++i) wp.row(i) = w.row(perm[static_cast<std::size_t>(i)]);
    for (Index t = 0; t < 20; ++t) {
        const int a = classify_pointwise(weights(w), x, t).label;
        const int b = classify_pointwise(weights(wp), x, t).label;
        EXPECT_EQ(perm[static_cast<std::size_t>(b)], a);
    }
    const int a = classify_block(weights(w), x).label;
    const int b = classify_block(weights(wp), x).label;
    EXPECT_EQ(perm[static_cast<std::size_t>(b)], a);
}

TEST(ClassifyBlock, SingletonEqualsPointwise)
{
    const OutputWeights w = weights(random_matrix(3, 5, 12));
    const Matrix x = random_matrix(5, 8, 13);
    for (Index t = 0; t < 8; ++t) {
        const Index times[] = {t};
        EXPECT_EQ(classify_block(w, x, times).label, classify_pointwise(w, x, t).label);
    }
    EXPECT_THROW(classify_block(w, x, std::span<const Index>{}), std::invalid_argument);
    const Index bad[] = {8};
    EXPECT_THROW(classify_block(w, x, bad), std::invalid_argument);
}

TEST(ClassifyBlock, SumOfScoresCanOverruleMajority)
{
    // Column scores (3, 0), (0, 1), (0, 1): points vote class 1 twice, but
    // the summed scores (3, 2) pick class 0.
    const OutputWeights w = weights(Matrix::Identity(2, 2));
    Matrix x(2, 3);
    x << 3, 0, 0,
         0, 1, 1;
    int votes1 = 0;
    for (Index t = 0; t < 3; ++t) votes1 += classify_pointwise(w, x, t).label == 1 ? 1 : 0;
    EXPECT_EQ(votes1, 2);
    const Prediction p = classify_block(w, x);
    EXPECT_EQ(p.label, 0);
    EXPECT_DOUBLE_EQ(p.scores(0), 3.0);
    EXPECT_DOUBLE_EQ(p.scores(1), 2.0);
}

TEST(ClassifyGlobalTensor, TrainingSamplesAtDistanceZero)
{
    std::vector<Matrix> slices;
    for (int j = 0; j < 6; ++j) slices.push_back(random_matrix(6, 5, 20 + static_cast<std::uint64_t>(j)));
    const std::vector<int> labels{0, 1, 2, 0, 1, 2};
    const TuckerModel m = fit(slices, labels, 3, 3);
    for (std::size_t j = 0; j < slices.size(); ++j) {
        const Prediction p = classify_global_tensor(slices[j], m);
        EXPECT_EQ(p.label, labels[j]);
        EXPECT_EQ(p.scores(labels[j]), 0.0);
        for (Index k = 0; k < p.scores.size(); ++k) EXPECT_GE(p.scores(k), 0.0);
    }
    EXPECT_THROW(classify_global_tensor(Matrix::Zero(5, 5), m), std::invalid_argument);
}

TEST(ClassifyGlobalTensor, SingleSliceModelAlwaysReturnsItsClass)
{
    const TuckerModel m = fit({random_matrix(4, 4, 30)}, {1}, 2, 2);
    for (std::uint64_t s = 0; s < 5; ++s) EXPECT_EQ(classify_global_tensor(random_matrix(4, 4, 31 + s), m).label, 1);
}

TEST(ClassifyGlobalTensor, InvariantToSlicePermutationWithinModel)
{
    std::vector<Matrix> slices;
    for (int j = 0; j < 4; ++j) slices.push_back(random_matrix(5, 4, 40 + static_cast<std::uint64_t>(j)));
    const TuckerModel m = fit(slices, {0, 0, 1, 1}, 2, 2);
    TuckerModel permuted = m;
    const Index order[] = {3, 1, 0, 2};
    for (Index j = 0; j < 4; ++j) {
        permuted.core.slice(j) = m.core.slice(order[j]);
        permuted.slice_labels[static_cast<std::size_t>(j)] = m.slice_labels[static_cast<std::size_t>(order[j])];
    }
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Matrix x = random_matrix(5, 4, 50 + s);
        const Prediction a = classify_global_tensor(x, m);
        const Prediction b = classify_global_tensor(x, permuted);
        EXPECT_EQ(a.label, b.label);
        EXPECT_EQ(a.scores, b.scores);
    }
}

TEST(ClassifyPerClassTensor, SelfClassificationAndDegenerateCases)
{
    std::vector<std::vector<Matrix>> by_class(2);
    for (int j = 0; j < 3; ++j) {
        by_class[0].push_back(random_matrix(6, 5, 60 + static_cast<std::uint64_t>(j)));
        by_class[1].push_back(random_matrix(6, 5, 70 + static_cast<std::uint64_t>(j)));
    }
    const std::vector<TuckerModel> models{fit(by_class[0], {0, 0, 0}, 3, 3), fit(by_class[1], {1, 1, 1}, 3, 3)};
    for (int k = 0; k < 2; ++k) {
        for (const auto& x : by_class[static_cast<std::size_t>(k)]) {
            const Prediction p = classify_perclass_tensor(x, models);
            EXPECT_EQ(p.label, k);
            EXPECT_EQ(p.scores(k), 0.0);
            EXPECT_GT(p.scores(1 - k), 0.0);
        }
    }
    const std::vector<TuckerModel> one{models[0]};
    EXPECT_EQ(classify_perclass_tensor(by_class[1][0], one).label, 0);
    EXPECT_THROW(classify_perclass_tensor(by_class[0][0], std::span<const TuckerModel>{}), std::invalid_argument);
}
