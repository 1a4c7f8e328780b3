#include "esnt/classify.hpp"

#include "esnt/numlin.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace esnt {

namespace {

template <typename Better>
Prediction pick(Vector scores, Better better)
{
    Prediction p;
    Index best = 0;
    for (Index k = 1; k < scores.size(); ++k) {
        if (better(scores(k), scores(best))) best = k;
    }
    for (Index k = 0; k < scores.size(); ++k) {
        if (k != best && scores(k) == scores(best)) {
            p.tie = true;
            break;
        }
    }
    p.label = static_cast<int>(best);
    p.scores = std::move(scores);
    return p;
}

Prediction argmax(Vector scores)
{
    return pick(std::move(scores), [](double a, double b) { return a > b; });
}

void check_states(const OutputWeights& w, const Matrix& x)
{
    if (x.rows() != w.w.cols()) {
        throw std::invalid_argument(fmt::format(
            "state matrix has {} nodes but the output weights expect {}", x.rows(), w.w.cols()));
    }
}

// Squared distances from g to every frontal slice of the core.
Vector slice_distances(const Matrix& g, const Tensor3& core)
{
    const Dims3& d = core.dims();
    Eigen::Map<const Matrix> slices(core.values().data(), d.i1 * d.i2, d.i3);
    Eigen::Map<const Vector> gv(g.data(), g.size());
    return (slices.colwise() - gv).colwise().squaredNorm().transpose();
}

}  // namespace

OutputWeights train_output_weights(const Tensor3& x, std::span<const int> slice_labels, int classes,
                                   double lambda, std::span<const int> pointwise_labels)
{
    const Dims3& d = x.dims();
    if (classes < 2) {
        throw std::invalid_argument(fmt::format("output weights need K >= 2 classes, got {}", classes));
    }
    if (static_cast<Index>(slice_labels.size()) != d.i3) {
        throw std::invalid_argument(
            fmt::format("got {} slice labels for {} slices", slice_labels.size(), d.i3));
    }
    if (!pointwise_labels.empty() && static_cast<Index>(pointwise_labels.size()) != d.i2 * d.i3) {
        throw std::invalid_argument(fmt::format(
            "got {} pointwise labels, expected T*M = {}", pointwise_labels.size(), d.i2 * d.i3));
    }
    auto label_at = [&](Index j, Index t) {
        const int k = pointwise_labels.empty() ? slice_labels[static_cast<std::size_t>(j)]
                                               : pointwise_labels[static_cast<std::size_t>(j * d.i2 + t)];
        if (k < 0 || k >= classes) {
            throw std::invalid_argument(fmt::format("label {} outside [0, {})", k, classes));
        }
        return k;
    };

    const Eigen::Map<const Matrix> unfolded(x.values().data(), d.i1, d.i2 * d.i3);
    Matrix gram = Matrix::Zero(d.i1, d.i1);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(unfolded);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

    // y * x^T without forming the K x (T*M) indicator matrix.
    Matrix cross = Matrix::Zero(classes, d.i1);
    for (Index j = 0; j < d.i3; ++j) {
        for (Index t = 0; t < d.i2; ++t) {
            cross.row(label_at(j, t)) += unfolded.col(j * d.i2 + t).transpose();
        }
    }
    return OutputWeights{ridge_solve_gram(gram, cross, lambda), lambda};
}

Prediction classify_pointwise(const OutputWeights& w, const Matrix& x, Index t)
{
    check_states(w, x);
    if (t < 0 || t >= x.cols()) {
        throw std::invalid_argument(fmt::format("time index {} outside [0, {})", t, x.cols()));
    }
    return argmax(w.w * x.col(t));
}

Prediction classify_block(const OutputWeights& w, const Matrix& x, std::span<const Index> times)
{
    check_states(w, x);
    if (times.empty()) {
        throw std::invalid_argument("block classification needs a nonempty set of times");
    }
    Vector summed = Vector::Zero(x.rows());
    for (Index t : times) {
        if (t < 0 || t >= x.cols()) {
            throw std::invalid_argument(fmt::format("time index {} outside [0, {})", t, x.cols()));
        }
        summed += x.col(t);
    }
    return argmax(w.w * summed);
}

Prediction classify_block(const OutputWeights& w, const Matrix& x)
{
    check_states(w, x);
    return argmax(w.w * x.rowwise().sum());
}

Prediction classify_global_tensor(const Matrix& x, const TuckerModel& model)
{
    const Vector dist = slice_distances(project_core(x, model), model.core);
    Index best = 0;
    dist.minCoeff(&best);  // first minimum, i.e. lowest slice index

    int classes = 0;
    for (int label : model.slice_labels) classes = std::max(classes, label + 1);
    Vector per_class = Vector::Constant(classes, std::numeric_limits<double>::infinity());
    for (Index j = 0; j < dist.size(); ++j) {
        const auto k = model.slice_labels[static_cast<std::size_t>(j)];
        per_class(k) = std::min(per_class(k), dist(j));
    }

    Prediction p;
    p.label = model.slice_labels[static_cast<std::size_t>(best)];
    p.tie = (dist.array() == dist(best)).count() > 1;
    p.scores = per_class.cwiseSqrt();
    return p;
}

Prediction classify_perclass_tensor(const Matrix& x, std::span<const TuckerModel> models)
{
    if (models.empty()) {
        throw std::invalid_argument("per-class tensor rule needs at least one model");
    }
    Vector dist(static_cast<Index>(models.size()));
    for (std::size_t k = 0; k < models.size(); ++k) {
        dist(static_cast<Index>(k)) = slice_distances(project_core(x, models[k]), models[k].core).minCoeff();
    }
    return pick(dist.cwiseSqrt(), [](double a, double b) { return a < b; });
}

}  // namespace esnt
