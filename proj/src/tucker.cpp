#include "esnt/tucker.hpp"

#include "binary_io.hpp"
#include "esnt/numlin.hpp"

#include <Eigen/QR>
#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <stdexcept>

namespace esnt {

namespace {

Matrix random_orthonormal(Index rows, Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix g(rows, cols);
    for (Index c = 0; c < cols; ++c) {
        for (Index r = 0; r < rows; ++r) {
            g(r, c) = normal(rng);
        }
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(rows, cols);
}

double orthonormality_error(const Matrix& m)
{
    return (m.transpose() * m - Matrix::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff();
}

void validate(const Dims3& d, const HooiConfig& cfg)
{
    const auto [j1, j2] = cfg.ranks;
    if (j1 < 1 || j1 > d.i1 || j2 < 1 || j2 > d.i2) {
        throw std::invalid_argument(fmt::format(
            "Tucker ranks ({}, {}) must satisfy 1 <= J1 <= {} and 1 <= J2 <= {}", j1, j2, d.i1, d.i2));
    }
    if (j1 > j2 * d.i3 || j2 > j1 * d.i3) {
        throw std::invalid_argument(fmt::format(
            "Tucker ranks ({}, {}) exceed what {} slice(s) can support", j1, j2, d.i3));
    }
    if (!(cfg.tol > 0.0)) {
        throw std::invalid_argument(fmt::format("HOOI tolerance must be positive, got {}", cfg.tol));
    }
    if (cfg.max_iters < 1) {
        throw std::invalid_argument(fmt::format("HOOI max_iters must be >= 1, got {}", cfg.max_iters));
    }
}

Matrix project(const Matrix& u, const Matrix& x, const Matrix& v)
{
    return u.transpose() * x * v;
}

// x x_1 U^T x_2 V^T, evaluated slice by slice through the same expression as
// project_core so a training slice projects to exactly its core slice.
Tensor3 project_all(const Tensor3& x, const Matrix& u, const Matrix& v)
{
    Tensor3 core(Dims3{u.cols(), v.cols(), x.dims().i3});
    for (Index j = 0; j < x.dims().i3; ++j) {
        const Matrix slice = x.slice(j);
        core.slice(j) = project(u, slice, v);
    }
    return core;
}

}  // namespace

void normalize_column_signs(Matrix& m)
{
    for (Index c = 0; c < m.cols(); ++c) {
        Index at = 0;
        m.col(c).cwiseAbs().maxCoeff(&at);
        if (m(at, c) < 0.0) {
            m.col(c) = -m.col(c);
        }
    }
}

TuckerModel hooi(const Tensor3& x, const HooiConfig& cfg, std::span<const int> labels, HooiTrace* trace)
{
    const Dims3& d = x.dims();
    validate(d, cfg);
    if (static_cast<Index>(labels.size()) != d.i3) {
        throw std::invalid_argument(
            fmt::format("hooi got {} labels for {} slices", labels.size(), d.i3));
    }
    if (std::any_of(labels.begin(), labels.end(), [](int k) { return k < 0; })) {
        throw std::invalid_argument("hooi slice labels must be nonnegative");
    }
    const auto [j1, j2] = cfg.ranks;

    std::mt19937_64 rng(cfg.seed);
    // U^0 is drawn for completeness; the first sweep only reads V^0.
    Matrix u = random_orthonormal(d.i1, j1, rng);
    Matrix v = random_orthonormal(d.i2, j2, rng);

    Vector s1 = Vector::Zero(j1);
    Vector s2 = Vector::Zero(j2);
    int iter = 0;
    bool converged = false;

    while (iter < cfg.max_iters) {
        const SvdResult mode1 = truncated_svd(unfold(mode_product(x, v.transpose(), Mode::Two), Mode::One), j1);
        u = mode1.left_vectors;
        const SvdResult mode2 = truncated_svd(unfold(mode_product(x, u.transpose(), Mode::One), Mode::Two), j2);
        v = mode2.left_vectors;
        ++iter;

        const double delta = std::max((mode1.singular_values - s1).cwiseAbs().maxCoeff(),
                                      (mode2.singular_values - s2).cwiseAbs().maxCoeff());
        s1 = mode1.singular_values;
        s2 = mode2.singular_values;
        if (trace != nullptr) {
            trace->core_norms.push_back(s2.squaredNorm());
            trace->max_orthonormality_error.push_back(std::max(orthonormality_error(u), orthonormality_error(v)));
        }
        if (delta < cfg.tol) {
            converged = true;
            break;
        }
    }

    normalize_column_signs(u);
    normalize_column_signs(v);

    TuckerModel model;
    model.core = project_all(x, u, v);
    model.u = std::move(u);
    model.v = std::move(v);
    model.slice_labels.assign(labels.begin(), labels.end());
    model.ranks = cfg.ranks;
    model.converged = converged;
    model.iterations = iter;
    return model;
}

Matrix project_core(const Matrix& x, const TuckerModel& model)
{
    if (x.rows() != model.nodes() || x.cols() != model.steps()) {
        throw std::invalid_argument(fmt::format(
            "cannot project a {}x{} state matrix onto factors of a {}x{} model", x.rows(), x.cols(),
            model.nodes(), model.steps()));
    }
    return project(model.u, x, model.v);
}

std::vector<TuckerModel> fit_per_class(std::span<const Tensor3> class_tensors, const HooiConfig& cfg)
{
    if (class_tensors.empty()) {
        throw std::invalid_argument("fit_per_class needs at least one class tensor");
    }
    const Dims3& first = class_tensors.front().dims();
    for (std::size_t k = 0; k < class_tensors.size(); ++k) {
        const Dims3& d = class_tensors[k].dims();
        if (d.i3 < 1 || class_tensors[k].size() == 0) {
            throw std::invalid_argument(fmt::format("class {} has no samples", k));
        }
        if (d.i1 != first.i1 || d.i2 != first.i2) {
            throw std::invalid_argument(fmt::format(
                "class {} tensor is {}x{}xM, expected {}x{}xM", k, d.i1, d.i2, first.i1, first.i2));
        }
    }
    std::vector<TuckerModel> models;
    models.reserve(class_tensors.size());
    for (std::size_t k = 0; k < class_tensors.size(); ++k) {
        const std::vector<int> labels(static_cast<std::size_t>(class_tensors[k].dims().i3), static_cast<int>(k));
        models.push_back(hooi(class_tensors[k], cfg, labels));
    }
    return models;
}

Tensor3 reconstruct(const TuckerModel& model)
{
    return mode_product(mode_product(model.core, model.u, Mode::One), model.v, Mode::Two);
}

namespace {
constexpr std::string_view kTuckerMagic = "ESNTTKR1";
}

void save_model(const TuckerModel& model, std::ostream& os)
{
    detail::write_magic(os, kTuckerMagic);
    detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(model.ranks.j1));
    detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(model.ranks.j2));
    detail::write_pod<std::uint8_t>(os, model.converged ? 1 : 0);
    detail::write_pod<std::int32_t>(os, model.iterations);
    detail::write_matrix(os, model.u);
    detail::write_matrix(os, model.v);
    const Dims3& d = model.core.dims();
    detail::write_matrix(os, Eigen::Map<const Matrix>(model.core.values().data(), d.i1 * d.i2, d.i3));
    detail::write_pod<std::uint64_t>(os, model.slice_labels.size());
    for (int label : model.slice_labels) {
        detail::write_pod<std::int32_t>(os, label);
    }
    if (!os) {
        throw std::runtime_error("failed writing Tucker model");
    }
}

TuckerModel load_model(std::istream& is)
{
    detail::read_magic(is, kTuckerMagic);
    TuckerModel model;
    model.ranks.j1 = static_cast<Index>(detail::read_pod<std::uint64_t>(is));
    model.ranks.j2 = static_cast<Index>(detail::read_pod<std::uint64_t>(is));
    model.converged = detail::read_pod<std::uint8_t>(is) != 0;
    model.iterations = detail::read_pod<std::int32_t>(is);
    model.u = detail::read_matrix(is);
    model.v = detail::read_matrix(is);
    const Matrix flat_core = detail::read_matrix(is);
    const auto count = detail::read_pod<std::uint64_t>(is);
    if (model.u.cols() != model.ranks.j1 || model.v.cols() != model.ranks.j2 ||
        flat_core.rows() != model.ranks.j1 * model.ranks.j2 ||
        static_cast<std::uint64_t>(flat_core.cols()) != count) {
        throw std::runtime_error("Tucker model container has inconsistent dimensions");
    }
    model.core = Tensor3(Dims3{model.ranks.j1, model.ranks.j2, flat_core.cols()},
                         std::vector<double>(flat_core.data(), flat_core.data() + flat_core.size()));
    model.slice_labels.resize(count);
    for (auto& label : model.slice_labels) {
        label = detail::read_pod<std::int32_t>(is);
    }
    return model;
}

void save_model(const TuckerModel& model, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
    }
    save_model(model, os);
}

TuckerModel load_model(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error(fmt::format("cannot open {}", path.string()));
    }
    return load_model(is);
}

}  // namespace esnt
