#include "esnt/esn.hpp"

#include "binary_io.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace esnt {

std::string_view to_string(Activation a)
{
    switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Sin: return "sin";
    case Activation::Identity: return "identity";
    }
    return "?";
}

Activation parse_activation(std::string_view name)
{
    if (name == "tanh") return Activation::Tanh;
    if (name == "sin") return Activation::Sin;
    if (name == "identity") return Activation::Identity;
    throw std::invalid_argument(fmt::format("unknown activation '{}'", name));
}

namespace {

void validate(const ReservoirParams& p)
{
    if (p.nodes < 1 || p.inputs < 1) {
        throw std::invalid_argument(fmt::format("reservoir needs N, L >= 1, got N={}, L={}", p.nodes, p.inputs));
    }
    if (!(p.density > 0.0 && p.density <= 1.0)) {
        throw std::invalid_argument(fmt::format("reservoir density must be in (0, 1], got {}", p.density));
    }
    if (!(p.spectral_radius > 0.0) || !std::isfinite(p.spectral_radius)) {
        throw std::invalid_argument(
            fmt::format("spectral radius must be positive, got {}", p.spectral_radius));
    }
    if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) {
        throw std::invalid_argument(fmt::format("leaking rate must be in [0, 1], got {}", p.alpha));
    }
    if (!std::isfinite(p.beta) || !std::isfinite(p.scale_in) || p.scale_in < 0.0) {
        throw std::invalid_argument("reservoir bias and input scale must be finite, scale >= 0");
    }
}

// True when the directed graph of nonzeros has no cycle, i.e. the matrix is
// nilpotent whatever its values.
bool acyclic_pattern(const Matrix& w)
{
    const Index n = w.rows();
    std::vector<int> indegree(static_cast<std::size_t>(n), 0);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (w(i, j) != 0.0) ++indegree[static_cast<std::size_t>(i)];
        }
    }
    std::vector<Index> ready;
    for (Index i = 0; i < n; ++i) {
        if (indegree[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
    }
    Index removed = 0;
    while (!ready.empty()) {
        const Index j = ready.back();
        ready.pop_back();
        ++removed;
        for (Index i = 0; i < n; ++i) {
            if (w(i, j) != 0.0 && --indegree[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
        }
    }
    return removed == n;
}

Matrix draw_sparse(Index n, Index nonzeros, std::mt19937_64& rng)
{
    std::vector<Index> cells(static_cast<std::size_t>(n * n));
    std::iota(cells.begin(), cells.end(), Index{0});
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    Matrix w = Matrix::Zero(n, n);
    // Partial Fisher-Yates: the first `nonzeros` cells become a uniform sample.
    for (Index k = 0; k < nonzeros; ++k) {
        std::uniform_int_distribution<Index> pick(k, n * n - 1);
        std::swap(cells[static_cast<std::size_t>(k)], cells[static_cast<std::size_t>(pick(rng))]);
        const Index cell = cells[static_cast<std::size_t>(k)];
        double v = 0.0;
        while (v == 0.0) v = value(rng);
        w(cell % n, cell / n) = v;
    }
    return w;
}

}  // namespace

double spectral_radius(const Matrix& m)
{
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw std::invalid_argument("spectral radius needs a nonempty square matrix");
    }
    Eigen::EigenSolver<Matrix> eig(m, false);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("eigenvalue computation failed");
    }
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Reservoir make_reservoir(const ReservoirParams& params)
{
    validate(params);
    const Index n = params.nodes;
    std::mt19937_64 rng(params.seed);

    Reservoir r;
    r.params = params;
    std::uniform_real_distribution<double> in(-params.scale_in, params.scale_in);
    r.w_in.resize(n, params.inputs);
    for (Index c = 0; c < params.inputs; ++c) {
        for (Index i = 0; i < n; ++i) {
            r.w_in(i, c) = params.scale_in > 0.0 ? in(rng) : 0.0;
        }
    }

    const auto nonzeros = std::max<Index>(
        1, static_cast<Index>(std::ceil(params.density * static_cast<double>(n * n) - 1e-9)));
    constexpr int kRedraws = 10;
    for (int attempt = 0; attempt <= kRedraws; ++attempt) {
        Matrix w = draw_sparse(n, nonzeros, rng);
        if (acyclic_pattern(w)) continue;
        const double rho = spectral_radius(w);
        if (!(rho > 1e-10)) continue;
        r.w_res = w * (params.spectral_radius / rho);
        return r;
    }
    throw std::runtime_error(fmt::format(
        "could not draw a reservoir with nonzero spectral radius (N={}, density={}) after {} redraws", n,
        params.density, kRedraws));
}

Matrix run(const Reservoir& r, const Matrix& input, const std::optional<Vector>& x0)
{
    const Index n = r.nodes();
    if (input.rows() != r.inputs()) {
        throw std::invalid_argument(
            fmt::format("input has {} rows but the reservoir expects {}", input.rows(), r.inputs()));
    }
    if (input.cols() < 1) {
        throw std::invalid_argument("input must have at least one time step");
    }
    require_finite(input, "reservoir input");
    Vector state = x0.value_or(Vector::Zero(n));
    if (state.size() != n || !state.allFinite()) {
        throw std::invalid_argument(fmt::format("initial state must be {} finite values", n));
    }

    const double alpha = r.params.alpha;
    const double beta = r.params.beta;
    const Eigen::SparseMatrix<double> w_res = r.w_res.sparseView();
    const Matrix drive = r.w_in * input;
    Matrix states(n, input.cols());
    Vector pre(n);

    for (Index t = 0; t < input.cols(); ++t) {
        pre.noalias() = w_res * state;
        pre += drive.col(t);
        pre.array() += beta;
        switch (r.params.activation) {
        case Activation::Tanh: pre = pre.array().tanh(); break;
        case Activation::Sin: pre = pre.array().sin(); break;
        case Activation::Identity: break;
        }
        state = (1.0 - alpha) * state + alpha * pre;
        states.col(t) = state;
    }
    return states;
}

Tensor3 stack_states(std::span<const Matrix> states)
{
    if (states.empty()) {
        throw std::invalid_argument("stack_states needs at least one state matrix");
    }
    for (std::size_t j = 1; j < states.size(); ++j) {
        if (states[j].cols() != states.front().cols()) {
            throw std::invalid_argument(fmt::format(
                "ragged temporal lengths: state {} has {} steps, state 0 has {}; resample first", j,
                states[j].cols(), states.front().cols()));
        }
    }
    return Tensor3::from_slices(states);
}

namespace {
constexpr std::string_view kReservoirMagic = "ESNTRES1";
}

void save_reservoir(const Reservoir& r, std::ostream& os)
{
    const ReservoirParams& p = r.params;
    detail::write_magic(os, kReservoirMagic);
    detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(p.nodes));
    detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(p.inputs));
    detail::write_pod<double>(os, p.density);
    detail::write_pod<double>(os, p.scale_in);
    detail::write_pod<double>(os, p.spectral_radius);
    detail::write_pod<double>(os, p.alpha);
    detail::write_pod<double>(os, p.beta);
    detail::write_pod<std::int32_t>(os, static_cast<std::int32_t>(p.activation));
    detail::write_pod<std::uint64_t>(os, p.seed);
    detail::write_matrix(os, r.w_in);
    detail::write_matrix(os, r.w_res);
    if (!os) {
        throw std::runtime_error("failed writing reservoir");
    }
}

Reservoir load_reservoir(std::istream& is)
{
    detail::read_magic(is, kReservoirMagic);
    Reservoir r;
    ReservoirParams& p = r.params;
    p.nodes = static_cast<Index>(detail::read_pod<std::uint64_t>(is));
    p.inputs = static_cast<Index>(detail::read_pod<std::uint64_t>(is));
    p.density = detail::read_pod<double>(is);
    p.scale_in = detail::read_pod<double>(is);
    p.spectral_radius = detail::read_pod<double>(is);
    p.alpha = detail::read_pod<double>(is);
    p.beta = detail::read_pod<double>(is);
    const auto act = detail::read_pod<std::int32_t>(is);
    if (act < 0 || act > static_cast<std::int32_t>(Activation::Identity)) {
        throw std::runtime_error(fmt::format("unknown activation code {} in reservoir container", act));
    }
    p.activation = static_cast<Activation>(act);
    p.seed = detail::read_pod<std::uint64_t>(is);
    r.w_in = detail::read_matrix(is);
    r.w_res = detail::read_matrix(is);
    if (r.w_in.rows() != p.nodes || r.w_in.cols() != p.inputs || r.w_res.rows() != p.nodes ||
        r.w_res.cols() != p.nodes) {
        throw std::runtime_error("reservoir container has inconsistent dimensions");
    }
    return r;
}

void save_reservoir(const Reservoir& r, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
    }
    save_reservoir(r, os);
}

Reservoir load_reservoir(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error(fmt::format("cannot open {}", path.string()));
    }
    return load_reservoir(is);
}

}  // namespace esnt
