#pragma once

#include "esnt/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace esnt {

enum class Activation { Tanh, Sin, Identity };

std::string_view to_string(Activation a);
/// Accepts "tanh", "sin", "identity".
Activation parse_activation(std::string_view name);

struct ReservoirParams {
    Index nodes = 0;         ///< N
    Index inputs = 0;        ///< L
    double density = 0.1;    ///< fraction of nonzero reservoir weights
    double scale_in = 1.0;   ///< input weights uniform on [-scale_in, scale_in]
    double spectral_radius = 0.95;
    double alpha = 1.0;      ///< leaking rate
    double beta = 0.0;       ///< bias inside the activation
    Activation activation = Activation::Tanh;
    std::uint64_t seed = 0;
};

/// Fixed echo state network weights. Immutable once built.
struct Reservoir {
    Matrix w_in;   ///< N x L
    Matrix w_res;  ///< N x N, sparse by construction
    ReservoirParams params;

    Index nodes() const { return w_res.rows(); }
    Index inputs() const { return w_in.cols(); }
};

/// Draws W_in and a sparse W_res rescaled to the requested spectral radius.
///
/// W_res gets exactly ceil(density * N^2) nonzeros at distinct uniformly chosen
/// positions with values uniform on [-1, 1]. A draw whose spectral radius is
/// numerically zero (e.g. an acyclic sparsity pattern) is redrawn, up to ten
/// times.
Reservoir make_reservoir(const ReservoirParams& params);

/// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Matrix& m);

/// Reservoir response to an L x T input.
///
/// Column t of the result is (1 - alpha) s + alpha f(W_in a_t + W_res s + beta),
/// where s is the previous column (x0 for the first) and a_t is input column t.
/// `x0` defaults to the zero state.
Matrix run(const Reservoir& r, const Matrix& input, const std::optional<Vector>& x0 = std::nullopt);

/// Frontal-slice stacking of equally sized state matrices.
Tensor3 stack_states(std::span<const Matrix> states);

void save_reservoir(const Reservoir& r, std::ostream& os);
Reservoir load_reservoir(std::istream& is);
void save_reservoir(const Reservoir& r, const std::filesystem::path& path);
Reservoir load_reservoir(const std::filesystem::path& path);

}  // namespace esnt
