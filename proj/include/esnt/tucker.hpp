#pragma once

// Orthogonal Tucker-2 decomposition of reservoir-state tensors by higher-order
// orthogonal iteration (HOOI), and projection of new samples onto the fitted
// factor bases.

#include "esnt/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace esnt {

struct TuckerRanks {
    Index j1 = 1;  ///< columns of U (mode 1, reservoir nodes)
    Index j2 = 1;  ///< columns of V (mode 2, time)
    bool operator==(const TuckerRanks&) const = default;
};

struct HooiConfig {
    TuckerRanks ranks;
    double tol = 1e-6;
    int max_iters = 100;
    std::uint64_t seed = 0;
};

/// x ~= core x_1 U x_2 V with orthonormal U (N x J1) and V (T x J2).
///
/// Frontal slice j of `core` is U^T x(:,:,j) V and carries `slice_labels[j]`.
struct TuckerModel {
    Matrix u;
    Matrix v;
    Tensor3 core;
    std::vector<int> slice_labels;
    TuckerRanks ranks;
    bool converged = false;
    int iterations = 0;

    Index nodes() const { return u.rows(); }
    Index steps() const { return v.rows(); }
    Index slices() const { return core.dims().i3; }
};

/// Per-sweep diagnostics, filled when passed to hooi.
struct HooiTrace {
    /// Squared Frobenius norm of x x_1 U^T x_2 V^T after each sweep.
    std::vector<double> core_norms;
    /// max(|U^T U - I|, |V^T V - I|) after each sweep.
    std::vector<double> max_orthonormality_error;
};

/// Tucker-2 HOOI on an N x T x M tensor.
///
/// Factors start as orthonormalized standard-normal draws from `cfg.seed`.
/// Each sweep updates U from the J1 dominant left singular vectors of
/// unfold(x x_2 V^T, 1), then V from the J2 dominant left singular vectors of
/// unfold(x x_1 U^T, 2). Stops when the leading singular values of both
/// updates move less than `cfg.tol` (max abs difference), or after
/// `cfg.max_iters` sweeps with `converged == false`. Factor columns are
/// sign-normalized so that each column's largest-magnitude entry is positive.
TuckerModel hooi(const Tensor3& x, const HooiConfig& cfg, std::span<const int> labels,
                 HooiTrace* trace = nullptr);

/// U^T x V for one N x T sample.
Matrix project_core(const Matrix& x, const TuckerModel& model);

/// One model per class, each fit by `hooi` on its own tensor. Slice labels
/// of model k are all k.
std::vector<TuckerModel> fit_per_class(std::span<const Tensor3> class_tensors, const HooiConfig& cfg);

/// core x_1 U x_2 V.
Tensor3 reconstruct(const TuckerModel& model);

/// Flips each column so its largest-magnitude entry is positive.
void normalize_column_signs(Matrix& m);

// Binary container, see docs/formats.md.
void save_model(const TuckerModel& model, std::ostream& os);
TuckerModel load_model(std::istream& is);
void save_model(const TuckerModel& model, const std::filesystem::path& path);
TuckerModel load_model(const std::filesystem::path& path);

}  // namespace esnt
