#pragma once

// Readout rules on reservoir states: ridge-trained linear output weights
// (pointwise and block-summed), and nearest-core rules on Tucker-2 models.
// Class ids are 0-based everywhere.

#include "esnt/tensor.hpp"
#include "esnt/tucker.hpp"

#include <span>
#include <vector>

namespace esnt {

struct OutputWeights {
    Matrix w;  ///< K x N
    double lambda = 0.0;

    int classes() const { return static_cast<int>(w.rows()); }
};

struct Prediction {
    int label = 0;
    /// Weight rules: per-class scores (larger wins). Tensor rules: per-class
    /// nearest-core distances (smaller wins).
    Vector scores;
    /// More than one candidate attained the winning value; the lowest index won.
    bool tie = false;
};

/// Ridge-trains K x N output weights on an N x T x M state tensor.
///
/// The system is unfold(x, 1) = [x(:,:,1) | ... | x(:,:,M)] against an
/// indicator matrix whose column j*T + t is e_k for the class k of step t of
/// slice j. That class is `pointwise_labels[j*T + t]` when given (length T*M),
/// else `slice_labels[j]`.
OutputWeights train_output_weights(const Tensor3& x, std::span<const int> slice_labels, int classes,
                                   double lambda, std::span<const int> pointwise_labels = {});

/// argmax of W x(:, t).
Prediction classify_pointwise(const OutputWeights& w, const Matrix& x, Index t);

/// argmax of sum over t in `times` of W x(:, t).
Prediction classify_block(const OutputWeights& w, const Matrix& x, std::span<const Index> times);

/// classify_block over every column of x.
Prediction classify_block(const OutputWeights& w, const Matrix& x);

/// Label of the core slice nearest (Frobenius) to U^T x V; scores hold the
/// per-class minimum distance.
Prediction classify_global_tensor(const Matrix& x, const TuckerModel& model);

/// argmin over k of min_j || U_k^T x V_k - F_k(:,:,j) ||, one model per class.
Prediction classify_perclass_tensor(const Matrix& x, std::span<const TuckerModel> models);

}  // namespace esnt
