#pragma once

// Dataset generation and ingestion. Input formats are documented in
// docs/formats.md.

#include "esnt/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace esnt::data {

struct LabeledSample {
    Matrix input;                      ///< L x T
    int label = 0;                     ///< 0-based class id
    std::vector<int> pointwise_labels; ///< empty, or one class id per time step
    std::string id;
};

struct Dataset {
    std::vector<LabeledSample> samples;
    int classes = 0;
    std::string name;
};

/// Raised for malformed or insufficient input files.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sine (class 0) vs square (class 1) segment sequences.
///
/// Each pattern is a 1 x (segments * segment_len) signal. Every segment is,
/// with probability 1/2 each, one period of sin(2 pi t / segment_len) or a
/// square wave that is +1 on the first half-period and -1 on the second.
Dataset gen_sine_square(int num_patterns, int segments_per_pattern, int segment_len, std::uint64_t seed);

enum class Split { Train, Test };

/// USPS digits from the one-image-per-line text format.
///
/// Images are returned as 16 x 16 matrices (row = image y, spatial; column =
/// image x, temporal), min-max normalized to [0, 1]. For each digit the file's
/// images are shuffled by `seed`; train takes the first `per_class`, test the
/// next `per_class`, so both splits under one seed are disjoint.
Dataset load_usps(const std::filesystem::path& path, int per_class, Split split, std::uint64_t seed);

struct JvOptions {
    Index resample_steps = 24;
    bool append_bias_rows = true;
    /// Sidecar with per-speaker block counts of the test file;
    /// defaults to `<test_path>.counts`.
    std::filesystem::path test_counts;
};

/// Japanese Vowels (UCI `ae` layout): 9 speakers, 12 cepstrum coefficients per
/// frame. Each utterance becomes a 12 x resample_steps matrix (14 rows with
/// two constant bias rows appended). Returns {train, test}.
std::pair<Dataset, Dataset> load_jv(const std::filesystem::path& train_path,
                                    const std::filesystem::path& test_path, const JvOptions& opts = {});

/// Copy of d with independent N(0, sigma^2) noise added to every input entry.
Dataset add_noise(const Dataset& d, double sigma, std::uint64_t seed);

/// Linear interpolation of every row onto `steps` evenly spaced points
/// spanning the original index range; endpoints are kept exactly.
Matrix resample_temporal(const Matrix& m, Index steps);

}  // namespace esnt::data
