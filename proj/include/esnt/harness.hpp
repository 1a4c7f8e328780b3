#pragma once

// Config-driven experiment runner: parameter grids, repeated randomized
// trials that share every random draw across methods, and CSV output.

#include "esnt/esn.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace esnt::harness {

enum class Method { WeightsPointwise, WeightsBlock, TensorGlobal, TensorPerClass };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

enum class DatasetKind { SineSquare, Usps, JapaneseVowels };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::SineSquare;
    // sine_square
    int train_patterns = 20;
    int test_patterns = 50;
    int train_segments = 100;
    int test_segments = 100;
    int segment_len = 100;
    // usps
    std::filesystem::path usps_path;
    int per_class = 30;
    // jv
    std::filesystem::path jv_train;
    std::filesystem::path jv_test;
    Index resample_steps = 24;
    bool append_bias_rows = true;
};

/// A rank written as floor(num * N / den), or a constant when `uses_n` is false.
struct RankExpr {
    long num = 1;
    long den = 1;
    bool uses_n = false;

    Index eval(Index n) const;
    std::string str() const;
};
/// "5", "N", "N/5", "3N/4", "3*N/4".
RankExpr parse_rank(std::string_view text);

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetSpec dataset;

    std::vector<Index> nodes{10};
    std::vector<Activation> activations{Activation::Tanh};
    std::vector<double> betas{0.0};
    double alpha = 1.0;
    double density = 0.1;
    double spectral_radius = 0.95;
    double scale_in = 1.0;

    std::vector<Method> methods{Method::WeightsBlock, Method::TensorGlobal};
    std::vector<RankExpr> j1{RankExpr{1, 2, true}};
    std::vector<RankExpr> j2{RankExpr{5, 1, false}};
    double lambda = 1e-2;
    std::vector<double> noise_sigmas{0.0};
    bool evaluate_train = true;

    double hooi_tol = 1e-6;
    int hooi_max_iters = 100;

    int repetitions = 5;
    std::uint64_t master_seed = 1;
    /// Worker threads; 0 means one per hardware thread.
    int threads = 0;
};

/// Parses the JSON config format described in docs/config.md. Relative dataset
/// paths resolve against `base_dir`. With `full_paper`, the config's
/// "full_paper" override block (repetitions, nodes, per_class, ...) is applied.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {},
                              bool full_paper = false);
ExperimentConfig load_config(const std::filesystem::path& path, bool full_paper = false);

/// Commented template config for one dataset kind.
std::string template_config(DatasetKind kind);

struct ResultRow {
    std::string dataset;
    std::string method;
    std::string split;
    Index nodes = 0;
    std::string activation;
    double beta = 0.0;
    Index j1 = 0;  ///< 0 for weight methods
    Index j2 = 0;
    double sigma = 0.0;
    int repetitions = 0;
    double mean_accuracy = 0.0;  ///< percent
    double std_accuracy = 0.0;   ///< percent, sample standard deviation
    std::uint64_t rep_seed0 = 0; ///< seed lineage: base seed of repetition 0 of the cell
    int hooi_unconverged = 0;    ///< HOOI fits that stopped at max_iters
    std::string error;           ///< nonempty for a failed cell
    std::vector<double> rep_accuracies;  ///< per repetition, in order; not serialized
};

/// Per-repetition base seed: splitmix64 chain over (master, cell, repetition).
std::uint64_t repetition_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t rep);

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// Raw rows with the fixed header below; byte-identical for identical rows.
extern const char* const kRowsHeader;
void write_rows_csv(const std::vector<ResultRow>& rows, std::ostream& os);
std::vector<ResultRow> read_rows_csv(std::istream& is);

/// Table with "mean (std)" cells to two decimals; header kSummaryHeader.
extern const char* const kSummaryHeader;
std::string format_mean_std(double mean, double std_dev);
std::vector<std::vector<std::string>> summarize(const std::vector<ResultRow>& rows);
void write_summary_csv(const std::vector<ResultRow>& rows, std::ostream& os);

/// One whitespace-separated file per (dataset, method, split, sigma) with
/// columns N, mean, std (tensor methods: best mean over ranks), for plotting
/// accuracy against reservoir size.
std::vector<std::filesystem::path> write_figure_data(const std::vector<ResultRow>& rows,
                                                     const std::filesystem::path& dir);

}  // namespace esnt::harness
