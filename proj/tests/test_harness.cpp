#include "esnt/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

using namespace esnt;
using namespace esnt::harness;

namespace {

std::string csv(const std::vector<ResultRow>& rows)
{
    std::ostringstream os;
    write_rows_csv(rows, os);
    return os.str();
}

ExperimentConfig small_sine_square()
{
    return parse_config(R"({
      "dataset": {"kind": "sine_square", "train_patterns": 2, "test_patterns": 2,
                  "train_segments": 10, "test_segments": 10},
      "esn": {"nodes": [10], "activations": ["tanh"], "betas": ["pi/4"], "spectral_radius": 0.4},
      "methods": ["weights_block", "tensor_perclass"],
      "ranks": {"j1": ["N/5"], "j2": [5]},
      "repetitions": 1, "master_seed": 5, "threads": 1
    })");
}

}  // namespace

TEST(RankExpr, ParsesConstantsAndFractionsOfN)
{
    EXPECT_EQ(parse_rank("5").eval(100), 5);
    EXPECT_EQ(parse_rank("N").eval(17), 17);
    EXPECT_EQ(parse_rank("N/5").eval(12), 2);
    EXPECT_EQ(parse_rank("3N/4").eval(10), 7);
    EXPECT_EQ(parse_rank("3*N/4").eval(10), 7);
    EXPECT_EQ(parse_rank("N/2").str(), "N/2");
    EXPECT_EQ(parse_rank("3N/4").str(), "3N/4");
    EXPECT_THROW(parse_rank("0"), std::invalid_argument);
    EXPECT_THROW(parse_rank("N/0"), std::invalid_argument);
    EXPECT_THROW(parse_rank("N+1"), std::invalid_argument);
    EXPECT_THROW(parse_rank("abc"), std::invalid_argument);
}

TEST(Config, ParsesGridsAndAngles)
{
    const ExperimentConfig cfg = parse_config(R"({
      // comments are allowed
      "name": "t",
      "dataset": {"kind": "usps", "path": "digits.txt", "per_class": 7},
      "esn": {"nodes": [4, 8], "activations": ["sin", "tanh"], "betas": [0, "pi/4", "3pi/2", 0.5]},
      "methods": ["tensor_global"],
      "ranks": {"j1": [5, "N/2"], "j2": [3]},
      "noise_sigmas": [0, 0.05],
      "hooi": {"tol": 1e-8, "max_iters": 20},
      "repetitions": 3, "master_seed": 42
    })",
                                              "/base");
    EXPECT_EQ(cfg.name, "t");
    EXPECT_EQ(cfg.dataset.kind, DatasetKind::Usps);
    EXPECT_EQ(cfg.dataset.usps_path, std::filesystem::path("/base/digits.txt"));
    EXPECT_EQ(cfg.dataset.per_class, 7);
    EXPECT_EQ(cfg.nodes, (std::vector<Index>{4, 8}));
    EXPECT_EQ(cfg.activations, (std::vector<Activation>{Activation::Sin, Activation::Tanh}));
    ASSERT_EQ(cfg.betas.size(), 4u);
    EXPECT_DOUBLE_EQ(cfg.betas[1], std::numbers::pi / 4);
    EXPECT_DOUBLE_EQ(cfg.betas[2], 3 * std::numbers::pi / 2);
    EXPECT_EQ(cfg.betas[3], 0.5);
    EXPECT_EQ(cfg.j1.size(), 2u);
    EXPECT_EQ(cfg.hooi_max_iters, 20);
    EXPECT_EQ(cfg.repetitions, 3);
    EXPECT_EQ(cfg.master_seed, 42u);
}

TEST(Config, FullScaleOverridesApplyOnlyOnRequest)
{
    const std::string text = R"({
      "dataset": {"kind": "sine_square"},
      "repetitions": 5,
      "full_paper": {"repetitions": 50, "esn": {"nodes": [100]}}
    })";
    EXPECT_EQ(parse_config(text).repetitions, 5);
    const ExperimentConfig full = parse_config(text, {}, true);
    EXPECT_EQ(full.repetitions, 50);
    EXPECT_EQ(full.nodes, (std::vector<Index>{100}));
}

TEST(Config, RejectsInvalidInput)
{
    EXPECT_THROW(parse_config(R"({"dataset": {"kind": "sine_square"}, "bogus": 1})"), std::invalid_argument);
    EXPECT_THROW(parse_config(R"({"dataset": {"kind": "mnist"}})"), std::invalid_argument);
    EXPECT_THROW(parse_config(R"({"esn": {}})"), std::invalid_argument);
    EXPECT_THROW(parse_config(R"({"dataset": {"kind": "sine_square"}, "repetitions": 0})"), std::invalid_argument);
    EXPECT_THROW(parse_config(R"({"dataset": {"kind": "sine_square"}, "methods": []})"), std::invalid_argument);
    EXPECT_THROW(parse_config(R"({"dataset": {"kind": "sine_square"}, "methods": ["svm"]})"), std::invalid_argument);
    EXPECT_THROW(parse_config(R"({"dataset": {"kind": "sine_square"}, "esn": {"betas": ["tau"]}})"),
                 std::invalid_argument);
}

TEST(Config, TemplatesParse)
{
    for (DatasetKind k : {DatasetKind::SineSquare, DatasetKind::Usps, DatasetKind::JapaneseVowels}) {
        EXPECT_NO_THROW(parse_config(template_config(k))) << template_config(k);
        EXPECT_NO_THROW(parse_config(template_config(k), {}, true));
    }
}

TEST(Summary, FormatsMeanAndStd)
{
    EXPECT_EQ(format_mean_std(100.0, 0.0), "100.00 (0.00)");
    EXPECT_EQ(format_mean_std(52.014, 0.75), "52.01 (0.75)");

    ResultRow row;
    row.dataset = "sine_square";
    row.method = "tensor_perclass";
    row.split = "test";
    row.nodes = 10;
    row.activation = "tanh";
    row.repetitions = 1;
    row.mean_accuracy = 100.0;
    const auto table = summarize({row});
    ASSERT_EQ(table.size(), 1u);
    EXPECT_EQ(table[0][10], "100.00 (0.00)");
    EXPECT_EQ(table[0][11], "1");
    EXPECT_THROW(summarize({}), std::invalid_argument);
}

TEST(Rows, CsvRoundTrip)
{
    ResultRow a;
    a.dataset = "jv";
    a.method = "tensor_global";
    a.split = "test";
    a.nodes = 20;
    a.activation = "sin";
    a.beta = 0.785398;
    a.j1 = 10;
    a.j2 = 12;
    a.sigma = 0.05;
    a.repetitions = 10;
    a.mean_accuracy = 89.5;
    a.std_accuracy = 2.25;
    a.rep_seed0 = 18446744073709551615ull;
    ResultRow b = a;
    b.method = "-";
    b.error = "cannot open file";
    const std::string text = csv({a, b});
    std::istringstream in(text);
    const auto back = read_rows_csv(in);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].rep_seed0, a.rep_seed0);
    EXPECT_EQ(back[0].j2, 12);
    EXPECT_EQ(back[1].error, "cannot open file");
    EXPECT_EQ(csv(back), text);

    std::istringstream bad("not,a,header\n");
    EXPECT_THROW(read_rows_csv(bad), std::runtime_error);
}

TEST(RunExperiment, MethodsShareSeedLineageAndRunIsDeterministic)
{
    const ExperimentConfig cfg = small_sine_square();
    const auto rows = run_experiment(cfg);
    ASSERT_EQ(rows.size(), 4u);  // 2 methods x {train, test}
    for (const auto& r : rows) {
        EXPECT_TRUE(r.error.empty()) << r.error;
        EXPECT_EQ(r.rep_seed0, rows.front().rep_seed0);
        EXPECT_GE(r.mean_accuracy, 0.0);
        EXPECT_LE(r.mean_accuracy, 100.0);
        EXPECT_EQ(r.std_accuracy, 0.0);
    }
    EXPECT_EQ(rows[1].j1, 2);
    EXPECT_EQ(rows[1].j2, 5);
    EXPECT_EQ(csv(run_experiment(cfg)), csv(rows));

    ExperimentConfig threaded = cfg;
    threaded.repetitions = 3;
    threaded.threads = 3;
    ExperimentConfig serial = threaded;
    serial.threads = 1;
    EXPECT_EQ(csv(run_experiment(threaded)), csv(run_experiment(serial)));

    ExperimentConfig reseeded = cfg;
    reseeded.master_seed = 6;
    EXPECT_NE(run_experiment(reseeded).front().rep_seed0, rows.front().rep_seed0);
}

TEST(RunExperiment, RankGridIsClampedAndDeduplicated)
{
    ExperimentConfig cfg = small_sine_square();
    cfg.methods = {Method::TensorGlobal};
    cfg.evaluate_train = false;
    cfg.j1 = {parse_rank("N/5"), parse_rank("2"), parse_rank("50")};
    cfg.j2 = {parse_rank("N")};
    const auto rows = run_experiment(cfg);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_TRUE(rows[0].error.empty()) << rows[0].error;
    EXPECT_EQ(rows[0].j1, 2);
    EXPECT_EQ(rows[1].j1, 10);
    EXPECT_EQ(rows[1].j2, 10);
}

TEST(RunExperiment, NoiseOnlyTouchesTestRows)
{
    ExperimentConfig cfg = small_sine_square();
    cfg.noise_sigmas = {0.0, 0.5};
    const auto rows = run_experiment(cfg);
    int train = 0;
    int test = 0;
    for (const auto& r : rows) {
        if (r.split == "train") {
            ++train;
            EXPECT_EQ(r.sigma, 0.0);
        } else {
            ++test;
        }
    }
    EXPECT_EQ(train, 2);
    EXPECT_EQ(test, 4);
}

TEST(RunExperiment, FailingCellBecomesErrorRow)
{
    ExperimentConfig cfg = small_sine_square();
    cfg.dataset.kind = DatasetKind::Usps;
    cfg.dataset.usps_path = "/nonexistent/usps.txt";
    cfg.nodes = {4, 6};
    const auto rows = run_experiment(cfg);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_FALSE(r.error.empty());
        EXPECT_EQ(r.error.find(','), std::string::npos);
    }
}

TEST(RunExperiment, TableOneTensorRowIsPerfect)
{
    ExperimentConfig cfg = parse_config(template_config(DatasetKind::SineSquare));
    cfg.nodes = {20};
    cfg.activations = {Activation::Tanh};
    cfg.betas = {std::numbers::pi / 4};
    cfg.methods = {Method::TensorPerClass};
    cfg.evaluate_train = false;
    const auto rows = run_experiment(cfg);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].repetitions, 5);
    EXPECT_EQ(rows[0].mean_accuracy, 100.0);
    EXPECT_EQ(format_mean_std(rows[0].mean_accuracy, rows[0].std_accuracy), "100.00 (0.00)");
}

TEST(FigureData, BestRankPerNode)
{
    ResultRow base;
    base.dataset = "usps";
    base.method = "tensor_global";
    base.split = "test";
    base.activation = "tanh";
    base.repetitions = 2;
    std::vector<ResultRow> rows;
    for (auto [n, j1, mean] : {std::tuple<Index, Index, double>{10, 5, 60.0}, {10, 2, 70.0}, {25, 5, 80.0}}) {
        ResultRow r = base;
        r.nodes = n;
        r.j1 = j1;
        r.mean_accuracy = mean;
        rows.push_back(r);
    }
    const auto dir = std::filesystem::temp_directory_path() / ("esnt_fig_" + std::to_string(std::random_device{}()));
    const auto files = write_figure_data(rows, dir);
    ASSERT_EQ(files.size(), 1u);
    std::ifstream in(files[0]);
    std::string header;
    std::string first;
    std::string second;
    std::getline(in, header);
    std::getline(in, first);
    std::getline(in, second);
    EXPECT_EQ(first.substr(0, 12), "10 70.000000");
    EXPECT_EQ(second.substr(0, 12), "25 80.000000");
    std::filesystem::remove_all(dir);
}
