// esnt: run experiment grids, emit config templates, summarize result CSVs.

#include "esnt/harness.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>

namespace h = esnt::harness;

namespace {

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file)
{
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error(fmt::format("cannot write {}", path));
    return file;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out,
            const std::string& summary, bool full_paper, const std::string& figure_dir, std::optional<int> threads,
            const std::string& usps_path)
{
    h::ExperimentConfig cfg = h::load_config(config, full_paper);
    if (!usps_path.empty()) cfg.dataset.usps_path = usps_path;
    if (seed) cfg.master_seed = *seed;
    if (threads) cfg.threads = *threads;
    const auto rows = h::run_experiment(cfg);

    std::ofstream file;
    h::write_rows_csv(rows, open_or_stdout(out, file));
    if (!summary.empty()) {
        std::ofstream sfile;
        h::write_summary_csv(rows, open_or_stdout(summary, sfile));
    }
    if (!figure_dir.empty()) {
        for (const auto& p : h::write_figure_data(rows, figure_dir)) std::cerr << "wrote " << p.string() << '\n';
    }
    int failed = 0;
    for (const auto& r : rows) {
        if (!r.error.empty()) {
            std::cerr << fmt::format("cell N={} {} beta={:.4f} failed: {}\n", r.nodes, r.activation, r.beta, r.error);
            ++failed;
        }
    }
    return failed == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Echo state network classification experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the experiment grid described by a JSON config");
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string summary;
    bool full_paper = false;
    std::string figure_dir;
    std::optional<int> threads;
    std::string usps_path;
    run->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Override the master seed");
    run->add_option("--out,-o", out, "Raw result CSV (default stdout)");
    run->add_option("--summary", summary, "Also write the mean (std) summary table here");
    run->add_flag("--full-paper", full_paper, "Apply the config's full_paper overrides");
    run->add_option("--figure-data", figure_dir, "Directory for accuracy-vs-N series files");
    run->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
    run->add_option("--usps-path", usps_path, "USPS text file, overriding the config");

    auto* gen = app.add_subcommand("gen", "Print a template config");
    std::string dataset = "sine_square";
    std::string gen_out;
    gen->add_option("--dataset", dataset, "sine_square, usps or jv")
        ->check(CLI::IsMember({"sine_square", "usps", "jv"}));
    gen->add_option("--out,-o", gen_out, "Output file (default stdout)");

    auto* sum = app.add_subcommand("summarize", "Turn a raw result CSV into the summary table");
    std::string rows_path;
    std::string sum_out;
    sum->add_option("rows", rows_path, "Raw result CSV")->required()->check(CLI::ExistingFile);
    sum->add_option("--out,-o", sum_out, "Output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(config, seed, out, summary, full_paper, figure_dir, threads, usps_path);
        }
        if (*gen) {
            const h::DatasetKind kind = dataset == "usps" ? h::DatasetKind::Usps
                                        : dataset == "jv" ? h::DatasetKind::JapaneseVowels
                                                          : h::DatasetKind::SineSquare;
            std::ofstream file;
            open_or_stdout(gen_out, file) << h::template_config(kind);
            return 0;
        }
        if (*sum) {
            std::ifstream in(rows_path);
            const auto rows = h::read_rows_csv(in);
            std::ofstream file;
            h::write_summary_csv(rows, open_or_stdout(sum_out, file));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
