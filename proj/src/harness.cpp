#include "esnt/harness.hpp"

#include "esnt/classify.hpp"
#include "esnt/data.hpp"
#include "esnt/tucker.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace esnt::harness {

using nlohmann::json;

std::string_view to_string(Method m)
{
    switch (m) {
    case Method::WeightsPointwise: return "weights_pointwise";
    case Method::WeightsBlock: return "weights_block";
    case Method::TensorGlobal: return "tensor_global";
    case Method::TensorPerClass: return "tensor_perclass";
    }
    return "?";
}

Method parse_method(std::string_view name)
{
    for (Method m : {Method::WeightsPointwise, Method::WeightsBlock, Method::TensorGlobal, Method::TensorPerClass}) {
        if (to_string(m) == name) return m;
    }
    throw std::invalid_argument(fmt::format("unknown method '{}'", name));
}

namespace {

std::string_view dataset_name(DatasetKind k)
{
    switch (k) {
    case DatasetKind::SineSquare: return "sine_square";
    case DatasetKind::Usps: return "usps";
    case DatasetKind::JapaneseVowels: return "jv";
    }
    return "?";
}

DatasetKind parse_dataset_kind(std::string_view name)
{
    for (DatasetKind k : {DatasetKind::SineSquare, DatasetKind::Usps, DatasetKind::JapaneseVowels}) {
        if (dataset_name(k) == name) return k;
    }
    throw std::invalid_argument(fmt::format("unknown dataset kind '{}'", name));
}

bool is_tensor(Method m) { return m == Method::TensorGlobal || m == Method::TensorPerClass; }

long parse_long(std::string_view s, std::string_view context)
{
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw std::invalid_argument(fmt::format("cannot parse '{}' in {}", s, context));
    }
    return v;
}

// A number, or "[a*]pi[/b]" such as "pi/4".
double parse_angle(const json& j)
{
    if (j.is_number()) return j.get<double>();
    if (!j.is_string()) throw std::invalid_argument("beta entries must be numbers or strings like \"pi/4\"");
    std::string s;
    for (char c : j.get<std::string>()) {
        if (c != ' ') s.push_back(c);
    }
    const auto at = s.find("pi");
    if (at == std::string::npos) {
        throw std::invalid_argument(fmt::format("cannot parse beta '{}'", s));
    }
    std::string_view head(s.data(), at);
    if (head.ends_with('*')) head.remove_suffix(1);
    std::string_view tail(s.data() + at + 2, s.size() - at - 2);
    const double num = head.empty() ? 1.0 : static_cast<double>(parse_long(head, "beta"));
    double den = 1.0;
    if (!tail.empty()) {
        if (tail.front() != '/') throw std::invalid_argument(fmt::format("cannot parse beta '{}'", s));
        den = static_cast<double>(parse_long(tail.substr(1), "beta"));
    }
    return num * std::numbers::pi / den;
}

template <typename T>
void read_if(const json& obj, const char* key, T& out)
{
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, std::string_view where)
{
    for (const auto& [key, value] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw std::invalid_argument(fmt::format("unknown key '{}' in {}", key, where));
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream) { return splitmix64(base ^ splitmix64(stream)); }

}  // namespace

Index RankExpr::eval(Index n) const
{
    return uses_n ? static_cast<Index>((num * n) / den) : static_cast<Index>(num);
}

std::string RankExpr::str() const
{
    if (!uses_n) return std::to_string(num);
    std::string s = num == 1 ? "N" : fmt::format("{}N", num);
    if (den != 1) s += fmt::format("/{}", den);
    return s;
}

RankExpr parse_rank(std::string_view text)
{
    std::string s;
    for (char c : text) {
        if (c != ' ' && c != '*') s.push_back(c);
    }
    RankExpr r;
    const auto at = s.find('N');
    if (at == std::string::npos) {
        r.num = parse_long(s, "rank");
        if (r.num < 1) throw std::invalid_argument(fmt::format("rank '{}' must be >= 1", text));
        return r;
    }
    r.uses_n = true;
    const std::string_view head(s.data(), at);
    const std::string_view tail(s.data() + at + 1, s.size() - at - 1);
    r.num = head.empty() ? 1 : parse_long(head, "rank");
    if (!tail.empty()) {
        if (tail.front() != '/') throw std::invalid_argument(fmt::format("cannot parse rank '{}'", text));
        r.den = parse_long(tail.substr(1), "rank");
    }
    if (r.num < 1 || r.den < 1) throw std::invalid_argument(fmt::format("cannot parse rank '{}'", text));
    return r;
}

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir, bool full_paper)
{
    json j = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    reject_unknown(j,
                   {"name", "dataset", "esn", "methods", "ranks", "lambda", "noise_sigmas", "evaluate_train",
                    "hooi", "repetitions", "master_seed", "threads", "full_paper"},
                   "config");
    if (full_paper && j.contains("full_paper")) {
        const json patch = j.at("full_paper");
        j.merge_patch(patch);
    }

    ExperimentConfig cfg;
    read_if(j, "name", cfg.name);

    if (!j.contains("dataset")) throw std::invalid_argument("config needs a \"dataset\" block");
    const json& d = j.at("dataset");
    reject_unknown(d,
                   {"kind", "train_patterns", "test_patterns", "train_segments", "test_segments", "segment_len",
                    "path", "per_class", "train_path", "test_path", "resample_steps", "append_bias_rows"},
                   "dataset");
    DatasetSpec& ds = cfg.dataset;
    ds.kind = parse_dataset_kind(d.at("kind").get<std::string>());
    read_if(d, "train_patterns", ds.train_patterns);
    read_if(d, "test_patterns", ds.test_patterns);
    read_if(d, "train_segments", ds.train_segments);
    read_if(d, "test_segments", ds.test_segments);
    read_if(d, "segment_len", ds.segment_len);
    read_if(d, "per_class", ds.per_class);
    read_if(d, "resample_steps", ds.resample_steps);
    read_if(d, "append_bias_rows", ds.append_bias_rows);
    if (d.contains("path")) ds.usps_path = resolve(base_dir, d.at("path").get<std::string>());
    if (d.contains("train_path")) ds.jv_train = resolve(base_dir, d.at("train_path").get<std::string>());
    if (d.contains("test_path")) ds.jv_test = resolve(base_dir, d.at("test_path").get<std::string>());

    if (j.contains("esn")) {
        const json& e = j.at("esn");
        reject_unknown(e, {"nodes", "activations", "betas", "alpha", "density", "spectral_radius", "scale_in"}, "esn");
        read_if(e, "nodes", cfg.nodes);
        if (e.contains("activations")) {
            cfg.activations.clear();
            for (const auto& a : e.at("activations")) cfg.activations.push_back(parse_activation(a.get<std::string>()));
        }
        if (e.contains("betas")) {
            cfg.betas.clear();
            for (const auto& b : e.at("betas")) cfg.betas.push_back(parse_angle(b));
        }
        read_if(e, "alpha", cfg.alpha);
        read_if(e, "density", cfg.density);
        read_if(e, "spectral_radius", cfg.spectral_radius);
        read_if(e, "scale_in", cfg.scale_in);
    }
    if (j.contains("methods")) {
        cfg.methods.clear();
        for (const auto& m : j.at("methods")) cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("ranks")) {
        const json& r = j.at("ranks");
        reject_unknown(r, {"j1", "j2"}, "ranks");
        auto read_ranks = [&](const char* key, std::vector<RankExpr>& out) {
            if (!r.contains(key)) return;
            out.clear();
            for (const auto& v : r.at(key)) {
                out.push_back(v.is_number_integer() ? parse_rank(std::to_string(v.get<long>()))
                                                    : parse_rank(v.get<std::string>()));
            }
        };
        read_ranks("j1", cfg.j1);
        read_ranks("j2", cfg.j2);
    }
    read_if(j, "lambda", cfg.lambda);
    read_if(j, "noise_sigmas", cfg.noise_sigmas);
    read_if(j, "evaluate_train", cfg.evaluate_train);
    if (j.contains("hooi")) {
        const json& h = j.at("hooi");
        reject_unknown(h, {"tol", "max_iters"}, "hooi");
        read_if(h, "tol", cfg.hooi_tol);
        read_if(h, "max_iters", cfg.hooi_max_iters);
    }
    read_if(j, "repetitions", cfg.repetitions);
    read_if(j, "master_seed", cfg.master_seed);
    read_if(j, "threads", cfg.threads);

    if (cfg.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (cfg.nodes.empty() || cfg.activations.empty() || cfg.betas.empty() || cfg.methods.empty() ||
        cfg.j1.empty() || cfg.j2.empty() || cfg.noise_sigmas.empty()) {
        throw std::invalid_argument("every grid (nodes, activations, betas, methods, ranks, noise_sigmas) must be nonempty");
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, bool full_paper)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open config {}", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path(), full_paper);
}

std::string template_config(DatasetKind kind)
{
    switch (kind) {
    case DatasetKind::SineSquare:
        return R"({
  // Sine vs. square segment classification.
  "name": "sine_square",
  "dataset": {"kind": "sine_square", "train_patterns": 20, "test_patterns": 50,
              "train_segments": 100, "test_segments": 100, "segment_len": 100},
  // Pointwise readouts need a short-memory reservoir and a nearly unregularized fit.
  "esn": {"nodes": [10, 20, 50], "activations": ["tanh", "sin"], "betas": [0, "pi/4"],
          "alpha": 1.0, "density": 0.1, "spectral_radius": 0.4, "scale_in": 1.0},
  "methods": ["weights_pointwise", "weights_block", "tensor_perclass"],
  "ranks": {"j1": ["N/5"], "j2": [5]},
  "lambda": 1e-7,
  "noise_sigmas": [0.0],
  "hooi": {"tol": 1e-6, "max_iters": 100},
  "repetitions": 5,
  "master_seed": 1,
  "full_paper": {"repetitions": 50}
}
)";
    case DatasetKind::Usps:
        return R"({
  // USPS digits, images read column by column as 16-step sequences.
  "name": "usps",
  "dataset": {"kind": "usps", "path": "../data/usps/usps.txt", "per_class": 30},
  "esn": {"nodes": [10, 25, 50], "activations": ["tanh"], "betas": ["pi/4"],
          "alpha": 1.0, "density": 0.1, "spectral_radius": 0.95, "scale_in": 1.0},
  "methods": ["weights_block", "tensor_global"],
  "ranks": {"j1": [5, 10, "N/2", "3N/4"], "j2": [4, 8, 12]},
  "lambda": 0.01,
  "noise_sigmas": [0.0],
  "hooi": {"tol": 1e-6, "max_iters": 100},
  "repetitions": 10,
  "master_seed": 1,
  "full_paper": {"repetitions": 40, "dataset": {"per_class": 100}, "esn": {"nodes": [10, 25, 50, 100]}}
}
)";
    case DatasetKind::JapaneseVowels:
        return R"({
  // Japanese Vowels speaker identification with noisy test inputs.
  "name": "jv",
  "dataset": {"kind": "jv", "train_path": "../data/jv/ae.train", "test_path": "../data/jv/ae.test",
              "resample_steps": 24, "append_bias_rows": true},
  "esn": {"nodes": [4, 10, 20], "activations": ["sin"], "betas": ["pi/4"],
          "alpha": 1.0, "density": 0.1, "spectral_radius": 0.95, "scale_in": 1.0},
  "methods": ["weights_block", "tensor_global"],
  "ranks": {"j1": ["N/2"], "j2": [12]},
  "lambda": 0.01,
  "noise_sigmas": [0.0, 0.05, 0.10],
  "evaluate_train": false,
  "hooi": {"tol": 1e-6, "max_iters": 100},
  "repetitions": 10,
  "master_seed": 1,
  "full_paper": {"repetitions": 20, "esn": {"nodes": [4, 10, 20, 50]}}
}
)";
    }
    return {};
}

std::uint64_t repetition_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t rep)
{
    return splitmix64(splitmix64(splitmix64(master) + cell) + rep);
}

namespace {

// One classification unit: a whole sample, or one segment of a sine/square pattern.
struct Unit {
    Matrix states;
    int label = 0;
    std::vector<int> pointwise;  // per column
};

struct Cell {
    Index nodes;
    Activation activation;
    double beta;
};

struct Measurement {
    Method method;
    bool train;
    std::size_t sigma_index;
    TuckerRanks ranks;
    double accuracy;
};

struct JobResult {
    std::vector<Measurement> measurements;
    int hooi_unconverged = 0;
    std::string error;
};

struct SharedData {
    std::optional<data::Dataset> jv_train;
    std::optional<data::Dataset> jv_test;
};

Index input_rows(const ExperimentConfig& cfg)
{
    switch (cfg.dataset.kind) {
    case DatasetKind::SineSquare: return 1;
    case DatasetKind::Usps: return 16;
    case DatasetKind::JapaneseVowels: return cfg.dataset.append_bias_rows ? 14 : 12;
    }
    return 0;
}

std::vector<Unit> to_units(const Reservoir& r, const data::Dataset& d, const ExperimentConfig& cfg)
{
    std::vector<Unit> units;
    for (const auto& s : d.samples) {
        Matrix states = run(r, s.input);
        if (cfg.dataset.kind == DatasetKind::SineSquare) {
            // The whole pattern runs as one sequence; segments are cut afterwards.
            const Index len = cfg.dataset.segment_len;
            for (Index start = 0; start + len <= states.cols(); start += len) {
                Unit u;
                u.states = states.middleCols(start, len);
                u.pointwise.assign(s.pointwise_labels.begin() + start, s.pointwise_labels.begin() + start + len);
                u.label = u.pointwise.front();
                units.push_back(std::move(u));
            }
        } else {
            Unit u;
            u.label = s.label;
            u.pointwise.assign(static_cast<std::size_t>(states.cols()), s.label);
            u.states = std::move(states);
            units.push_back(std::move(u));
        }
    }
    return units;
}

struct Trained {
    std::optional<OutputWeights> weights;
    std::vector<std::pair<TuckerRanks, TuckerModel>> global;
    std::vector<std::pair<TuckerRanks, std::vector<TuckerModel>>> per_class;
};

double percent(std::size_t good, std::size_t total) { return total == 0 ? 0.0 : 100.0 * good / total; }

void evaluate(const ExperimentConfig& cfg, const Trained& trained, const std::vector<Unit>& units, bool train,
              std::size_t sigma_index, std::vector<Measurement>& out)
{
    for (Method m : cfg.methods) {
        switch (m) {
        case Method::WeightsPointwise: {
            std::size_t good = 0;
            std::size_t total = 0;
            for (const auto& u : units) {
                const Matrix scores = trained.weights->w * u.states;
                for (Index t = 0; t < scores.cols(); ++t) {
                    Index best = 0;
                    scores.col(t).maxCoeff(&best);
                    good += best == u.pointwise[static_cast<std::size_t>(t)] ? 1 : 0;
                    ++total;
                }
            }
            out.push_back({m, train, sigma_index, {}, percent(good, total)});
            break;
        }
        case Method::WeightsBlock: {
            std::size_t good = 0;
            for (const auto& u : units) good += classify_block(*trained.weights, u.states).label == u.label ? 1 : 0;
            out.push_back({m, train, sigma_index, {}, percent(good, units.size())});
            break;
        }
        case Method::TensorGlobal:
            for (const auto& [ranks, model] : trained.global) {
                std::size_t good = 0;
                for (const auto& u : units) good += classify_global_tensor(u.states, model).label == u.label ? 1 : 0;
                out.push_back({m, train, sigma_index, ranks, percent(good, units.size())});
            }
            break;
        case Method::TensorPerClass:
            for (const auto& [ranks, models] : trained.per_class) {
                std::size_t good = 0;
                for (const auto& u : units) good += classify_perclass_tensor(u.states, models).label == u.label ? 1 : 0;
                out.push_back({m, train, sigma_index, ranks, percent(good, units.size())});
            }
            break;
        }
    }
}

std::vector<TuckerRanks> rank_grid(const ExperimentConfig& cfg, Index nodes, Index steps)
{
    std::vector<TuckerRanks> grid;
    for (const auto& a : cfg.j1) {
        for (const auto& b : cfg.j2) {
            const TuckerRanks r{std::clamp<Index>(a.eval(nodes), 1, nodes), std::clamp<Index>(b.eval(nodes), 1, steps)};
            if (std::find(grid.begin(), grid.end(), r) == grid.end()) grid.push_back(r);
        }
    }
    return grid;
}

JobResult run_job(const ExperimentConfig& cfg, const SharedData& shared, const Cell& cell, std::uint64_t base_seed)
{
    JobResult result;
    ReservoirParams params;
    params.nodes = cell.nodes;
    params.inputs = input_rows(cfg);
    params.density = cfg.density;
    params.scale_in = cfg.scale_in;
    params.spectral_radius = cfg.spectral_radius;
    params.alpha = cfg.alpha;
    params.beta = cell.beta;
    params.activation = cell.activation;
    params.seed = stream_seed(base_seed, 1);
    const Reservoir reservoir = make_reservoir(params);

    const std::uint64_t data_seed = stream_seed(base_seed, 2);
    data::Dataset train_data;
    data::Dataset test_data;
    const DatasetSpec& ds = cfg.dataset;
    switch (ds.kind) {
    case DatasetKind::SineSquare:
        train_data = data::gen_sine_square(ds.train_patterns, ds.train_segments, ds.segment_len, data_seed);
        test_data = data::gen_sine_square(ds.test_patterns, ds.test_segments, ds.segment_len, stream_seed(data_seed, 1));
        break;
    case DatasetKind::Usps:
        train_data = data::load_usps(ds.usps_path, ds.per_class, data::Split::Train, data_seed);
        test_data = data::load_usps(ds.usps_path, ds.per_class, data::Split::Test, data_seed);
        break;
    case DatasetKind::JapaneseVowels:
        train_data = *shared.jv_train;
        test_data = *shared.jv_test;
        break;
    }

    const std::vector<Unit> train_units = to_units(reservoir, train_data, cfg);
    std::vector<Matrix> slices;
    std::vector<int> labels;
    std::vector<int> pointwise;
    for (const auto& u : train_units) {
        slices.push_back(u.states);
        labels.push_back(u.label);
        pointwise.insert(pointwise.end(), u.pointwise.begin(), u.pointwise.end());
    }
    const Tensor3 x = stack_states(slices);
    slices.clear();

    Trained trained;
    const bool any_weights = std::any_of(cfg.methods.begin(), cfg.methods.end(), [](Method m) { return !is_tensor(m); });
    if (any_weights) {
        trained.weights = train_output_weights(x, labels, train_data.classes, cfg.lambda, pointwise);
    }

    HooiConfig hooi_cfg;
    hooi_cfg.tol = cfg.hooi_tol;
    hooi_cfg.max_iters = cfg.hooi_max_iters;
    hooi_cfg.seed = stream_seed(base_seed, 3);
    const auto grid = rank_grid(cfg, cell.nodes, x.dims().i2);
    const bool want_global = std::find(cfg.methods.begin(), cfg.methods.end(), Method::TensorGlobal) != cfg.methods.end();
    const bool want_per_class = std::find(cfg.methods.begin(), cfg.methods.end(), Method::TensorPerClass) != cfg.methods.end();

    std::vector<Tensor3> class_tensors;
    if (want_per_class) {
        for (int k = 0; k < train_data.classes; ++k) {
            std::vector<Matrix> members;
            for (const auto& u : train_units) {
                if (u.label == k) members.push_back(u.states);
            }
            if (members.empty()) {
                throw std::runtime_error(fmt::format("class {} has no training samples", k));
            }
            class_tensors.push_back(stack_states(members));
        }
    }
    for (const auto& ranks : grid) {
        hooi_cfg.ranks = ranks;
        if (want_global) {
            TuckerModel model = hooi(x, hooi_cfg, labels);
            result.hooi_unconverged += model.converged ? 0 : 1;
            trained.global.emplace_back(ranks, std::move(model));
        }
        if (want_per_class) {
            auto models = fit_per_class(class_tensors, hooi_cfg);
            for (const auto& m : models) result.hooi_unconverged += m.converged ? 0 : 1;
            trained.per_class.emplace_back(ranks, std::move(models));
        }
    }

    if (cfg.evaluate_train) {
        evaluate(cfg, trained, train_units, true, 0, result.measurements);
    }
    for (std::size_t s = 0; s < cfg.noise_sigmas.size(); ++s) {
        const double sigma = cfg.noise_sigmas[s];
        const data::Dataset noisy = sigma == 0.0 ? test_data : data::add_noise(test_data, sigma, stream_seed(base_seed, 10 + s));
        evaluate(cfg, trained, to_units(reservoir, noisy, cfg), false, s, result.measurements);
    }
    return result;
}

std::string sanitize(std::string s)
{
    std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ';');
    return s;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg)
{
    if (cfg.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (cfg.nodes.empty() || cfg.activations.empty() || cfg.betas.empty() || cfg.methods.empty() || cfg.j1.empty() ||
        cfg.j2.empty() || cfg.noise_sigmas.empty()) {
        throw std::invalid_argument("experiment grids must be nonempty");
    }

    SharedData shared;
    std::string shared_error;
    if (cfg.dataset.kind == DatasetKind::JapaneseVowels) {
        try {
            data::JvOptions opts;
            opts.resample_steps = cfg.dataset.resample_steps;
            opts.append_bias_rows = cfg.dataset.append_bias_rows;
            auto [train, test] = data::load_jv(cfg.dataset.jv_train, cfg.dataset.jv_test, opts);
            shared.jv_train = std::move(train);
            shared.jv_test = std::move(test);
        } catch (const std::exception& e) {
            shared_error = e.what();
        }
    }

    std::vector<Cell> cells;
    for (Index n : cfg.nodes) {
        for (Activation a : cfg.activations) {
            for (double b : cfg.betas) cells.push_back({n, a, b});
        }
    }
    const std::size_t reps = static_cast<std::size_t>(cfg.repetitions);
    const std::size_t jobs = cells.size() * reps;
    std::vector<JobResult> results(jobs);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs; i = next++) {
            const std::size_t c = i / reps;
            const std::size_t rep = i % reps;
            if (!shared_error.empty()) {
                results[i].error = shared_error;
                continue;
            }
            try {
                results[i] = run_job(cfg, shared, cells[c], repetition_seed(cfg.master_seed, c, rep));
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t threads = std::min<std::size_t>(cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : hw, jobs);
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }

    std::vector<ResultRow> rows;
    const std::string dataset(dataset_name(cfg.dataset.kind));
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const Cell& cell = cells[c];
        ResultRow base;
        base.dataset = dataset;
        base.nodes = cell.nodes;
        base.activation = std::string(to_string(cell.activation));
        base.beta = cell.beta;
        base.repetitions = cfg.repetitions;
        base.rep_seed0 = repetition_seed(cfg.master_seed, c, 0);

        const JobResult* failed = nullptr;
        int unconverged = 0;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            const JobResult& r = results[c * reps + rep];
            if (!r.error.empty() && failed == nullptr) failed = &r;
            unconverged += r.hooi_unconverged;
        }
        if (failed != nullptr) {
            ResultRow row = base;
            row.method = "-";
            row.split = "-";
            row.error = sanitize(failed->error);
            rows.push_back(std::move(row));
            continue;
        }

        // Aggregate by (method, split, sigma, ranks) in first-seen order.
        using Key = std::tuple<int, bool, std::size_t, Index, Index>;
        std::vector<Key> order;
        std::map<Key, std::vector<double>> samples;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            for (const auto& m : results[c * reps + rep].measurements) {
                const Key key{static_cast<int>(m.method), m.train, m.sigma_index, m.ranks.j1, m.ranks.j2};
                auto [it, inserted] = samples.try_emplace(key);
                if (inserted) order.push_back(key);
                it->second.push_back(m.accuracy);
            }
        }
        for (const Key& key : order) {
            const auto& acc = samples.at(key);
            const auto [method, train, sigma_index, j1, j2] = key;
            ResultRow row = base;
            row.method = std::string(to_string(static_cast<Method>(method)));
            row.split = train ? "train" : "test";
            row.j1 = is_tensor(static_cast<Method>(method)) ? j1 : 0;
            row.j2 = is_tensor(static_cast<Method>(method)) ? j2 : 0;
            row.sigma = train ? 0.0 : cfg.noise_sigmas[sigma_index];
            double mean = 0.0;
            for (double a : acc) mean += a;
            mean /= static_cast<double>(acc.size());
            double var = 0.0;
            for (double a : acc) var += (a - mean) * (a - mean);
            row.mean_accuracy = mean;
            row.rep_accuracies = acc;
            row.std_accuracy = acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0;
            row.hooi_unconverged = is_tensor(static_cast<Method>(method)) ? unconverged : 0;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

const char* const kRowsHeader =
    "dataset,method,split,N,activation,beta,J1,J2,sigma,repetitions,mean_accuracy,std_accuracy,rep_seed0,"
    "hooi_unconverged,error";

void write_rows_csv(const std::vector<ResultRow>& rows, std::ostream& os)
{
    os << kRowsHeader << '\n';
    for (const auto& r : rows) {
        os << fmt::format("{},{},{},{},{},{:.6f},{},{},{:.6f},{},{:.6f},{:.6f},{},{},{}\n", r.dataset, r.method,
                          r.split, r.nodes, r.activation, r.beta, r.j1, r.j2, r.sigma, r.repetitions,
                          r.mean_accuracy, r.std_accuracy, r.rep_seed0, r.hooi_unconverged, sanitize(r.error));
    }
}

std::vector<ResultRow> read_rows_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != kRowsHeader) {
        throw std::runtime_error("result CSV does not start with the expected header");
    }
    std::vector<ResultRow> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 15) {
            throw std::runtime_error(fmt::format("result CSV line {} has {} fields, expected 15", line_no, f.size()));
        }
        try {
            ResultRow r;
            r.dataset = f[0];
            r.method = f[1];
            r.split = f[2];
            r.nodes = std::stol(f[3]);
            r.activation = f[4];
            r.beta = std::stod(f[5]);
            r.j1 = std::stol(f[6]);
            r.j2 = std::stol(f[7]);
            r.sigma = std::stod(f[8]);
            r.repetitions = std::stoi(f[9]);
            r.mean_accuracy = std::stod(f[10]);
            r.std_accuracy = std::stod(f[11]);
            r.rep_seed0 = std::stoull(f[12]);
            r.hooi_unconverged = std::stoi(f[13]);
            r.error = f[14];
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw std::runtime_error(fmt::format("result CSV line {} has a malformed number", line_no));
        }
    }
    return rows;
}

const char* const kSummaryHeader = "dataset,method,split,N,activation,beta,J1,J2,sigma,repetitions,accuracy,single_rep,error";

std::string format_mean_std(double mean, double std_dev) { return fmt::format("{:.2f} ({:.2f})", mean, std_dev); }

std::vector<std::vector<std::string>> summarize(const std::vector<ResultRow>& rows)
{
    if (rows.empty()) throw std::invalid_argument("nothing to summarize");
    std::vector<std::vector<std::string>> table;
    for (const auto& r : rows) {
        table.push_back({r.dataset, r.method, r.split, std::to_string(r.nodes), r.activation,
                         fmt::format("{:.4f}", r.beta), std::to_string(r.j1), std::to_string(r.j2),
                         fmt::format("{:.2f}", r.sigma), std::to_string(r.repetitions),
                         r.error.empty() ? format_mean_std(r.mean_accuracy, r.std_accuracy) : std::string("-"),
                         r.repetitions == 1 ? "1" : "0", sanitize(r.error)});
    }
    return table;
}

void write_summary_csv(const std::vector<ResultRow>& rows, std::ostream& os)
{
    os << kSummaryHeader << '\n';
    for (const auto& fields : summarize(rows)) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            os << (i ? "," : "") << fields[i];
        }
        os << '\n';
    }
}

std::vector<std::filesystem::path> write_figure_data(const std::vector<ResultRow>& rows, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    using SeriesKey = std::tuple<std::string, std::string, std::string, std::string, double, double>;
    std::vector<SeriesKey> order;
    // Best row (by mean) for each N within each series.
    std::map<SeriesKey, std::map<Index, const ResultRow*>> series;
    for (const auto& r : rows) {
        if (!r.error.empty()) continue;
        const SeriesKey key{r.dataset, r.method, r.split, r.activation, r.beta, r.sigma};
        auto [it, inserted] = series.try_emplace(key);
        if (inserted) order.push_back(key);
        const ResultRow*& best = it->second[r.nodes];
        if (best == nullptr || r.mean_accuracy > best->mean_accuracy) best = &r;
    }
    std::vector<std::filesystem::path> written;
    for (const auto& key : order) {
        const auto& [dataset, method, split, activation, beta, sigma] = key;
        const auto path = dir / fmt::format("{}_{}_{}_{}_beta{:.4f}_sigma{:.2f}.dat", dataset, method, split,
                                            activation, beta, sigma);
        std::ofstream os(path);
        if (!os) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
        os << "# N mean std J1 J2\n";
        for (const auto& [n, row] : series.at(key)) {
            os << fmt::format("{} {:.6f} {:.6f} {} {}\n", n, row->mean_accuracy, row->std_accuracy, row->j1, row->j2);
        }
        written.push_back(path);
    }
    return written;
}

}  // namespace esnt::harness
