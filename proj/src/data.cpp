#include "esnt/data.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <string_view>

namespace esnt::data {

namespace {

constexpr int kUspsSide = 16;
constexpr int kUspsClasses = 10;
constexpr int kJvSpeakers = 9;
constexpr int kJvCoefficients = 12;
constexpr int kJvTrainPerSpeaker = 30;

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Whitespace-separated doubles; returns false on any non-numeric token.
bool parse_numbers(std::string_view line, std::vector<double>& out)
{
    out.clear();
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
        while (p < end && (*p == ' ' || *p == '\t' || *p == '\r' || *p == ',')) ++p;
        if (p == end) break;
        double v = 0.0;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc{} || !std::isfinite(v)) return false;
        if (next < end && !(*next == ' ' || *next == '\t' || *next == '\r' || *next == ',')) return false;
        out.push_back(v);
        p = next;
    }
    return true;
}

std::ifstream open_text(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError(fmt::format("cannot open {}", path.string()));
    }
    return in;
}

struct Block {
    Matrix frames;  // coefficients x frames
    std::size_t first_line = 0;
};

std::vector<Block> read_ae_blocks(const std::filesystem::path& path)
{
    std::ifstream in = open_text(path);
    std::vector<Block> blocks;
    std::vector<std::vector<double>> rows;
    std::size_t first_line = 0;
    std::string line;
    std::vector<double> numbers;
    std::size_t line_no = 0;

    auto flush = [&] {
        if (rows.empty()) return;
        Block b;
        b.first_line = first_line;
        b.frames.resize(kJvCoefficients, static_cast<Index>(rows.size()));
        for (std::size_t t = 0; t < rows.size(); ++t) {
            for (int c = 0; c < kJvCoefficients; ++c) {
                b.frames(c, static_cast<Index>(t)) = rows[t][static_cast<std::size_t>(c)];
            }
        }
        blocks.push_back(std::move(b));
        rows.clear();
    };

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty()) {
            flush();
            continue;
        }
        if (!parse_numbers(body, numbers)) {
            throw FormatError(fmt::format("{}:{}: non-numeric value", path.string(), line_no));
        }
        if (numbers.size() != kJvCoefficients) {
            throw FormatError(fmt::format("{}:{}: expected {} coefficients, found {}", path.string(), line_no,
                                          kJvCoefficients, numbers.size()));
        }
        if (rows.empty()) first_line = line_no;
        rows.push_back(numbers);
    }
    flush();
    return blocks;
}

std::vector<int> read_counts(const std::filesystem::path& path)
{
    std::ifstream in = open_text(path);
    std::map<int, int> by_speaker;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw FormatError(fmt::format("{}:{}: expected 'key = value'", path.string(), line_no));
        }
        const std::string_view key = trim(body.substr(0, eq));
        const std::string_view value = trim(body.substr(eq + 1));
        int speaker = 0;
        int count = 0;
        constexpr std::string_view prefix = "speaker";
        if (!key.starts_with(prefix) ||
            std::from_chars(key.data() + prefix.size(), key.data() + key.size(), speaker).ec != std::errc{} ||
            std::from_chars(value.data(), value.data() + value.size(), count).ec != std::errc{} ||
            speaker < 1 || speaker > kJvSpeakers || count < 0) {
            throw FormatError(fmt::format("{}:{}: bad entry '{}'", path.string(), line_no, body));
        }
        by_speaker[speaker] = count;
    }
    std::vector<int> counts;
    for (int s = 1; s <= kJvSpeakers; ++s) {
        auto it = by_speaker.find(s);
        if (it == by_speaker.end()) {
            throw FormatError(fmt::format("{}: missing count for speaker{}", path.string(), s));
        }
        counts.push_back(it->second);
    }
    return counts;
}

Dataset assemble_jv(const std::filesystem::path& path, const std::vector<int>& counts, const JvOptions& opts,
                    const std::string& name)
{
    std::vector<Block> blocks = read_ae_blocks(path);
    std::size_t expected = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
        const std::size_t before = expected;
        expected += static_cast<std::size_t>(counts[s]);
        if (blocks.size() < expected) {
            throw FormatError(fmt::format("{}: speaker {} expects {} utterance blocks but only {} remain",
                                          path.string(), s + 1, counts[s], blocks.size() - before));
        }
    }
    if (blocks.size() != expected) {
        throw FormatError(fmt::format("{}: {} utterance blocks beyond the last speaker's {}", path.string(),
                                      blocks.size() - expected, counts.back()));
    }

    Dataset d;
    d.name = name;
    d.classes = kJvSpeakers;
    std::size_t b = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
        for (int i = 0; i < counts[s]; ++i, ++b) {
            const Matrix& frames = blocks[b].frames;
            if (frames.cols() < 2) {
                throw FormatError(fmt::format("{}:{}: utterance needs at least two frames", path.string(),
                                              blocks[b].first_line));
            }
            Matrix resampled = resample_temporal(frames, opts.resample_steps);
            LabeledSample sample;
            if (opts.append_bias_rows) {
                sample.input.resize(kJvCoefficients + 2, resampled.cols());
                sample.input.topRows(kJvCoefficients) = resampled;
                sample.input.bottomRows(2).setOnes();
            } else {
                sample.input = std::move(resampled);
            }
            sample.label = static_cast<int>(s);
            sample.id = fmt::format("{}#{}", name, b);
            d.samples.push_back(std::move(sample));
        }
    }
    return d;
}

}  // namespace

Dataset gen_sine_square(int num_patterns, int segments_per_pattern, int segment_len, std::uint64_t seed)
{
    if (num_patterns < 1 || segments_per_pattern < 1 || segment_len < 2) {
        throw std::invalid_argument(fmt::format(
            "sine/square generator needs patterns, segments >= 1 and segment length >= 2, got {}, {}, {}",
            num_patterns, segments_per_pattern, segment_len));
    }
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution square(0.5);
    const double two_pi = 2.0 * std::numbers::pi;

    Dataset d;
    d.name = "sine_square";
    d.classes = 2;
    for (int p = 0; p < num_patterns; ++p) {
        LabeledSample s;
        s.id = fmt::format("pattern{}", p);
        s.input.resize(1, static_cast<Index>(segments_per_pattern) * segment_len);
        s.pointwise_labels.resize(static_cast<std::size_t>(s.input.cols()));
        int square_segments = 0;
        for (int g = 0; g < segments_per_pattern; ++g) {
            const bool is_square = square(rng);
            square_segments += is_square ? 1 : 0;
            for (int t = 0; t < segment_len; ++t) {
                const Index col = static_cast<Index>(g) * segment_len + t;
                s.input(0, col) = is_square ? (2 * t < segment_len ? 1.0 : -1.0)
                                            : std::sin(two_pi * t / segment_len);
                s.pointwise_labels[static_cast<std::size_t>(col)] = is_square ? 1 : 0;
            }
        }
        s.label = 2 * square_segments > segments_per_pattern ? 1 : 0;
        d.samples.push_back(std::move(s));
    }
    return d;
}

Dataset load_usps(const std::filesystem::path& path, int per_class, Split split, std::uint64_t seed)
{
    if (per_class < 1) {
        throw std::invalid_argument(fmt::format("per_class must be >= 1, got {}", per_class));
    }
    std::ifstream in = open_text(path);
    struct Image {
        Matrix pixels;
        std::size_t line;
    };
    std::vector<std::vector<Image>> by_class(kUspsClasses);
    std::string line;
    std::vector<double> numbers;
    std::size_t line_no = 0;
    constexpr std::size_t kValues = 1 + kUspsSide * kUspsSide;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (!parse_numbers(body, numbers)) {
            throw FormatError(fmt::format("{}:{}: non-numeric value", path.string(), line_no));
        }
        if (numbers.size() != kValues) {
            throw FormatError(fmt::format("{}:{}: expected a label and {} pixels, found {} values",
                                          path.string(), line_no, kValues - 1, numbers.size()));
        }
        const double raw_label = numbers.front();
        if (raw_label != std::floor(raw_label) || raw_label < 0 || raw_label >= kUspsClasses) {
            throw FormatError(fmt::format("{}:{}: label {} is not a digit 0-9", path.string(), line_no, raw_label));
        }
        Matrix img(kUspsSide, kUspsSide);
        for (int y = 0; y < kUspsSide; ++y) {
            for (int x = 0; x < kUspsSide; ++x) {
                img(y, x) = numbers[static_cast<std::size_t>(1 + y * kUspsSide + x)];
            }
        }
        const double lo = img.minCoeff();
        const double hi = img.maxCoeff();
        img = hi > lo ? Matrix((img.array() - lo) / (hi - lo)) : Matrix::Zero(kUspsSide, kUspsSide);
        by_class[static_cast<std::size_t>(raw_label)].push_back({std::move(img), line_no});
    }

    Dataset d;
    d.name = split == Split::Train ? "usps_train" : "usps_test";
    d.classes = kUspsClasses;
    std::mt19937_64 rng(seed);
    for (int k = 0; k < kUspsClasses; ++k) {
        auto& images = by_class[static_cast<std::size_t>(k)];
        if (images.size() < 2 * static_cast<std::size_t>(per_class)) {
            throw FormatError(fmt::format(
                "{}: digit {} has {} images, need {} for disjoint train/test draws of {}", path.string(), k,
                images.size(), 2 * per_class, per_class));
        }
        std::vector<std::size_t> order(images.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        const std::size_t offset = split == Split::Train ? 0 : static_cast<std::size_t>(per_class);
        for (int i = 0; i < per_class; ++i) {
            const Image& img = images[order[offset + static_cast<std::size_t>(i)]];
            d.samples.push_back({img.pixels, k, {}, fmt::format("usps:{}", img.line)});
        }
    }
    return d;
}

std::pair<Dataset, Dataset> load_jv(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                                    const JvOptions& opts)
{
    if (opts.resample_steps < 2) {
        throw std::invalid_argument(fmt::format("resample_steps must be >= 2, got {}", opts.resample_steps));
    }
    const std::filesystem::path counts_path =
        opts.test_counts.empty() ? std::filesystem::path(test_path.string() + ".counts") : opts.test_counts;
    const std::vector<int> train_counts(kJvSpeakers, kJvTrainPerSpeaker);
    return {assemble_jv(train_path, train_counts, opts, "jv_train"),
            assemble_jv(test_path, read_counts(counts_path), opts, "jv_test")};
}

Dataset add_noise(const Dataset& d, double sigma, std::uint64_t seed)
{
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument(fmt::format("noise sigma must be finite and >= 0, got {}", sigma));
    }
    Dataset out = d;
    if (sigma == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& s : out.samples) {
        for (Index c = 0; c < s.input.cols(); ++c) {
            for (Index r = 0; r < s.input.rows(); ++r) {
                s.input(r, c) += noise(rng);
            }
        }
    }
    return out;
}

Matrix resample_temporal(const Matrix& m, Index steps)
{
    if (steps < 2 || m.cols() < 2) {
        throw std::invalid_argument(fmt::format(
            "resampling needs at least two input and output steps, got {} -> {}", m.cols(), steps));
    }
    const Index last = m.cols() - 1;
    Matrix out(m.rows(), steps);
    for (Index i = 0; i < steps; ++i) {
        const double pos = static_cast<double>(i * last) / static_cast<double>(steps - 1);
        const auto lo = std::min(static_cast<Index>(std::floor(pos)), last);
        const double frac = pos - static_cast<double>(lo);
        if (frac == 0.0) {
            out.col(i) = m.col(lo);
        } else {
            out.col(i) = (1.0 - frac) * m.col(lo) + frac * m.col(lo + 1);
        }
    }
    return out;
}

}  // namespace esnt::data
