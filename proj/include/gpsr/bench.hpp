#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpsr/errors.hpp"
#include "gpsr/intervals.hpp"
#include "gpsr/rng.hpp"

namespace gpsr {

// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct DatasetMeta {
    std::string name;
    std::vector<Interval> domain;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
};

// Sample S of (x, y) pairs, x stored row-major, with a disjoint and
// exhaustive train/test partition of the row indices. Immutable.
class Dataset {
public:
    Dataset(std::size_t dims, std::vector<double> x, std::vector<double> y, std::vector<std::size_t> train,
            std::vector<std::size_t> test, DatasetMeta meta = {})
        : dims_(dims), x_(std::move(x)), y_(std::move(y)), train_(std::move(train)), test_(std::move(test)),
          meta_(std::move(meta)) {
        if (dims_ == 0) throw std::invalid_argument("dataset needs at least one input dimension");
        if (x_.size() != y_.size() * dims_) throw std::invalid_argument("dataset: x has wrong shape");
        if (!std::all_of(x_.begin(), x_.end(), [](double v) { return std::isfinite(v); }) ||
            !std::all_of(y_.begin(), y_.end(), [](double v) { return std::isfinite(v); })) {
            throw std::invalid_argument("dataset contains NaN or Inf");
        }
        std::vector<int> seen(y_.size(), 0);
        for (auto i : train_) seen.at(i) += 1;
        for (auto i : test_) seen.at(i) += 1;
        if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
            throw std::invalid_argument("dataset split must be disjoint and exhaustive");
        }
        if (meta_.domain.empty()) meta_.domain = bounding_box();
    }

    std::size_t size() const noexcept { return y_.size(); }
    std::size_t dims() const noexcept { return dims_; }
    std::span<const double> row(std::size_t i) const { return {x_.data() + i * dims_, dims_}; }
    double target(std::size_t i) const { return y_[i]; }
    std::span<const double> x() const noexcept { return x_; }
    std::span<const double> y() const noexcept { return y_; }
    const std::vector<std::size_t>& train() const noexcept { return train_; }
    const std::vector<std::size_t>& test() const noexcept { return test_; }
    const DatasetMeta& meta() const noexcept { return meta_; }
    std::span<const Interval> domain() const noexcept { return meta_.domain; }

    Dataset with_split(std::vector<std::size_t> train, std::vector<std::size_t> test) const {
        return Dataset(dims_, x_, y_, std::move(train), std::move(test), meta_);
    }

    Dataset swapped() const { return with_split(test_, train_); }

    std::vector<Interval> bounding_box() const {
        std::vector<Interval> box(dims_, Interval{0.0, 0.0, true});
        for (std::size_t j = 0; j < dims_; ++j) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t i = 0; i < size(); ++i) {
                lo = std::min(lo, x_[i * dims_ + j]);
                hi = std::max(hi, x_[i * dims_ + j]);
            }
            if (size() > 0) box[j] = {lo, hi, true};
        }
        return box;
    }

private:
    std::size_t dims_;
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<std::size_t> train_;
    std::vector<std::size_t> test_;
    DatasetMeta meta_;
};

// Deterministic shuffled partition; the test side gets round(m * test_fraction) rows.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t m, double test_fraction,
                                                                                   std::uint64_t split_seed) {
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng = make_rng(split_seed, 0x5b11);
    for (std::size_t i = m; i > 1; --i) {
        const auto j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
        std::swap(idx[i - 1], idx[j]);
    }
    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(m) * test_fraction));
    std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

// ---- synthetic targets ---------------------------------------------------

struct Target {
    std::string_view name;
    std::size_t dims;
    double (*fn)(std::span<const double>);
};

inline constexpr std::array<Target, 4> kTargets{{
    {"poly3", 1, [](std::span<const double> x) { return x[0] * x[0] * x[0] + x[0] * x[0] + x[0]; }},
    {"keijzer_sine", 1,
     [](std::span<const double> x) { return 0.3 * x[0] * std::sin(2.0 * std::numbers::pi * x[0]); }},
    {"rational", 1, [](std::span<const double> x) { return 1.0 / (1.0 + x[0] * x[0]); }},
    {"bivariate", 2, [](std::span<const double> x) { return x[0] * x[1] + std::sin(x[0]); }},
}};

inline const Target& find_target(std::string_view name) {
    for (const auto& t : kTargets) {
        if (t.name == name) return t;
    }
    throw UnknownTarget("unknown target '" + std::string(name) + "'");
}

// x uniform over the domain box, y = target(x) + N(0, noise_sigma^2).
inline Dataset synthesize(std::string_view target, std::size_t m, std::vector<Interval> domain, double noise_sigma,
                          std::uint64_t seed, double test_fraction = 0.5, std::optional<std::uint64_t> split_seed = {}) {
    const Target& t = find_target(target);
    if (domain.size() != t.dims) {
        throw std::invalid_argument("target " + std::string(target) + " needs a " + std::to_string(t.dims) +
                                    "-dimensional domain");
    }
    if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
    Rng rng = make_rng(seed, 0xda7a);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> x(m * t.dims), y(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < t.dims; ++j) x[i * t.dims + j] = uniform(rng, domain[j].lo, domain[j].hi);
        y[i] = t.fn({x.data() + i * t.dims, t.dims});
        if (noise_sigma > 0.0) y[i] += noise_sigma * noise(rng);
    }
    const std::uint64_t sseed = split_seed.value_or(seed);
    auto [train, test] = split_indices(m, test_fraction, sseed);
    DatasetMeta meta{std::string(target), std::move(domain), noise_sigma, seed, sseed};
    return Dataset(t.dims, std::move(x), std::move(y), std::move(train), std::move(test), std::move(meta));
}

// ---- losses --------------------------------------------------------------

// min(1, |a - y| / tau): range [0, 1], (1/tau)-Lipschitz in a.
inline double clipped_loss(double a, double y, double tau = 1.0) {
    if (!std::isfinite(a)) return 1.0;
    return std::min(1.0, std::fabs(a - y) / tau);
}

struct Risks {
    double train;
    double test;
    double gap;
    double saturation = 0.0;  // fraction of all rows where the loss is clipped at 1
};

// Mean clipped loss on each side of the split; `predictions` is indexed by row.
inline Risks empirical_risks(std::span<const double> predictions, const Dataset& data, double tau = 1.0) {
    if (data.train().empty() || data.test().empty()) throw std::invalid_argument("empirical_risks needs both splits");
    auto mean_loss = [&](const std::vector<std::size_t>& rows) {
        double acc = 0.0;
        for (auto i : rows) acc += clipped_loss(predictions[i], data.target(i), tau);
        return acc / static_cast<double>(rows.size());
    };
    const double tr = mean_loss(data.train());
    const double te = mean_loss(data.test());
    std::size_t clipped = 0;
    for (std::size_t i = 0; i < data.size(); ++i) clipped += clipped_loss(predictions[i], data.target(i), tau) >= 1.0;
    return {tr, te, te - tr, static_cast<double>(clipped) / static_cast<double>(data.size())};
}

// ---- CSV and metadata ----------------------------------------------------

inline void save_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (std::size_t j = 0; j < data.dims(); ++j) out << 'x' << (j + 1) << ',';
    out << "y\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.row(i)) out << format_double(v) << ',';
        out << format_double(data.target(i)) << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

namespace detail {

inline std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace detail

// Header `x1,...,xd,y`, numeric body. Split is a seeded shuffle.
inline Dataset load_csv(const std::string& path, double test_fraction = 0.5, std::uint64_t split_seed = 0) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path + ": missing header row");
    auto header = detail::split_commas(line);
    for (auto& h : header) h = detail::trim(h);
    if (header.size() < 2 || header.back() != "y") throw SchemaError(path + ": header must end with a 'y' column");
    const std::size_t dims = header.size() - 1;
    for (std::size_t j = 0; j < dims; ++j) {
        if (header[j] != "x" + std::to_string(j + 1)) {
            throw SchemaError(path + ": expected column 'x" + std::to_string(j + 1) + "', found '" + header[j] + "'");
        }
    }
    std::vector<double> x, y;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_commas(line);
        if (cells.size() != header.size()) {
            throw CsvParseError("expected " + std::to_string(header.size()) + " cells, found " +
                                    std::to_string(cells.size()),
                                row, std::min(cells.size(), header.size()) + 1);
        }
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const std::string cell = detail::trim(cells[j]);
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
                throw CsvParseError("non-numeric cell '" + cell + "'", row, j + 1);
            }
            (j < dims ? x : y).push_back(v);
        }
    }
    auto [train, test] = split_indices(y.size(), test_fraction, split_seed);
    DatasetMeta meta;
    meta.name = path;
    meta.split_seed = split_seed;
    return Dataset(dims, std::move(x), std::move(y), std::move(train), std::move(test), std::move(meta));
}

inline nlohmann::json metadata_json(const Dataset& data) {
    nlohmann::json domain = nlohmann::json::array();
    for (const auto& iv : data.domain()) domain.push_back({iv.lo, iv.hi});
    return {{"name", data.meta().name},           {"d", data.dims()},
            {"m", data.size()},                   {"domain", domain},
            {"noise_sigma", data.meta().noise_sigma}, {"seed", data.meta().seed},
            {"split_seed", data.meta().split_seed}};
}

}  // namespace gpsr
