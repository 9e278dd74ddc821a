#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gpsr/bench.hpp"
#include "gpsr/complexity.hpp"
#include "gpsr/errors.hpp"
#include "gpsr/exprtree.hpp"
#include "gpsr/gp.hpp"

namespace gpsr {

struct DataSpec {
    std::string target = "poly3";
    std::string csv;  // when set, the target is ignored
    std::size_t m = 100;
    std::vector<Interval> domain;  // empty: [-1, 1] in every dimension
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
    std::uint64_t split_seed = 1;
    double test_fraction = 0.5;
};

struct VocabSpec {
    std::string preset = "full";
    std::vector<UnaryOp> unary;
    std::vector<BinaryOp> binary;
    std::vector<FixedConstant> fixed;
    std::size_t variables = 0;  // 0 until resolved against the data
    bool unary_set = false, binary_set = false, fixed_set = false;
};

// Every parameter of a run; `key = value` text in, resolved text out.
struct RunConfig {
    std::uint64_t seed = 1;
    GpConfig gp{};
    Budget budget{};
    VocabSpec vocab{};
    BoundSettings bound{};
    DataSpec data{};

    void set(const std::string& key, const std::string& value);
    void parse(std::istream& in);
    void resolve();
    VocabularyPtr vocabulary() const;
    Dataset dataset() const;
    std::string echo() const;
};

namespace detail {

inline double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError(key, "expected a real number, got '" + v + "'");
    }
    return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError(key, "expected a nonnegative integer, got '" + v + "'");
    }
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    for (auto& item : split_commas(v)) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

inline std::vector<Interval> parse_domain(const std::string& key, const std::string& v) {
    std::vector<Interval> out;
    for (const auto& item : split_list(v)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError(key, "expected lo:hi, got '" + item + "'");
        const double lo = parse_real(key, trim(item.substr(0, colon)));
        const double hi = parse_real(key, trim(item.substr(colon + 1)));
        if (!(lo <= hi)) throw ConfigError(key, "empty interval '" + item + "'");
        out.push_back({lo, hi, true});
    }
    if (out.empty()) throw ConfigError(key, "domain is empty");
    return out;
}

inline std::optional<double> known_constant(std::string_view name) {
    if (name == "one") return 1.0;
    if (name == "two") return 2.0;
    if (name == "pi") return std::numbers::pi;
    if (name == "e") return std::numbers::e;
    return std::nullopt;
}

template <class Enum>
std::string join_names(const std::vector<Enum>& ops) {
    std::string out;
    for (auto op : ops) {
        if (!out.empty()) out += ',';
        out += name_of(op);
    }
    return out;
}

}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& value) {
    using namespace detail;
    const auto& v = value;
    if (key == "seed") {
        seed = parse_uint(key, v);
        gp.seed = seed;
    } else if (key == "gp.population_size") {
        gp.population_size = parse_uint(key, v);
    } else if (key == "gp.generations") {
        gp.generations = parse_uint(key, v);
    } else if (key == "gp.tournament_size") {
        gp.tournament_size = parse_uint(key, v);
    } else if (key == "gp.crossover_rate") {
        gp.crossover_rate = parse_real(key, v);
    } else if (key == "gp.mutation_rate") {
        gp.mutation_rate = parse_real(key, v);
    } else if (key == "gp.constant_jitter_rate") {
        gp.constant_jitter_rate = parse_real(key, v);
    } else if (key == "gp.parsimony") {
        if (v == "none") gp.parsimony = Parsimony::None;
        else if (v == "size_penalty") gp.parsimony = Parsimony::SizePenalty;
        else if (v == "lexicographic") gp.parsimony = Parsimony::Lexicographic;
        else if (v == "bound_penalty") gp.parsimony = Parsimony::BoundPenalty;
        else throw ConfigError(key, "unknown parsimony mode '" + v + "'");
    } else if (key == "gp.parsimony_alpha") {
        gp.parsimony_alpha = parse_real(key, v);
    } else if (key == "gp.bound_lambda") {
        gp.bound_lambda = parse_real(key, v);
    } else if (key == "gp.constant_opt") {
        if (v == "off") gp.constant_opt = ConstantOpt::Off;
        else if (v == "lm") gp.constant_opt = ConstantOpt::LevenbergMarquardt;
        else throw ConfigError(key, "expected off or lm, got '" + v + "'");
    } else if (key == "gp.lm_iters") {
        gp.lm_iters = parse_uint(key, v);
    } else if (key == "gp.lm_top_k") {
        gp.lm_top_k = parse_uint(key, v);
    } else if (key == "gp.linear_scaling") {
        gp.linear_scaling = parse_bool(key, v);
    } else if (key == "gp.interval_screening") {
        gp.interval_screening = parse_bool(key, v);
    } else if (key == "gp.semantics") {
        if (v == "protected") gp.semantics = Semantics::Protected;
        else if (v == "strict") gp.semantics = Semantics::Strict;
        else throw ConfigError(key, "expected protected or strict, got '" + v + "'");
    } else if (key == "gp.threads") {
        gp.threads = parse_uint(key, v);
    } else if (key == "budget.max_size") {
        budget.max_size = parse_uint(key, v);
    } else if (key == "budget.max_depth") {
        budget.max_depth = parse_uint(key, v);
    } else if (key == "budget.radius") {
        budget.radius = parse_real(key, v);
    } else if (key == "vocab.preset") {
        if (v != "standard" && v != "full") throw ConfigError(key, "expected standard or full, got '" + v + "'");
        vocab.preset = v;
    } else if (key == "vocab.unary") {
        vocab.unary.clear();
        for (const auto& n : split_list(v)) {
            const auto op = unary_from_name(n);
            if (!op) throw ConfigError(key, "unknown unary operator '" + n + "'");
            vocab.unary.push_back(*op);
        }
        vocab.unary_set = true;
    } else if (key == "vocab.binary") {
        vocab.binary.clear();
        for (const auto& n : split_list(v)) {
            const auto op = binary_from_name(n);
            if (!op) throw ConfigError(key, "unknown binary operator '" + n + "'");
            vocab.binary.push_back(*op);
        }
        vocab.binary_set = true;
    } else if (key == "vocab.fixed") {
        vocab.fixed.clear();
        for (const auto& item : split_list(v)) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) {
                const auto val = known_constant(item);
                if (!val) throw ConfigError(key, "constant '" + item + "' needs a value (name:value)");
                vocab.fixed.push_back({item, *val});
            } else {
                vocab.fixed.push_back({trim(item.substr(0, colon)), parse_real(key, trim(item.substr(colon + 1)))});
            }
        }
        vocab.fixed_set = true;
    } else if (key == "vocab.variables") {
        vocab.variables = parse_uint(key, v);
    } else if (key == "consts.c_dudley") {
        bound.consts.c_dudley = parse_real(key, v);
    } else if (key == "consts.c_par") {
        bound.consts.c_par = parse_real(key, v);
    } else if (key == "consts.a_sym") {
        bound.consts.a_sym = parse_real(key, v);
    } else if (key == "consts.b_conf") {
        bound.consts.b_conf = parse_real(key, v);
    } else if (key == "consts.delta") {
        bound.delta = parse_real(key, v);
    } else if (key == "consts.tau") {
        bound.tau = parse_real(key, v);
    } else if (key == "data.target") {
        data.target = v;
    } else if (key == "data.csv") {
        data.csv = v;
    } else if (key == "data.m") {
        data.m = parse_uint(key, v);
    } else if (key == "data.domain") {
        data.domain = parse_domain(key, v);
    } else if (key == "data.noise_sigma") {
        data.noise_sigma = parse_real(key, v);
    } else if (key == "data.seed") {
        data.seed = parse_uint(key, v);
    } else if (key == "data.split_seed") {
        data.split_seed = parse_uint(key, v);
    } else if (key == "data.test_fraction") {
        data.test_fraction = parse_real(key, v);
    } else {
        throw ConfigError(key, "unknown configuration key");
    }
}

// `key = value` lines; `#` starts a comment; blank lines ignored.
inline void RunConfig::parse(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(line, "line " + std::to_string(lineno) + ": expected key = value");
        }
        set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    RunConfig cfg;
    cfg.parse(in);
    return cfg;
}

// Fills every data-dependent default and checks consistency.
inline void RunConfig::resolve() {
    gp.seed = seed;
    std::size_t dims = 0;
    if (data.csv.empty()) {
        try {
            dims = find_target(data.target).dims;
        } catch (const UnknownTarget& e) {
            throw ConfigError("data.target", e.what());
        }
        if (data.domain.empty()) data.domain.assign(dims, Interval{-1.0, 1.0, true});
        if (data.domain.size() != dims) throw ConfigError("data.domain", "dimension does not match the target");
        if (data.m < 2) throw ConfigError("data.m", "must be >= 2");
        if (data.m > 1'000'000) throw GuardViolation("data.m exceeds the 10^6 guard");
    }
    if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) {
        throw ConfigError("data.test_fraction", "must lie in (0, 1)");
    }
    if (data.noise_sigma < 0.0) throw ConfigError("data.noise_sigma", "must be >= 0");
    if (vocab.variables == 0) vocab.variables = dims == 0 ? 1 : dims;
    const Vocabulary base = vocab.preset == "full" ? Vocabulary::full(vocab.variables)
                                                   : Vocabulary::standard(vocab.variables);
    if (!vocab.unary_set) vocab.unary = base.unary_ops();
    if (!vocab.binary_set) vocab.binary = base.binary_ops();
    if (!vocab.fixed_set) vocab.fixed = base.fixed_constants();
    vocab.unary_set = vocab.binary_set = vocab.fixed_set = true;
    try {
        budget.check();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("budget", e.what());
    }
    if (budget.max_size > 1000) throw GuardViolation("budget.max_size exceeds the 1000 guard");
    try {
        (void)vocabulary();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("vocab", e.what());
    }
    try {
        bound.consts.check();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("consts", e.what());
    }
    if (!(bound.delta > 0.0 && bound.delta < 1.0)) throw ConfigError("consts.delta", "must lie in (0, 1)");
    if (!(bound.tau > 0.0)) throw ConfigError("consts.tau", "must be > 0");
    gp.check();
}

inline VocabularyPtr RunConfig::vocabulary() const {
    return std::make_shared<const Vocabulary>(vocab.unary, vocab.binary, vocab.variables, vocab.fixed);
}

inline Dataset RunConfig::dataset() const {
    if (!data.csv.empty()) return load_csv(data.csv, data.test_fraction, data.split_seed);
    return synthesize(data.target, data.m, data.domain, data.noise_sigma, data.seed, data.test_fraction,
                      data.split_seed);
}

// Resolved configuration as `key = value` lines that parse back to the
// same RunConfig.
inline std::string RunConfig::echo() const {
    std::ostringstream out;
    auto line = [&](const std::string& k, const std::string& v) { out << k << " = " << v << '\n'; };
    auto real = [](double v) { return format_double(v); };
    auto boolean = [](bool b) { return std::string(b ? "true" : "false"); };
    line("seed", std::to_string(seed));
    line("gp.population_size", std::to_string(gp.population_size));
    line("gp.generations", std::to_string(gp.generations));
    line("gp.tournament_size", std::to_string(gp.tournament_size));
    line("gp.crossover_rate", real(gp.crossover_rate));
    line("gp.mutation_rate", real(gp.mutation_rate));
    line("gp.constant_jitter_rate", real(gp.constant_jitter_rate));
    line("gp.parsimony", std::string(name_of(gp.parsimony)));
    line("gp.parsimony_alpha", real(gp.parsimony_alpha));
    line("gp.bound_lambda", real(gp.bound_lambda));
    line("gp.constant_opt", std::string(name_of(gp.constant_opt)));
    line("gp.lm_iters", std::to_string(gp.lm_iters));
    line("gp.lm_top_k", std::to_string(gp.lm_top_k));
    line("gp.linear_scaling", boolean(gp.linear_scaling));
    line("gp.interval_screening", boolean(gp.interval_screening));
    line("gp.semantics", gp.semantics == Semantics::Protected ? "protected" : "strict");
    line("gp.threads", std::to_string(gp.threads));
    line("budget.max_size", std::to_string(budget.max_size));
    line("budget.max_depth", std::to_string(budget.max_depth));
    line("budget.radius", real(budget.radius));
    line("vocab.preset", vocab.preset);
    line("vocab.unary", detail::join_names(vocab.unary));
    line("vocab.binary", detail::join_names(vocab.binary));
    std::string fixed;
    for (const auto& c : vocab.fixed) {
        if (!fixed.empty()) fixed += ',';
        fixed += c.name + ":" + real(c.value);
    }
    line("vocab.fixed", fixed);
    line("vocab.variables", std::to_string(vocab.variables));
    line("consts.c_dudley", real(bound.consts.c_dudley));
    line("consts.c_par", real(bound.consts.c_par));
    line("consts.a_sym", real(bound.consts.a_sym));
    line("consts.b_conf", real(bound.consts.b_conf));
    line("consts.delta", real(bound.delta));
    line("consts.tau", real(bound.tau));
    line("data.target", data.target);
    if (!data.csv.empty()) line("data.csv", data.csv);
    line("data.m", std::to_string(data.m));
    std::string dom;
    for (const auto& iv : data.domain) {
        if (!dom.empty()) dom += ',';
        dom += real(iv.lo) + ":" + real(iv.hi);
    }
    if (!dom.empty()) line("data.domain", dom);
    line("data.noise_sigma", real(data.noise_sigma));
    line("data.seed", std::to_string(data.seed));
    line("data.split_seed", std::to_string(data.split_seed));
    line("data.test_fraction", real(data.test_fraction));
    return out.str();
}

}  // namespace gpsr
