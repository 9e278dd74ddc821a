// gpsr: counting tables, bound reports, Rademacher estimates, GP runs and
// experiments. Exit codes: 0 success, 2 usage or configuration error,
// 3 guard violation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpsr/bench.hpp"
#include "gpsr/complexity.hpp"
#include "gpsr/config.hpp"
#include "gpsr/counting.hpp"
#include "gpsr/exprtree.hpp"
#include "gpsr/gp.hpp"
#include "gpsr/intervals.hpp"

namespace fs = std::filesystem;
using namespace gpsr;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitGuard = 3;
constexpr std::size_t kMaxSize = 1000;
constexpr std::size_t kMaxDepth = 50;

struct Globals {
    std::uint64_t seed = 1;
    bool seed_set = false;
    std::string out;
    std::string config;
    std::vector<std::string> overrides;
};

// "3", "1..5" or "1,2,8".
std::vector<std::size_t> parse_grid(const std::string& text, const std::string& what) {
    std::vector<std::size_t> out;
    auto num = [&](const std::string& s) -> std::size_t {
        std::size_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
            throw std::invalid_argument("bad " + what + " value '" + s + "'");
        }
        return v;
    };
    for (const auto& item : detail::split_list(text)) {
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(num(item));
        } else {
            const std::size_t lo = num(item.substr(0, dots)), hi = num(item.substr(dots + 2));
            if (lo > hi) throw std::invalid_argument("empty " + what + " range '" + item + "'");
            for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
        }
    }
    if (out.empty()) throw std::invalid_argument("empty " + what + " grid");
    return out;
}

Vocabulary named_vocab(const std::string& name, std::size_t variables) {
    if (name == "default" || name == "standard") return Vocabulary::standard(variables);
    if (name == "full") return Vocabulary::full(variables);
    throw std::invalid_argument("unknown vocabulary '" + name + "' (expected default or full)");
}

RunConfig build_config(const Globals& g) {
    RunConfig cfg = g.config.empty() ? RunConfig{} : load_config(g.config);
    for (const auto& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value");
        cfg.set(detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
    }
    if (g.seed_set) cfg.seed = g.seed;
    cfg.resolve();
    return cfg;
}

fs::path ensure_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
    return p;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("missing artifact " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string history_csv(const std::vector<GenerationStats>& history) {
    std::ostringstream out;
    out << "generation,best_fitness,mean_fitness,best_train_mse,mean_size,mean_depth,rejection_rate\n";
    for (const auto& h : history) {
        out << h.generation << ',' << format_double(h.best_fitness) << ',' << format_double(h.mean_fitness) << ','
            << format_double(h.best_train_mse) << ',' << format_double(h.mean_size) << ','
            << format_double(h.mean_depth) << ',' << format_double(h.rejection_rate) << '\n';
    }
    return out.str();
}

// Largest test-minus-train clipped risk over a population.
double max_population_gap(const std::vector<Individual>& pop, const Dataset& data, double tau, Semantics sem) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& ind : pop) worst = std::max(worst, empirical_risks(ind, data, tau, sem).gap);
    return worst;
}

// ---- count -----------------------------------------------------------------

struct CountArgs {
    std::string s = "1..10";
    std::string depth = "1..4";
    std::string vocab = "default";
    std::size_t variables = 1;
};

std::string count_table(const std::vector<std::size_t>& sizes, const std::vector<std::size_t>& depths,
                        const Vocabulary& vocab) {
    for (auto s : sizes) {
        if (s < 1) throw std::invalid_argument("--s values must be >= 1");
        if (s > kMaxSize) throw GuardViolation("s = " + std::to_string(s) + " exceeds the 1000 guard");
    }
    for (auto d : depths) {
        if (d < 1) throw std::invalid_argument("--depth values must be >= 1");
        if (d > kMaxDepth) throw GuardViolation("D = " + std::to_string(d) + " exceeds the 50 guard");
    }
    const std::size_t s_max = *std::max_element(sizes.begin(), sizes.end());
    std::ostringstream out;
    out << "s,D,exact_shapes,exact_structures,log_exact,log_theorem_bound,log_bkr,rho_D\n";
    for (auto d : depths) {
        const auto shapes = CountTable::shapes(s_max, d);
        const auto structs = CountTable::structures(s_max, d, vocab);
        const double c_d = calibrate_c_D(d);
        for (auto s : sizes) {
            const BigInt exact = structs.cumulative(s, d);
            std::string bound_text;
            try {
                bound_text = format_double(log_structure_bound(s, d, vocab, c_d));
            } catch (const InvalidBase&) {
                bound_text = "nan";
            }
            out << s << ',' << d << ',' << shapes.at(s, d).str() << ',' << exact.str() << ','
                << format_double(log_of(exact)) << ',' << bound_text << ',' << format_double(bkr_log_asymptotic(s, d))
                << ',' << format_double(rho(d)) << '\n';
        }
    }
    return out.str();
}

int cmd_count(const CountArgs& a, const Globals& g) {
    const auto sizes = parse_grid(a.s, "--s");
    const auto depths = parse_grid(a.depth, "--depth");
    const auto table = count_table(sizes, depths, named_vocab(a.vocab, a.variables));
    if (g.out.empty()) {
        std::cout << table;
    } else {
        write_file(ensure_dir(g.out) / "count.csv", table);
    }
    return 0;
}

// ---- bound -----------------------------------------------------------------

struct BoundArgs {
    std::optional<std::size_t> m, s, depth;
    std::optional<double> R, delta, B, G, log_T, tau;
    std::string vocab = "default";
    std::size_t variables = 1;
    std::string run;
};

int cmd_bound(const BoundArgs& a, const Globals& g) {
    BoundInputs in;
    ComplexityConstants consts;
    if (!g.config.empty()) consts = load_config(g.config).bound.consts;
    in.consts = consts;
    in.B_tag = Provenance::Configured;
    in.G_tag = Provenance::Configured;
    bool have_log_t = false;
    if (!a.run.empty()) {
        const auto prev = BoundReport::from_json(nlohmann::json::parse(read_file(fs::path(a.run) / "report.json")));
        in.m = prev.m;
        in.s = prev.s;
        in.D = prev.D;
        in.R = prev.R;
        in.delta = prev.delta;
        in.B = prev.B_used;
        in.B_tag = prev.B_used_tag;
        in.G = prev.G_used;
        in.G_tag = prev.G_used_tag;
        in.log_T = prev.log_T;
        in.log_T_method = prev.log_T_method;
        in.consts = prev.consts;
        in.tau = prev.tau;
        in.observed_train = prev.observed_train;
        in.observed_test = prev.observed_test;
        in.loss_saturation = prev.loss_saturation;
        have_log_t = true;
    } else {
        if (!a.m || !a.s || !a.depth || !a.R || !a.delta || !a.B || !a.G) {
            throw std::invalid_argument("bound needs --m, --s, --depth, --R, --delta, --B and --G, or --run <dir>");
        }
    }
    if (a.m) in.m = *a.m;
    if (a.s) in.s = *a.s;
    if (a.depth) in.D = *a.depth;
    if (a.R) in.R = *a.R;
    if (a.delta) in.delta = *a.delta;
    if (a.B) {
        in.B = *a.B;
        in.B_tag = Provenance::Configured;
    }
    if (a.G) {
        in.G = *a.G;
        in.G_tag = Provenance::Configured;
    }
    if (a.tau) in.tau = *a.tau;
    if (in.s > kMaxSize) throw GuardViolation("s exceeds the 1000 guard");
    if (in.D > kMaxDepth) throw GuardViolation("D exceeds the 50 guard");
    if (in.m > 1'000'000) throw GuardViolation("m exceeds the 10^6 guard");
    if (in.m < 1 || in.s < 1 || in.D < 1) throw std::invalid_argument("m, s and D must be >= 1");
    if (a.log_T) {
        in.log_T = *a.log_T;
        in.log_T_method = CountMethod::TheoremBound;
    } else if (!have_log_t || a.s || a.depth) {
        in.log_T = log_of(count_structures(in.s, in.D, named_vocab(a.vocab, a.variables)));
        in.log_T_method = CountMethod::ExactDp;
    }
    const auto report = assemble_bound(in);
    const std::string text = report.to_json().dump(2) + "\n";
    std::cout << text;
    if (!g.out.empty()) write_file(ensure_dir(g.out) / "report.json", text);
    return 0;
}

// ---- rademacher --------------------------------------------------------------

struct RademacherArgs {
    std::string tree = "(mul c x1)";
    std::size_t n_sigma = 50;
    std::size_t restarts = 20;
    std::size_t steps = 200;
};

int cmd_rademacher(const RademacherArgs& a, const Globals& g) {
    const RunConfig cfg = build_config(g);
    const auto vocab = cfg.vocabulary();
    const ExprTree tree = parse(a.tree, vocab);
    if (const auto v = validate(tree, *vocab, cfg.budget); !v.empty()) {
        throw std::invalid_argument("tree violates the budget: " + v.front().detail);
    }
    if (a.n_sigma < 2) throw std::invalid_argument("--n-sigma must be >= 2");
    const Dataset data = cfg.dataset();
    const auto G = certify_G(tree, cfg.budget, data.domain());
    AscentOptions opt;
    opt.steps = a.steps;
    opt.semantics = cfg.gp.semantics;
    const auto mc = rademacher_mc_fixed(tree, cfg.budget.radius, data, a.n_sigma, a.restarts, cfg.seed, opt);
    const std::size_t m = data.train().size();
    const std::size_t p = tree.num_constants();
    nlohmann::ordered_json doc{{"tree", serialize(tree)},
                               {"p", p},
                               {"m", m},
                               {"R", cfg.budget.radius},
                               {"mean", mc.mean},
                               {"std_error", mc.std_error},
                               {"n_sigma", a.n_sigma},
                               {"restarts", a.restarts}};
    if (G) {
        doc["G_certified"] = *G;
        doc["dudley_closed_form"] = dudley_fixed_structure_bound(p, cfg.budget.radius, *G, m, cfg.bound.consts);
        doc["dudley_integral"] = dudley_integral_bound(p, cfg.budget.radius, *G, m, cfg.bound.consts);
    } else {
        doc["G_certified"] = nullptr;
    }
    const std::string text = doc.dump(2) + "\n";
    std::cout << text;
    if (!g.out.empty()) {
        const auto dir = ensure_dir(g.out);
        write_file(dir / "rademacher.json", text);
        write_file(dir / "config.txt", cfg.echo());
    }
    return 0;
}

// ---- evolve ------------------------------------------------------------------

struct RunOutput {
    EvolveResult result;
    double max_pop_gap;
};

RunOutput run_and_write(const RunConfig& cfg, const Dataset& data, const fs::path& dir) {
    ensure_dir(dir.string());
    write_file(dir / "config.txt", cfg.echo());
    write_file(dir / "data.json", metadata_json(data).dump(2) + "\n");
    auto result = evolve(cfg.vocabulary(), cfg.budget, data, cfg.gp, cfg.bound);
    write_file(dir / "history.csv", history_csv(result.history));
    std::ostringstream best;
    best << serialize(result.best.tree) << '\n';
    best << "theta =";
    for (double v : result.best.theta.values) best << ' ' << format_double(v);
    best << "\na = " << format_double(result.best.a) << "\nb = " << format_double(result.best.b) << '\n';
    write_file(dir / "best.txt", best.str());
    write_file(dir / "report.json", result.report.to_json().dump(2) + "\n");
    const double gap = max_population_gap(result.final_population, data, cfg.bound.tau, cfg.gp.semantics);
    return {std::move(result), gap};
}

int cmd_evolve(const Globals& g) {
    const RunConfig cfg = build_config(g);
    const Dataset data = cfg.dataset();
    const fs::path dir = g.out.empty() ? fs::path("run") : fs::path(g.out);
    const auto out = run_and_write(cfg, data, dir);
    const auto& r = out.result.report;
    std::cout << "best=" << serialize(out.result.best.tree) << " train_mse=" << format_double(out.result.best.train_mse)
              << " observed_gap=" << format_double(r.observed_gap) << " bound_total=" << format_double(r.total)
              << " holds=" << (r.observed_gap <= r.total ? "true" : "false") << " dir=" << dir.string() << '\n';
    return 0;
}

// ---- experiments ---------------------------------------------------------------

struct ExperimentArgs {
    std::string name;
    std::size_t seeds = 10;
    double alpha = 0.01;
    std::size_t s = 20;
    std::string depth = "1..8";
    std::string ms = "64,256,1024";
    std::string targets = "poly3,keijzer_sine";
    std::size_t instances = 100;
    std::size_t m = 8;
    std::size_t max_classes = 16;
    std::size_t max_rows = 6;
    double B = 1.0;
    std::string vocab = "default";
};

int experiment_bloat(const ExperimentArgs& a, const Globals& g, const fs::path& dir) {
    RunConfig base = build_config(g);
    std::ostringstream per_gen, summary;
    per_gen << "seed,generation,mean_size_none,mean_size_penalty\n";
    summary << "seed,final_mean_size_none,final_mean_size_penalty,larger_without_parsimony\n";
    std::size_t wins = 0;
    for (std::size_t k = 0; k < a.seeds; ++k) {
        RunConfig none = base;
        none.seed = none.gp.seed = base.seed + k;
        none.gp.parsimony = Parsimony::None;
        RunConfig pen = none;
        pen.gp.parsimony = Parsimony::SizePenalty;
        pen.gp.parsimony_alpha = a.alpha;
        const Dataset data = none.dataset();
        const auto r0 = evolve(none.vocabulary(), none.budget, data, none.gp, none.bound);
        const auto r1 = evolve(pen.vocabulary(), pen.budget, data, pen.gp, pen.bound);
        for (std::size_t i = 0; i < r0.history.size(); ++i) {
            per_gen << none.seed << ',' << r0.history[i].generation << ',' << format_double(r0.history[i].mean_size)
                    << ',' << format_double(r1.history[i].mean_size) << '\n';
        }
        const double f0 = r0.history.empty() ? 0.0 : r0.history.back().mean_size;
        const double f1 = r1.history.empty() ? 0.0 : r1.history.back().mean_size;
        const bool larger = f0 > f1;
        wins += larger ? 1 : 0;
        summary << none.seed << ',' << format_double(f0) << ',' << format_double(f1) << ','
                << (larger ? "true" : "false") << '\n';
    }
    write_file(dir / "config.txt", base.echo() + "# experiment = bloat, seeds = " + std::to_string(a.seeds) +
                                       ", alpha = " + format_double(a.alpha) + "\n");
    write_file(dir / "bloat.csv", per_gen.str());
    write_file(dir / "bloat_summary.csv", summary.str());
    std::cout << "bloat: mean size larger without parsimony in " << wins << "/" << a.seeds << " seeds\n";
    return 0;
}

int experiment_depth_sweep(const ExperimentArgs& a, const Globals& g, const fs::path& dir) {
    const auto depths = parse_grid(a.depth, "--depth");
    const auto vocab = named_vocab(a.vocab, 1);
    if (a.s > kMaxSize) throw GuardViolation("s exceeds the 1000 guard");
    std::ostringstream out;
    out << "s,D,log_exact,rho_D,log_theorem_bound\n";
    for (auto d : depths) {
        if (d < 1) throw std::invalid_argument("--depth values must be >= 1");
        if (d > kMaxDepth) throw GuardViolation("D exceeds the 50 guard");
        out << a.s << ',' << d << ',' << format_double(log_of(count_structures(a.s, d, vocab))) << ','
            << format_double(rho(d)) << ',' << format_double(log_structure_bound(a.s, d, vocab, calibrate_c_D(d)))
            << '\n';
    }
    write_file(dir / "config.txt", "# experiment = depth_sweep, s = " + std::to_string(a.s) + ", depth = " + a.depth +
                                       ", vocab = " + a.vocab + "\n");
    write_file(dir / "depth_sweep.csv", out.str());
    (void)g;
    std::cout << out.str();
    return 0;
}

int experiment_gap_check(const ExperimentArgs& a, const Globals& g, const fs::path& dir) {
    RunConfig base = build_config(g);
    const auto ms = parse_grid(a.ms, "--m");
    std::ostringstream out;
    out << "target,m,observed_train,observed_test,observed_gap,max_population_gap,bound_total,slack_ratio,holds\n";
    bool all = true;
    for (const auto& target : detail::split_list(a.targets)) {
        for (auto m : ms) {
            RunConfig cfg = base;
            cfg.data.target = target;
            cfg.data.m = m;
            cfg.data.domain.clear();
            cfg.vocab.variables = 0;
            cfg.vocab.unary_set = cfg.vocab.binary_set = cfg.vocab.fixed_set = false;
            cfg.resolve();
            const Dataset data = cfg.dataset();
            const auto run = run_and_write(cfg, data, dir / (target + "_m" + std::to_string(m)));
            const auto& r = run.result.report;
            const bool holds = run.max_pop_gap <= r.total;
            all = all && holds;
            out << target << ',' << m << ',' << format_double(r.observed_train) << ','
                << format_double(r.observed_test) << ',' << format_double(r.observed_gap) << ','
                << format_double(run.max_pop_gap) << ',' << format_double(r.total) << ','
                << format_double(r.total / std::max(run.max_pop_gap, 1e-300)) << ',' << (holds ? "true" : "false")
                << '\n';
        }
    }
    write_file(dir / "config.txt", base.echo() + "# experiment = gap_check, m = " + a.ms + ", targets = " +
                                       a.targets + "\n");
    write_file(dir / "gap_check.csv", out.str());
    std::cout << out.str() << "gap_check: bound " << (all ? "holds" : "FAILS") << " in every row\n";
    return 0;
}

int experiment_union_check(const ExperimentArgs& a, const Globals& g, const fs::path& dir) {
    const std::uint64_t seed = g.seed_set ? g.seed : 1;
    if (a.m > kExactRademacherMaxM) throw GuardViolation("union_check needs m <= 20");
    if (a.max_classes < 1 || a.max_rows < 1) throw std::invalid_argument("--max-classes and --max-rows must be >= 1");
    std::ostringstream out;
    out << "instance,M,exact_union,max_member,bound,holds\n";
    std::size_t held = 0;
    for (std::size_t k = 0; k < a.instances; ++k) {
        Rng rng = make_rng(seed, 0x0210, k);
        const auto M = std::uniform_int_distribution<std::size_t>(1, a.max_classes)(rng);
        std::vector<std::vector<double>> all_rows;
        double max_member = 0.0;
        for (std::size_t j = 0; j < M; ++j) {
            const auto n = std::uniform_int_distribution<std::size_t>(1, a.max_rows)(rng);
            std::vector<std::vector<double>> cls(n, std::vector<double>(a.m));
            for (auto& row : cls) {
                for (double& v : row) v = uniform(rng, -a.B, a.B);
            }
            max_member = std::max(max_member, rademacher_exact(cls));
            all_rows.insert(all_rows.end(), cls.begin(), cls.end());
        }
        const double exact = rademacher_exact(all_rows);
        const double bound = finite_union_bound(max_member, a.B, std::log(static_cast<double>(M)), a.m);
        const bool holds = exact <= bound;
        held += holds ? 1 : 0;
        out << k << ',' << M << ',' << format_double(exact) << ',' << format_double(max_member) << ','
            << format_double(bound) << ',' << (holds ? "true" : "false") << '\n';
    }
    write_file(dir / "config.txt", "# experiment = union_check, seed = " + std::to_string(seed) +
                                       ", instances = " + std::to_string(a.instances) + ", m = " +
                                       std::to_string(a.m) + ", B = " + format_double(a.B) + "\n");
    write_file(dir / "union_check.csv", out.str());
    std::cout << "union_check: dominance holds on " << held << "/" << a.instances << " instances\n";
    return 0;
}

int cmd_experiment(const ExperimentArgs& a, const Globals& g) {
    const fs::path dir = ensure_dir(g.out.empty() ? "experiment_" + a.name : g.out);
    if (a.name == "bloat") return experiment_bloat(a, g, dir);
    if (a.name == "depth_sweep") return experiment_depth_sweep(a, g, dir);
    if (a.name == "gap_check") return experiment_gap_check(a, g, dir);
    if (a.name == "union_check") return experiment_union_check(a, g, dir);
    throw std::invalid_argument("unknown experiment '" + a.name + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Symbolic-regression GP with generalization-bound instrumentation"};
    app.require_subcommand(1);
    Globals g;
    auto* seed_opt = app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--config", g.config, "Configuration file (key = value lines)");
    app.add_option("--set", g.overrides, "Configuration override key=value (repeatable)");

    CountArgs ca;
    auto* count = app.add_subcommand("count", "Exact and asymptotic tree counts as CSV");
    count->add_option("--s", ca.s, "Sizes: n, a..b or a,b,c");
    count->add_option("--depth", ca.depth, "Depths: n, a..b or a,b,c");
    count->add_option("--vocab", ca.vocab, "default (3 unary, 4 binary, 2 fixed) or full");
    count->add_option("--variables", ca.variables, "Number of input variables");

    BoundArgs ba;
    auto* bound = app.add_subcommand("bound", "Assemble a generalization-bound report");
    bound->add_option("--m", ba.m);
    bound->add_option("--s", ba.s);
    bound->add_option("--depth", ba.depth);
    bound->add_option("--R", ba.R);
    bound->add_option("--delta", ba.delta);
    bound->add_option("--B", ba.B);
    bound->add_option("--G", ba.G);
    bound->add_option("--log-T", ba.log_T, "Use this log|T| instead of the exact count");
    bound->add_option("--tau", ba.tau);
    bound->add_option("--vocab", ba.vocab);
    bound->add_option("--variables", ba.variables);
    bound->add_option("--run", ba.run, "Finished evolve directory whose certified constants are reused");

    RademacherArgs ra;
    auto* rad = app.add_subcommand("rademacher", "Monte Carlo Rademacher estimate for one structure");
    rad->add_option("--tree", ra.tree, "Prefix expression");
    rad->add_option("--n-sigma", ra.n_sigma);
    rad->add_option("--restarts", ra.restarts);
    rad->add_option("--steps", ra.steps);

    auto* evo = app.add_subcommand("evolve", "Run GP and write a run directory");

    ExperimentArgs ea;
    auto* exp = app.add_subcommand("experiment", "bloat | depth_sweep | gap_check | union_check");
    exp->add_option("name", ea.name)->required();
    exp->add_option("--seeds", ea.seeds);
    exp->add_option("--alpha", ea.alpha);
    exp->add_option("--s", ea.s);
    exp->add_option("--depth", ea.depth);
    exp->add_option("--m", ea.ms, "gap_check: m grid; union_check: sample size");
    exp->add_option("--targets", ea.targets);
    exp->add_option("--instances", ea.instances);
    exp->add_option("--max-classes", ea.max_classes);
    exp->add_option("--max-rows", ea.max_rows);
    exp->add_option("--B", ea.B);
    exp->add_option("--vocab", ea.vocab);

    for (auto* sub : {count, bound, rad, evo, exp}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    g.seed_set = seed_opt->count() > 0;

    try {
        if (*count) return cmd_count(ca, g);
        if (*bound) return cmd_bound(ba, g);
        if (*rad) return cmd_rademacher(ra, g);
        if (*evo) return cmd_evolve(g);
        if (*exp) {
            if (ea.name == "union_check") ea.m = parse_grid(ea.ms == "64,256,1024" ? "8" : ea.ms, "--m").front();
            return cmd_experiment(ea, g);
        }
    } catch (const GuardViolation& e) {
        std::cerr << "gpsr: guard violation: " << e.what() << '\n';
        return kExitGuard;
    } catch (const ConfigError& e) {
        std::cerr << "gpsr: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "gpsr: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
