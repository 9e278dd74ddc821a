#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "gpsr/bench.hpp"
#include "gpsr/complexity.hpp"
#include "gpsr/counting.hpp"
#include "gpsr/errors.hpp"
#include "gpsr/exprtree.hpp"
#include "gpsr/intervals.hpp"
#include "gpsr/rng.hpp"

namespace gpsr {

// Assigned to screened-out trees and to trees whose predictions are not finite.
inline constexpr double kWorstFitness = 1e300;

enum class Parsimony { None, SizePenalty, Lexicographic, BoundPenalty };
enum class ConstantOpt { Off, LevenbergMarquardt };

inline std::string_view name_of(Parsimony p) {
    switch (p) {
        case Parsimony::None: return "none";
        case Parsimony::SizePenalty: return "size_penalty";
        case Parsimony::Lexicographic: return "lexicographic";
        case Parsimony::BoundPenalty: return "bound_penalty";
    }
    return "";
}

inline std::string_view name_of(ConstantOpt c) { return c == ConstantOpt::Off ? "off" : "lm"; }

struct GpConfig {
    std::size_t population_size = 500;
    std::size_t generations = 200;
    std::size_t tournament_size = 5;
    double crossover_rate = 0.8;
    double mutation_rate = 0.2;
    // Probability that a mutation is a constant jitter; the remainder is
    // split evenly between subtree and point mutation.
    double constant_jitter_rate = 0.3;
    Parsimony parsimony = Parsimony::None;
    double parsimony_alpha = 0.01;
    double bound_lambda = 0.01;
    ConstantOpt constant_opt = ConstantOpt::LevenbergMarquardt;
    std::size_t lm_iters = 10;
    std::size_t lm_top_k = 10;
    bool linear_scaling = true;
    bool interval_screening = true;
    Semantics semantics = Semantics::Protected;
    std::size_t threads = 1;
    std::uint64_t seed = 1;

    void check() const {
        auto rate = [](const char* key, double v) {
            if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(key, "must lie in [0, 1]");
        };
        rate("gp.crossover_rate", crossover_rate);
        rate("gp.mutation_rate", mutation_rate);
        rate("gp.constant_jitter_rate", constant_jitter_rate);
        if (crossover_rate + mutation_rate > 1.0 + 1e-12) {
            throw ConfigError("gp.mutation_rate", "crossover_rate + mutation_rate must not exceed 1");
        }
        if (population_size < 2) throw ConfigError("gp.population_size", "must be >= 2");
        if (tournament_size < 1) throw ConfigError("gp.tournament_size", "must be >= 1");
        if (parsimony_alpha < 0.0) throw ConfigError("gp.parsimony_alpha", "must be >= 0");
        if (bound_lambda < 0.0) throw ConfigError("gp.bound_lambda", "must be >= 0");
        if (threads < 1) throw ConfigError("gp.threads", "must be >= 1");
    }
};

struct BoundSettings {
    ComplexityConstants consts{};
    double delta = 0.05;
    double tau = 1.0;
};

// An element f_{T,theta} of the budgeted class, with an affine output
// scale a * f + b.
struct Individual {
    ExprTree tree;
    ParamVector theta;
    double a = 1.0;
    double b = 0.0;
    double fitness = kWorstFitness;
    double train_mse = std::numeric_limits<double>::infinity();
    std::size_t size = 0;
    std::size_t depth = 0;
    std::size_t p = 0;
    bool screened = false;
    // Certified bounds for the scaled predictor a * f + b; empty when
    // interval evaluation rejects the tree.
    std::optional<double> B_cert;
    std::optional<double> G_cert;

    Individual(ExprTree t, ParamVector th) : tree(std::move(t)), theta(std::move(th)) { refresh_metadata(); }

    void refresh_metadata() {
        size = tree.size();
        depth = tree.depth();
        p = tree.num_constants();
    }

    double predict(std::span<const double> x, Semantics sem = Semantics::Protected) const {
        return a * evaluate(tree, theta.values, x, sem) + b;
    }
};

// Predictions of the unscaled tree on the given rows.
inline std::vector<double> raw_predictions(const ExprTree& tree, std::span<const double> theta, const Dataset& data,
                                           std::span<const std::size_t> rows, Semantics sem) {
    std::vector<double> out(rows.size());
    std::vector<double> stack;
    stack.reserve(tree.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        try {
            out[i] = detail::evaluate_into(tree, theta, data.row(rows[i]), sem, stack);
        } catch (const DomainError&) {
            out[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return out;
}

inline double mse_of(std::span<const double> pred, const Dataset& data, std::span<const std::size_t> rows, double a,
                     double b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double r = a * pred[i] + b - data.target(rows[i]);
        acc += r * r;
    }
    const double v = acc / static_cast<double>(rows.size());
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

inline double train_mse(const Individual& ind, const Dataset& data, Semantics sem = Semantics::Protected) {
    const auto pred = raw_predictions(ind.tree, ind.theta.values, data, data.train(), sem);
    return mse_of(pred, data, data.train(), ind.a, ind.b);
}

// Least-squares (a, b) for a * f(x) + b ~ y on the training rows. Constant
// predictions (variance < 1e-12) give a = 0, b = mean(y). The fit replaces
// the current scale only if it does not raise the training MSE.
inline Individual linear_scale(const Individual& ind, const Dataset& data, Semantics sem = Semantics::Protected) {
    const auto& rows = data.train();
    const auto pred = raw_predictions(ind.tree, ind.theta.values, data, rows, sem);
    if (rows.empty() || !std::all_of(pred.begin(), pred.end(), [](double v) { return std::isfinite(v); })) return ind;
    const double n = static_cast<double>(rows.size());
    double mf = 0.0, my = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        mf += pred[i];
        my += data.target(rows[i]);
    }
    mf /= n;
    my /= n;
    double var = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        var += (pred[i] - mf) * (pred[i] - mf);
        cov += (pred[i] - mf) * (data.target(rows[i]) - my);
    }
    var /= n;
    cov /= n;
    double a = 0.0, b = my;
    if (var >= 1e-12) {
        a = cov / var;
        b = my - a * mf;
    }
    Individual out = ind;
    const double before = mse_of(pred, data, rows, ind.a, ind.b);
    const double after = mse_of(pred, data, rows, a, b);
    if (std::isfinite(after) && after <= before) {
        out.a = a;
        out.b = b;
        out.train_mse = after;
    } else {
        out.train_mse = before;
    }
    return out;
}

// Levenberg-Marquardt on the training residuals a f(x; theta) + b - y with
// the Jacobian from forward-mode derivatives. Each accepted iterate is
// projected back onto the radius-R ball. Returns the input unchanged unless
// some iterate strictly lowers the training MSE.
inline Individual optimize_constants(const Individual& ind, const Dataset& data, std::size_t iters,
                                     Semantics sem = Semantics::Protected) {
    const std::size_t p = ind.tree.num_constants();
    const auto& rows = data.train();
    if (p == 0 || rows.empty() || iters == 0) return ind;
    const std::size_t m = rows.size();

    auto residuals = [&](std::span<const double> theta, Eigen::VectorXd& r, Eigen::MatrixXd* jac) -> double {
        r.resize(static_cast<Eigen::Index>(m));
        if (jac) jac->resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double v;
            if (jac) {
                auto vg = eval_with_gradient(ind.tree, theta, data.row(rows[i]), sem);
                v = vg.value;
                for (std::size_t j = 0; j < p; ++j) {
                    (*jac)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ind.a * vg.grad[j];
                }
            } else {
                v = evaluate(ind.tree, theta, data.row(rows[i]), sem);
            }
            const double ri = ind.a * v + ind.b - data.target(rows[i]);
            r(static_cast<Eigen::Index>(i)) = ri;
            acc += ri * ri;
        }
        const double mse = acc / static_cast<double>(m);
        return std::isfinite(mse) ? mse : std::numeric_limits<double>::infinity();
    };

    double start_mse;
    try {
        Eigen::VectorXd r0;
        start_mse = residuals(ind.theta.values, r0, nullptr);
    } catch (const DomainError&) {
        return ind;
    }

    std::vector<double> theta = ind.theta.values;
    double current = start_mse;
    double lambda = 1e-3;
    bool improved = false;
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    try {
        current = residuals(theta, r, &jac);
        for (std::size_t it = 0; it < iters; ++it) {
            if (!std::isfinite(current) || !jac.allFinite()) break;
            const Eigen::MatrixXd jtj = jac.transpose() * jac;
            const Eigen::VectorXd jtr = jac.transpose() * r;
            bool accepted = false;
            for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
                Eigen::MatrixXd lhs = jtj;
                for (Eigen::Index j = 0; j < lhs.rows(); ++j) lhs(j, j) += lambda * (jtj(j, j) + 1e-12);
                const Eigen::VectorXd step = lhs.ldlt().solve(-jtr);
                if (!step.allFinite()) {
                    lambda *= 10.0;
                    continue;
                }
                std::vector<double> trial(p);
                for (std::size_t j = 0; j < p; ++j) trial[j] = theta[j] + step(static_cast<Eigen::Index>(j));
                project_to_ball(trial, ind.theta.radius);
                Eigen::VectorXd tr;
                const double trial_mse = residuals(trial, tr, nullptr);
                if (trial_mse < current) {
                    theta = std::move(trial);
                    current = residuals(theta, r, &jac);
                    lambda = std::max(lambda / 10.0, 1e-12);
                    accepted = true;
                    improved = true;
                } else {
                    lambda *= 10.0;
                }
            }
            if (!accepted) break;
        }
    } catch (const DomainError&) {
        // keep the best accepted iterate
    }
    if (!improved || !(current < start_mse)) return ind;
    Individual out = ind;
    out.theta.values = std::move(theta);
    out.train_mse = current;
    return out;
}

// ---- random trees and variation -----------------------------------------

// Pre-order node sequence of a random tree with depth <= max_depth and
// size <= max_size. `full` prefers operators until the depth limit; grow
// picks uniformly among every admissible symbol.
inline std::vector<Node> random_nodes(const Vocabulary& vocab, std::size_t max_depth, std::size_t max_size, bool full,
                                      Rng& rng) {
    const auto leaves = detail::leaf_symbols(vocab);
    const std::size_t m1 = vocab.m1(), m2 = vocab.m2(), nl = leaves.size();
    std::vector<Node> out;
    std::vector<std::size_t> pending{0};
    while (!pending.empty()) {
        const std::size_t d = pending.back();
        pending.pop_back();
        const std::size_t committed = out.size() + pending.size();
        const bool can_unary = m1 > 0 && d < max_depth && committed + 2 <= max_size;
        const bool can_binary = m2 > 0 && d < max_depth && committed + 3 <= max_size;
        const std::size_t wu = can_unary ? m1 : 0, wb = can_binary ? m2 : 0;
        const std::size_t wl = (full && (wu + wb) > 0) ? 0 : nl;
        std::size_t pick = std::uniform_int_distribution<std::size_t>(0, wu + wb + wl - 1)(rng);
        if (pick < wu) {
            out.push_back(Node::unary(vocab.unary_ops()[pick]));
            pending.push_back(d + 1);
        } else if ((pick -= wu) < wb) {
            out.push_back(Node::binary(vocab.binary_ops()[pick]));
            pending.push_back(d + 1);
            pending.push_back(d + 1);
        } else {
            out.push_back(leaves[pick - wb]);
        }
    }
    return out;
}

// Keeps the common prefix of the old slot values and draws the missing
// ones inside the residual radius, so the result stays in the ball.
inline ParamVector remap_theta(const ParamVector& old, std::size_t p, Rng& rng) {
    ParamVector out{std::vector<double>(old.values.begin(), old.values.begin() + static_cast<std::ptrdiff_t>(
                                                                                     std::min(p, old.values.size()))),
                    old.radius};
    if (p > out.values.size()) {
        const double used = out.norm();
        const double residual = std::sqrt(std::max(0.0, old.radius * old.radius - used * used));
        const auto extra = sample_in_ball(rng, p - out.values.size(), residual);
        out.values.insert(out.values.end(), extra.begin(), extra.end());
    }
    out.project();
    return out;
}

inline bool within_budget(const ExprTree& tree, const Budget& budget) {
    return tree.size() <= budget.max_size && tree.depth() <= budget.max_depth;
}

// Swaps the subtree at a[i] with the subtree at b[j]. An offspring that
// breaks the budget is replaced by the parent it was built from.
inline std::pair<Individual, Individual> crossover_at(const Individual& a, std::size_t i, const Individual& b,
                                                      std::size_t j, const Budget& budget, Rng& rng) {
    auto make_child = [&](const Individual& recv, std::size_t at, const Individual& donor, std::size_t from) {
        const auto piece = donor.tree.nodes().subspan(from, donor.tree.subtree_end(from) - from);
        ExprTree t = recv.tree.with_subtree(at, piece);
        if (!within_budget(t, budget)) return recv;
        const std::size_t p = t.num_constants();
        Individual child(std::move(t), remap_theta(recv.theta, p, rng));
        child.a = recv.a;
        child.b = recv.b;
        return child;
    };
    Individual c1 = make_child(a, i, b, j);
    Individual c2 = make_child(b, j, a, i);
    return {std::move(c1), std::move(c2)};
}

// Crossover points drawn uniformly over the nodes of each parent.
inline std::pair<Individual, Individual> subtree_crossover(const Individual& a, const Individual& b,
                                                           const Budget& budget, Rng& rng) {
    const auto i = std::uniform_int_distribution<std::size_t>(0, a.tree.size() - 1)(rng);
    const auto j = std::uniform_int_distribution<std::size_t>(0, b.tree.size() - 1)(rng);
    return crossover_at(a, i, b, j, budget, rng);
}

enum class MutationKind { Subtree, Point, Jitter };

inline Individual mutate_with(const Individual& ind, MutationKind kind, const Vocabulary& vocab, const Budget& budget,
                              Rng& rng) {
    Individual out = ind;
    switch (kind) {
        case MutationKind::Jitter: {
            std::normal_distribution<double> noise(0.0, 0.1 * ind.theta.radius);
            for (double& v : out.theta.values) v += noise(rng);
            out.theta.project();
            return out;
        }
        case MutationKind::Subtree: {
            const auto i = std::uniform_int_distribution<std::size_t>(0, ind.tree.size() - 1)(rng);
            const std::size_t d = ind.tree.node_depths()[i];
            const std::size_t old_len = ind.tree.subtree_end(i) - i;
            const std::size_t room = budget.max_size - (ind.tree.size() - old_len);
            const auto piece = random_nodes(vocab, budget.max_depth - d, room, false, rng);
            ExprTree t = ind.tree.with_subtree(i, piece);
            if (!within_budget(t, budget)) return ind;
            // Slots before i keep their values; the rest are redrawn.
            const std::size_t before = ind.tree.slots_before(i);
            ParamVector prefix{std::vector<double>(ind.theta.values.begin(),
                                                   ind.theta.values.begin() + static_cast<std::ptrdiff_t>(before)),
                               ind.theta.radius};
            const std::size_t p = t.num_constants();
            Individual child(std::move(t), remap_theta(prefix, p, rng));
            child.a = ind.a;
            child.b = ind.b;
            return child;
        }
        case MutationKind::Point: {
            const auto i = std::uniform_int_distribution<std::size_t>(0, ind.tree.size() - 1)(rng);
            const Node old = ind.tree.nodes()[i];
            std::vector<Node> options;
            if (old.kind == NodeKind::Unary) {
                for (auto op : vocab.unary_ops()) options.push_back(Node::unary(op));
            } else if (old.kind == NodeKind::Binary) {
                for (auto op : vocab.binary_ops()) options.push_back(Node::binary(op));
            } else {
                options = detail::leaf_symbols(vocab);
            }
            std::erase(options, old);
            if (options.empty()) return ind;
            const Node repl = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
            ExprTree t = ind.tree.with_node(i, repl);
            const std::size_t p = t.num_constants();
            Individual child(std::move(t), remap_theta(ind.theta, p, rng));
            child.a = ind.a;
            child.b = ind.b;
            return child;
        }
    }
    return out;
}

inline Individual mutate(const Individual& ind, const Vocabulary& vocab, const Budget& budget, const GpConfig& config,
                         Rng& rng) {
    const double u = uniform(rng, 0.0, 1.0);
    MutationKind kind;
    if (u < config.constant_jitter_rate) {
        kind = MutationKind::Jitter;
    } else {
        kind = (u - config.constant_jitter_rate) < 0.5 * (1.0 - config.constant_jitter_rate) ? MutationKind::Subtree
                                                                                            : MutationKind::Point;
    }
    return mutate_with(ind, kind, vocab, budget, rng);
}

// ---- fitness ---------------------------------------------------------------

// Everything fitness needs beyond the individual and the data.
struct FitnessContext {
    Budget budget;
    std::vector<Interval> domain;
    // Exact structure counts up to (s, D); required for bound_penalty.
    const CountTable* structures = nullptr;
    BoundSettings bound{};
};

// Certified B and G of the scaled predictor a * f + b.
inline void certify(Individual& ind, const FitnessContext& ctx) {
    const auto bt = certify_B(ind.tree, ctx.budget, ctx.domain);
    const auto gt = bt ? certify_G(ind.tree, ctx.budget, ctx.domain) : std::nullopt;
    auto finite = [](double v) { return std::isfinite(v) ? std::optional<double>(v) : std::nullopt; };
    ind.B_cert = bt ? finite(std::fabs(ind.a) * *bt + std::fabs(ind.b)) : std::nullopt;
    ind.G_cert = gt ? finite(std::fabs(ind.a) * *gt) : std::nullopt;
}

// log |T_{size, depth}| for the individual's own size and depth.
inline double own_log_structures(const Individual& ind, const CountTable& table) {
    return log_of(table.cumulative(ind.size, ind.depth));
}

// Fitness of an individual whose scale, train_mse and certificates are
// current. Minimized.
inline double fitness(const Individual& ind, const GpConfig& config, const FitnessContext& ctx, std::size_t m) {
    if (!std::isfinite(ind.train_mse)) return kWorstFitness;
    if (config.interval_screening && !ind.B_cert) return kWorstFitness;
    double f = ind.train_mse;
    switch (config.parsimony) {
        case Parsimony::None:
        case Parsimony::Lexicographic: break;
        case Parsimony::SizePenalty: f += config.parsimony_alpha * static_cast<double>(ind.size); break;
        case Parsimony::BoundPenalty: {
            if (!ind.B_cert || !ind.G_cert || !ctx.structures) return kWorstFitness;
            BoundInputs in;
            in.m = m;
            in.s = ind.size;
            in.D = ind.depth;
            in.R = ctx.budget.radius;
            in.delta = ctx.bound.delta;
            in.B = *ind.B_cert;
            in.G = *ind.G_cert;
            in.log_T = own_log_structures(ind, *ctx.structures);
            in.consts = ctx.bound.consts;
            in.tau = ctx.bound.tau;
            const auto rep = assemble_bound(in);
            f += config.bound_lambda * (rep.term_fit + rep.term_struct);
            break;
        }
    }
    return std::isfinite(f) ? std::min(f, kWorstFitness) : kWorstFitness;
}

// Applies linear scaling if enabled, then refreshes train_mse, certificates,
// the screening flag and fitness.
inline void evaluate_individual(Individual& ind, const Dataset& data, const GpConfig& config,
                                const FitnessContext& ctx) {
    assert(within_budget(ind.tree, ctx.budget));
    assert(ind.theta.in_ball());
    ind.refresh_metadata();
    if (config.linear_scaling) {
        ind.a = 1.0;
        ind.b = 0.0;
        ind = linear_scale(ind, data, config.semantics);
    }
    ind.train_mse = train_mse(ind, data, config.semantics);
    certify(ind, ctx);
    ind.screened = config.interval_screening && !ind.B_cert;
    ind.fitness = fitness(ind, config, ctx, data.train().size());
}

// True when x should win a tournament against y.
inline bool better(const Individual& x, const Individual& y, bool lexicographic) {
    if (x.fitness != y.fitness) return x.fitness < y.fitness;
    if (x.screened != y.screened) return !x.screened;
    if (lexicographic && x.size != y.size) return x.size < y.size;
    return false;
}

inline std::size_t tournament(const std::vector<Individual>& pop, std::size_t k, bool lexicographic, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    std::size_t best = pick(rng);
    for (std::size_t i = 1; i < k; ++i) {
        const std::size_t c = pick(rng);
        if (better(pop[c], pop[best], lexicographic)) best = c;
    }
    return best;
}

inline std::size_t best_index(const std::vector<Individual>& pop, bool lexicographic) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop.size(); ++i) {
        if (better(pop[i], pop[best], lexicographic)) best = i;
    }
    return best;
}

namespace detail {

template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> workers;
    const std::size_t t = std::min(threads, n);
    for (std::size_t w = 0; w < t; ++w) {
        workers.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += t) fn(i);
        });
    }
}

}  // namespace detail

// Ramped half-and-half over depths 1..D. With screening on, a rejected tree
// is regenerated up to 50 times, after which the smallest attempt is kept.
inline std::vector<Individual> init_population(const VocabularyPtr& vocab, const Budget& budget,
                                               const GpConfig& config, std::span<const Interval> domain) {
    std::vector<Individual> pop;
    pop.reserve(config.population_size);
    for (std::size_t i = 0; i < config.population_size; ++i) {
        Rng rng = make_rng(config.seed, 0, i);
        const std::size_t depth = 1 + i % budget.max_depth;
        const bool full = (i / budget.max_depth) % 2 == 0;
        std::optional<ExprTree> chosen;
        std::optional<ExprTree> smallest;
        for (int attempt = 0; attempt < 50; ++attempt) {
            ExprTree t(vocab, random_nodes(*vocab, depth, budget.max_size, full, rng));
            if (!config.interval_screening || certify_B(t, budget, domain)) {
                chosen = std::move(t);
                break;
            }
            if (!smallest || t.size() < smallest->size()) smallest = std::move(t);
        }
        ExprTree t = chosen ? std::move(*chosen) : std::move(*smallest);
        const std::size_t p = t.num_constants();
        pop.emplace_back(std::move(t), ParamVector{sample_in_ball(rng, p, budget.radius), budget.radius});
    }
    return pop;
}

struct GenerationStats {
    std::size_t generation;
    double best_fitness;
    double mean_fitness;  // over individuals that were not assigned the worst fitness
    double best_train_mse;
    double mean_size;
    double mean_depth;
    double rejection_rate;
};

struct EvolveResult {
    Individual best;
    std::vector<GenerationStats> history;
    BoundReport report;
    std::vector<Individual> final_population;
};

inline GenerationStats population_stats(const std::vector<Individual>& pop, std::size_t generation,
                                        bool lexicographic) {
    GenerationStats st{generation, 0, 0, 0, 0, 0, 0};
    const auto& best = pop[best_index(pop, lexicographic)];
    st.best_fitness = best.fitness;
    st.best_train_mse = best.train_mse;
    std::size_t n_ok = 0, n_rej = 0;
    for (const auto& ind : pop) {
        st.mean_size += static_cast<double>(ind.size);
        st.mean_depth += static_cast<double>(ind.depth);
        if (ind.screened) ++n_rej;
        if (ind.fitness < kWorstFitness) {
            st.mean_fitness += ind.fitness;
            ++n_ok;
        }
    }
    const double n = static_cast<double>(pop.size());
    st.mean_size /= n;
    st.mean_depth /= n;
    st.rejection_rate = static_cast<double>(n_rej) / n;
    st.mean_fitness = n_ok ? st.mean_fitness / static_cast<double>(n_ok) : kWorstFitness;
    return st;
}

// Predictions a * f + b on every row of the dataset.
inline std::vector<double> predictions(const Individual& ind, const Dataset& data, Semantics sem = Semantics::Protected) {
    std::vector<std::size_t> rows(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    auto pred = raw_predictions(ind.tree, ind.theta.values, data, rows, sem);
    for (double& v : pred) v = ind.a * v + ind.b;
    return pred;
}

inline Risks empirical_risks(const Individual& ind, const Dataset& data, double tau = 1.0,
                             Semantics sem = Semantics::Protected) {
    return empirical_risks(predictions(ind, data, sem), data, tau);
}

// Normalized RMSE on the training rows: rmse / std(y).
inline double train_nrmse(const Individual& ind, const Dataset& data, Semantics sem = Semantics::Protected) {
    double my = 0.0;
    for (auto i : data.train()) my += data.target(i);
    my /= static_cast<double>(data.train().size());
    double var = 0.0;
    for (auto i : data.train()) var += (data.target(i) - my) * (data.target(i) - my);
    var /= static_cast<double>(data.train().size());
    return std::sqrt(train_mse(ind, data, sem) / var);
}

// Generational GP with tournament selection and elitism of one. The final
// report uses the largest certified B and G seen during the run and the
// exact log |T_{s,D}|.
// `on_generation`, when set, sees every evaluated population (generation 0
// is the initial one).
inline EvolveResult evolve(const VocabularyPtr& vocab, const Budget& budget, const Dataset& data,
                           const GpConfig& config, const BoundSettings& bound = {},
                           const std::function<void(std::size_t, const std::vector<Individual>&)>& on_generation = {}) {
    config.check();
    try {
        budget.check();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("budget", e.what());
    }
    if (data.size() == 0 || data.train().empty()) throw ConfigError("data", "training split is empty");
    if (data.dims() < vocab->variables()) throw ConfigError("vocab.variables", "exceeds dataset dimension");

    const bool lexi = config.parsimony == Parsimony::Lexicographic;
    const CountTable table = CountTable::structures(budget.max_size, budget.max_depth, *vocab);
    FitnessContext ctx{budget, std::vector<Interval>(data.domain().begin(), data.domain().end()), &table, bound};

    double max_b = 0.0, max_g = 0.0;
    bool any_cert = false;
    auto track = [&](const std::vector<Individual>& pop) {
        for (const auto& ind : pop) {
            if (ind.B_cert && ind.G_cert) {
                max_b = std::max(max_b, *ind.B_cert);
                max_g = std::max(max_g, *ind.G_cert);
                any_cert = true;
            }
        }
    };
    auto evaluate_all = [&](std::vector<Individual>& pop, std::size_t from) {
        detail::parallel_for(pop.size() - from, config.threads,
                             [&](std::size_t k) { evaluate_individual(pop[from + k], data, config, ctx); });
    };
    auto optimize_top = [&](std::vector<Individual>& pop) {
        if (config.constant_opt != ConstantOpt::LevenbergMarquardt || config.lm_top_k == 0) return;
        std::vector<std::size_t> order(pop.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t k = std::min(config.lm_top_k, pop.size());
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                          [&](std::size_t x, std::size_t y) {
                              return better(pop[x], pop[y], lexi) || (!better(pop[y], pop[x], lexi) && x < y);
                          });
        detail::parallel_for(k, config.threads, [&](std::size_t r) {
            Individual& ind = pop[order[r]];
            if (ind.screened || ind.p == 0) return;
            Individual cand = optimize_constants(ind, data, config.lm_iters, config.semantics);
            evaluate_individual(cand, data, config, ctx);
            if (cand.fitness < ind.fitness) ind = std::move(cand);
        });
    };

    std::vector<Individual> pop = init_population(vocab, budget, config, ctx.domain);
    evaluate_all(pop, 0);
    optimize_top(pop);
    track(pop);
    if (on_generation) on_generation(0, pop);

    std::vector<GenerationStats> history;
    history.reserve(config.generations);
    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        std::vector<Individual> next;
        next.reserve(config.population_size);
        next.push_back(pop[best_index(pop, lexi)]);
        std::size_t slot = 1;
        while (next.size() < config.population_size) {
            Rng rng = make_rng(config.seed, gen, slot++);
            const double u = uniform(rng, 0.0, 1.0);
            const Individual& pa = pop[tournament(pop, config.tournament_size, lexi, rng)];
            if (u < config.crossover_rate) {
                const Individual& pb = pop[tournament(pop, config.tournament_size, lexi, rng)];
                auto [c1, c2] = subtree_crossover(pa, pb, budget, rng);
                next.push_back(std::move(c1));
                if (next.size() < config.population_size) next.push_back(std::move(c2));
            } else if (u < config.crossover_rate + config.mutation_rate) {
                next.push_back(mutate(pa, *vocab, budget, config, rng));
            } else {
                next.push_back(pa);
            }
        }
        // The elite keeps its evaluation; everyone else is re-evaluated.
        evaluate_all(next, 1);
        optimize_top(next);
        track(next);
        if (on_generation) on_generation(gen, next);
        pop = std::move(next);
        history.push_back(population_stats(pop, gen, lexi));
    }

    const Individual& best = pop[best_index(pop, lexi)];
    const auto risks = empirical_risks(best, data, bound.tau, config.semantics);
    BoundInputs in;
    in.m = data.train().size();
    in.s = budget.max_size;
    in.D = budget.max_depth;
    in.R = budget.radius;
    in.delta = bound.delta;
    in.B = any_cert ? max_b : 0.0;
    in.B_tag = Provenance::Certified;
    in.G = any_cert ? max_g : 0.0;
    in.G_tag = Provenance::Certified;
    in.log_T = log_of(table.cumulative(budget.max_size, budget.max_depth));
    in.log_T_method = CountMethod::ExactDp;
    in.consts = bound.consts;
    in.tau = bound.tau;
    in.observed_train = risks.train;
    in.observed_test = risks.test;
    in.loss_saturation = risks.saturation;
    EvolveResult result{best, std::move(history), assemble_bound(in), {}};
    result.final_population = std::move(pop);
    return result;
}

}  // namespace gpsr
