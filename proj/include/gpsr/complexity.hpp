#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "gpsr/bench.hpp"
#include "gpsr/errors.hpp"
#include "gpsr/exprtree.hpp"
#include "gpsr/intervals.hpp"
#include "gpsr/rng.hpp"

namespace gpsr {

// Instantiation of the absolute constants of the generalization bound.
// c_dudley is the constant of Dudley's entropy integral; c_par = 4 c_dudley
// follows from relaxing log(1 + u) <= u inside it; a_sym and b_conf are the
// symmetrization and confidence constants of the standard Rademacher bound
// for [0, 1]-valued losses.
struct ComplexityConstants {
    double c_dudley = 12.0;
    double c_par = 48.0;
    double a_sym = 2.0;
    double b_conf = 3.0 / std::numbers::sqrt2;

    double C1() const { return a_sym * c_par; }
    double C2() const { return a_sym * std::numbers::sqrt2; }
    double C3() const { return b_conf; }

    void check() const {
        if (!(c_dudley > 0 && c_par > 0 && a_sym > 0 && b_conf > 0)) {
            throw std::invalid_argument("complexity constants must be positive");
        }
    }
};

enum class Provenance { Certified, Sampled, Configured };
enum class CountMethod { ExactDp, TheoremBound };

inline std::string_view name_of(Provenance p) {
    switch (p) {
        case Provenance::Certified: return "certified";
        case Provenance::Sampled: return "sampled";
        case Provenance::Configured: return "configured";
    }
    return "";
}

inline std::string_view name_of(CountMethod m) { return m == CountMethod::ExactDp ? "exact_dp" : "theorem_bound"; }

inline Provenance provenance_from_name(std::string_view s) {
    if (s == "certified") return Provenance::Certified;
    if (s == "sampled") return Provenance::Sampled;
    if (s == "configured") return Provenance::Configured;
    throw std::invalid_argument("unknown provenance '" + std::string(s) + "'");
}

inline CountMethod count_method_from_name(std::string_view s) {
    if (s == "exact_dp") return CountMethod::ExactDp;
    if (s == "theorem_bound") return CountMethod::TheoremBound;
    throw std::invalid_argument("unknown count method '" + std::string(s) + "'");
}

// ---- sensitivity ---------------------------------------------------------

// Pseudometric d_S(theta, theta') = sqrt(mean_i (f(x_i; theta) - f(x_i; theta'))^2)
// over the rows of `sample` selected by `rows`.
inline double pseudometric(const ExprTree& tree, std::span<const double> theta_a, std::span<const double> theta_b,
                           const Dataset& sample, std::span<const std::size_t> rows,
                           Semantics sem = Semantics::Protected) {
    double acc = 0.0;
    for (auto i : rows) {
        const double d = evaluate(tree, theta_a, sample.row(i), sem) - evaluate(tree, theta_b, sample.row(i), sem);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(rows.size()));
}

// Max of |grad_theta f|_2 over random (x, theta) in domain x ball(R); a
// lower estimate of the true supremum.
inline double estimate_G_sampled(const ExprTree& tree, const Budget& budget, std::span<const Interval> domain,
                                 std::size_t n_samples, std::uint64_t seed, Semantics sem = Semantics::Protected) {
    if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    const std::size_t p = tree.num_constants();
    if (p == 0) return 0.0;
    Rng rng = make_rng(seed, 0x6e);
    std::vector<double> x(domain.size());
    double best = 0.0;
    for (std::size_t k = 0; k < n_samples; ++k) {
        for (std::size_t j = 0; j < domain.size(); ++j) x[j] = uniform(rng, domain[j].lo, domain[j].hi);
        const auto theta = sample_in_ball(rng, p, budget.radius);
        best = std::max(best, norm2(eval_with_gradient(tree, theta, x, sem).grad));
    }
    return best;
}

// ---- covering numbers ----------------------------------------------------

// log (1 + 2 R G / eps)^p
inline double covering_bound(std::size_t p, double radius, double g, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
    return static_cast<double>(p) * std::log1p(2.0 * radius * g / eps);
}

// Size of a greedy eps-net under d_S built over n_candidates random points
// of the radius-R ball. Centers are pairwise more than eps apart.
inline std::size_t greedy_cover_size(const ExprTree& tree, double radius, const Dataset& sample, double eps,
                                     std::size_t n_candidates, std::uint64_t seed) {
    const std::size_t p = tree.num_constants();
    if (p > 3) throw GuardViolation("greedy_cover_size supports p <= 3, got " + std::to_string(p));
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
    const auto& rows = sample.train();
    const std::size_t m = rows.size();
    Rng rng = make_rng(seed, 0xc0fe);
    // Prediction vectors of the centers, concatenated.
    std::vector<double> centers;
    std::size_t n_centers = 0;
    std::vector<double> pred(m);
    const double eps2 = eps * eps * static_cast<double>(m);
    for (std::size_t k = 0; k < n_candidates; ++k) {
        const auto theta = sample_in_ball(rng, p, radius);
        for (std::size_t i = 0; i < m; ++i) pred[i] = evaluate(tree, theta, sample.row(rows[i]));
        bool covered = false;
        for (std::size_t c = 0; c < n_centers && !covered; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double d = pred[i] - centers[c * m + i];
                acc += d * d;
            }
            covered = acc <= eps2;
        }
        if (!covered) {
            centers.insert(centers.end(), pred.begin(), pred.end());
            ++n_centers;
        }
    }
    return n_centers;
}

// ---- Dudley / fixed-structure bounds ------------------------------------

// c_par R G sqrt(p / m)
inline double dudley_fixed_structure_bound(std::size_t p, double radius, double g, std::size_t m,
                                           const ComplexityConstants& consts) {
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    return consts.c_par * radius * g * std::sqrt(static_cast<double>(p) / static_cast<double>(m));
}

// (C / sqrt m) int_0^{2RG} sqrt(p log(1 + 2RG/eps)) d eps, by adaptive
// Gauss-Kronrod quadrature. With eps = 2RG u^2 the integrand becomes
// 4 R G u sqrt(p log(1 + 1/u^2)), which is bounded on [0, 1].
inline double dudley_integral_bound(std::size_t p, double radius, double g, std::size_t m,
                                    const ComplexityConstants& consts) {
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    if (p == 0 || radius * g == 0.0) return 0.0;
    auto integrand = [](double u) { return u <= 0.0 ? 0.0 : 2.0 * u * std::sqrt(std::log1p(1.0 / (u * u))); };
    const double unit = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 15, 1e-12);
    return consts.c_dudley / std::sqrt(static_cast<double>(m)) * 2.0 * radius * g *
           std::sqrt(static_cast<double>(p)) * unit;
}

// ---- Rademacher complexity -----------------------------------------------

inline constexpr std::size_t kExactRademacherMaxM = 20;

// E_sigma max_row (1/m) sum_i sigma_i v_row,i over all 2^m sign vectors.
inline double rademacher_exact(std::span<const std::vector<double>> rows) {
    if (rows.empty()) throw std::invalid_argument("rademacher_exact needs at least one row");
    const std::size_t m = rows.front().size();
    if (m > kExactRademacherMaxM) {
        throw GuardViolation("rademacher_exact enumerates 2^m sign vectors; m = " + std::to_string(m) + " > 20");
    }
    for (const auto& r : rows) {
        if (r.size() != m) throw std::invalid_argument("rademacher_exact rows must have equal length");
    }
    if (m == 0) return 0.0;
    const std::uint64_t n_sign = std::uint64_t{1} << m;
    double total = 0.0;
    for (std::uint64_t mask = 0; mask < n_sign; ++mask) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& r : rows) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += ((mask >> i) & 1U) ? r[i] : -r[i];
            best = std::max(best, acc);
        }
        total += best;
    }
    return total / static_cast<double>(n_sign) / static_cast<double>(m);
}

struct McEstimate {
    double mean;
    double std_error;
};

struct AscentOptions {
    std::size_t steps = 200;
    double step_fraction = 0.1;  // initial step as a fraction of R
    Semantics semantics = Semantics::Protected;
};

namespace detail {

inline double correlation(const ExprTree& tree, std::span<const double> theta, const Dataset& sample,
                          std::span<const std::size_t> rows, std::span<const double> sigma, Semantics sem,
                          std::vector<double>* grad) {
    const std::size_t p = tree.num_constants();
    double acc = 0.0;
    if (grad) grad->assign(p, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (grad) {
            const auto vg = eval_with_gradient(tree, theta, sample.row(rows[i]), sem);
            acc += sigma[i] * vg.value;
            for (std::size_t j = 0; j < p; ++j) (*grad)[j] += sigma[i] * vg.grad[j];
        } else {
            acc += sigma[i] * evaluate(tree, theta, sample.row(rows[i]), sem);
        }
    }
    const double inv_m = 1.0 / static_cast<double>(rows.size());
    if (grad) {
        for (double& g : *grad) g *= inv_m;
    }
    const double v = acc * inv_m;
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
}

// Projected normalized-gradient ascent on the ball; the step grows on
// success and halves on failure.
inline double ascend(const ExprTree& tree, std::vector<double> theta, double radius, const Dataset& sample,
                     std::span<const std::size_t> rows, std::span<const double> sigma, const AscentOptions& opt) {
    std::vector<double> grad;
    double value = correlation(tree, theta, sample, rows, sigma, opt.semantics, &grad);
    double step = opt.step_fraction * radius;
    const double min_step = 1e-9 * radius;
    std::vector<double> trial(theta.size());
    for (std::size_t it = 0; it < opt.steps && step > min_step; ++it) {
        const double gn = norm2(grad);
        if (!(gn > 0.0) || !std::isfinite(gn)) break;
        for (std::size_t j = 0; j < theta.size(); ++j) trial[j] = theta[j] + step * grad[j] / gn;
        project_to_ball(trial, radius);
        std::vector<double> trial_grad;
        const double tv = correlation(tree, trial, sample, rows, sigma, opt.semantics, &trial_grad);
        if (tv > value) {
            theta = trial;
            value = tv;
            grad = std::move(trial_grad);
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    return value;
}

}  // namespace detail

// Monte Carlo estimate of the empirical Rademacher complexity of the
// fixed-structure class {f(.; theta) : |theta| <= R} on the training rows.
// The inner supremum is approximated from below by multi-start projected
// gradient ascent, so the result is a lower estimate.
inline McEstimate rademacher_mc_fixed(const ExprTree& tree, double radius, const Dataset& sample, std::size_t n_sigma,
                                      std::size_t n_restarts, std::uint64_t seed, const AscentOptions& opt = {}) {
    if (n_sigma < 2) throw std::invalid_argument("n_sigma must be >= 2");
    const std::size_t p = tree.num_constants();
    if (p == 0) return {0.0, 0.0};
    const auto& rows = sample.train();
    std::vector<double> sups(n_sigma);
    for (std::size_t k = 0; k < n_sigma; ++k) {
        Rng rng = make_rng(seed, 0x5164, k);
        std::vector<double> sigma(rows.size());
        for (double& s : sigma) s = (rng() & 1U) ? 1.0 : -1.0;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < std::max<std::size_t>(n_restarts, 1); ++r) {
            auto start = r == 0 ? std::vector<double>(p, 0.0) : sample_in_ball(rng, p, radius);
            best = std::max(best, detail::ascend(tree, std::move(start), radius, sample, rows, sigma, opt));
        }
        sups[k] = best;
    }
    const double n = static_cast<double>(n_sigma);
    double mean = 0.0;
    for (double v : sups) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : sups) var += (v - mean) * (v - mean);
    var /= (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

// max_member + B sqrt(2 log M / m); M is passed as log M.
inline double finite_union_bound(double max_member, double bound_b, double log_m_classes, std::size_t m) {
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    if (log_m_classes < 0.0) throw std::invalid_argument("log M must be >= 0");
    return max_member + bound_b * std::sqrt(2.0 * log_m_classes / static_cast<double>(m));
}

// ---- assembled bound -----------------------------------------------------

struct BoundInputs {
    std::size_t m = 1;
    std::size_t s = 1;
    std::size_t D = 1;
    double R = 1.0;
    double delta = 0.05;
    double B = 1.0;
    Provenance B_tag = Provenance::Configured;
    double G = 1.0;
    Provenance G_tag = Provenance::Configured;
    double log_T = 0.0;
    CountMethod log_T_method = CountMethod::ExactDp;
    ComplexityConstants consts{};
    double tau = 1.0;  // loss scale; Rademacher terms pick up the Lipschitz factor 1/tau
    double observed_train = 0.0;
    double observed_test = 0.0;
    double loss_saturation = 0.0;
};

struct BoundReport {
    std::size_t m = 0;
    std::size_t s = 0;
    std::size_t D = 0;
    double R = 0.0;
    double B_used = 0.0;
    Provenance B_used_tag = Provenance::Configured;
    double G_used = 0.0;
    Provenance G_used_tag = Provenance::Configured;
    double log_T = 0.0;
    CountMethod log_T_method = CountMethod::ExactDp;
    double term_fit = 0.0;
    double term_struct = 0.0;
    double term_conf = 0.0;
    double delta = 0.0;
    double total = 0.0;
    double observed_train = 0.0;
    double observed_test = 0.0;
    double observed_gap = 0.0;
    double loss_saturation = 0.0;
    double tau = 1.0;
    ComplexityConstants consts{};

    nlohmann::ordered_json to_json() const {
        return {{"m", m},
                {"s", s},
                {"D", D},
                {"R", R},
                {"B_used", B_used},
                {"B_used_tag", name_of(B_used_tag)},
                {"G_used", G_used},
                {"G_used_tag", name_of(G_used_tag)},
                {"log_T", log_T},
                {"log_T_method", name_of(log_T_method)},
                {"term_fit", term_fit},
                {"term_struct", term_struct},
                {"term_conf", term_conf},
                {"delta", delta},
                {"total", total},
                {"observed_train", observed_train},
                {"observed_test", observed_test},
                {"observed_gap", observed_gap},
                {"loss_saturation", loss_saturation},
                {"tau", tau},
                {"C1", consts.C1()},
                {"C2", consts.C2()},
                {"C3", consts.C3()},
                {"c_dudley", consts.c_dudley},
                {"c_par", consts.c_par},
                {"a_sym", consts.a_sym},
                {"b_conf", consts.b_conf}};
    }

    static BoundReport from_json(const nlohmann::json& j) {
        BoundReport r;
        r.m = j.at("m").get<std::size_t>();
        r.s = j.at("s").get<std::size_t>();
        r.D = j.at("D").get<std::size_t>();
        r.R = j.at("R").get<double>();
        r.B_used = j.at("B_used").get<double>();
        r.B_used_tag = provenance_from_name(j.at("B_used_tag").get<std::string>());
        r.G_used = j.at("G_used").get<double>();
        r.G_used_tag = provenance_from_name(j.at("G_used_tag").get<std::string>());
        r.log_T = j.at("log_T").get<double>();
        r.log_T_method = count_method_from_name(j.at("log_T_method").get<std::string>());
        r.term_fit = j.at("term_fit").get<double>();
        r.term_struct = j.at("term_struct").get<double>();
        r.term_conf = j.at("term_conf").get<double>();
        r.delta = j.at("delta").get<double>();
        r.total = j.at("total").get<double>();
        r.observed_train = j.at("observed_train").get<double>();
        r.observed_test = j.at("observed_test").get<double>();
        r.observed_gap = j.at("observed_gap").get<double>();
        r.loss_saturation = j.value("loss_saturation", 0.0);
        r.tau = j.value("tau", 1.0);
        r.consts.c_dudley = j.value("c_dudley", r.consts.c_dudley);
        r.consts.c_par = j.value("c_par", r.consts.c_par);
        r.consts.a_sym = j.value("a_sym", r.consts.a_sym);
        r.consts.b_conf = j.value("b_conf", r.consts.b_conf);
        return r;
    }
};

// L(f) <= L_S(f) + C1 R G sqrt(s/m) + C2 B sqrt(log|T|/m) + C3 sqrt(log(1/delta)/m)
inline BoundReport assemble_bound(const BoundInputs& in) {
    if (!(in.delta > 0.0 && in.delta < 1.0)) {
        throw InvalidConfidence("delta must lie in (0, 1), got " + format_double(in.delta));
    }
    for (double v : {in.R, in.B, in.G, in.log_T, in.tau, in.observed_train, in.observed_test}) {
        if (!std::isfinite(v)) throw std::invalid_argument("assemble_bound inputs must be finite");
    }
    if (in.m < 1) throw std::invalid_argument("m must be >= 1");
    if (in.R < 0 || in.B < 0 || in.G < 0 || in.log_T < 0 || !(in.tau > 0)) {
        throw std::invalid_argument("assemble_bound: R, B, G, log_T must be >= 0 and tau > 0");
    }
    in.consts.check();
    const double m = static_cast<double>(in.m);
    const double lip = 1.0 / in.tau;
    BoundReport r;
    r.m = in.m;
    r.s = in.s;
    r.D = in.D;
    r.R = in.R;
    r.B_used = in.B;
    r.B_used_tag = in.B_tag;
    r.G_used = in.G;
    r.G_used_tag = in.G_tag;
    r.log_T = in.log_T;
    r.log_T_method = in.log_T_method;
    r.term_fit = lip * in.consts.C1() * in.R * in.G * std::sqrt(static_cast<double>(in.s) / m);
    r.term_struct = lip * in.consts.C2() * in.B * std::sqrt(in.log_T / m);
    r.term_conf = in.consts.C3() * std::sqrt(std::log(1.0 / in.delta) / m);
    r.delta = in.delta;
    r.total = r.term_fit + r.term_struct + r.term_conf;
    r.observed_train = in.observed_train;
    r.observed_test = in.observed_test;
    r.observed_gap = in.observed_test - in.observed_train;
    r.loss_saturation = in.loss_saturation;
    r.tau = in.tau;
    r.consts = in.consts;
    return r;
}

}  // namespace gpsr
