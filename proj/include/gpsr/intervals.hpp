#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "gpsr/exprtree.hpp"

namespace gpsr {

// Closed interval [lo, hi]. `defined` is false when an operator's domain
// was violated somewhere in the enclosing box; lo/hi are then meaningless.
//
// Endpoints use ordinary floating arithmetic widened by a relative slack
// of 1e-12 per operation. This is good enough for screening and for
// estimating B and G, but it is not a rigorous enclosure.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool defined = true;

    static Interval point(double v) { return {v, v, true}; }
    static Interval undefined() { return {0.0, 0.0, false}; }

    bool contains(double v) const { return defined && lo <= v && v <= hi; }
    bool contains(const Interval& o) const { return defined && o.defined && lo <= o.lo && o.hi <= hi; }
    bool is_zero() const { return defined && lo == 0.0 && hi == 0.0; }
    bool finite() const { return defined && std::isfinite(lo) && std::isfinite(hi); }
    // max |v| over the interval
    double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }
    double width() const { return hi - lo; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

// Input box (one interval per variable) and parameter box (one per slot).
struct Box {
    std::vector<Interval> inputs;
    std::vector<Interval> params;

    // Encloses the l2 ball of radius R by the cube [-R, R]^p.
    static Box for_radius(std::vector<Interval> inputs, std::size_t p, double radius) {
        return {std::move(inputs), std::vector<Interval>(p, Interval{-radius, radius, true})};
    }
};

namespace ia {

inline constexpr double kSlack = 1e-12;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline Interval make(double lo, double hi) {
    if (std::isnan(lo) || std::isnan(hi)) return Interval::undefined();
    if (std::isfinite(lo)) lo = std::nextafter(lo - kSlack * std::fabs(lo), -kInf);
    if (std::isfinite(hi)) hi = std::nextafter(hi + kSlack * std::fabs(hi), kInf);
    return {lo, hi, true};
}

inline Interval add(const Interval& a, const Interval& b) {
    if (!a.defined || !b.defined) return Interval::undefined();
    return make(a.lo + b.lo, a.hi + b.hi);
}

inline Interval sub(const Interval& a, const Interval& b) {
    if (!a.defined || !b.defined) return Interval::undefined();
    return make(a.lo - b.hi, a.hi - b.lo);
}

inline Interval neg(const Interval& a) {
    if (!a.defined) return a;
    return {-a.hi, -a.lo, true};
}

// 0 * inf is taken as 0: an exact zero factor annihilates.
inline double mul0(double a, double b) { return (a == 0.0 || b == 0.0) ? 0.0 : a * b; }

inline Interval mul(const Interval& a, const Interval& b) {
    if (!a.defined || !b.defined) return Interval::undefined();
    if (a.is_zero() || b.is_zero()) return Interval::point(0.0);
    const double p1 = mul0(a.lo, b.lo), p2 = mul0(a.lo, b.hi), p3 = mul0(a.hi, b.lo), p4 = mul0(a.hi, b.hi);
    return make(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}

inline Interval scale(double k, const Interval& a) { return mul(Interval::point(k), a); }

inline Interval sqr(const Interval& a) {
    if (!a.defined) return a;
    const double l2 = a.lo * a.lo, h2 = a.hi * a.hi;
    if (a.lo <= 0.0 && a.hi >= 0.0) return {0.0, make(0.0, std::max(l2, h2)).hi, true};
    return make(std::min(l2, h2), std::max(l2, h2));
}

// Undefined when the denominator can come within the protected-division
// guard of zero, so a defined result agrees with protected evaluation.
inline Interval div(const Interval& a, const Interval& b) {
    if (!a.defined || !b.defined) return Interval::undefined();
    if (b.lo < kDivGuard && b.hi > -kDivGuard) return Interval::undefined();
    if (a.is_zero()) return Interval::point(0.0);
    const Interval inv = make(1.0 / b.hi, 1.0 / b.lo);
    return mul(a, inv);
}

inline Interval exp(const Interval& a) {
    if (!a.defined || a.hi > kExpClamp) return Interval::undefined();
    return make(std::exp(a.lo), std::exp(a.hi));
}

inline Interval log(const Interval& a) {
    if (!a.defined || !(a.lo > 0.0)) return Interval::undefined();
    return make(std::log(a.lo), std::log(a.hi));
}

inline Interval sqrt(const Interval& a) {
    if (!a.defined || a.lo < 0.0) return Interval::undefined();
    return make(std::sqrt(a.lo), std::sqrt(a.hi));
}

// True when lo <= phase + 2 k pi <= hi for some integer k.
inline bool hits(double lo, double hi, double phase) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double k = std::ceil((lo - phase) / two_pi);
    return phase + k * two_pi <= hi;
}

inline Interval sin(const Interval& a) {
    if (!a.defined) return a;
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.width() >= 2.0 * std::numbers::pi) return {-1.0, 1.0, true};
    const double s1 = std::sin(a.lo), s2 = std::sin(a.hi);
    double lo = std::min(s1, s2), hi = std::max(s1, s2);
    if (hits(a.lo, a.hi, std::numbers::pi / 2)) hi = 1.0;
    if (hits(a.lo, a.hi, -std::numbers::pi / 2)) lo = -1.0;
    Interval r = make(lo, hi);
    r.lo = std::max(r.lo, -1.0);
    r.hi = std::min(r.hi, 1.0);
    return r;
}

inline Interval cos(const Interval& a) {
    if (!a.defined) return a;
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.width() >= 2.0 * std::numbers::pi) return {-1.0, 1.0, true};
    const double c1 = std::cos(a.lo), c2 = std::cos(a.hi);
    double lo = std::min(c1, c2), hi = std::max(c1, c2);
    if (hits(a.lo, a.hi, 0.0)) hi = 1.0;
    if (hits(a.lo, a.hi, std::numbers::pi)) lo = -1.0;
    Interval r = make(lo, hi);
    r.lo = std::max(r.lo, -1.0);
    r.hi = std::min(r.hi, 1.0);
    return r;
}

inline Interval unary(UnaryOp op, const Interval& a) {
    switch (op) {
        case UnaryOp::Sin: return sin(a);
        case UnaryOp::Cos: return cos(a);
        case UnaryOp::Exp: return exp(a);
        case UnaryOp::Log: return log(a);
        case UnaryOp::Sqrt: return sqrt(a);
        case UnaryOp::Neg: return neg(a);
    }
    return Interval::undefined();
}

}  // namespace ia

namespace detail {

// Children of a mul are "the same expression" when their node ranges are
// equal and contain no learnable slot (two `c` leaves are distinct
// parameters).
inline bool same_constant_free_subtree(std::span<const Node> nodes, std::size_t a0, std::size_t a1, std::size_t b0,
                                       std::size_t b1) {
    if (a1 - a0 != b1 - b0) return false;
    for (std::size_t k = 0; k < a1 - a0; ++k) {
        if (nodes[a0 + k] != nodes[b0 + k] || nodes[a0 + k].kind == NodeKind::Param) return false;
    }
    return true;
}

struct IntervalDual {
    Interval v;
    std::vector<Interval> g;
};

inline Interval leaf_interval(const ExprTree& tree, const Node& node, const Box& box, std::size_t slot) {
    switch (node.kind) {
        case NodeKind::Variable: return box.inputs[node.index];
        case NodeKind::Fixed: return Interval::point(tree.vocab().fixed_constants()[node.index].value);
        default: return box.params[slot];
    }
}

}  // namespace detail

// Encloses {f(x; theta) : x in box.inputs, theta in box.params} using the
// natural interval extension of each operator under strict semantics.
inline Interval interval_eval(const ExprTree& tree, const Box& box) {
    assert(box.params.size() == tree.num_constants());
    const auto nodes = tree.nodes();
    const auto ends = tree.subtree_ends();
    std::vector<Interval> stack;
    stack.reserve(nodes.size());
    std::size_t slot = tree.num_constants();
    for (std::size_t k = nodes.size(); k-- > 0;) {
        const Node& node = nodes[k];
        switch (node.kind) {
            case NodeKind::Unary: stack.back() = ia::unary(node.unary_op(), stack.back()); break;
            case NodeKind::Binary: {
                const Interval a = stack.back();
                stack.pop_back();
                const Interval b = stack.back();
                Interval r;
                switch (node.binary_op()) {
                    case BinaryOp::Add: r = ia::add(a, b); break;
                    case BinaryOp::Sub: r = ia::sub(a, b); break;
                    case BinaryOp::Mul:
                        r = detail::same_constant_free_subtree(nodes, k + 1, ends[k + 1], ends[k + 1], ends[k])
                                ? ia::sqr(a)
                                : ia::mul(a, b);
                        break;
                    case BinaryOp::Div: r = ia::div(a, b); break;
                }
                stack.back() = r;
                break;
            }
            case NodeKind::Param: stack.push_back(box.params[--slot]); break;
            default: stack.push_back(detail::leaf_interval(tree, node, box, 0)); break;
        }
    }
    return stack.back();
}

// Interval enclosure of the value and of every partial derivative d f/d theta_j.
inline detail::IntervalDual interval_gradient(const ExprTree& tree, const Box& box) {
    using detail::IntervalDual;
    const std::size_t p = tree.num_constants();
    const auto nodes = tree.nodes();
    const auto ends = tree.subtree_ends();
    std::vector<IntervalDual> stack;
    stack.reserve(nodes.size());
    std::size_t slot = p;
    const Interval zero = Interval::point(0.0);
    for (std::size_t k = nodes.size(); k-- > 0;) {
        const Node& node = nodes[k];
        if (node.kind == NodeKind::Unary) {
            IntervalDual& a = stack.back();
            const Interval v = a.v;
            Interval dv;
            switch (node.unary_op()) {
                case UnaryOp::Sin: dv = ia::cos(v); break;
                case UnaryOp::Cos: dv = ia::neg(ia::sin(v)); break;
                case UnaryOp::Exp: dv = ia::exp(v); break;
                case UnaryOp::Log: dv = ia::div(Interval::point(1.0), v); break;
                case UnaryOp::Sqrt:
                    dv = (v.defined && v.lo > 0.0) ? ia::div(Interval::point(0.5), ia::sqrt(v)) : Interval::undefined();
                    break;
                case UnaryOp::Neg: dv = Interval::point(-1.0); break;
            }
            a.v = ia::unary(node.unary_op(), v);
            for (auto& gj : a.g) {
                if (!gj.is_zero()) gj = ia::mul(dv, gj);
            }
        } else if (node.kind == NodeKind::Binary) {
            IntervalDual a = std::move(stack.back());
            stack.pop_back();
            IntervalDual& b = stack.back();
            IntervalDual r{Interval{}, std::vector<Interval>(p)};
            switch (node.binary_op()) {
                case BinaryOp::Add:
                    r.v = ia::add(a.v, b.v);
                    for (std::size_t j = 0; j < p; ++j) r.g[j] = ia::add(a.g[j], b.g[j]);
                    break;
                case BinaryOp::Sub:
                    r.v = ia::sub(a.v, b.v);
                    for (std::size_t j = 0; j < p; ++j) r.g[j] = ia::sub(a.g[j], b.g[j]);
                    break;
                case BinaryOp::Mul:
                    if (detail::same_constant_free_subtree(nodes, k + 1, ends[k + 1], ends[k + 1], ends[k])) {
                        r.v = ia::sqr(a.v);
                        for (std::size_t j = 0; j < p; ++j) r.g[j] = zero;
                    } else {
                        r.v = ia::mul(a.v, b.v);
                        for (std::size_t j = 0; j < p; ++j) {
                            r.g[j] = ia::add(ia::mul(a.g[j], b.v), ia::mul(a.v, b.g[j]));
                        }
                    }
                    break;
                case BinaryOp::Div: {
                    r.v = ia::div(a.v, b.v);
                    // (ga - (a/b) gb) / b
                    for (std::size_t j = 0; j < p; ++j) {
                        r.g[j] = ia::div(ia::sub(a.g[j], ia::mul(r.v, b.g[j])), b.v);
                        if (a.g[j].is_zero() && b.g[j].is_zero() && r.v.defined) r.g[j] = zero;
                    }
                    break;
                }
            }
            b = std::move(r);
        } else {
            IntervalDual leaf{Interval{}, std::vector<Interval>(p, zero)};
            if (node.kind == NodeKind::Param) {
                --slot;
                leaf.v = box.params[slot];
                leaf.g[slot] = Interval::point(1.0);
            } else {
                leaf.v = detail::leaf_interval(tree, node, box, 0);
            }
            stack.push_back(std::move(leaf));
        }
    }
    return std::move(stack.back());
}

// Certified output bound max|f| over the domain and [-R, R]^p, or nullopt
// (rejected) when the enclosure is undefined or unbounded.
inline std::optional<double> certify_B(const ExprTree& tree, const Budget& budget, std::span<const Interval> domain) {
    const Box box = Box::for_radius({domain.begin(), domain.end()}, tree.num_constants(), budget.radius);
    const Interval r = interval_eval(tree, box);
    if (!r.finite()) return std::nullopt;
    return r.mag();
}

// Certified upper bound on sup |grad_theta f|_2 over the domain and
// [-R, R]^p, or nullopt when any partial's enclosure is undefined.
inline std::optional<double> certify_G(const ExprTree& tree, const Budget& budget, std::span<const Interval> domain) {
    if (tree.num_constants() == 0) {
        if (!interval_eval(tree, Box::for_radius({domain.begin(), domain.end()}, 0, budget.radius)).finite())
            return std::nullopt;
        return 0.0;
    }
    const Box box = Box::for_radius({domain.begin(), domain.end()}, tree.num_constants(), budget.radius);
    const auto dual = interval_gradient(tree, box);
    if (!dual.v.finite()) return std::nullopt;
    double top = 0.0;
    for (const auto& gj : dual.g) {
        if (!gj.finite()) return std::nullopt;
        top = std::max(top, gj.mag());
    }
    if (top == 0.0) return 0.0;
    double acc = 0.0;
    for (const auto& gj : dual.g) acc += (gj.mag() / top) * (gj.mag() / top);
    const double g = top * std::sqrt(acc);
    const double widened = std::nextafter(g + ia::kSlack * g, ia::kInf);
    if (!std::isfinite(widened)) return std::nullopt;
    return widened;
}

}  // namespace gpsr
