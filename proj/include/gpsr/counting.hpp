#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "gpsr/errors.hpp"
#include "gpsr/exprtree.hpp"

namespace gpsr {

using BigInt = boost::multiprecision::cpp_int;

// Natural log of a nonnegative big integer; -inf for zero.
inline double log_of(const BigInt& x) {
    if (x <= 0) return -std::numeric_limits<double>::infinity();
    const auto bits = boost::multiprecision::msb(x);
    if (bits < 1000) return std::log(x.convert_to<double>());
    const auto shift = bits - 60;
    const BigInt top = x >> shift;
    return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::numbers::ln2;
}

// Exact counts indexed by (n, h): trees with exactly n nodes and edge depth
// at most h. Shapes are plane trees of unbounded arity; structures are
// labeled unary/binary expression trees over a vocabulary.
class CountTable {
public:
    enum class Kind { Shapes, Structures };

    // Planted plane trees via f_0 = x, f_h = x / (1 - f_{h-1}), truncated
    // at degree n_max. 1/(1-g) = sum g^k is obtained by the recurrence
    // w_0 = 1, w_k = sum_{j=1..k} g_j w_{k-j}.
    static CountTable shapes(std::size_t n_max, std::size_t d_max) {
        CountTable t(Kind::Shapes, n_max, d_max);
        t.at_mut(1, 0) = 1;
        std::vector<BigInt> w(n_max + 1);
        for (std::size_t h = 1; h <= d_max; ++h) {
            w[0] = 1;
            for (std::size_t k = 1; k + 1 <= n_max; ++k) {
                BigInt acc = 0;
                for (std::size_t j = 1; j <= k; ++j) {
                    const BigInt& g = t.at(j, h - 1);
                    if (g != 0) acc += g * w[k - j];
                }
                w[k] = std::move(acc);
            }
            for (std::size_t n = 1; n <= n_max; ++n) t.at_mut(n, h) = w[n - 1];
        }
        return t;
    }

    // C(1, h) = N0 + 1;
    // C(n, h) = M1 C(n-1, h-1) + M2 sum_{i+j=n-1} C(i, h-1) C(j, h-1).
    static CountTable structures(std::size_t n_max, std::size_t d_max, std::size_t m1, std::size_t m2, std::size_t n0) {
        CountTable t(Kind::Structures, n_max, d_max);
        for (std::size_t h = 0; h <= d_max; ++h) {
            if (n_max >= 1) t.at_mut(1, h) = n0 + 1;
            if (h == 0) continue;
            for (std::size_t n = 2; n <= n_max; ++n) {
                BigInt acc = BigInt(m1) * t.at(n - 1, h - 1);
                BigInt pairs = 0;
                for (std::size_t i = 1; i + 1 < n; ++i) {
                    const BigInt& left = t.at(i, h - 1);
                    const BigInt& right = t.at(n - 1 - i, h - 1);
                    if (left != 0 && right != 0) pairs += left * right;
                }
                acc += BigInt(m2) * pairs;
                t.at_mut(n, h) = std::move(acc);
            }
        }
        return t;
    }

    static CountTable structures(std::size_t n_max, std::size_t d_max, const Vocabulary& vocab) {
        return structures(n_max, d_max, vocab.m1(), vocab.m2(), vocab.n0());
    }

    Kind kind() const noexcept { return kind_; }
    std::size_t max_size() const noexcept { return n_max_; }
    std::size_t max_depth() const noexcept { return d_max_; }

    // Exactly n nodes, depth <= h. Zero for n = 0.
    const BigInt& at(std::size_t n, std::size_t h) const { return entries_.at(n * (d_max_ + 1) + h); }

    // At most s nodes, depth <= h.
    BigInt cumulative(std::size_t s, std::size_t h) const {
        BigInt acc = 0;
        for (std::size_t n = 1; n <= s; ++n) acc += at(n, h);
        return acc;
    }

private:
    CountTable(Kind kind, std::size_t n_max, std::size_t d_max)
        : kind_(kind), n_max_(n_max), d_max_(d_max), entries_((n_max + 1) * (d_max + 1)) {}

    BigInt& at_mut(std::size_t n, std::size_t h) { return entries_.at(n * (d_max_ + 1) + h); }

    Kind kind_;
    std::size_t n_max_;
    std::size_t d_max_;
    std::vector<BigInt> entries_;
};

// Rooted ordered trees of unbounded arity with exactly n nodes and edge
// depth at most depth.
inline BigInt count_shapes(std::size_t n, std::size_t depth) {
    if (n == 0) return 0;
    return CountTable::shapes(n, depth).at(n, depth);
}

// |T_{s,D}|: labeled unary/binary trees with size <= s and depth <= D.
inline BigInt count_structures(std::size_t s, std::size_t depth, const Vocabulary& vocab) {
    return CountTable::structures(s, depth, vocab).cumulative(s, depth);
}

// Exponential growth base 4 cos^2(pi / (D + 2)) of depth-bounded tree counts.
inline double rho(std::size_t depth) {
    const double c = std::cos(std::numbers::pi / static_cast<double>(depth + 2));
    return 4.0 * c * c;
}

// Log of the asymptotic count (4^s / (D+2)) tan^2(pi/(D+2)) cos^{2s}(pi/(D+2))
// of plane trees with s nodes and edge depth <= D. In node-height terms
// h = D + 1 the denominator D + 2 is h + 1.
inline double bkr_log_asymptotic(std::size_t s, std::size_t depth) {
    const double a = std::numbers::pi / static_cast<double>(depth + 2);
    const double sd = static_cast<double>(s);
    return sd * std::log(4.0) - std::log(static_cast<double>(depth + 2)) + 2.0 * std::log(std::tan(a)) +
           2.0 * sd * std::log(std::cos(a));
}

// log[c_D (s + 1) (rho_D (M1 + M2) (N0 + 1))^s]
inline double log_structure_bound(std::size_t s, std::size_t depth, const Vocabulary& vocab, double c_d) {
    if (!(c_d > 0.0)) throw std::invalid_argument("c_D must be positive");
    const double base = rho(depth) * static_cast<double>(vocab.m1() + vocab.m2()) * static_cast<double>(vocab.n0() + 1);
    if (base < 1.0) throw InvalidBase("structure-count base " + std::to_string(base) + " < 1");
    return std::log(c_d) + std::log(static_cast<double>(s + 1)) + static_cast<double>(s) * std::log(base);
}

inline constexpr std::size_t kDefaultCalibrationSize = 500;

// Smallest c with count_shapes(s, D) <= c rho_D^s for every s <= s_max.
inline double calibrate_c_D(std::size_t depth, std::size_t s_max = kDefaultCalibrationSize) {
    const auto table = CountTable::shapes(s_max, depth);
    const double log_rho = std::log(rho(depth));
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 1; s <= s_max; ++s) {
        best = std::max(best, log_of(table.at(s, depth)) - static_cast<double>(s) * log_rho);
    }
    // Nudge upward so the inequality survives the rounding in the log.
    return std::exp(best) * (1.0 + 1e-12);
}

// ---- brute-force enumeration ---------------------------------------------

inline constexpr std::uint64_t kEnumerationGuard = 1'000'000;

namespace detail {

using Shape = std::vector<std::uint8_t>;  // arities in pre-order

// Unary/binary shapes with exactly n nodes and depth <= h; unary before
// binary, then smaller left subtree first.
inline std::vector<Shape> shapes_of(std::size_t n, std::size_t h) {
    std::vector<Shape> out;
    if (n == 1) {
        out.push_back({0});
        return out;
    }
    if (h == 0 || n == 0) return out;
    for (const auto& child : shapes_of(n - 1, h - 1)) {
        Shape s{1};
        s.insert(s.end(), child.begin(), child.end());
        out.push_back(std::move(s));
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const auto lefts = shapes_of(i, h - 1);
        if (lefts.empty()) continue;
        const auto rights = shapes_of(n - 1 - i, h - 1);
        for (const auto& l : lefts) {
            for (const auto& r : rights) {
                Shape s{2};
                s.insert(s.end(), l.begin(), l.end());
                s.insert(s.end(), r.begin(), r.end());
                out.push_back(std::move(s));
            }
        }
    }
    return out;
}

inline std::vector<Node> leaf_symbols(const Vocabulary& vocab) {
    std::vector<Node> out;
    for (std::size_t i = 0; i < vocab.variables(); ++i) out.push_back(Node::variable(i));
    for (std::size_t i = 0; i < vocab.fixed_constants().size(); ++i) out.push_back(Node::fixed(i));
    out.push_back(Node::param());
    return out;
}

}  // namespace detail

// Calls fn on every tree of size <= s and depth <= D exactly once: by size,
// then shape, then labels in lexicographic pre-order. Throws TooLarge when
// the count exceeds `guard`.
inline void for_each_structure(std::size_t s, std::size_t depth, const VocabularyPtr& vocab,
                               const std::function<void(const ExprTree&)>& fn,
                               std::uint64_t guard = kEnumerationGuard) {
    if (count_structures(s, depth, *vocab) > guard) {
        throw TooLarge("structure count for s=" + std::to_string(s) + ", D=" + std::to_string(depth) +
                       " exceeds enumeration guard " + std::to_string(guard));
    }
    std::vector<Node> unary, binary;
    for (auto op : vocab->unary_ops()) unary.push_back(Node::unary(op));
    for (auto op : vocab->binary_ops()) binary.push_back(Node::binary(op));
    const auto leaves = detail::leaf_symbols(*vocab);
    auto choices = [&](std::uint8_t arity) -> const std::vector<Node>& {
        return arity == 0 ? leaves : (arity == 1 ? unary : binary);
    };

    for (std::size_t n = 1; n <= s; ++n) {
        for (const auto& shape : detail::shapes_of(n, depth)) {
            bool empty = false;
            for (auto a : shape) empty = empty || choices(a).empty();
            if (empty) continue;
            std::vector<std::size_t> digit(n, 0);
            std::vector<Node> nodes(n);
            bool more = true;
            while (more) {
                for (std::size_t i = 0; i < n; ++i) nodes[i] = choices(shape[i])[digit[i]];
                fn(ExprTree(vocab, nodes));
                more = false;
                for (std::size_t i = n; i-- > 0;) {
                    if (++digit[i] < choices(shape[i]).size()) {
                        more = true;
                        break;
                    }
                    digit[i] = 0;
                }
            }
        }
    }
}

inline std::vector<ExprTree> enumerate_structures(std::size_t s, std::size_t depth, const VocabularyPtr& vocab,
                                                  std::uint64_t guard = kEnumerationGuard) {
    std::vector<ExprTree> out;
    for_each_structure(s, depth, vocab, [&](const ExprTree& t) { out.push_back(t); }, guard);
    return out;
}

}  // namespace gpsr
