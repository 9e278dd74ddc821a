#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gpsr/errors.hpp"
#include "gpsr/rng.hpp"

namespace gpsr {

enum class UnaryOp : std::uint8_t { Sin, Cos, Exp, Log, Sqrt, Neg };
enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div };

inline constexpr std::array<std::string_view, 6> kUnaryNames{"sin", "cos", "exp", "log", "sqrt", "neg"};
inline constexpr std::array<std::string_view, 4> kBinaryNames{"add", "sub", "mul", "div"};

inline std::string_view name_of(UnaryOp op) { return kUnaryNames[static_cast<std::size_t>(op)]; }
inline std::string_view name_of(BinaryOp op) { return kBinaryNames[static_cast<std::size_t>(op)]; }

inline std::optional<UnaryOp> unary_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kUnaryNames.size(); ++i) {
        if (kUnaryNames[i] == name) return static_cast<UnaryOp>(i);
    }
    return std::nullopt;
}

inline std::optional<BinaryOp> binary_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kBinaryNames.size(); ++i) {
        if (kBinaryNames[i] == name) return static_cast<BinaryOp>(i);
    }
    return std::nullopt;
}

// Parses "x<i>" with i >= 1 and returns the 0-based index.
inline std::optional<std::size_t> variable_from_name(std::string_view name) {
    if (name.size() < 2 || name[0] != 'x' || name[1] == '0') return std::nullopt;
    std::size_t idx = 0;
    for (char ch : name.substr(1)) {
        if (!std::isdigit(static_cast<unsigned char>(ch))) return std::nullopt;
        idx = idx * 10 + static_cast<std::size_t>(ch - '0');
        if (idx > 1'000'000) return std::nullopt;
    }
    return idx - 1;
}

struct FixedConstant {
    std::string name;
    double value;
};

// Operator sets by arity plus the terminal symbols (variables and fixed
// constants). The learnable-constant leaf `c` is always available and is
// not counted in n0().
class Vocabulary {
public:
    Vocabulary(std::vector<UnaryOp> unary, std::vector<BinaryOp> binary, std::size_t variables,
               std::vector<FixedConstant> fixed = {})
        : unary_(std::move(unary)), binary_(std::move(binary)), variables_(variables), fixed_(std::move(fixed)) {
        if (unary_.empty() && binary_.empty()) throw std::invalid_argument("vocabulary needs at least one operator");
        if (n0() == 0) throw std::invalid_argument("vocabulary needs at least one terminal");
        for (std::size_t i = 0; i < unary_.size(); ++i) {
            if (std::count(unary_.begin(), unary_.end(), unary_[i]) != 1)
                throw std::invalid_argument("duplicate unary operator " + std::string(name_of(unary_[i])));
        }
        for (std::size_t i = 0; i < binary_.size(); ++i) {
            if (std::count(binary_.begin(), binary_.end(), binary_[i]) != 1)
                throw std::invalid_argument("duplicate binary operator " + std::string(name_of(binary_[i])));
        }
        for (std::size_t i = 0; i < fixed_.size(); ++i) {
            const auto& name = fixed_[i].name;
            const bool clash = name.empty() || name == "c" || unary_from_name(name) || binary_from_name(name) ||
                               variable_from_name(name) || !std::isalpha(static_cast<unsigned char>(name[0])) ||
                               std::any_of(name.begin(), name.end(),
                                           [](char ch) { return !std::isalnum(static_cast<unsigned char>(ch)) && ch != '_'; });
            if (clash) throw std::invalid_argument("invalid fixed-constant name '" + name + "'");
            for (std::size_t j = 0; j < i; ++j) {
                if (fixed_[j].name == name) throw std::invalid_argument("duplicate fixed constant " + name);
            }
            if (!std::isfinite(fixed_[i].value)) throw std::invalid_argument("fixed constant must be finite");
        }
    }

    // {sin, cos, exp} and {add, sub, mul, div} with fixed constants {one, pi}.
    static Vocabulary standard(std::size_t variables = 1) {
        return Vocabulary({UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Exp},
                          {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div}, variables,
                          {{"one", 1.0}, {"pi", std::numbers::pi}});
    }

    // Every operator the engine knows, mixing stable and unstable ones.
    static Vocabulary full(std::size_t variables = 1) {
        return Vocabulary({UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Exp, UnaryOp::Log, UnaryOp::Sqrt, UnaryOp::Neg},
                          {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div}, variables,
                          {{"one", 1.0}, {"pi", std::numbers::pi}});
    }

    const std::vector<UnaryOp>& unary_ops() const noexcept { return unary_; }
    const std::vector<BinaryOp>& binary_ops() const noexcept { return binary_; }
    const std::vector<FixedConstant>& fixed_constants() const noexcept { return fixed_; }
    std::size_t variables() const noexcept { return variables_; }

    std::size_t m1() const noexcept { return unary_.size(); }
    std::size_t m2() const noexcept { return binary_.size(); }
    std::size_t n0() const noexcept { return variables_ + fixed_.size(); }

    bool has(UnaryOp op) const { return std::find(unary_.begin(), unary_.end(), op) != unary_.end(); }
    bool has(BinaryOp op) const { return std::find(binary_.begin(), binary_.end(), op) != binary_.end(); }

    std::optional<std::size_t> find_fixed(std::string_view name) const {
        for (std::size_t i = 0; i < fixed_.size(); ++i) {
            if (fixed_[i].name == name) return i;
        }
        return std::nullopt;
    }

private:
    std::vector<UnaryOp> unary_;
    std::vector<BinaryOp> binary_;
    std::size_t variables_;
    std::vector<FixedConstant> fixed_;
};

using VocabularyPtr = std::shared_ptr<const Vocabulary>;

enum class NodeKind : std::uint8_t { Unary, Binary, Variable, Fixed, Param };

struct Node {
    NodeKind kind;
    // Operator enum value, 0-based variable index or fixed-constant index.
    // Unused for Param: slots are numbered by pre-order position.
    std::uint16_t index = 0;

    static Node unary(UnaryOp op) { return {NodeKind::Unary, static_cast<std::uint16_t>(op)}; }
    static Node binary(BinaryOp op) { return {NodeKind::Binary, static_cast<std::uint16_t>(op)}; }
    static Node variable(std::size_t i) { return {NodeKind::Variable, static_cast<std::uint16_t>(i)}; }
    static Node fixed(std::size_t i) { return {NodeKind::Fixed, static_cast<std::uint16_t>(i)}; }
    static Node param() { return {NodeKind::Param, 0}; }

    int arity() const noexcept {
        switch (kind) {
            case NodeKind::Unary: return 1;
            case NodeKind::Binary: return 2;
            default: return 0;
        }
    }
    UnaryOp unary_op() const noexcept { return static_cast<UnaryOp>(index); }
    BinaryOp binary_op() const noexcept { return static_cast<BinaryOp>(index); }

    friend bool operator==(const Node&, const Node&) = default;
};

// A rooted ordered tree stored as its pre-order node sequence. Learnable
// constant slots are numbered 0..p-1 in pre-order. Trees are immutable.
//
// The constructor does not check that `nodes` spells exactly one complete
// tree; validate() reports that as ArityMismatch. All other operations
// require a well-formed tree.
class ExprTree {
public:
    ExprTree(VocabularyPtr vocab, std::vector<Node> nodes) : vocab_(std::move(vocab)), nodes_(std::move(nodes)) {
        assert(vocab_);
        num_constants_ = static_cast<std::size_t>(
            std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.kind == NodeKind::Param; }));
    }

    const Vocabulary& vocab() const noexcept { return *vocab_; }
    const VocabularyPtr& vocab_ptr() const noexcept { return vocab_; }
    std::span<const Node> nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t num_constants() const noexcept { return num_constants_; }

    bool well_formed() const noexcept {
        if (nodes_.empty()) return false;
        std::size_t open = 1;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (open == 0) return false;
            open = open - 1 + static_cast<std::size_t>(nodes_[i].arity());
        }
        return open == 0;
    }

    // One past the last node of the subtree rooted at i.
    std::size_t subtree_end(std::size_t i) const noexcept {
        std::size_t open = 1;
        while (open > 0) {
            open = open - 1 + static_cast<std::size_t>(nodes_[i].arity());
            ++i;
        }
        return i;
    }

    // subtree_end for every node, computed in one backward pass.
    std::vector<std::size_t> subtree_ends() const {
        std::vector<std::size_t> ends(nodes_.size());
        for (std::size_t k = nodes_.size(); k-- > 0;) {
            switch (nodes_[k].arity()) {
                case 0: ends[k] = k + 1; break;
                case 1: ends[k] = ends[k + 1]; break;
                default: ends[k] = ends[ends[k + 1]]; break;
            }
        }
        return ends;
    }

    // Edge depth of every node (root = 0).
    std::vector<std::size_t> node_depths() const {
        std::vector<std::size_t> depths(nodes_.size());
        std::vector<std::size_t> pending{0};
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const std::size_t d = pending.back();
            pending.pop_back();
            depths[i] = d;
            for (int k = 0; k < nodes_[i].arity(); ++k) pending.push_back(d + 1);
        }
        return depths;
    }

    std::size_t depth() const {
        const auto depths = node_depths();
        return depths.empty() ? 0 : *std::max_element(depths.begin(), depths.end());
    }

    // Number of Param slots strictly before node i.
    std::size_t slots_before(std::size_t i) const noexcept {
        return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(i),
                                                      [](const Node& n) { return n.kind == NodeKind::Param; }));
    }

    ExprTree subtree(std::size_t i) const {
        return ExprTree(vocab_, std::vector<Node>(nodes_.begin() + static_cast<std::ptrdiff_t>(i),
                                                  nodes_.begin() + static_cast<std::ptrdiff_t>(subtree_end(i))));
    }

    // Copy of this tree with the subtree at i replaced by `donor`.
    ExprTree with_subtree(std::size_t i, std::span<const Node> donor) const {
        std::vector<Node> out;
        out.reserve(nodes_.size() + donor.size());
        const auto end = subtree_end(i);
        out.insert(out.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(i));
        out.insert(out.end(), donor.begin(), donor.end());
        out.insert(out.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(end), nodes_.end());
        return ExprTree(vocab_, std::move(out));
    }

    ExprTree with_node(std::size_t i, Node node) const {
        std::vector<Node> out = nodes_;
        out[i] = node;
        return ExprTree(vocab_, std::move(out));
    }

    friend bool operator==(const ExprTree& a, const ExprTree& b) { return a.nodes_ == b.nodes_; }

private:
    VocabularyPtr vocab_;
    std::vector<Node> nodes_;
    std::size_t num_constants_ = 0;
};

struct ParamVector {
    std::vector<double> values;
    double radius = 1.0;

    double norm() const { return norm2(values); }
    bool in_ball() const { return norm() <= radius; }
    void project() { project_to_ball(values, radius); }
};

struct Budget {
    std::size_t max_size = 15;
    std::size_t max_depth = 4;
    double radius = 5.0;

    void check() const {
        if (max_size < 1) throw std::invalid_argument("budget: max_size must be >= 1");
        if (max_depth < 1) throw std::invalid_argument("budget: max_depth must be >= 1");
        if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("budget: radius must be > 0");
    }
};

struct Measure {
    std::size_t size;
    std::size_t depth;
    std::size_t num_constants;
    friend bool operator==(const Measure&, const Measure&) = default;
};

inline Measure measure(const ExprTree& tree) { return {tree.size(), tree.depth(), tree.num_constants()}; }

// Protected mode never throws: div(a, b) = 1 when |b| < 1e-12, log(a) =
// log|a| with log(0) = 0, sqrt(a) = sqrt|a|, exp clamps its argument at 700.
// Strict mode raises DomainError wherever protection would have kicked in.
enum class Semantics { Protected, Strict };

inline constexpr double kDivGuard = 1e-12;
inline constexpr double kExpClamp = 700.0;

struct Partial1 {
    double value;
    double d;
};
struct Partial2 {
    double value;
    double da;
    double db;
};

// Value and derivative of a unary operator. Protection boundaries carry a
// zero derivative.
inline Partial1 apply_unary(UnaryOp op, double a, Semantics sem) {
    const bool strict = sem == Semantics::Strict;
    switch (op) {
        case UnaryOp::Sin: return {std::sin(a), std::cos(a)};
        case UnaryOp::Cos: return {std::cos(a), -std::sin(a)};
        case UnaryOp::Exp:
            if (a > kExpClamp) {
                if (strict) throw DomainError("exp overflow");
                return {std::exp(kExpClamp), 0.0};
            }
            {
                const double e = std::exp(a);
                return {e, e};
            }
        case UnaryOp::Log:
            if (strict && !(a > 0.0)) throw DomainError("log of non-positive value");
            if (a == 0.0) return {0.0, 0.0};
            return {std::log(std::fabs(a)), 1.0 / a};
        case UnaryOp::Sqrt:
            if (strict && a < 0.0) throw DomainError("sqrt of negative value");
            if (a == 0.0) return {0.0, 0.0};
            {
                const double r = std::sqrt(std::fabs(a));
                return {r, (a > 0.0 ? 0.5 : -0.5) / r};
            }
        case UnaryOp::Neg: return {-a, -1.0};
    }
    return {0.0, 0.0};
}

inline Partial2 apply_binary(BinaryOp op, double a, double b, Semantics sem) {
    switch (op) {
        case BinaryOp::Add: return {a + b, 1.0, 1.0};
        case BinaryOp::Sub: return {a - b, 1.0, -1.0};
        case BinaryOp::Mul: return {a * b, b, a};
        case BinaryOp::Div:
            if (std::fabs(b) < kDivGuard) {
                if (sem == Semantics::Strict) throw DomainError("division by zero");
                return {1.0, 0.0, 0.0};
            }
            return {a / b, 1.0 / b, -a / (b * b)};
    }
    return {0.0, 0.0, 0.0};
}

namespace detail {

inline double leaf_value(const ExprTree& tree, const Node& node, std::span<const double> theta,
                         std::span<const double> x, std::size_t& slot) {
    switch (node.kind) {
        case NodeKind::Variable: return x[node.index];
        case NodeKind::Fixed: return tree.vocab().fixed_constants()[node.index].value;
        default: return theta[--slot];
    }
}

inline void check_finite(double v, Semantics sem) {
    if (sem == Semantics::Strict && !std::isfinite(v)) throw DomainError("non-finite intermediate value");
}

// Evaluates the tree using `stack` as scratch. Pre-order is walked
// backwards so every operator finds its operands on top of the stack,
// first child topmost.
inline double evaluate_into(const ExprTree& tree, std::span<const double> theta, std::span<const double> x,
                            Semantics sem, std::vector<double>& stack) {
    stack.clear();
    const auto nodes = tree.nodes();
    std::size_t slot = tree.num_constants();
    for (std::size_t k = nodes.size(); k-- > 0;) {
        const Node& node = nodes[k];
        switch (node.kind) {
            case NodeKind::Unary: {
                const double v = apply_unary(node.unary_op(), stack.back(), sem).value;
                check_finite(v, sem);
                stack.back() = v;
                break;
            }
            case NodeKind::Binary: {
                const double a = stack.back();
                stack.pop_back();
                const double v = apply_binary(node.binary_op(), a, stack.back(), sem).value;
                check_finite(v, sem);
                stack.back() = v;
                break;
            }
            default: stack.push_back(leaf_value(tree, node, theta, x, slot)); break;
        }
    }
    return stack.back();
}

}  // namespace detail

inline double evaluate(const ExprTree& tree, std::span<const double> theta, std::span<const double> x,
                       Semantics sem = Semantics::Protected) {
    assert(theta.size() == tree.num_constants());
    assert(x.size() >= tree.vocab().variables());
    std::vector<double> stack;
    stack.reserve(tree.size());
    return detail::evaluate_into(tree, theta, x, sem, stack);
}

struct ValueAndGradient {
    double value;
    std::vector<double> grad;
};

// Forward accumulation of d f / d theta alongside the value. Each stack
// entry carries its value plus a dense gradient row of length p.
inline ValueAndGradient eval_with_gradient(const ExprTree& tree, std::span<const double> theta,
                                           std::span<const double> x, Semantics sem = Semantics::Protected) {
    const std::size_t p = tree.num_constants();
    assert(theta.size() == p);
    std::vector<double> vals;
    std::vector<double> grads;
    vals.reserve(tree.size());
    grads.reserve(tree.size() * p);
    const auto nodes = tree.nodes();
    std::size_t slot = p;
    for (std::size_t k = nodes.size(); k-- > 0;) {
        const Node& node = nodes[k];
        switch (node.kind) {
            case NodeKind::Unary: {
                const auto r = apply_unary(node.unary_op(), vals.back(), sem);
                detail::check_finite(r.value, sem);
                vals.back() = r.value;
                for (std::size_t j = grads.size() - p; j < grads.size(); ++j) grads[j] *= r.d;
                break;
            }
            case NodeKind::Binary: {
                const double a = vals.back();
                vals.pop_back();
                const auto r = apply_binary(node.binary_op(), a, vals.back(), sem);
                detail::check_finite(r.value, sem);
                vals.back() = r.value;
                // Top row holds d a, the row beneath it d b.
                const std::size_t top = grads.size() - p;
                const std::size_t below = top - p;
                for (std::size_t j = 0; j < p; ++j) {
                    const double ga = grads[top + j];
                    const double gb = grads[below + j];
                    grads[below + j] = (ga == 0.0 ? 0.0 : r.da * ga) + (gb == 0.0 ? 0.0 : r.db * gb);
                }
                grads.resize(top);
                break;
            }
            case NodeKind::Param: {
                vals.push_back(theta[--slot]);
                grads.resize(grads.size() + p, 0.0);
                grads[grads.size() - p + slot] = 1.0;
                break;
            }
            default: {
                std::size_t unused = slot;
                vals.push_back(detail::leaf_value(tree, node, theta, x, unused));
                grads.resize(grads.size() + p, 0.0);
                break;
            }
        }
    }
    return {vals.back(), std::vector<double>(grads.begin(), grads.end())};
}

// ---- serialization -------------------------------------------------------

inline std::string leaf_name(const Vocabulary& vocab, const Node& node) {
    switch (node.kind) {
        case NodeKind::Variable: return "x" + std::to_string(node.index + 1);
        case NodeKind::Fixed: return vocab.fixed_constants()[node.index].name;
        case NodeKind::Param: return "c";
        case NodeKind::Unary: return std::string(name_of(node.unary_op()));
        case NodeKind::Binary: return std::string(name_of(node.binary_op()));
    }
    return {};
}

// Parenthesized prefix notation, e.g. "(add (mul c x1) pi)".
inline std::string serialize(const ExprTree& tree) {
    std::string out;
    // Number of children still to be written for each open operator.
    std::vector<int> open;
    const auto nodes = tree.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i > 0) out += ' ';
        const Node& node = nodes[i];
        if (node.arity() > 0) {
            out += '(';
            out += leaf_name(tree.vocab(), node);
            open.push_back(node.arity());
            continue;
        }
        out += leaf_name(tree.vocab(), node);
        while (!open.empty() && --open.back() == 0) {
            out += ')';
            open.pop_back();
        }
    }
    return out;
}

namespace detail {

class PrefixParser {
public:
    PrefixParser(std::string_view text, const Vocabulary& vocab) : text_(text), vocab_(vocab) {}

    std::vector<Node> parse() {
        std::vector<Node> nodes;
        parse_expr(nodes);
        skip_ws();
        if (pos_ != text_.size()) throw ParseError("trailing input", pos_);
        return nodes;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    std::string_view identifier() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        if (start == pos_) {
            if (pos_ == text_.size()) throw ParseError("unexpected end of input", pos_);
            throw ParseError(std::string("unexpected character '") + text_[pos_] + "'", pos_);
        }
        return text_.substr(start, pos_ - start);
    }

    void parse_expr(std::vector<Node>& nodes) {
        skip_ws();
        if (pos_ == text_.size()) throw ParseError("unexpected end of input", pos_);
        if (text_[pos_] == ')') throw ParseError("unexpected ')'", pos_);
        if (text_[pos_] != '(') {
            nodes.push_back(leaf(identifier()));
            return;
        }
        ++pos_;
        const std::size_t op_pos = pos_;
        const auto name = identifier();
        int arity = 0;
        if (auto u = unary_from_name(name)) {
            if (!vocab_.has(*u)) throw UnknownSymbol(std::string(name));
            nodes.push_back(Node::unary(*u));
            arity = 1;
        } else if (auto b = binary_from_name(name)) {
            if (!vocab_.has(*b)) throw UnknownSymbol(std::string(name));
            nodes.push_back(Node::binary(*b));
            arity = 2;
        } else {
            leaf(name);  // throws UnknownSymbol for unknown identifiers
            throw ParseError("'" + std::string(name) + "' is not an operator", op_pos);
        }
        for (int k = 0; k < arity; ++k) parse_expr(nodes);
        skip_ws();
        if (pos_ == text_.size()) throw ParseError("unexpected end of input", pos_);
        if (text_[pos_] != ')') throw ParseError("expected ')' after " + std::to_string(arity) + " operand(s)", pos_);
        ++pos_;
    }

    Node leaf(std::string_view name) const {
        if (name == "c") return Node::param();
        if (auto v = variable_from_name(name)) {
            if (*v >= vocab_.variables()) throw UnknownSymbol(std::string(name));
            return Node::variable(*v);
        }
        if (auto f = vocab_.find_fixed(name)) return Node::fixed(*f);
        if (unary_from_name(name) || binary_from_name(name)) {
            throw ParseError("operator '" + std::string(name) + "' used as a leaf", pos_ - name.size());
        }
        throw UnknownSymbol(std::string(name));
    }

    std::string_view text_;
    const Vocabulary& vocab_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline ExprTree parse(std::string_view text, VocabularyPtr vocab) {
    auto nodes = detail::PrefixParser(text, *vocab).parse();
    return ExprTree(std::move(vocab), std::move(nodes));
}

// ---- budget validation ---------------------------------------------------

enum class ViolationKind { SizeExceeded, DepthExceeded, UnknownSymbol, ArityMismatch };

inline std::string_view name_of(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::SizeExceeded: return "SizeExceeded";
        case ViolationKind::DepthExceeded: return "DepthExceeded";
        case ViolationKind::UnknownSymbol: return "UnknownSymbol";
        case ViolationKind::ArityMismatch: return "ArityMismatch";
    }
    return "";
}

struct Violation {
    ViolationKind kind;
    std::string detail;
};

// Empty iff the tree lies in the admissible set for (vocab, budget).
inline std::vector<Violation> validate(const ExprTree& tree, const Vocabulary& vocab, const Budget& budget) {
    std::vector<Violation> out;
    if (tree.size() > budget.max_size) {
        out.push_back({ViolationKind::SizeExceeded,
                       "size " + std::to_string(tree.size()) + " > " + std::to_string(budget.max_size)});
    }
    for (const Node& node : tree.nodes()) {
        bool known = true;
        switch (node.kind) {
            case NodeKind::Unary: known = node.index < kUnaryNames.size() && vocab.has(node.unary_op()); break;
            case NodeKind::Binary: known = node.index < kBinaryNames.size() && vocab.has(node.binary_op()); break;
            case NodeKind::Variable: known = node.index < vocab.variables(); break;
            case NodeKind::Fixed: known = node.index < vocab.fixed_constants().size(); break;
            case NodeKind::Param: break;
        }
        if (!known) {
            out.push_back({ViolationKind::UnknownSymbol, "node kind " + std::to_string(static_cast<int>(node.kind)) +
                                                             " index " + std::to_string(node.index)});
        }
    }
    if (!tree.well_formed()) {
        out.push_back({ViolationKind::ArityMismatch, "node sequence is not a single complete tree"});
        return out;
    }
    if (const auto d = tree.depth(); d > budget.max_depth) {
        out.push_back({ViolationKind::DepthExceeded,
                       "depth " + std::to_string(d) + " > " + std::to_string(budget.max_depth)});
    }
    return out;
}

}  // namespace gpsr
