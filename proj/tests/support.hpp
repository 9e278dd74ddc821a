#pragma once

#include <memory>
#include <vector>

#include "gpsr/exprtree.hpp"
#include "gpsr/gp.hpp"
#include "gpsr/rng.hpp"

namespace gpsr::testing {

inline VocabularyPtr standard_vocab(std::size_t d = 1) {
    return std::make_shared<const Vocabulary>(Vocabulary::standard(d));
}

inline VocabularyPtr full_vocab(std::size_t d = 1) { return std::make_shared<const Vocabulary>(Vocabulary::full(d)); }

// Operators that are differentiable everywhere.
inline VocabularyPtr smooth_vocab(std::size_t d = 1) {
    return std::make_shared<const Vocabulary>(
        Vocabulary({UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Exp, UnaryOp::Neg},
                   {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul}, d, {{"one", 1.0}, {"pi", 3.141592653589793}}));
}

inline ExprTree random_tree(const VocabularyPtr& vocab, std::size_t max_depth, std::size_t max_size, Rng& rng) {
    const bool full = uniform(rng, 0.0, 1.0) < 0.5;
    return ExprTree(vocab, random_nodes(*vocab, max_depth, max_size, full, rng));
}

// Random tree with 1 <= p <= max_p learnable constants.
inline ExprTree random_tree_with_params(const VocabularyPtr& vocab, std::size_t max_depth, std::size_t max_size,
                                        std::size_t max_p, Rng& rng) {
    for (;;) {
        ExprTree t = random_tree(vocab, max_depth, max_size, rng);
        if (t.num_constants() >= 1 && t.num_constants() <= max_p) return t;
    }
}

}  // namespace gpsr::testing
