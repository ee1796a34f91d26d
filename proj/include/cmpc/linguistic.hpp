#pragma once

// Word-type classification and the probability-weighted linguistic
// aggregates q_e, R, q_a and s. Column order of the type probabilities is
// [entity, attribute, relation, unnecessary] in image mode and
// [entity, attribute, relation, action, unnecessary] in video mode.

#include <string>

#include "cmpc/config.hpp"
#include "cmpc/graph.hpp"

namespace cmpc {

inline constexpr std::int64_t kColEntity = 0;
inline constexpr std::int64_t kColAttribute = 1;
inline constexpr std::int64_t kColRelation = 2;
inline constexpr std::int64_t kColAction = 3;  // video only

struct WordProbs {
    int node = -1;  // [T x 4|5], rows sum to 1
    Mode mode = Mode::Image;
};

namespace detail {

template <class T>
void check_word_count(const Graph<T>& g, int word_feats, const WordProbs& p, const char* op) {
    const auto t_feats = g.value(word_feats).shape[0];
    const auto t_probs = g.value(p.node).shape[0];
    if (t_feats != t_probs)
        throw std::invalid_argument(std::string(op) + ": " + std::to_string(t_feats) + " word features vs " +
                                    std::to_string(t_probs) + " probability rows");
}

}  // namespace detail

/// p_t = softmax(W_2 sigmoid(W_1 l_t + b_1) + b_2), rows independent across t.
template <class T>
WordProbs classify_words(Graph<T>& g, int word_feats, const std::string& prefix, Mode mode) {
    const int w1 = g.param(prefix + ".W_1");  // [C_n x C_l]
    const int b1 = g.param(prefix + ".b_1");
    const int w2 = g.param(prefix + ".W_2");  // [types x C_n]
    const int b2 = g.param(prefix + ".b_2");
    const std::int64_t types = mode == Mode::Video ? 5 : 4;
    if (g.value(w2).shape[0] != types)
        throw std::invalid_argument("classify_words: W_2 has " + std::to_string(g.value(w2).shape[0]) +
                                    " rows but mode wants " + std::to_string(types) + " word types");
    const int hidden = g.sigmoid(g.add_rowvec(g.matmul(word_feats, g.transpose(w1)), b1));
    const int logits = g.add_rowvec(g.matmul(hidden, g.transpose(w2)), b2);
    return WordProbs{g.softmax_rows(logits), mode};
}

/// q_e = sum_t (p_t^ent + p_t^attr) l_t, as a [1 x C_l] row.
template <class T>
int entity_context(Graph<T>& g, int word_feats, const WordProbs& p) {
    detail::check_word_count(g, word_feats, p, "entity_context");
    const int w = g.add(g.slice_last(p.node, kColEntity, kColEntity + 1),
                        g.slice_last(p.node, kColAttribute, kColAttribute + 1));
    return g.matmul(g.transpose(w), word_feats);
}

/// Row t is p_t^rel * l_t.
template <class T>
int relational_features(Graph<T>& g, int word_feats, const WordProbs& p) {
    detail::check_word_count(g, word_feats, p, "relational_features");
    return g.hadamard(word_feats, g.slice_last(p.node, kColRelation, kColRelation + 1));
}

/// q_a = sum_t p_t^act l_t; video mode only.
template <class T>
int action_context(Graph<T>& g, int word_feats, const WordProbs& p) {
    if (p.mode != Mode::Video)
        throw std::invalid_argument("action_context: word probabilities lack an action column (image mode)");
    detail::check_word_count(g, word_feats, p, "action_context");
    return g.matmul(g.transpose(g.slice_last(p.node, kColAction, kColAction + 1)), word_feats);
}

/// Row t is p_t^act * l_t; video mode only.
template <class T>
int action_features(Graph<T>& g, int word_feats, const WordProbs& p) {
    if (p.mode != Mode::Video)
        throw std::invalid_argument("action_features: word probabilities lack an action column (image mode)");
    detail::check_word_count(g, word_feats, p, "action_features");
    return g.hadamard(word_feats, g.slice_last(p.node, kColAction, kColAction + 1));
}

/// s = sum_t (p^ent + p^attr + p^rel [+ p^act]) _t l_t. Whether video mode
/// counts action words is a config switch; the default counts them.
template <class T>
int necessary_sentence(Graph<T>& g, int word_feats, const WordProbs& p, bool include_action = true) {
    detail::check_word_count(g, word_feats, p, "necessary_sentence");
    int w = g.add(g.slice_last(p.node, kColEntity, kColEntity + 1),
                  g.slice_last(p.node, kColAttribute, kColAttribute + 1));
    w = g.add(w, g.slice_last(p.node, kColRelation, kColRelation + 1));
    if (p.mode == Mode::Video && include_action)
        w = g.add(w, g.slice_last(p.node, kColAction, kColAction + 1));
    return g.matmul(g.transpose(w), word_feats);
}

}  // namespace cmpc
