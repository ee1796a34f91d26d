#pragma once

// Text-Guided Feature Exchange across the three level maps, ConvLSTM fusion
// into one prediction feature, and the mask head.

#include <array>
#include <string>

#include "cmpc/graph.hpp"

namespace cmpc {

/// g_i = Lambda Y_i with Lambda = (s W_10)(Y_i W_11)^T, a raw [1 x HW]
/// relevance row used directly as pooling weights (no softmax).
template <class T>
int sentence_pool(Graph<T>& g, int y, int s, const std::string& prefix) {
    const int w10 = g.param(prefix + ".W_10");  // [C_l x d_p]
    const int w11 = g.param(prefix + ".W_11");  // [C_m x d_p]
    if (g.value(w10).shape[1] != g.value(w11).shape[1])
        shape_error("sentence_pool: W_10/W_11 projection widths", g.value(w10).shape, g.value(w11).shape);
    const auto& ys = g.value(y).shape;
    const int y2 = g.reshape(y, Shape{ys[0] * ys[1], ys[2]});
    const int lambda = g.matmul(g.matmul(s, w10), g.transpose(g.matmul(y2, w11)));  // [1 x HW]
    return g.matmul(lambda, y2);                                                   // [1 x C_m]
}

/// c_i = affine(concat(s, g_i)); the gating sigmoid is applied by the caller.
template <class T>
int context_vector(Graph<T>& g, int s, int pooled, const std::string& prefix) {
    const int cat = g.concat_last({s, pooled});
    return g.add_rowvec(g.matmul(cat, g.param(prefix + ".fc.W")), g.param(prefix + ".fc.b"));
}

/// One synchronous round: every level is updated from the round-(k-1)
/// snapshot, Y_k^i = Y^i + sigmoid(c^i) ⊙ (Y^j1 + Y^j2). One gate per
/// receiving level, shared by both donors.
template <class T>
std::array<int, 3> exchange_round(Graph<T>& g, const std::array<int, 3>& levels, int s, const std::string& prefix) {
    std::array<int, 3> out{};
    for (int i = 0; i < 3; ++i) {
        const int pooled = sentence_pool(g, levels[static_cast<std::size_t>(i)], s, prefix);
        const int gate = g.sigmoid(context_vector(g, s, pooled, prefix));  // [1 x C_m]
        const int j1 = (i + 1) % 3, j2 = (i + 2) % 3;
        const int donors = g.add(levels[static_cast<std::size_t>(std::min(j1, j2))],
                                 levels[static_cast<std::size_t>(std::max(j1, j2))]);
        out[static_cast<std::size_t>(i)] =
            g.add(levels[static_cast<std::size_t>(i)], g.hadamard(donors, gate));
    }
    return out;
}

/// Standard ConvLSTM cell scanned over the three level maps from zero state;
/// gate block order along the conv output channels is [i, f, o, candidate].
/// levels[] is indexed {0:Y3, 1:Y4, 2:Y5}; the default scan order is deep to
/// shallow (Y5, Y4, Y3).
template <class T>
int convlstm_fuse(Graph<T>& g, const std::array<int, 3>& levels, const std::string& prefix,
                  bool deep_to_shallow = true) {
    const int w = g.param(prefix + ".W");  // [kh x kw x (C_m + C_hp) x 4*C_hp]
    const int b = g.param(prefix + ".b");
    const std::int64_t c_hp = g.value(b).size() / 4;
    const std::int64_t lh = g.value(levels[0]).shape[0], lw = g.value(levels[0]).shape[1];
    int h = g.constant(Tensor<T>(Shape{lh, lw, c_hp}));
    int c = g.constant(Tensor<T>(Shape{lh, lw, c_hp}));
    const std::array<int, 3> order = deep_to_shallow ? std::array<int, 3>{2, 1, 0} : std::array<int, 3>{0, 1, 2};
    for (int idx : order) {
        const int gates = g.conv2d_same(g.concat_last({levels[static_cast<std::size_t>(idx)], h}), w, b);
        const int gi = g.sigmoid(g.slice_last(gates, 0, c_hp));
        const int gf = g.sigmoid(g.slice_last(gates, c_hp, 2 * c_hp));
        const int go = g.sigmoid(g.slice_last(gates, 2 * c_hp, 3 * c_hp));
        const int cand = g.tanh_op(g.slice_last(gates, 3 * c_hp, 4 * c_hp));
        c = g.add(g.hadamard(gf, c), g.hadamard(gi, cand));
        h = g.hadamard(go, g.tanh_op(c));
    }
    return h;
}

/// 1-channel head at feature resolution, bilinearly upsampled to the target
/// size; binary mask = sigmoid(logit) > 0.5.
template <class T>
int predict_mask(Graph<T>& g, int hidden, const std::string& prefix, std::int64_t out_h, std::int64_t out_w) {
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("predict_mask: output size must be >= 1");
    const int logits = g.conv1x1(hidden, g.param(prefix + ".W"), g.param(prefix + ".b"));  // [H x W x 1]
    const int up = g.bilinear_resize(logits, out_h, out_w);
    return g.reshape(up, Shape{out_h, out_w});
}

}  // namespace cmpc
