#pragma once

// AAR stage of CMPC-V: action-guided per-frame pooling, temporal graph
// reasoning across K frames, and projection of the reasoned context back
// onto the center frame. All scaled attentions divide by sqrt(C_m) exactly
// as printed, even when the projection width d_a differs from C_m.

#include <cmath>
#include <string>
#include <vector>

#include "cmpc/graph.hpp"
#include "cmpc/relation_reasoning.hpp"

namespace cmpc {

template <class T>
struct TemporalAttendOut {
    int p_tilde = -1;  // [K x C_m] pooled per-frame vectors
    int d_rows = -1;   // [K x HW] attention rows, each summing to 1
};

/// Per frame k: logits over positions = (M_V[k] W_8)(q_a W_9)^T / sqrt(C_m),
/// softmaxed over HW, then pooled against the frame.
template <class T>
TemporalAttendOut<T> temporal_attend(Graph<T>& g, const std::vector<int>& frames, int q_a,
                                     const std::string& prefix) {
    if (frames.empty()) throw std::invalid_argument("temporal_attend: no frames");
    const int w8 = g.param(prefix + ".W_8");  // [C_m x d_a]
    const int w9 = g.param(prefix + ".W_9");  // [C_l x d_a]
    if (g.value(w8).shape[1] != g.value(w9).shape[1])
        shape_error("temporal_attend: W_8/W_9 projection widths", g.value(w8).shape, g.value(w9).shape);
    const T inv_sqrt_cm = T(1) / std::sqrt(static_cast<T>(g.value(w8).shape[0]));
    const int key = g.transpose(g.matmul(q_a, w9));  // [d_a x 1]
    std::vector<int> pooled, att;
    for (int f : frames) {
        const auto& fs = g.value(f).shape;
        const int x2 = g.reshape(f, Shape{fs[0] * fs[1], fs[2]});
        const int logits = g.transpose(g.matmul(g.matmul(x2, w8), key));  // [1 x HW]
        const int d_k = g.softmax_rows(g.scale(logits, inv_sqrt_cm));
        att.push_back(d_k);
        pooled.push_back(g.matmul(d_k, x2));  // [1 x C_m]
    }
    return TemporalAttendOut<T>{g.concat_rows(pooled), g.concat_rows(att)};
}

/// Direct feature relevance: A_V = softmax_rows((P~ W_12)(P~ W_13)^T / sqrt(C_m)).
template <class T>
int temporal_adjacency(Graph<T>& g, int p_tilde, const std::string& prefix) {
    const int w12 = g.param(prefix + ".W_12");
    const int w13 = g.param(prefix + ".W_13");
    if (g.value(w12).shape[1] != g.value(w13).shape[1])
        shape_error("temporal_adjacency: W_12/W_13 projection widths", g.value(w12).shape, g.value(w13).shape);
    const T inv_sqrt_cm = T(1) / std::sqrt(static_cast<T>(g.value(w12).shape[0]));
    const int a_hat = g.matmul(g.matmul(p_tilde, w12), g.transpose(g.matmul(p_tilde, w13)));
    return g.softmax_rows(g.scale(a_hat, inv_sqrt_cm));
}

/// Ablation variant: action words route the temporal adjacency the same way
/// relational words route the spatial one.
template <class T>
int temporal_adjacency_action_routed(Graph<T>& g, int p_tilde, int rel_act, const std::string& prefix) {
    const int wv = g.param(prefix + ".AR_W_v");  // [C_m x d_a]
    const int ww = g.param(prefix + ".AR_W_w");  // [C_l x d_a]
    const int b = g.matmul(g.matmul(p_tilde, wv), g.transpose(g.matmul(rel_act, ww)));  // [K x T]
    const int b1 = g.softmax_rows(b);
    const int b2 = g.softmax_rows(g.transpose(b));
    return g.matmul(b1, b2);
}

/// P^ = (A_V + I) P~ W_14a.
template <class T>
int temporal_graph_convolve(Graph<T>& g, int p_tilde, int adjacency, const std::string& prefix) {
    const std::int64_t k = g.value(p_tilde).shape[0];
    const int a_plus_i = g.add(adjacency, g.constant(Tensor<T>::eye(k)));
    return g.matmul(g.matmul(a_plus_i, p_tilde), g.param(prefix + ".W_14a"));
}

template <class T>
struct ProjectOut {
    int p_hat = -1;  // [H x W x C_m]
    int e_rows = -1; // [K x HW] attention rows, each summing to 1
};

/// E = softmax_rows((P^ W_14b)(M^ctr W_15)^T / sqrt(C_m)); the image-format
/// context is E^T P^ reshaped back to the map.
template <class T>
ProjectOut<T> project_to_frame(Graph<T>& g, int p_bar, int m_ctr, const std::string& prefix) {
    const int w14b = g.param(prefix + ".W_14b");
    const int w15 = g.param(prefix + ".W_15");
    if (g.value(w14b).shape[1] != g.value(w15).shape[1])
        shape_error("project_to_frame: W_14b/W_15 projection widths", g.value(w14b).shape, g.value(w15).shape);
    const T inv_sqrt_cm = T(1) / std::sqrt(static_cast<T>(g.value(w14b).shape[0]));
    const std::int64_t h = g.value(m_ctr).shape[0], w = g.value(m_ctr).shape[1], cm = g.value(m_ctr).shape[2];
    const int m2 = g.reshape(m_ctr, Shape{h * w, cm});
    const int logits = g.matmul(g.matmul(p_bar, w14b), g.transpose(g.matmul(m2, w15)));  // [K x HW]
    const int e = g.softmax_rows(g.scale(logits, inv_sqrt_cm));
    const int p2 = g.matmul(g.transpose(e), p_bar);  // [HW x C_m]
    return ProjectOut<T>{g.reshape(p2, Shape{h, w, g.value(p_bar).shape[1]}), e};
}

/// Y_V = conv1x1(concat([M_ctr, M^_ctr, P^, repeat(s)])).
template <class T>
int assemble_video_output(Graph<T>& g, int m_ctr, int m_bar_ctr, int p_hat, int s, const std::string& prefix) {
    return fuse_blocks(g, {m_ctr, m_bar_ctr, p_hat}, s, prefix);
}

}  // namespace cmpc
