#pragma once

// RAR stage: relational-word-routed adjacency over spatial vertexes, graph
// convolution with a residual identity, and output map assembly.

#include <string>
#include <vector>

#include "cmpc/graph.hpp"

namespace cmpc {

/// A = B_1 B_2 with B = (M~ W_5)(R W_6)^T, B_1 row-softmax over the T axis,
/// B_2 row-softmax of B^T over the N axis. Product of two row-stochastic
/// factors, so every row of A sums to 1.
template <class T>
int build_adjacency(Graph<T>& g, int m_tilde, int rel, const std::string& prefix) {
    const int w5 = g.param(prefix + ".W_5");  // [C_m x d]
    const int w6 = g.param(prefix + ".W_6");  // [C_l x d]
    if (g.value(w5).shape[1] != g.value(w6).shape[1])
        shape_error("build_adjacency: W_5/W_6 projection widths", g.value(w5).shape, g.value(w6).shape);
    const int b = g.matmul(g.matmul(m_tilde, w5), g.transpose(g.matmul(rel, w6)));  // [N x T]
    const int b1 = g.softmax_rows(b);
    const int b2 = g.softmax_rows(g.transpose(b));
    return g.matmul(b1, b2);
}

/// One layer: M^ = (A+I) M~ W_7, evaluated left to right. Stacked layers
/// reuse the same adjacency and get their own W_7; no nonlinearity between.
template <class T>
int graph_convolve(Graph<T>& g, int m_tilde, int adjacency, const std::string& prefix, std::int64_t layers) {
    if (layers < 1) throw std::invalid_argument("graph_convolve: layer count must be >= 1");
    const auto stored = g.params() ? g.params()->count_with_prefix(prefix + ".W_7.") : 0;
    if (layers > stored)
        throw std::invalid_argument("graph_convolve: " + std::to_string(layers) + " layers requested but '" +
                                    prefix + "' stores " + std::to_string(stored));
    const std::int64_t n = g.value(m_tilde).shape[0];
    const int a_plus_i = g.add(adjacency, g.constant(Tensor<T>::eye(n)));
    int cur = m_tilde;
    for (std::int64_t j = 0; j < layers; ++j)
        cur = g.matmul(g.matmul(a_plus_i, cur), g.param(prefix + ".W_7." + std::to_string(j)));
    return cur;
}

/// conv1x1 over [blocks..., repeat(s)] in the given order.
template <class T>
int fuse_blocks(Graph<T>& g, std::vector<int> blocks, int s, const std::string& prefix) {
    if (blocks.empty()) throw std::invalid_argument("fuse_blocks: no blocks");
    const auto& bs = g.value(blocks.front()).shape;
    blocks.push_back(g.broadcast_spatial(s, bs[0], bs[1]));
    return g.conv1x1(g.concat_last(std::move(blocks)), g.param(prefix + ".W"), g.param(prefix + ".b"));
}

/// Y = conv1x1(concat([M or X, M^, repeat(s)])). With cmf the first block is
/// the EP multimodal map; the conference-version variant passes the raw
/// visual features instead.
template <class T>
int assemble_output(Graph<T>& g, int m, int m_bar, int s, const std::string& prefix, bool cmf, int x_vis = -1) {
    if (!cmf && x_vis < 0)
        throw std::invalid_argument("assemble_output: cmf disabled but no visual feature map supplied");
    return fuse_blocks(g, {cmf ? m : x_vis, m_bar}, s, prefix);
}

}  // namespace cmpc
