#pragma once

// EP stage: coordinate-augmented visual preparation and the simplified
// bilinear fusion of a visual map with the entity context.

#include <string>

#include "cmpc/graph.hpp"

namespace cmpc {

/// 8-channel spatial encoding, per cell (i,j):
/// [x_min, x_center, x_max, y_min, y_center, y_max, 1/W, 1/H]
/// with cell edges normalized to [-1,1]. Depends on (H,W) alone.
template <class T>
Tensor<T> make_coord_feature(std::int64_t h, std::int64_t w) {
    if (h < 1 || w < 1) throw std::invalid_argument("make_coord_feature: H and W must be >= 1");
    Tensor<T> o(Shape{h, w, 8});
    for (std::int64_t i = 0; i < h; ++i)
        for (std::int64_t j = 0; j < w; ++j) {
            const double x0 = 2.0 * static_cast<double>(j) / static_cast<double>(w) - 1.0;
            const double xc = (2.0 * static_cast<double>(j) + 1.0) / static_cast<double>(w) - 1.0;
            const double x1 = 2.0 * static_cast<double>(j + 1) / static_cast<double>(w) - 1.0;
            const double y0 = 2.0 * static_cast<double>(i) / static_cast<double>(h) - 1.0;
            const double yc = (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(h) - 1.0;
            const double y1 = 2.0 * static_cast<double>(i + 1) / static_cast<double>(h) - 1.0;
            o.at3(i, j, 0) = static_cast<T>(x0);
            o.at3(i, j, 1) = static_cast<T>(xc);
            o.at3(i, j, 2) = static_cast<T>(x1);
            o.at3(i, j, 3) = static_cast<T>(y0);
            o.at3(i, j, 4) = static_cast<T>(yc);
            o.at3(i, j, 5) = static_cast<T>(y1);
            o.at3(i, j, 6) = static_cast<T>(1.0 / static_cast<double>(w));
            o.at3(i, j, 7) = static_cast<T>(1.0 / static_cast<double>(h));
        }
    return o;
}

/// concat([features, coords]) through a 1x1 convolution. Video callers run
/// this frame by frame with the same per-level weights.
template <class T>
int fuse_coordinates(Graph<T>& g, int vis, int coords, const std::string& prefix) {
    const auto& vs = g.value(vis).shape;
    const auto& cs = g.value(coords).shape;
    if (vs[0] != cs[0] || vs[1] != cs[1]) shape_error("fuse_coordinates", vs, cs);
    return g.conv1x1(g.concat_last({vis, coords}), g.param(prefix + ".W"), g.param(prefix + ".b"));
}

/// M = sum_{i=1..r} (q_e W_3i) ⊙ (X W_4i); the language projection is one
/// [1 x C_m] row reused across all H*W positions.
template <class T>
int bilinear_fuse(Graph<T>& g, int x, int q_e, const std::string& prefix, std::int64_t r) {
    if (r < 1) throw std::invalid_argument("bilinear_fuse: r must be >= 1");
    const auto stored = g.params() ? g.params()->count_with_prefix(prefix + ".W_3.") : 0;
    if (stored != r)
        throw std::invalid_argument("bilinear_fuse: r=" + std::to_string(r) + " but '" + prefix + "' stores " +
                                    std::to_string(stored) + " rank terms");
    const auto& xs = g.value(x).shape;
    const std::int64_t h = xs[0], w = xs[1], cv = xs[2];
    const int x2 = g.reshape(x, Shape{h * w, cv});
    int m = -1;
    for (std::int64_t i = 1; i <= r; ++i) {
        const int lang = g.matmul(q_e, g.param(prefix + ".W_3." + std::to_string(i)));
        const int vis = g.matmul(x2, g.param(prefix + ".W_4." + std::to_string(i)));
        const int term = g.hadamard(vis, lang);
        m = m < 0 ? term : g.add(m, term);
    }
    return g.reshape(m, Shape{h, w, g.value(m).shape[1]});
}

}  // namespace cmpc
