#pragma once

// Forward kernels and their vector-Jacobian (backward) counterparts.
// Every reduction runs in a fixed sequential order so results are
// reproducible bit-for-bit; the one exception is the softmax denominator,
// which is accumulated in ascending value order so that reordering the
// reduced axis (vertex permutations) cannot change the sum.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "cmpc/tensor.hpp"

namespace cmpc {

// ---------------------------------------------------------------------------
// matmul

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0]) shape_error("matmul", a.shape, b.shape);
    const std::int64_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
    Tensor<T> c(Shape{m, n});
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) {
            T acc = T(0);
            for (std::int64_t t = 0; t < k; ++t) acc += a.at2(i, t) * b.at2(t, j);
            c.at2(i, j) = acc;
        }
    return c;
}

template <class T>
Tensor<T> transpose(const Tensor<T>& x) {
    if (x.rank() != 2) throw std::invalid_argument("transpose: want rank 2, got " + shape_str(x.shape));
    Tensor<T> y(Shape{x.shape[1], x.shape[0]});
    for (std::int64_t i = 0; i < x.shape[0]; ++i)
        for (std::int64_t j = 0; j < x.shape[1]; ++j) y.at2(j, i) = x.at2(i, j);
    return y;
}

template <class T>
void matmul_backward(const Tensor<T>& d_out, const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& da, Tensor<T>& db) {
    da = matmul(d_out, transpose(b));
    db = matmul(transpose(a), d_out);
}

// ---------------------------------------------------------------------------
// elementwise

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (!same_shape(a.shape, b.shape)) shape_error("add", a.shape, b.shape);
    Tensor<T> c(a.shape);
    for (std::int64_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, T c) {
    Tensor<T> y(x.shape);
    for (std::int64_t i = 0; i < x.size(); ++i) y[i] = x[i] * c;
    return y;
}

template <class T>
Tensor<T> add_rowvec(const Tensor<T>& x, const Tensor<T>& v) {
    const std::int64_t n = x.rank() == 2 ? x.shape[1] : -1;
    if (n < 0 || v.size() != n) shape_error("add_rowvec", x.shape, v.shape);
    Tensor<T> y(x.shape);
    for (std::int64_t i = 0; i < x.shape[0]; ++i)
        for (std::int64_t j = 0; j < n; ++j) y.at2(i, j) = x.at2(i, j) + v[j];
    return y;
}

template <class T>
Tensor<T> add_rowvec_backward_v(const Tensor<T>& d_out, const Shape& v_shape) {
    Tensor<T> dv(v_shape);
    for (std::int64_t i = 0; i < d_out.shape[0]; ++i)
        for (std::int64_t j = 0; j < d_out.shape[1]; ++j) dv[j] += d_out.at2(i, j);
    return dv;
}

template <class T>
T sigmoid_scalar(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (std::int64_t i = 0; i < x.size(); ++i) y[i] = sigmoid_scalar(x[i]);
    return y;
}

template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& d_out, const Tensor<T>& y) {
    Tensor<T> dx(y.shape);
    for (std::int64_t i = 0; i < y.size(); ++i) dx[i] = d_out[i] * y[i] * (T(1) - y[i]);
    return dx;
}

template <class T>
Tensor<T> tanh_map(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (std::int64_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    return y;
}

template <class T>
Tensor<T> tanh_backward(const Tensor<T>& d_out, const Tensor<T>& y) {
    Tensor<T> dx(y.shape);
    for (std::int64_t i = 0; i < y.size(); ++i) dx[i] = d_out[i] * (T(1) - y[i] * y[i]);
    return dx;
}

// ---------------------------------------------------------------------------
// broadcasting hadamard
//
// Broadcast rule: align trailing axes; aligned extents must be equal or 1,
// missing leading axes count as 1. Only singleton axes expand.

namespace detail {

struct Bcast {
    Shape out;
    std::vector<std::int64_t> stride_a, stride_b;
};

inline Bcast make_bcast(const char* op, const Shape& a, const Shape& b) {
    const int ra = static_cast<int>(a.size()), rb = static_cast<int>(b.size());
    const int r = std::max(ra, rb);
    Bcast bc;
    bc.out.assign(static_cast<std::size_t>(r), 1);
    Shape pa(static_cast<std::size_t>(r), 1), pb(static_cast<std::size_t>(r), 1);
    for (int i = 0; i < ra; ++i) pa[static_cast<std::size_t>(r - ra + i)] = a[static_cast<std::size_t>(i)];
    for (int i = 0; i < rb; ++i) pb[static_cast<std::size_t>(r - rb + i)] = b[static_cast<std::size_t>(i)];
    for (int i = 0; i < r; ++i) {
        const auto ea = pa[static_cast<std::size_t>(i)], eb = pb[static_cast<std::size_t>(i)];
        if (ea != eb && ea != 1 && eb != 1) shape_error(op, a, b);
        bc.out[static_cast<std::size_t>(i)] = std::max(ea, eb);
    }
    auto strides_of = [&](const Shape& padded) {
        std::vector<std::int64_t> st(static_cast<std::size_t>(r), 0);
        std::int64_t run = 1;
        for (int i = r - 1; i >= 0; --i) {
            st[static_cast<std::size_t>(i)] = padded[static_cast<std::size_t>(i)] == 1 ? 0 : run;
            run *= padded[static_cast<std::size_t>(i)];
        }
        return st;
    };
    bc.stride_a = strides_of(pa);
    bc.stride_b = strides_of(pb);
    return bc;
}

template <class T, class F>
void bcast_foreach(const Bcast& bc, F&& body) {
    const int r = static_cast<int>(bc.out.size());
    const std::int64_t total = numel(bc.out);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(r), 0);
    std::int64_t oa = 0, ob = 0;
    for (std::int64_t lin = 0; lin < total; ++lin) {
        body(lin, oa, ob);
        for (int ax = r - 1; ax >= 0; --ax) {
            auto& i = idx[static_cast<std::size_t>(ax)];
            oa += bc.stride_a[static_cast<std::size_t>(ax)];
            ob += bc.stride_b[static_cast<std::size_t>(ax)];
            if (++i < bc.out[static_cast<std::size_t>(ax)]) break;
            oa -= bc.stride_a[static_cast<std::size_t>(ax)] * i;
            ob -= bc.stride_b[static_cast<std::size_t>(ax)] * i;
            i = 0;
        }
    }
}

}  // namespace detail

template <class T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
    const auto bc = detail::make_bcast("hadamard", a.shape, b.shape);
    Tensor<T> c(bc.out);
    detail::bcast_foreach<T>(bc, [&](std::int64_t lin, std::int64_t oa, std::int64_t ob) { c[lin] = a[oa] * b[ob]; });
    return c;
}

// Gradients reduce over the axes each operand was expanded on.
template <class T>
void hadamard_backward(const Tensor<T>& d_out, const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& da, Tensor<T>& db) {
    const auto bc = detail::make_bcast("hadamard", a.shape, b.shape);
    da = Tensor<T>(a.shape);
    db = Tensor<T>(b.shape);
    detail::bcast_foreach<T>(bc, [&](std::int64_t lin, std::int64_t oa, std::int64_t ob) {
        da[oa] += d_out[lin] * b[ob];
        db[ob] += d_out[lin] * a[oa];
    });
}

// ---------------------------------------------------------------------------
// softmax over the last axis of a rank-2 tensor

template <class T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
    if (x.rank() != 2) throw std::invalid_argument("softmax_rows: want rank 2, got " + shape_str(x.shape));
    const std::int64_t m = x.shape[0], n = x.shape[1];
    Tensor<T> y(x.shape);
    std::vector<T> ex(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < m; ++i) {
        T mx = x.at2(i, 0);
        for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, x.at2(i, j));
        for (std::int64_t j = 0; j < n; ++j) ex[static_cast<std::size_t>(j)] = std::exp(x.at2(i, j) - mx);
        // ascending-order accumulation: invariant under permutations of the row
        std::vector<T> sorted(ex);
        std::sort(sorted.begin(), sorted.end());
        T denom = T(0);
        for (const T e : sorted) denom += e;
        for (std::int64_t j = 0; j < n; ++j) y.at2(i, j) = ex[static_cast<std::size_t>(j)] / denom;
    }
    return y;
}

template <class T>
Tensor<T> softmax_rows_backward(const Tensor<T>& d_out, const Tensor<T>& y) {
    const std::int64_t m = y.shape[0], n = y.shape[1];
    Tensor<T> dx(y.shape);
    for (std::int64_t i = 0; i < m; ++i) {
        T dot = T(0);
        for (std::int64_t j = 0; j < n; ++j) dot += d_out.at2(i, j) * y.at2(i, j);
        for (std::int64_t j = 0; j < n; ++j) dx.at2(i, j) = y.at2(i, j) * (d_out.at2(i, j) - dot);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// concatenation / slicing along the last axis

template <class T>
Tensor<T> concat_last(const std::vector<const Tensor<T>*>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_last: no parts");
    const auto& first = *parts.front();
    const int r = first.rank();
    if (r < 1) throw std::invalid_argument("concat_last: want rank >= 1");
    std::int64_t last = 0;
    for (const auto* p : parts) {
        if (p->rank() != r) shape_error("concat_last", first.shape, p->shape);
        for (int i = 0; i + 1 < r; ++i)
            if (p->shape[static_cast<std::size_t>(i)] != first.shape[static_cast<std::size_t>(i)])
                shape_error("concat_last", first.shape, p->shape);
        last += p->shape[static_cast<std::size_t>(r - 1)];
    }
    Shape out_shape = first.shape;
    out_shape[static_cast<std::size_t>(r - 1)] = last;
    Tensor<T> out(out_shape);
    const std::int64_t rows = numel(out_shape) / last;
    std::int64_t off = 0;
    for (const auto* p : parts) {
        const std::int64_t w = p->shape[static_cast<std::size_t>(r - 1)];
        for (std::int64_t i = 0; i < rows; ++i)
            for (std::int64_t j = 0; j < w; ++j) out[i * last + off + j] = (*p)[i * w + j];
        off += w;
    }
    return out;
}

template <class T>
Tensor<T> slice_last(const Tensor<T>& x, std::int64_t from, std::int64_t to) {
    const int r = x.rank();
    const std::int64_t last = x.shape[static_cast<std::size_t>(r - 1)];
    if (from < 0 || to > last || from >= to)
        throw std::invalid_argument("slice_last: range [" + std::to_string(from) + "," + std::to_string(to) +
                                    ") out of " + shape_str(x.shape));
    Shape out_shape = x.shape;
    out_shape[static_cast<std::size_t>(r - 1)] = to - from;
    Tensor<T> out(out_shape);
    const std::int64_t rows = x.size() / last, w = to - from;
    for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t j = 0; j < w; ++j) out[i * w + j] = x[i * last + from + j];
    return out;
}

template <class T>
Tensor<T> concat_rows(const std::vector<const Tensor<T>*>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
    const std::int64_t n = parts.front()->shape.at(1);
    std::int64_t rows = 0;
    for (const auto* p : parts) {
        if (p->rank() != 2 || p->shape[1] != n) shape_error("concat_rows", parts.front()->shape, p->shape);
        rows += p->shape[0];
    }
    Tensor<T> out(Shape{rows, n});
    std::int64_t r0 = 0;
    for (const auto* p : parts) {
        std::copy(p->data.begin(), p->data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r0 * n));
        r0 += p->shape[0];
    }
    return out;
}

template <class T>
Tensor<T> slice_rows(const Tensor<T>& x, std::int64_t from, std::int64_t to) {
    if (x.rank() != 2 || from < 0 || to > x.shape[0] || from >= to)
        throw std::invalid_argument("slice_rows: bad range on " + shape_str(x.shape));
    Tensor<T> out(Shape{to - from, x.shape[1]});
    std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(from * x.shape[1]),
              x.data.begin() + static_cast<std::ptrdiff_t>(to * x.shape[1]), out.data.begin());
    return out;
}

// ---------------------------------------------------------------------------
// 1x1 convolution: per-position affine map, bias added after the channel sum

template <class T>
Tensor<T> conv1x1(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (x.rank() != 3 || w.rank() != 2 || x.shape[2] != w.shape[0]) shape_error("conv1x1", x.shape, w.shape);
    const std::int64_t ci = w.shape[0], co = w.shape[1];
    if (b.size() != co) shape_error("conv1x1 bias", w.shape, b.shape);
    const std::int64_t hw = x.shape[0] * x.shape[1];
    Tensor<T> y(Shape{x.shape[0], x.shape[1], co});
    for (std::int64_t p = 0; p < hw; ++p)
        for (std::int64_t o = 0; o < co; ++o) {
            T acc = T(0);
            for (std::int64_t i = 0; i < ci; ++i) acc += x[p * ci + i] * w.at2(i, o);
            y[p * co + o] = acc + b[o];
        }
    return y;
}

template <class T>
void conv1x1_backward(const Tensor<T>& d_out, const Tensor<T>& x, const Tensor<T>& w, Tensor<T>& dx, Tensor<T>& dw,
                      Tensor<T>& db) {
    const std::int64_t ci = w.shape[0], co = w.shape[1];
    const std::int64_t hw = x.shape[0] * x.shape[1];
    dx = Tensor<T>(x.shape);
    dw = Tensor<T>(w.shape);
    db = Tensor<T>(Shape{co});
    for (std::int64_t p = 0; p < hw; ++p)
        for (std::int64_t o = 0; o < co; ++o) {
            const T g = d_out[p * co + o];
            db[o] += g;
            for (std::int64_t i = 0; i < ci; ++i) {
                dx[p * ci + i] += g * w.at2(i, o);
                dw.at2(i, o) += g * x[p * ci + i];
            }
        }
}

// ---------------------------------------------------------------------------
// KxK same-padding convolution (odd kernel), used by the ConvLSTM cell

template <class T>
Tensor<T> conv2d_same(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (x.rank() != 3 || w.rank() != 4 || x.shape[2] != w.shape[2]) shape_error("conv2d_same", x.shape, w.shape);
    const std::int64_t kh = w.shape[0], kw = w.shape[1], ci = w.shape[2], co = w.shape[3];
    if (kh % 2 == 0 || kw % 2 == 0) throw std::invalid_argument("conv2d_same: kernel extents must be odd");
    if (b.size() != co) shape_error("conv2d_same bias", w.shape, b.shape);
    const std::int64_t h = x.shape[0], wd = x.shape[1], ph = kh / 2, pw = kw / 2;
    Tensor<T> y(Shape{h, wd, co});
    for (std::int64_t i = 0; i < h; ++i)
        for (std::int64_t j = 0; j < wd; ++j)
            for (std::int64_t o = 0; o < co; ++o) {
                T acc = T(0);
                for (std::int64_t di = 0; di < kh; ++di) {
                    const std::int64_t si = i + di - ph;
                    if (si < 0 || si >= h) continue;
                    for (std::int64_t dj = 0; dj < kw; ++dj) {
                        const std::int64_t sj = j + dj - pw;
                        if (sj < 0 || sj >= wd) continue;
                        for (std::int64_t c = 0; c < ci; ++c) acc += x.at3(si, sj, c) * w.at4(di, dj, c, o);
                    }
                }
                y.at3(i, j, o) = acc + b[o];
            }
    return y;
}

template <class T>
void conv2d_same_backward(const Tensor<T>& d_out, const Tensor<T>& x, const Tensor<T>& w, Tensor<T>& dx,
                          Tensor<T>& dw, Tensor<T>& db) {
    const std::int64_t kh = w.shape[0], kw = w.shape[1], ci = w.shape[2], co = w.shape[3];
    const std::int64_t h = x.shape[0], wd = x.shape[1], ph = kh / 2, pw = kw / 2;
    dx = Tensor<T>(x.shape);
    dw = Tensor<T>(w.shape);
    db = Tensor<T>(Shape{co});
    for (std::int64_t i = 0; i < h; ++i)
        for (std::int64_t j = 0; j < wd; ++j)
            for (std::int64_t o = 0; o < co; ++o) {
                const T g = d_out.at3(i, j, o);
                db[o] += g;
                for (std::int64_t di = 0; di < kh; ++di) {
                    const std::int64_t si = i + di - ph;
                    if (si < 0 || si >= h) continue;
                    for (std::int64_t dj = 0; dj < kw; ++dj) {
                        const std::int64_t sj = j + dj - pw;
                        if (sj < 0 || sj >= wd) continue;
                        for (std::int64_t c = 0; c < ci; ++c) {
                            dx.at3(si, sj, c) += g * w.at4(di, dj, c, o);
                            dw.at4(di, dj, c, o) += g * x.at3(si, sj, c);
                        }
                    }
                }
            }
}

// ---------------------------------------------------------------------------
// bilinear resize (half-pixel centers, clamped borders)

namespace detail {

struct LerpTap {
    std::int64_t lo, hi;
    double frac;
};

inline LerpTap lerp_tap(std::int64_t out_i, std::int64_t in_n, std::int64_t out_n) {
    double src = (static_cast<double>(out_i) + 0.5) * static_cast<double>(in_n) / static_cast<double>(out_n) - 0.5;
    if (src < 0.0) src = 0.0;
    const double top = static_cast<double>(in_n - 1);
    if (src > top) src = top;
    LerpTap t;
    t.lo = static_cast<std::int64_t>(src);
    t.hi = std::min(t.lo + 1, in_n - 1);
    t.frac = src - static_cast<double>(t.lo);
    return t;
}

}  // namespace detail

template <class T>
Tensor<T> bilinear_resize(const Tensor<T>& x, std::int64_t ho, std::int64_t wo) {
    if (x.rank() != 3) throw std::invalid_argument("bilinear_resize: want rank 3, got " + shape_str(x.shape));
    if (ho < 1 || wo < 1) throw std::invalid_argument("bilinear_resize: output extents must be >= 1");
    const std::int64_t h = x.shape[0], w = x.shape[1], c = x.shape[2];
    Tensor<T> y(Shape{ho, wo, c});
    for (std::int64_t i = 0; i < ho; ++i) {
        const auto ti = detail::lerp_tap(i, h, ho);
        for (std::int64_t j = 0; j < wo; ++j) {
            const auto tj = detail::lerp_tap(j, w, wo);
            for (std::int64_t ch = 0; ch < c; ++ch) {
                const T v00 = x.at3(ti.lo, tj.lo, ch), v01 = x.at3(ti.lo, tj.hi, ch);
                const T v10 = x.at3(ti.hi, tj.lo, ch), v11 = x.at3(ti.hi, tj.hi, ch);
                const T fi = static_cast<T>(ti.frac), fj = static_cast<T>(tj.frac);
                y.at3(i, j, ch) = (T(1) - fi) * ((T(1) - fj) * v00 + fj * v01) + fi * ((T(1) - fj) * v10 + fj * v11);
            }
        }
    }
    return y;
}

template <class T>
Tensor<T> bilinear_resize_backward(const Tensor<T>& d_out, const Shape& in_shape) {
    const std::int64_t h = in_shape[0], w = in_shape[1], c = in_shape[2];
    const std::int64_t ho = d_out.shape[0], wo = d_out.shape[1];
    Tensor<T> dx(in_shape);
    for (std::int64_t i = 0; i < ho; ++i) {
        const auto ti = detail::lerp_tap(i, h, ho);
        for (std::int64_t j = 0; j < wo; ++j) {
            const auto tj = detail::lerp_tap(j, w, wo);
            for (std::int64_t ch = 0; ch < c; ++ch) {
                const T g = d_out.at3(i, j, ch);
                const T fi = static_cast<T>(ti.frac), fj = static_cast<T>(tj.frac);
                dx.at3(ti.lo, tj.lo, ch) += g * (T(1) - fi) * (T(1) - fj);
                dx.at3(ti.lo, tj.hi, ch) += g * (T(1) - fi) * fj;
                dx.at3(ti.hi, tj.lo, ch) += g * fi * (T(1) - fj);
                dx.at3(ti.hi, tj.hi, ch) += g * fi * fj;
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// embedding rows, frame select, spatial broadcast

template <class T>
Tensor<T> embed_rows(const Tensor<T>& table, const std::vector<std::int64_t>& ids) {
    if (table.rank() != 2) throw std::invalid_argument("embed_rows: table must be rank 2");
    const std::int64_t v = table.shape[0], c = table.shape[1];
    Tensor<T> out(Shape{static_cast<std::int64_t>(ids.size()), c});
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const std::int64_t id = ids[t];
        if (id < 0 || id >= v)
            throw std::invalid_argument("embed_rows: token id " + std::to_string(id) + " outside vocabulary of " +
                                        std::to_string(v));
        for (std::int64_t j = 0; j < c; ++j) out.at2(static_cast<std::int64_t>(t), j) = table.at2(id, j);
    }
    return out;
}

template <class T>
Tensor<T> embed_rows_backward(const Tensor<T>& d_out, const Shape& table_shape, const std::vector<std::int64_t>& ids) {
    Tensor<T> dt(table_shape);
    for (std::size_t t = 0; t < ids.size(); ++t)
        for (std::int64_t j = 0; j < table_shape[1]; ++j)
            dt.at2(ids[t], j) += d_out.at2(static_cast<std::int64_t>(t), j);
    return dt;
}

template <class T>
Tensor<T> select_frame(const Tensor<T>& x, std::int64_t k) {
    if (x.rank() != 4 || k < 0 || k >= x.shape[0])
        throw std::invalid_argument("select_frame: frame " + std::to_string(k) + " of " + shape_str(x.shape));
    const std::int64_t stride = x.size() / x.shape[0];
    Tensor<T> out(Shape{x.shape[1], x.shape[2], x.shape[3]});
    std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(k * stride),
              x.data.begin() + static_cast<std::ptrdiff_t>((k + 1) * stride), out.data.begin());
    return out;
}

/// v: [C] or [1xC] -> [HxWxC] repeated at every position.
template <class T>
Tensor<T> broadcast_spatial(const Tensor<T>& v, std::int64_t h, std::int64_t w) {
    const std::int64_t c = v.size();
    Tensor<T> out(Shape{h, w, c});
    for (std::int64_t p = 0; p < h * w; ++p)
        for (std::int64_t j = 0; j < c; ++j) out[p * c + j] = v[j];
    return out;
}

template <class T>
Tensor<T> broadcast_spatial_backward(const Tensor<T>& d_out, const Shape& v_shape) {
    const std::int64_t c = d_out.shape[2], hw = d_out.shape[0] * d_out.shape[1];
    Tensor<T> dv(v_shape);
    for (std::int64_t p = 0; p < hw; ++p)
        for (std::int64_t j = 0; j < c; ++j) dv[j] += d_out[p * c + j];
    return dv;
}

// ---------------------------------------------------------------------------
// reductions and loss

template <class T>
Tensor<T> sum_all(const Tensor<T>& x) {
    T acc = T(0);
    for (std::int64_t i = 0; i < x.size(); ++i) acc += x[i];
    return Tensor<T>(Shape{1}, {acc});
}

template <class T>
Tensor<T> mean_all(const Tensor<T>& x) {
    if (x.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
    auto s = sum_all(x);
    s[0] /= static_cast<T>(x.size());
    return s;
}

/// Mean binary cross-entropy from logits, in the stable form
/// max(z,0) - z*y + log(1+exp(-|z|)). Targets must be exactly 0 or 1.
template <class T>
Tensor<T> bce_with_logits_mean(const Tensor<T>& z, const Tensor<T>& y) {
    if (!same_shape(z.shape, y.shape)) shape_error("bce_with_logits_mean", z.shape, y.shape);
    T acc = T(0);
    for (std::int64_t i = 0; i < z.size(); ++i) {
        if (y[i] != T(0) && y[i] != T(1))
            throw std::invalid_argument("bce_with_logits_mean: ground truth must be binary, got " +
                                        std::to_string(static_cast<double>(y[i])));
        const T zi = z[i];
        acc += std::max(zi, T(0)) - zi * y[i] + std::log1p(std::exp(-std::abs(zi)));
    }
    acc /= static_cast<T>(z.size());
    return Tensor<T>(Shape{1}, {acc});
}

template <class T>
Tensor<T> bce_with_logits_mean_backward(const Tensor<T>& d_out, const Tensor<T>& z, const Tensor<T>& y) {
    Tensor<T> dz(z.shape);
    const T g = d_out[0] / static_cast<T>(z.size());
    for (std::int64_t i = 0; i < z.size(); ++i) dz[i] = g * (sigmoid_scalar(z[i]) - y[i]);
    return dz;
}

}  // namespace cmpc
