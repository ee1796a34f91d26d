#pragma once

// End-to-end CMPC-I / CMPC-V forward passes, deterministic parameter
// initialization, BCE loss, Adam, and the desk-scale toy training loop.

#include <array>
#include <map>
#include <string>
#include <vector>

#include "cmpc/action_reasoning.hpp"
#include "cmpc/config.hpp"
#include "cmpc/entity_perception.hpp"
#include "cmpc/gradcheck.hpp"
#include "cmpc/linguistic.hpp"
#include "cmpc/relation_reasoning.hpp"
#include "cmpc/tgfe.hpp"

namespace cmpc {

inline const std::array<int, 3> kLevels = {3, 4, 5};

template <class T>
struct Sample {
    std::map<int, Tensor<T>> levels;   // 3/4/5 -> [HxWxC_v] or [KxHxWxC_v]
    std::vector<std::int64_t> tokens;  // ids into the embedding table
    Tensor<T> gt_mask;                 // [H_gt x W_gt], values in {0,1}
};

// ---------------------------------------------------------------------------
// parameter inventory

/// Input width of the per-level output fusion conv, which depends on which
/// blocks exist: [M or X] (+M^ if g>=1) (+P^ if video AAR) + repeated s.
inline std::int64_t fuse_input_width(const Config& cfg) {
    std::int64_t w = 0;
    if (cfg.g >= 1)
        w += (cfg.mode == Mode::Image && !cfg.cmf ? cfg.C_v : cfg.C_m) + cfg.C_m;
    else
        w += cfg.C_m;
    if (cfg.mode == Mode::Video && cfg.aar) w += cfg.C_m;
    return w + cfg.C_l;
}

/// Every learnable tensor, named module.symbol[.index], Xavier-uniform from
/// a per-name seeded generator; biases zero. Same seed, same bits. Video-only
/// parameters exist only in video mode, so image-mode graphs cannot reach
/// them even by mistake.
template <class T>
ParamStore<T> init_params(const Config& cfg) {
    cfg.validate();
    ParamStore<T> ps;
    ps.seed = cfg.seed;
    auto mat = [&](const std::string& name, std::int64_t rows, std::int64_t cols) {
        ps.add(name, xavier_uniform<T>(Shape{rows, cols}, cfg.seed, name));
    };
    auto bias = [&](const std::string& name, std::int64_t len) { ps.add(name, Tensor<T>(Shape{len})); };

    const std::int64_t cl = cfg.C_l, cv = cfg.C_v, cm = cfg.C_m;
    const std::int64_t cn = cfg.cn(), d = cfg.dd(), da = cfg.dda(), dp = cfg.ddp(), chp = cfg.C_hp;
    const bool video = cfg.mode == Mode::Video;

    mat("embed.table", cfg.vocab, cl);
    mat("cls.W_1", cn, cl);
    bias("cls.b_1", cn);
    mat("cls.W_2", cfg.word_types(), cn);
    bias("cls.b_2", cfg.word_types());

    for (int l : kLevels) {
        const std::string L = std::to_string(l);
        mat("ep." + L + ".coord.W", cv + 8, cv);
        bias("ep." + L + ".coord.b", cv);
        for (std::int64_t i = 1; i <= cfg.r; ++i) {
            mat("ep." + L + ".W_3." + std::to_string(i), cl, cm);
            mat("ep." + L + ".W_4." + std::to_string(i), cv, cm);
        }
        if (cfg.g >= 1) {
            mat("rar." + L + ".W_5", cm, d);
            mat("rar." + L + ".W_6", cl, d);
            for (std::int64_t j = 0; j < cfg.g; ++j) mat("rar." + L + ".W_7." + std::to_string(j), cm, cm);
        }
        if (video && cfg.aar) {
            mat("aar." + L + ".W_8", cm, da);
            mat("aar." + L + ".W_9", cl, da);
            if (cfg.aar_adjacency == AarAdjacency::DR) {
                mat("aar." + L + ".W_12", cm, da);
                mat("aar." + L + ".W_13", cm, da);
            } else {
                mat("aar." + L + ".AR_W_v", cm, da);
                mat("aar." + L + ".AR_W_w", cl, da);
            }
            mat("aar." + L + ".W_14a", cm, cm);
            mat("aar." + L + ".W_14b", cm, da);
            mat("aar." + L + ".W_15", cm, da);
        }
        mat("fuse." + L + ".W", fuse_input_width(cfg), cm);
        bias("fuse." + L + ".b", cm);
    }
    mat("tgfe.W_10", cl, dp);
    mat("tgfe.W_11", cm, dp);
    mat("tgfe.fc.W", cl + cm, cm);
    bias("tgfe.fc.b", cm);
    ps.add("clstm.W", xavier_uniform<T>(Shape{3, 3, cm + chp, 4 * chp}, cfg.seed, "clstm.W"));
    bias("clstm.b", 4 * chp);
    mat("head.W", chp, 1);
    bias("head.b", 1);
    return ps;
}

// ---------------------------------------------------------------------------
// forward passes

namespace detail {

template <class T>
void check_image_levels(const Sample<T>& sample, const Config& cfg) {
    const Tensor<T>* first = nullptr;
    for (int l : kLevels) {
        auto it = sample.levels.find(l);
        if (it == sample.levels.end())
            throw std::invalid_argument("forward: missing level " + std::to_string(l) + " features");
        const auto& t = it->second;
        const int want = cfg.mode == Mode::Video ? 4 : 3;
        if (t.rank() != want)
            throw std::invalid_argument("forward: level " + std::to_string(l) + " features have rank " +
                                        std::to_string(t.rank()) + ", want " + std::to_string(want));
        if (t.shape[t.rank() - 1] != cfg.C_v)
            throw std::invalid_argument("forward: level " + std::to_string(l) + " has " +
                                        std::to_string(t.shape[t.rank() - 1]) + " channels, config C_v=" +
                                        std::to_string(cfg.C_v));
        if (first && t.shape != first->shape) shape_error("forward: level extents", first->shape, t.shape);
        if (!first) first = &t;
    }
    if (sample.tokens.empty()) throw std::invalid_argument("forward: empty token sequence");
    if (sample.gt_mask.rank() != 2) throw std::invalid_argument("forward: ground-truth mask must be rank 2");
}

template <class T>
struct WordContext {
    WordProbs probs;
    int q_e = -1;
    int rel = -1;
    int s = -1;
    int q_a = -1;       // video
    int rel_act = -1;   // video, AR adjacency
};

template <class T>
WordContext<T> word_context(Graph<T>& g, const Sample<T>& sample, const Config& cfg) {
    WordContext<T> wc;
    const int feats = g.embed_rows(g.param("embed.table"), sample.tokens);
    wc.probs = classify_words(g, feats, "cls", cfg.mode);
    wc.q_e = entity_context(g, feats, wc.probs);
    wc.rel = relational_features(g, feats, wc.probs);
    wc.s = necessary_sentence(g, feats, wc.probs, cfg.s_includes_action);
    if (cfg.mode == Mode::Video) {
        wc.q_a = action_context(g, feats, wc.probs);
        if (cfg.aar_adjacency == AarAdjacency::AR) wc.rel_act = action_features(g, feats, wc.probs);
    }
    return wc;
}

template <class T>
int head_from_levels(Graph<T>& g, std::array<int, 3> ys, int s, const Config& cfg, std::int64_t out_h,
                     std::int64_t out_w) {
    for (std::int64_t round = 0; round < cfg.n; ++round) ys = exchange_round(g, ys, s, "tgfe");
    const int hidden = convlstm_fuse(g, ys, "clstm", cfg.convlstm_deep_to_shallow);
    return predict_mask(g, hidden, "head", out_h, out_w);
}

}  // namespace detail

/// CMPC-I: per level EP -> RAR -> Y, then TGFE, ConvLSTM and the mask head.
/// Deterministic in (sample, params, cfg); returns logits at gt resolution.
template <class T>
int forward_image(Graph<T>& g, const Sample<T>& sample, const Config& cfg) {
    if (cfg.mode != Mode::Image) throw std::invalid_argument("forward_image: config mode is not image");
    detail::check_image_levels(sample, cfg);
    const auto wc = detail::word_context(g, sample, cfg);
    const auto& l3 = sample.levels.at(3);
    const std::int64_t h = l3.shape[0], w = l3.shape[1];
    const int coords = g.constant(make_coord_feature<T>(h, w));

    std::array<int, 3> ys{};
    for (int l : kLevels) {
        const std::string L = std::to_string(l);
        const int vis = g.constant(sample.levels.at(l));
        const int x = fuse_coordinates(g, vis, coords, "ep." + L + ".coord");
        const int m = bilinear_fuse(g, x, wc.q_e, "ep." + L, cfg.r);
        int y;
        if (cfg.g >= 1) {
            const int mt = g.reshape(m, Shape{h * w, cfg.C_m});
            const int a = build_adjacency(g, mt, wc.rel, "rar." + L);
            const int m_bar = g.reshape(graph_convolve(g, mt, a, "rar." + L, cfg.g), Shape{h, w, cfg.C_m});
            y = assemble_output(g, m, m_bar, wc.s, "fuse." + L, cfg.cmf, x);
        } else {
            y = fuse_blocks(g, {m}, wc.s, "fuse." + L);  // EP-only ablation
        }
        ys[static_cast<std::size_t>(l - 3)] = y;
    }
    return detail::head_from_levels(g, ys, wc.s, cfg, sample.gt_mask.shape[0], sample.gt_mask.shape[1]);
}

/// CMPC-V: per-frame EP, RAR on the annotated center frame only, the AAR
/// temporal chain, per-level assembly, then the shared TGFE/ConvLSTM head.
template <class T>
int forward_video(Graph<T>& g, const Sample<T>& sample, const Config& cfg) {
    if (cfg.mode != Mode::Video) throw std::invalid_argument("forward_video: config mode is not video");
    detail::check_image_levels(sample, cfg);
    const auto& l3 = sample.levels.at(3);
    if (l3.shape[0] != cfg.K)
        throw std::invalid_argument("forward_video: clip length " + std::to_string(l3.shape[0]) +
                                    " does not match config K=" + std::to_string(cfg.K));
    const auto wc = detail::word_context(g, sample, cfg);
    const std::int64_t h = l3.shape[1], w = l3.shape[2];
    const std::int64_t center = cfg.K / 2;
    const int coords = g.constant(make_coord_feature<T>(h, w));

    std::array<int, 3> ys{};
    for (int l : kLevels) {
        const std::string L = std::to_string(l);
        const int clip = g.constant(sample.levels.at(l));
        std::vector<int> frames;
        for (std::int64_t k = 0; k < cfg.K; ++k) {
            const int x = fuse_coordinates(g, g.select_frame(clip, k), coords, "ep." + L + ".coord");
            frames.push_back(bilinear_fuse(g, x, wc.q_e, "ep." + L, cfg.r));
        }
        const int m_ctr = frames[static_cast<std::size_t>(center)];
        int m_bar = -1;
        if (cfg.g >= 1) {
            const int mt = g.reshape(m_ctr, Shape{h * w, cfg.C_m});
            const int a = build_adjacency(g, mt, wc.rel, "rar." + L);
            m_bar = g.reshape(graph_convolve(g, mt, a, "rar." + L, cfg.g), Shape{h, w, cfg.C_m});
        }
        int p_hat = -1;
        if (cfg.aar) {
            const auto ta = temporal_attend(g, frames, wc.q_a, "aar." + L);
            const int a_v = cfg.aar_adjacency == AarAdjacency::DR
                                ? temporal_adjacency(g, ta.p_tilde, "aar." + L)
                                : temporal_adjacency_action_routed(g, ta.p_tilde, wc.rel_act, "aar." + L);
            const int p_bar = temporal_graph_convolve(g, ta.p_tilde, a_v, "aar." + L);
            p_hat = project_to_frame(g, p_bar, m_bar >= 0 ? m_bar : m_ctr, "aar." + L).p_hat;
        }
        std::vector<int> blocks{m_ctr};
        if (m_bar >= 0) blocks.push_back(m_bar);
        if (p_hat >= 0) blocks.push_back(p_hat);
        ys[static_cast<std::size_t>(l - 3)] = fuse_blocks(g, blocks, wc.s, "fuse." + L);
    }
    return detail::head_from_levels(g, ys, wc.s, cfg, sample.gt_mask.shape[0], sample.gt_mask.shape[1]);
}

template <class T>
int forward(Graph<T>& g, const Sample<T>& sample, const Config& cfg) {
    return cfg.mode == Mode::Video ? forward_video(g, sample, cfg) : forward_image(g, sample, cfg);
}

/// Mean pixel BCE of logits against a {0,1} mask, stable logit form.
template <class T>
T bce_loss(const Tensor<T>& logits, const Tensor<T>& gt_mask) {
    return bce_with_logits_mean(logits, gt_mask)[0];
}

// ---------------------------------------------------------------------------
// optimizer

struct AdamHyper {
    double lr = 2.5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 5e-4;
    bool decoupled = true;  // theta -= lr*wd*theta before the moment update
};

template <class T>
struct AdamState {
    std::map<std::string, Tensor<T>> m, v;
    std::int64_t step = 0;
};

template <class T>
void adam_step(ParamStore<T>& params, const std::map<std::string, Tensor<T>>& grads, AdamState<T>& state,
               const AdamHyper& hp) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
    for (const auto& [name, grad] : grads) {
        Tensor<T>& theta = params.mutable_at(name);
        if (grad.shape != theta.shape)
            throw std::invalid_argument("adam_step: gradient shape " + shape_str(grad.shape) + " vs parameter '" +
                                        name + "' " + shape_str(theta.shape));
        auto& m = state.m.try_emplace(name, Tensor<T>(theta.shape)).first->second;
        auto& v = state.v.try_emplace(name, Tensor<T>(theta.shape)).first->second;
        for (std::int64_t i = 0; i < theta.size(); ++i) {
            double gi = static_cast<double>(grad[i]);
            if (hp.decoupled)
                theta[i] -= static_cast<T>(hp.lr * hp.weight_decay * static_cast<double>(theta[i]));
            else
                gi += hp.weight_decay * static_cast<double>(theta[i]);
            m[i] = static_cast<T>(hp.beta1 * static_cast<double>(m[i]) + (1.0 - hp.beta1) * gi);
            v[i] = static_cast<T>(hp.beta2 * static_cast<double>(v[i]) + (1.0 - hp.beta2) * gi * gi);
            const double m_hat = static_cast<double>(m[i]) / bc1;
            const double v_hat = static_cast<double>(v[i]) / bc2;
            theta[i] -= static_cast<T>(hp.lr * m_hat / (std::sqrt(v_hat) + hp.eps));
        }
    }
}

// ---------------------------------------------------------------------------
// toy task and training loop

struct TrainDivergence : std::runtime_error {
    std::int64_t step;
    explicit TrainDivergence(std::int64_t s)
        : std::runtime_error("training diverged (non-finite loss) at step " + std::to_string(s)), step(s) {}
};

template <class T>
struct TrainResult {
    std::vector<T> trace;  // mean BCE before each step, plus the final value
    ParamStore<T> params;
};

/// Planted-target task. The mask marks cells whose feature vector correlates
/// with a hidden unit direction u beyond a per-sample threshold tau, and a
/// designated token (id 1) heads every expression. The features carry a
/// margin along u that is smaller than the tau range, so a pointwise rule
/// cannot separate the classes: tau must be recovered by aggregation. In
/// image mode tau rides on every cell along a second direction v (readable
/// through RAR's global propagation); in video mode it rides only on the
/// non-center frames (readable only through AAR's temporal pooling).
template <class T>
std::vector<Sample<T>> make_toy_dataset(const Config& cfg, std::int64_t count, std::int64_t h, std::int64_t w,
                                        std::uint64_t seed) {
    if (cfg.vocab < 5)
        throw std::invalid_argument("make_toy_dataset: the toy expressions use token ids 1..4, need vocab >= 5");
    auto rng = named_rng(seed, "toy.dataset");
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); };
    auto unit_dir = [&]() {
        std::vector<double> d(static_cast<std::size_t>(cfg.C_v));
        double norm2 = 0.0;
        for (auto& v : d) {
            v = uniform(-1.0, 1.0);
            norm2 += v * v;
        }
        for (auto& v : d) v /= std::sqrt(norm2);
        return d;
    };
    auto u = unit_dir();
    auto v = unit_dir();
    {  // v orthogonal to u
        double uv = 0.0;
        for (std::size_t c = 0; c < u.size(); ++c) uv += u[c] * v[c];
        double norm2 = 0.0;
        for (std::size_t c = 0; c < u.size(); ++c) {
            v[c] -= uv * u[c];
            norm2 += v[c] * v[c];
        }
        for (auto& x : v) x /= std::sqrt(norm2);
    }
    const double margin = 0.15, tau_range = 0.8;

    const bool video = cfg.mode == Mode::Video;
    const std::int64_t frames = video ? cfg.K : 1;
    const std::int64_t center = cfg.K / 2;
    std::vector<Sample<T>> out;
    for (std::int64_t si = 0; si < count; ++si) {
        Sample<T> s;
        const double tau = uniform(-tau_range, tau_range);
        Tensor<double> planted(Shape{h, w, cfg.C_v});
        for (std::int64_t i = 0; i < planted.size(); ++i) planted[i] = uniform(-1.0, 1.0);
        s.gt_mask = Tensor<T>(Shape{h, w});
        for (std::int64_t p = 0; p < h * w; ++p) {
            double dot = 0.0;
            for (std::int64_t c = 0; c < cfg.C_v; ++c) dot += planted[p * cfg.C_v + c] * u[static_cast<std::size_t>(c)];
            const bool fg = dot > tau;
            s.gt_mask[p] = fg ? T(1) : T(0);
            for (std::int64_t c = 0; c < cfg.C_v; ++c) {
                planted[p * cfg.C_v + c] += (fg ? margin : -margin) * u[static_cast<std::size_t>(c)];
                if (!video) planted[p * cfg.C_v + c] += tau * v[static_cast<std::size_t>(c)];
            }
        }
        for (int l : kLevels) {
            Tensor<T> feat(video ? Shape{frames, h, w, cfg.C_v} : Shape{h, w, cfg.C_v});
            for (std::int64_t k = 0; k < frames; ++k)
                for (std::int64_t p = 0; p < h * w; ++p)
                    for (std::int64_t c = 0; c < cfg.C_v; ++c) {
                        const std::int64_t at = (k * h * w + p) * cfg.C_v + c;
                        if (!video || k == center)
                            feat[at] = static_cast<T>(planted[p * cfg.C_v + c] + 0.1 * uniform(-1.0, 1.0));
                        else
                            feat[at] =
                                static_cast<T>(0.3 * uniform(-1.0, 1.0) + tau * v[static_cast<std::size_t>(c)]);
                    }
            s.levels.emplace(l, std::move(feat));
        }
        s.tokens = {1, 2, 3, 4};
        out.push_back(std::move(s));
    }
    return out;
}

/// Full-batch training: forward+backward over every sample, gradients
/// averaged, one Adam step per iteration. trace[t] is the mean loss at the
/// parameters of step t; the final entry is evaluated after the last update.
/// The weight-decay form (decoupled or coupled) follows the config.
template <class T>
TrainResult<T> train_toy(const std::vector<Sample<T>>& data, const Config& cfg, std::int64_t steps,
                         AdamHyper hp = AdamHyper{}) {
    if (data.empty()) throw std::invalid_argument("train_toy: need at least one sample");
    hp.decoupled = cfg.decoupled_weight_decay;
    TrainResult<T> result;
    result.params = init_params<T>(cfg);
    AdamState<T> state;
    const T inv_b = T(1) / static_cast<T>(data.size());

    auto mean_loss_only = [&]() {
        T acc = T(0);
        for (const auto& s : data) {
            Graph<T> g(&result.params);
            acc += g.value(g.bce_with_logits_mean(forward(g, s, cfg), g.constant(s.gt_mask)))[0];
        }
        return acc * inv_b;
    };

    for (std::int64_t step = 0; step < steps; ++step) {
        typename Graph<T>::GradMap grads;
        T acc = T(0);
        for (const auto& s : data) {
            Graph<T> g(&result.params);
            const int loss = g.bce_with_logits_mean(forward(g, s, cfg), g.constant(s.gt_mask));
            acc += g.value(loss)[0];
            auto gm = g.backward(loss);
            if (grads.empty())
                grads = std::move(gm);
            else
                for (auto& [name, grad] : grads) grad = cmpc::add(grad, gm.at(name));
        }
        const T mean = acc * inv_b;
        if (!std::isfinite(static_cast<double>(mean))) throw TrainDivergence(step);
        result.trace.push_back(mean);
        for (auto& [name, grad] : grads) grad = cmpc::scale(grad, inv_b);
        adam_step(result.params, grads, state, hp);
    }
    const T final_loss = mean_loss_only();
    if (!std::isfinite(static_cast<double>(final_loss))) throw TrainDivergence(steps);
    result.trace.push_back(final_loss);
    return result;
}

}  // namespace cmpc
