// cmpc — self-test, gradient checking, toy training, inference on
// precomputed features, and segmentation evaluation.
//
// Exit codes: 0 success, 1 check/eval failure, 2 usage error, 3 I/O error.
// stdout carries machine-parseable key:value lines; diagnostics go to stderr.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "cmpc/io.hpp"
#include "cmpc/metrics.hpp"
#include "cmpc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cmpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

Mode parse_mode(const std::string& mode) {
    if (mode == "image") return Mode::Image;
    if (mode == "video") return Mode::Video;
    throw ConfigError("mode must be image or video, got '" + mode + "'");
}

/// The built-in desk-scale instance used by gradcheck/train-toy/make-toy.
Config toy_config(Mode mode, std::uint64_t seed, bool small) {
    Config cfg;
    cfg.C_v = cfg.C_l = cfg.C_m = small ? 8 : 16;
    cfg.C_n = cfg.C_v / 2;
    cfg.C_hp = cfg.C_v / 2;
    cfg.r = 2;
    cfg.n = 1;
    cfg.g = 1;
    cfg.K = 3;
    cfg.vocab = 8;
    cfg.mode = mode;
    cfg.seed = seed;
    return cfg;
}

void write_config_file(const std::string& path, const Config& cfg) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << cfg.canonical_text();
}

// ---------------------------------------------------------------------------
// selftest

struct Check {
    std::string name;
    std::function<std::optional<std::string>(bool inject_fault)> run;
};

std::optional<std::string> row_stochastic_failure(const Tensor<double>& a) {
    for (std::int64_t i = 0; i < a.shape[0]; ++i) {
        double sum = 0.0;
        for (std::int64_t j = 0; j < a.shape[1]; ++j) {
            if (a.at2(i, j) < 0.0) return "negative entry in row " + std::to_string(i);
            sum += a.at2(i, j);
        }
        if (std::abs(sum - 1.0) > 1e-6)
            return "row " + std::to_string(i) + " sums to " + std::to_string(sum);
    }
    return std::nullopt;
}

std::vector<Check> build_selftest_registry() {
    std::vector<Check> checks;
    auto add = [&](std::string name, std::function<std::optional<std::string>(bool)> fn) {
        checks.push_back({std::move(name), std::move(fn)});
    };

    add("tensor_core.conv1x1_matvec_oracle", [](bool) -> std::optional<std::string> {
        auto rng = named_rng(1, "selftest.conv");
        Tensor<double> x(Shape{2, 2, 3}), w(Shape{3, 2}), b(Shape{2});
        for (auto* t : {&x, &w, &b})
            for (std::int64_t i = 0; i < t->size(); ++i) (*t)[i] = 2.0 * unit_uniform(rng) - 1.0;
        auto y = conv1x1(x, w, b);
        for (std::int64_t p = 0; p < 4; ++p)
            for (std::int64_t o = 0; o < 2; ++o) {
                double acc = 0.0;
                for (std::int64_t c = 0; c < 3; ++c) acc += x[p * 3 + c] * w.at2(c, o);
                if (y[p * 2 + o] != acc + b[o]) return "conv1x1 disagrees with the per-pixel oracle";
            }
        return std::nullopt;
    });
    add("tensor_core.softmax_row_sums", [](bool) -> std::optional<std::string> {
        auto rng = named_rng(2, "selftest.softmax");
        Tensor<double> x(Shape{6, 7});
        for (std::int64_t i = 0; i < x.size(); ++i) x[i] = 20.0 * unit_uniform(rng) - 10.0;
        auto y = softmax_rows(x);
        for (std::int64_t i = 0; i < 6; ++i) {
            double s = 0.0;
            for (std::int64_t j = 0; j < 7; ++j) s += y.at2(i, j);
            if (std::abs(s - 1.0) > 1e-9) return "softmax row sum off by " + std::to_string(s - 1.0);
        }
        return std::nullopt;
    });
    add("linguistic.uniform_probs", [](bool) -> std::optional<std::string> {
        ParamStore<double> ps;
        ps.add("cls.W_1", xavier_uniform<double>({3, 6}, 3, "cls.W_1"));
        ps.add("cls.b_1", Tensor<double>(Shape{3}));
        ps.add("cls.W_2", Tensor<double>(Shape{4, 3}));
        ps.add("cls.b_2", Tensor<double>(Shape{4}));
        Graph<double> g(&ps);
        auto rng = named_rng(3, "selftest.cls");
        Tensor<double> l(Shape{3, 6});
        for (std::int64_t i = 0; i < l.size(); ++i) l[i] = unit_uniform(rng);
        auto p = classify_words(g, g.constant(l), "cls", Mode::Image);
        const auto& probs = g.value(p.node);
        for (std::int64_t i = 0; i < probs.size(); ++i)
            if (std::abs(probs[i] - 0.25) > 1e-12) return "uniform logits did not give 1/4 rows";
        return std::nullopt;
    });
    add("entity_perception.coord_closed_form", [](bool) -> std::optional<std::string> {
        auto o = make_coord_feature<double>(1, 1);
        const double want[8] = {-1, 0, 1, -1, 0, 1, 1, 1};
        for (int c = 0; c < 8; ++c)
            if (o[c] != want[c]) return "1x1 coordinate channel " + std::to_string(c) + " wrong";
        return std::nullopt;
    });
    add("relation_reasoning.row_stochastic", [](bool inject) -> std::optional<std::string> {
        ParamStore<double> ps;
        ps.add("rar.W_5", xavier_uniform<double>({4, 4}, 4, "rar.W_5"));
        ps.add("rar.W_6", xavier_uniform<double>({4, 4}, 4, "rar.W_6"));
        Graph<double> g(&ps);
        auto rng = named_rng(4, "selftest.rar");
        Tensor<double> m(Shape{6, 4}), rel(Shape{3, 4});
        for (std::int64_t i = 0; i < m.size(); ++i) m[i] = 2.0 * unit_uniform(rng) - 1.0;
        for (std::int64_t i = 0; i < rel.size(); ++i) rel[i] = 2.0 * unit_uniform(rng) - 1.0;
        auto a = g.value(build_adjacency(g, g.constant(m), g.constant(rel), "rar"));
        if (inject) a.at2(0, 0) -= 0.1;  // corrupt one entry: row 0 sums to 0.9
        return row_stochastic_failure(a);
    });
    add("action_reasoning.temporal_adjacency", [](bool) -> std::optional<std::string> {
        ParamStore<double> ps;
        ps.add("aar.W_12", xavier_uniform<double>({4, 4}, 5, "aar.W_12"));
        ps.add("aar.W_13", xavier_uniform<double>({4, 4}, 5, "aar.W_13"));
        Graph<double> g(&ps);
        const auto& one = g.value(temporal_adjacency(g, g.constant(Tensor<double>::full({1, 4}, 0.3)), "aar"));
        if (one.shape != Shape{1, 1} || one[0] != 1.0) return "K=1 adjacency is not [[1]]";
        Tensor<double> same(Shape{3, 4});
        for (std::int64_t k = 0; k < 3; ++k)
            for (std::int64_t c = 0; c < 4; ++c) same.at2(k, c) = 0.1 * static_cast<double>(c);
        const auto& a = g.value(temporal_adjacency(g, g.constant(same), "aar"));
        for (std::int64_t i = 0; i < a.size(); ++i)
            if (std::abs(a[i] - 1.0 / 3.0) > 1e-12) return "identical frames did not give uniform rows";
        return std::nullopt;
    });
    add("tgfe.round_zero_and_zero_convlstm", [](bool) -> std::optional<std::string> {
        ParamStore<double> ps;
        ps.add("clstm.W", Tensor<double>(Shape{3, 3, 5, 8}));
        ps.add("clstm.b", Tensor<double>(Shape{8}));
        Graph<double> g(&ps);
        auto rng = named_rng(6, "selftest.tgfe");
        std::array<int, 3> levels{};
        for (auto& l : levels) {
            Tensor<double> y(Shape{2, 2, 3});
            for (std::int64_t i = 0; i < y.size(); ++i) y[i] = 2.0 * unit_uniform(rng) - 1.0;
            l = g.constant(y);
        }
        const auto& h = g.value(convlstm_fuse(g, levels, "clstm"));
        for (std::int64_t i = 0; i < h.size(); ++i)
            if (h[i] != 0.0) return "zero-parameter ConvLSTM produced a nonzero hidden state";
        return std::nullopt;  // round 0 is the caller running no rounds: nothing to do
    });
    add("pipeline.bce_and_init_determinism", [](bool) -> std::optional<std::string> {
        Tensor<double> z(Shape{2, 2}), y(Shape{2, 2}, {1, 0, 1, 0});
        if (std::abs(bce_with_logits_mean(z, y)[0] - std::log(2.0)) > 1e-12)
            return "BCE at zero logits is not ln 2";
        auto cfg = toy_config(Mode::Image, 5, true);
        auto a = init_params<double>(cfg);
        auto b = init_params<double>(cfg);
        for (const auto& [name, t] : a.tensors())
            if (!t.bit_equal(b.at(name))) return "seeded init is not bit-identical for " + name;
        return std::nullopt;
    });
    add("pipeline_io.tensor_round_trip", [](bool) -> std::optional<std::string> {
        const auto path = (fs::temp_directory_path() / "cmpc_selftest.cmpct").string();
        auto rng = named_rng(7, "selftest.io");
        Tensor<double> t(Shape{3, 4});
        for (std::int64_t i = 0; i < t.size(); ++i) t[i] = 2.0 * unit_uniform(rng) - 1.0;
        write_tensor(path, t, Dtype::F64);
        auto back = read_tensor<double>(path);
        fs::remove(path);
        if (!back.bit_equal(t)) return "tensor write/read round trip changed bits";
        return std::nullopt;
    });
    add("metrics.golden_cases", [](bool) -> std::optional<std::string> {
        std::vector<EvalRecord> rs{{1, 2, 0.5}, {8, 10, 0.8}};
        if (std::abs(overall_iou(rs) - 0.75) > 1e-12) return "overall IoU (1,2)+(8,10) is not 0.75";
        if (std::abs(mean_iou(rs) - 0.65) > 1e-12) return "mean IoU (1,2)+(8,10) is not 0.65";
        std::vector<EvalRecord> pr{{55, 100, 0.55}, {45, 100, 0.45}};
        if (prec_at(pr, 0.5) != 50.0) return "Prec@0.5 on {0.55,0.45} is not 50.0";
        return std::nullopt;
    });
    return checks;
}

int cmd_selftest(const std::string& inject_fault) {
    auto checks = build_selftest_registry();
    bool all_ok = true;
    bool fault_matched = inject_fault.empty();
    for (const auto& check : checks) {
        const bool inject = check.name == inject_fault;
        fault_matched = fault_matched || inject;
        std::optional<std::string> failure;
        try {
            failure = check.run(inject);
        } catch (const std::exception& e) {
            failure = std::string("exception: ") + e.what();
        }
        std::printf("check:%s status:%s%s%s\n", check.name.c_str(), failure ? "fail" : "pass",
                    failure ? " reason:" : "", failure ? failure->c_str() : "");
        all_ok = all_ok && !failure;
    }
    if (!fault_matched) {
        std::fprintf(stderr, "no selftest check named '%s'\n", inject_fault.c_str());
        return kExitUsage;
    }
    std::printf("selftest:%s\n", all_ok ? "pass" : "fail");
    return all_ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// gradcheck

int cmd_gradcheck(const std::string& mode_str, std::uint64_t seed, double tol) {
    const Mode mode = parse_mode(mode_str);
    auto cfg = toy_config(mode, seed, /*small=*/true);
    auto ps = init_params<double>(cfg);
    auto data = make_toy_dataset<double>(cfg, 1, 4, 4, seed);
    auto report = check_gradients<double>(
        ps,
        [&](Graph<double>& g) {
            return g.bce_with_logits_mean(forward(g, data[0], cfg), g.constant(data[0].gt_mask));
        },
        1e-5, tol);
    for (const auto& e : report.entries)
        std::printf("param:%s max_rel_err:%.6e\n", e.name.c_str(), e.max_rel_err);
    const auto* worst = report.worst();
    std::printf("worst:%s worst_err:%.6e tol:%.1e\n", worst->name.c_str(), worst->max_rel_err, tol);
    std::printf("gradcheck:%s\n", report.pass ? "pass" : "fail");
    return report.pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// train-toy

int cmd_train_toy(const std::string& mode_str, std::uint64_t seed, std::int64_t steps,
                  const std::string& out_checkpoint, std::string out_trace) {
    const Mode mode = parse_mode(mode_str);
    auto cfg = toy_config(mode, seed, /*small=*/false);
    auto data = make_toy_dataset<double>(cfg, 4, 8, 8, seed);
    if (out_trace.empty()) out_trace = out_checkpoint + ".trace";

    TrainResult<double> result;
    try {
        result = train_toy(data, cfg, steps);
    } catch (const TrainDivergence& e) {
        std::fprintf(stderr, "%s\n", e.what());
        std::printf("diverged_at_step:%" PRId64 "\n", e.step);
        return kExitCheckFailed;
    }
    save_checkpoint(out_checkpoint, result.params, cfg.digest());
    {
        std::ofstream f(out_trace);
        if (!f) throw IoError("cannot open '" + out_trace + "' for writing");
        for (double v : result.trace) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            f << buf << "\n";
        }
    }
    const double target = mode == Mode::Video ? 0.05 : 0.01;
    const bool overfit = result.trace.back() < target;
    std::printf("steps:%" PRId64 "\n", steps);
    std::printf("final_loss:%.6f\n", result.trace.back());
    std::printf("target_loss:%.6f\n", target);
    std::printf("checkpoint:%s\n", out_checkpoint.c_str());
    std::printf("trace:%s\n", out_trace.c_str());
    std::printf("overfit:%s\n", overfit ? "pass" : "fail");
    return overfit ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// infer

template <class T>
int run_infer(const Config& cfg, const std::map<int, std::string>& feature_paths, const std::string& tokens_path,
              const std::string& params_path, const std::string& out_path, const std::string& out_format,
              const std::string& vocab_path) {
    auto ps = init_params<T>(cfg);
    bool digest_ok = true;
    load_checkpoint(params_path, ps, cfg.digest(), &digest_ok);
    if (!digest_ok)
        std::fprintf(stderr, "warning: checkpoint config digest differs; shapes matched, proceeding\n");

    Sample<T> sample;
    for (const auto& [level, path] : feature_paths) sample.levels.emplace(level, read_tensor<T>(path));
    {
        std::ifstream f(tokens_path);
        if (!f) throw IoError("cannot open tokens file '" + tokens_path + "'");
        std::ostringstream os;
        os << f.rdbuf();
        std::optional<std::vector<std::string>> vocab;
        if (!vocab_path.empty()) vocab = load_vocab(vocab_path);
        sample.tokens = tokens_from_text(os.str(), vocab ? &*vocab : nullptr);
    }
    const auto& l3 = sample.levels.at(3);
    const std::int64_t h = cfg.mode == Mode::Video ? l3.shape[1] : l3.shape[0];
    const std::int64_t w = cfg.mode == Mode::Video ? l3.shape[2] : l3.shape[1];
    sample.gt_mask = Tensor<T>(Shape{h, w});  // sizing only; no loss in inference

    Graph<T> g(&ps);
    const auto& logits = g.value(forward(g, sample, cfg));

    std::int64_t foreground = 0;
    Tensor<T> mask(logits.shape);
    for (std::int64_t i = 0; i < logits.size(); ++i) {
        mask[i] = logits[i] > T(0) ? T(1) : T(0);  // sigmoid(z) > 0.5
        foreground += mask[i] == T(1);
    }
    if (out_format == "pgm")
        write_mask_pgm(out_path, mask);
    else
        write_tensor(out_path, logits, std::is_same_v<T, float> ? Dtype::F32 : Dtype::F64);
    std::printf("foreground_pixels:%" PRId64 "\n", foreground);
    std::printf("out:%s\n", out_path.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& report_path) {
    if (!fs::is_directory(pred_dir)) throw IoError("prediction directory '" + pred_dir + "' does not exist");
    if (!fs::is_directory(gt_dir)) throw IoError("ground-truth directory '" + gt_dir + "' does not exist");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(pred_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    for (const auto& entry : fs::directory_iterator(gt_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm" &&
            !fs::exists(fs::path(pred_dir) / entry.path().filename())) {
            std::fprintf(stderr, "unpaired ground-truth file: %s\n", entry.path().filename().string().c_str());
            return kExitUsage;
        }
    if (names.empty()) {
        std::fprintf(stderr, "no .pgm predictions in '%s'\n", pred_dir.c_str());
        return kExitUsage;
    }

    std::vector<EvalRecord> records;
    std::vector<std::string> kept;
    for (const auto& name : names) {
        const auto gt_path = fs::path(gt_dir) / name;
        if (!fs::exists(gt_path)) {
            std::fprintf(stderr, "unpaired prediction file: %s\n", name.c_str());
            return kExitUsage;
        }
        auto pred = read_mask_pgm<double>((fs::path(pred_dir) / name).string());
        auto gt = read_mask_pgm<double>(gt_path.string());
        records.push_back(eval_record(pred, gt));
        kept.push_back(name);
    }

    std::ostringstream report;
    char line[128];
    std::snprintf(line, sizeof line, "samples:%zu\n", records.size());
    report << line;
    std::snprintf(line, sizeof line, "overall_iou:%.4f\n", overall_iou(records));
    report << line;
    std::snprintf(line, sizeof line, "mean_iou:%.4f\n", mean_iou(records));
    report << line;
    for (int i = 0; i < 5; ++i) {
        const double x = 0.5 + 0.1 * i;
        std::snprintf(line, sizeof line, "prec@%.1f:%.4f\n", x, prec_at(records, x));
        report << line;
    }
    std::snprintf(line, sizeof line, "map_proxy:%.4f\n", mean_ap_proxy(records));
    report << line;
    std::fputs(report.str().c_str(), stdout);
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::snprintf(line, sizeof line, "sample:%s iou:%.4f intersection:%" PRId64 " union:%" PRId64 "\n",
                      kept[i].c_str(), records[i].iou, records[i].intersection, records[i].unions);
        report << line;
    }
    std::ofstream f(report_path);
    if (!f) throw IoError("cannot open '" + report_path + "' for writing");
    f << report.str();
    std::printf("report:%s\n", report_path.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// make-toy

int cmd_make_toy(const std::string& mode_str, std::uint64_t seed, std::int64_t index,
                 const std::string& out_dir) {
    const Mode mode = parse_mode(mode_str);
    auto cfg = toy_config(mode, seed, /*small=*/false);
    auto data = make_toy_dataset<double>(cfg, 4, 8, 8, seed);
    if (index < 0 || index >= static_cast<std::int64_t>(data.size()))
        throw ConfigError("index must lie in [0,4), got " + std::to_string(index));
    const auto& sample = data[static_cast<std::size_t>(index)];
    fs::create_directories(out_dir);
    auto at = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
    for (int l : kLevels)
        write_tensor(at(("l" + std::to_string(l) + ".cmpct").c_str()), sample.levels.at(l), Dtype::F64);
    write_mask_pgm(at("gt.pgm"), sample.gt_mask);
    write_config_file(at("config.cfg"), cfg);
    {
        std::ofstream f(at("vocab.txt"));
        f << "<pad>\ntarget\nleft\nof\nthe\nred\nsmall\nmoving\n";
    }
    {
        std::ofstream f(at("tokens.txt"));
        f << "target left of the\n";  // maps to ids 1 2 3 4 under vocab.txt
    }
    std::printf("out_dir:%s\n", out_dir.c_str());
    std::printf("config:%s\n", at("config.cfg").c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CMPC referring-segmentation computation graph"};
    app.require_subcommand(1);

    auto* selftest = app.add_subcommand("selftest", "run the built-in invariant suite");
    std::string inject_fault;
    selftest->add_option("--inject-fault", inject_fault, "corrupt the named check's data to exercise failures");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every parameter gradient");
    std::string gc_mode = "image";
    std::uint64_t gc_seed = 7;
    double gc_tol = 1e-4;
    gradcheck->add_option("--mode", gc_mode, "image or video")->default_str("image");
    gradcheck->add_option("--seed", gc_seed, "toy seed");
    gradcheck->add_option("--tol", gc_tol, "relative error tolerance");

    auto* train = app.add_subcommand("train-toy", "overfit the built-in planted-target toy task");
    std::string tr_mode = "image", tr_ckpt, tr_trace;
    std::uint64_t tr_seed = 7;
    std::int64_t tr_steps = 2000;
    train->add_option("--mode", tr_mode, "image or video");
    train->add_option("--seed", tr_seed, "toy seed");
    train->add_option("--steps", tr_steps, "Adam steps");
    train->add_option("--out-checkpoint", tr_ckpt, "checkpoint path")->required();
    train->add_option("--out-trace", tr_trace, "loss trace path (default: <checkpoint>.trace)");

    auto* infer = app.add_subcommand("infer", "predict a mask from precomputed backbone features");
    std::string in_l3, in_l4, in_l5, in_tokens, in_params, in_config, in_out;
    std::string in_format = "pgm", in_vocab, in_precision = "f32";
    infer->add_option("--features-l3", in_l3)->required();
    infer->add_option("--features-l4", in_l4)->required();
    infer->add_option("--features-l5", in_l5)->required();
    infer->add_option("--tokens", in_tokens)->required();
    infer->add_option("--params", in_params)->required();
    infer->add_option("--config", in_config)->required();
    infer->add_option("--out", in_out)->required();
    infer->add_option("--out-format", in_format, "pgm or raw-logits");
    infer->add_option("--vocab", in_vocab, "vocabulary file; without it tokens must be integer ids");
    infer->add_option("--precision", in_precision, "f32 (default) or f64");

    auto* eval = app.add_subcommand("eval", "segmentation metrics over paired mask directories");
    std::string ev_pred, ev_gt, ev_report;
    eval->add_option("--pred-dir", ev_pred)->required();
    eval->add_option("--gt-dir", ev_gt)->required();
    eval->add_option("--report", ev_report)->required();

    auto* maketoy = app.add_subcommand("make-toy", "write one toy sample (features/tokens/gt/config) to disk");
    std::string mt_mode = "image", mt_dir = "toy";
    std::uint64_t mt_seed = 7;
    std::int64_t mt_index = 0;
    maketoy->add_option("--mode", mt_mode, "image or video");
    maketoy->add_option("--seed", mt_seed, "toy seed");
    maketoy->add_option("--index", mt_index, "which of the four toy samples");
    maketoy->add_option("--out-dir", mt_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (selftest->parsed()) return cmd_selftest(inject_fault);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_mode, gc_seed, gc_tol);
        if (train->parsed()) return cmd_train_toy(tr_mode, tr_seed, tr_steps, tr_ckpt, tr_trace);
        if (infer->parsed()) {
            const auto cfg = load_config(in_config);
            const std::map<int, std::string> paths{{3, in_l3}, {4, in_l4}, {5, in_l5}};
            if (in_format != "pgm" && in_format != "raw-logits")
                throw ConfigError("out-format must be pgm or raw-logits, got '" + in_format + "'");
            if (in_precision == "f32")
                return run_infer<float>(cfg, paths, in_tokens, in_params, in_out, in_format, in_vocab);
            if (in_precision == "f64")
                return run_infer<double>(cfg, paths, in_tokens, in_params, in_out, in_format, in_vocab);
            throw ConfigError("precision must be f32 or f64, got '" + in_precision + "'");
        }
        if (eval->parsed()) return cmd_eval(ev_pred, ev_gt, ev_report);
        if (maketoy->parsed()) return cmd_make_toy(mt_mode, mt_seed, mt_index, mt_dir);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::out_of_range& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    return kExitUsage;
}
