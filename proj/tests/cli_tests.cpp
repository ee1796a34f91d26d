// Drives the built cmpc binary end to end: exit-code contract, golden files,
// and the machine-parseable stdout surface.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "cmpc/io.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code;
    std::string output;  // stdout + stderr

    bool contains(const std::string& needle) const { return output.find(needle) != std::string::npos; }
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(CMPC_CLI_PATH) + " " + args + " 2>&1";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("cmpc_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::string golden(const std::string& name) { return std::string(CMPC_GOLDEN_DIR) + "/" + name; }

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("selftest passes and covers every module") {
    auto r = run_cli("selftest");
    CHECK(r.exit_code == 0);
    CHECK(r.contains("selftest:pass"));
    std::set<std::string> modules;
    std::istringstream is(r.output);
    std::string line;
    while (std::getline(is, line))
        if (line.rfind("check:", 0) == 0) modules.insert(line.substr(6, line.find('.') - 6));
    CHECK(modules.size() >= 9);
}

TEST_CASE("selftest fault injection produces a named failure with exit 1") {
    auto r = run_cli("selftest --inject-fault relation_reasoning.row_stochastic");
    CHECK(r.exit_code == 1);
    CHECK(r.contains("check:relation_reasoning.row_stochastic status:fail"));
    CHECK(r.contains("row 0 sums to 0.9"));
    CHECK(r.contains("selftest:fail"));

    CHECK(run_cli("selftest --inject-fault no_such_check").exit_code == 2);
}

TEST_CASE("gradcheck passes in both modes, fails at an unreachable tolerance") {
    auto image = run_cli("gradcheck --mode image");
    CHECK(image.exit_code == 0);
    CHECK(image.contains("gradcheck:pass"));
    CHECK(image.contains("param:embed.table"));

    auto video = run_cli("gradcheck --mode video --seed 7");
    CHECK(video.exit_code == 0);
    CHECK(video.contains("gradcheck:pass"));
    CHECK(video.contains("param:aar.3.W_8"));

    auto strict = run_cli("gradcheck --mode image --tol 1e-12");
    CHECK(strict.exit_code == 1);
    CHECK(strict.contains("gradcheck:fail"));

    CHECK(run_cli("gradcheck --mode audio").exit_code == 2);
}

TEST_CASE("train-toy: steps=0 writes a one-line trace, init checkpoint, exit 1") {
    TempDir dir;
    auto r = run_cli("train-toy --mode image --seed 7 --steps 0 --out-checkpoint " + dir.file("w.ckpt"));
    CHECK(r.exit_code == 1);
    CHECK(r.contains("overfit:fail"));
    CHECK(count_lines(slurp(dir.file("w.ckpt.trace"))) == 1);
    // untrained parameters are exactly the seeded init
    CHECK(slurp(dir.file("w.ckpt")) == slurp(golden("init_image_c16_seed7.ckpt")));
}

TEST_CASE("train-toy determinism, then inference against committed goldens") {
    TempDir dir;
    const std::string fixture = dir.file("fixture");
    REQUIRE(run_cli("make-toy --mode image --seed 7 --index 0 --out-dir " + fixture).exit_code == 0);
    for (const char* name : {"l3.cmpct", "l4.cmpct", "l5.cmpct", "gt.pgm", "config.cfg", "tokens.txt", "vocab.txt"})
        CHECK(fs::exists(fs::path(fixture) / name));

    auto t1 = run_cli("train-toy --mode image --seed 7 --steps 120 --out-checkpoint " + dir.file("a.ckpt"));
    CHECK(t1.exit_code == 1);  // 120 steps cannot reach the overfit target
    auto t2 = run_cli("train-toy --mode image --seed 7 --steps 120 --out-checkpoint " + dir.file("b.ckpt") +
                      " --out-trace " + dir.file("b.trace"));
    CHECK(slurp(dir.file("a.ckpt.trace")) == slurp(dir.file("b.trace")));
    CHECK(slurp(dir.file("a.ckpt")) == slurp(dir.file("b.ckpt")));
    CHECK(count_lines(slurp(dir.file("a.ckpt.trace"))) == 121);

    const std::string feats = " --features-l3 " + fixture + "/l3.cmpct --features-l4 " + fixture +
                              "/l4.cmpct --features-l5 " + fixture + "/l5.cmpct --tokens " + fixture +
                              "/tokens.txt --vocab " + fixture + "/vocab.txt --params " + dir.file("a.ckpt") +
                              " --config " + fixture + "/config.cfg";

    auto mask = run_cli("infer" + feats + " --precision f64 --out " + dir.file("mask.pgm"));
    CHECK(mask.exit_code == 0);
    CHECK(mask.contains("foreground_pixels:"));
    CHECK(slurp(dir.file("mask.pgm")) == slurp(golden("infer_mask_image_seed7.pgm")));

    auto raw = run_cli("infer" + feats + " --precision f64 --out-format raw-logits --out " + dir.file("z.cmpct"));
    CHECK(raw.exit_code == 0);
    auto logits = cmpc::read_tensor<double>(dir.file("z.cmpct"));
    CHECK(logits.shape == cmpc::Shape{8, 8});
    std::int64_t fg = 0;
    for (std::int64_t i = 0; i < logits.size(); ++i) fg += logits[i] > 0.0;
    const auto pgm = cmpc::read_mask_pgm<double>(dir.file("mask.pgm"));
    std::int64_t fg_pgm = 0;
    for (std::int64_t i = 0; i < pgm.size(); ++i) fg_pgm += pgm[i] == 1.0;
    CHECK(fg == fg_pgm);

    // f32 inference runs and round-trips through the raw-logits format
    auto f32 = run_cli("infer" + feats + " --out-format raw-logits --out " + dir.file("z32.cmpct"));
    CHECK(f32.exit_code == 0);
    cmpc::Dtype dt;
    auto logits32 = cmpc::read_tensor<float>(dir.file("z32.cmpct"), &dt);
    CHECK(dt == cmpc::Dtype::F32);
    CHECK(logits32.shape == cmpc::Shape{8, 8});
}

TEST_CASE("infer usage errors: missing flag and shape mismatch") {
    TempDir dir;
    CHECK(run_cli("infer --features-l3 x --features-l4 y --features-l5 z --tokens t --config c --out o")
              .exit_code == 2);  // --params missing

    const std::string fixture = dir.file("fx");
    REQUIRE(run_cli("make-toy --mode image --seed 7 --out-dir " + fixture).exit_code == 0);
    REQUIRE(run_cli("train-toy --mode image --seed 7 --steps 0 --out-checkpoint " + dir.file("w.ckpt"))
                .exit_code == 1);
    // five channels instead of the configured sixteen
    cmpc::write_tensor(dir.file("bad.cmpct"), cmpc::Tensor<double>(cmpc::Shape{8, 8, 5}), cmpc::Dtype::F64);
    auto r = run_cli("infer --features-l3 " + dir.file("bad.cmpct") + " --features-l4 " + fixture +
                     "/l4.cmpct --features-l5 " + fixture + "/l5.cmpct --tokens " + fixture +
                     "/tokens.txt --vocab " + fixture + "/vocab.txt --params " + dir.file("w.ckpt") +
                     " --config " + fixture + "/config.cfg --out " + dir.file("m.pgm"));
    CHECK(r.exit_code == 2);
    CHECK(r.contains("channels"));

    // unreadable feature file is an I/O error
    auto io = run_cli("infer --features-l3 " + dir.file("absent.cmpct") + " --features-l4 " + fixture +
                      "/l4.cmpct --features-l5 " + fixture + "/l5.cmpct --tokens " + fixture +
                      "/tokens.txt --params " + dir.file("w.ckpt") + " --config " + fixture +
                      "/config.cfg --out " + dir.file("m.pgm"));
    CHECK(io.exit_code == 3);
}

TEST_CASE("eval: identical dirs, golden report, unpaired and empty rejections") {
    TempDir dir;
    const auto pred = dir.path / "pred";
    const auto gt = dir.path / "gt";
    fs::create_directories(pred);
    fs::create_directories(gt);

    // sample a: 2/10 overlap; sample b: identical 3-pixel masks
    cmpc::Tensor<double> pa(cmpc::Shape{4, 4}), ga(cmpc::Shape{4, 4});
    for (int i = 0; i < 4; ++i) pa[i] = 1;
    for (int i = 0; i < 8; ++i) ga[2 + i] = 1;
    cmpc::Tensor<double> pb(cmpc::Shape{2, 3}, {1, 1, 1, 0, 0, 0});
    cmpc::write_mask_pgm((pred / "a.pgm").string(), pa);
    cmpc::write_mask_pgm((gt / "a.pgm").string(), ga);
    cmpc::write_mask_pgm((pred / "b.pgm").string(), pb);
    cmpc::write_mask_pgm((gt / "b.pgm").string(), pb);

    auto r = run_cli("eval --pred-dir " + pred.string() + " --gt-dir " + gt.string() + " --report " +
                     dir.file("report.txt"));
    CHECK(r.exit_code == 0);
    CHECK(r.contains("overall_iou:0.3846"));  // (2+3)/(10+3)
    CHECK(r.contains("mean_iou:0.6000"));
    CHECK(r.contains("prec@0.5:50.0000"));
    CHECK(r.contains("map_proxy:50.0000"));
    CHECK(slurp(dir.file("report.txt")) == slurp(golden("eval_report.txt")));

    // identical directories: everything perfect
    auto perfect = run_cli("eval --pred-dir " + gt.string() + " --gt-dir " + gt.string() + " --report " +
                           dir.file("p.txt"));
    CHECK(perfect.exit_code == 0);
    CHECK(perfect.contains("overall_iou:1.0000"));
    CHECK(perfect.contains("prec@0.9:100.0000"));

    // unpaired prediction
    cmpc::write_mask_pgm((pred / "c.pgm").string(), pb);
    auto unpaired = run_cli("eval --pred-dir " + pred.string() + " --gt-dir " + gt.string() + " --report " +
                            dir.file("u.txt"));
    CHECK(unpaired.exit_code == 2);
    CHECK(unpaired.contains("c.pgm"));

    const auto empty = dir.path / "empty";
    fs::create_directories(empty);
    CHECK(run_cli("eval --pred-dir " + empty.string() + " --gt-dir " + empty.string() + " --report " +
                  dir.file("e.txt"))
              .exit_code == 2);
}

TEST_CASE("video train/gradcheck surfaces work end to end") {
    TempDir dir;
    const std::string fixture = dir.file("vfx");
    REQUIRE(run_cli("make-toy --mode video --seed 7 --out-dir " + fixture).exit_code == 0);
    auto clip = cmpc::read_tensor<double>(fixture + "/l3.cmpct");
    CHECK(clip.shape == cmpc::Shape{3, 8, 8, 16});

    REQUIRE(run_cli("train-toy --mode video --seed 7 --steps 0 --out-checkpoint " + dir.file("v.ckpt"))
                .exit_code == 1);
    auto r = run_cli("infer --features-l3 " + fixture + "/l3.cmpct --features-l4 " + fixture +
                     "/l4.cmpct --features-l5 " + fixture + "/l5.cmpct --tokens " + fixture +
                     "/tokens.txt --vocab " + fixture + "/vocab.txt --params " + dir.file("v.ckpt") +
                     " --config " + fixture + "/config.cfg --precision f64 --out " + dir.file("m.pgm"));
    CHECK(r.exit_code == 0);
    CHECK(r.contains("foreground_pixels:"));
}
