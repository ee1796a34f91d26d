#include <random>

#include "cmpc/gradcheck.hpp"
#include "doctest.h"
#include "test_util.hpp"

using cmpc::Graph;
using cmpc::ParamStore;
using cmpc::Shape;
using cmpc::Tensor;

namespace {

ParamStore<double> store_with(std::initializer_list<std::pair<const char*, Tensor<double>>> entries) {
    ParamStore<double> ps;
    for (auto& [name, t] : entries) ps.add(name, t);
    return ps;
}

}  // namespace

TEST_CASE("gradcheck closed form: sum of sigmoids") {
    std::mt19937_64 rng(21);
    auto ps = store_with({{"x", testutil::random_tensor({3}, rng)}});
    auto report = cmpc::check_gradients<double>(ps, [](Graph<double>& g) {
        return g.sum_all(g.sigmoid(g.param("x")));
    });
    REQUIRE(report.entries.size() == 1);
    CHECK(report.entries[0].max_rel_err < 1e-6);

    // analytic gradient equals y(1-y) exactly
    Graph<double> g(&ps);
    const int loss = g.sum_all(g.sigmoid(g.param("x")));
    auto grads = g.backward(loss);
    auto y = cmpc::sigmoid(ps.at("x"));
    for (std::int64_t i = 0; i < 3; ++i)
        CHECK(grads.at("x")[i] == doctest::Approx(y[i] * (1 - y[i])).epsilon(1e-15));
}

TEST_CASE("gradcheck: unused parameter has zero analytic and numeric gradient") {
    std::mt19937_64 rng(22);
    auto ps = store_with({{"used", testutil::random_tensor({2, 2}, rng)},
                          {"unused", testutil::random_tensor({2, 2}, rng)}});
    auto report = cmpc::check_gradients<double>(ps, [](Graph<double>& g) {
        g.param("unused");  // read but never touched by the loss
        return g.sum_all(g.sigmoid(g.param("used")));
    });
    CHECK(report.pass);
    Graph<double> g(&ps);
    g.param("unused");
    auto grads = g.backward(g.sum_all(g.sigmoid(g.param("used"))));
    for (std::int64_t i = 0; i < 4; ++i) CHECK(grads.at("unused")[i] == 0.0);
}

TEST_CASE("every op backward matches central differences at 1e-4") {
    std::mt19937_64 rng(23);

    SUBCASE("matmul chain with transpose, add, scale, add_rowvec") {
        auto ps = store_with({{"a", testutil::random_tensor({3, 4}, rng)},
                              {"b", testutil::random_tensor({3, 2}, rng)},
                              {"v", testutil::random_tensor({2}, rng)}});
        auto probe = testutil::random_tensor({4, 2}, rng);
        auto report = cmpc::check_gradients<double>(ps, [&](Graph<double>& g) {
            int y = g.matmul(g.transpose(g.param("a")), g.param("b"));
            y = g.add_rowvec(g.add(y, g.scale(y, 0.5)), g.param("v"));
            return g.sum_all(g.hadamard(y, g.constant(probe)));
        });
        CHECK(report.pass);
    }

    SUBCASE("softmax, sigmoid, tanh") {
        auto ps = store_with({{"x", testutil::random_tensor({3, 5}, rng, -2.0, 2.0)}});
        auto probe = testutil::random_tensor({3, 5}, rng);
        auto report = cmpc::check_gradients<double>(ps, [&](Graph<double>& g) {
            int y = g.softmax_rows(g.param("x"));
            y = g.tanh_op(g.sigmoid(y));
            return g.sum_all(g.hadamard(y, g.constant(probe)));
        });
        CHECK(report.pass);
    }

    SUBCASE("hadamard broadcast both directions") {
        auto ps = store_with({{"map", testutil::random_tensor({2, 3, 4}, rng)},
                              {"gate", testutil::random_tensor({1, 4}, rng)}});
        auto probe = testutil::random_tensor({2, 3, 4}, rng);
        auto report = cmpc::check_gradients<double>(ps, [&](Graph<double>& g) {
            const int prod = g.hadamard(g.param("map"), g.param("gate"));
            return g.sum_all(g.hadamard(prod, g.constant(probe)));
        });
        CHECK(report.pass);
    }

    SUBCASE("concat_last, slice_last, concat_rows, reshape") {
        auto ps = store_with({{"a", testutil::random_tensor({2, 2, 1}, rng)},
                              {"b", testutil::random_tensor({2, 2, 3}, rng)},
                              {"r1", testutil::random_tensor({1, 4}, rng)},
                              {"r2", testutil::random_tensor({2, 4}, rng)}});
        auto probe = testutil::random_tensor({2, 2, 2}, rng);
        auto probe2 = testutil::random_tensor({3, 4}, rng);
        auto report = cmpc::check_gradients<double>(ps, [&](Graph<double>& g) {
            const int cat = g.concat_last({g.param("a"), g.param("b")});
            const int sl = g.slice_last(cat, 1, 3);
            const int rows = g.concat_rows({g.param("r1"), g.param("r2")});
            const int flat = g.reshape(sl, Shape{4, 2});
            return g.add(g.sum_all(g.hadamard(sl, g.constant(probe))),
                         g.add(g.sum_all(g.hadamard(rows, g.constant(probe2))), g.mean_all(flat)));
        });
        CHECK(report.pass);
    }

    SUBCASE("conv1x1 and conv2d_same") {
        auto ps = store_with({{"x", testutil::random_tensor({3, 3, 2}, rng)},
                              {"w1", testutil::random_tensor({2, 3}, rng)},
                              {"b1", testutil::random_tensor({3}, rng)},
                              {"w2", testutil::random_tensor({3, 3, 3, 2}, rng)},
                              {"b2", testutil::random_tensor({2}, rng)}});
        auto probe = testutil::random_tensor({3, 3, 2}, rng);
        auto report = cmpc::check_gradients<double>(ps, [&](Graph<double>& g) {
            const int y1 = g.conv1x1(g.param("x"), g.param("w1"), g.param("b1"));
            const int y2 = g.conv2d_same(y1, g.param("w2"), g.param("b2"));
            return g.sum_all(g.hadamard(y2, g.constant(probe)));
        });
        CHECK(report.pass);
    }

    SUBCASE("bilinear_resize up and down") {
        auto ps = store_with({{"x", testutil::random_tensor({2, 3, 2}, rng)}});
        auto probe_up = testutil::random_tensor({5, 4, 2}, rng);
        auto probe_dn = testutil::random_tensor({1, 2, 2}, rng);
        auto report = cmpc::check_gradients<double>(ps, [&](Graph<double>& g) {
            const int up = g.bilinear_resize(g.param("x"), 5, 4);
            const int dn = g.bilinear_resize(g.param("x"), 1, 2);
            return g.add(g.sum_all(g.hadamard(up, g.constant(probe_up))),
                         g.sum_all(g.hadamard(dn, g.constant(probe_dn))));
        });
        CHECK(report.pass);
    }

    SUBCASE("embed_rows with a repeated id, select_frame, broadcast_spatial") {
        auto ps = store_with({{"table", testutil::random_tensor({5, 3}, rng)},
                              {"clip", testutil::random_tensor({3, 2, 2, 2}, rng)},
                              {"vec", testutil::random_tensor({1, 4}, rng)}});
        auto probe_e = testutil::random_tensor({4, 3}, rng);
        auto probe_f = testutil::random_tensor({2, 2, 2}, rng);
        auto probe_v = testutil::random_tensor({3, 2, 4}, rng);
        auto report = cmpc::check_gradients<double>(ps, [&](Graph<double>& g) {
            const int emb = g.embed_rows(g.param("table"), {2, 0, 2, 4});
            const int frame = g.select_frame(g.param("clip"), 1);
            const int rep = g.broadcast_spatial(g.param("vec"), 3, 2);
            return g.add(g.sum_all(g.hadamard(emb, g.constant(probe_e))),
                         g.add(g.sum_all(g.hadamard(frame, g.constant(probe_f))),
                               g.sum_all(g.hadamard(rep, g.constant(probe_v)))));
        });
        CHECK(report.pass);
    }

    SUBCASE("bce_with_logits_mean") {
        auto ps = store_with({{"z", testutil::random_tensor({3, 3}, rng, -2.0, 2.0)}});
        Tensor<double> gt(Shape{3, 3});
        for (std::int64_t i = 0; i < 9; ++i) gt[i] = (i % 2 == 0) ? 1.0 : 0.0;
        auto report = cmpc::check_gradients<double>(ps, [&](Graph<double>& g) {
            return g.bce_with_logits_mean(g.param("z"), g.constant(gt));
        });
        CHECK(report.pass);
    }
}

TEST_CASE("parameter used twice accumulates both gradient paths") {
    std::mt19937_64 rng(24);
    auto ps = store_with({{"w", testutil::random_tensor({2, 2}, rng)}});
    Graph<double> g(&ps);
    const int w1 = g.param("w");
    const int w2 = g.param("w");
    auto grads = g.backward(g.sum_all(g.add(w1, g.scale(w2, 2.0))));
    for (std::int64_t i = 0; i < 4; ++i) CHECK(grads.at("w")[i] == 3.0);
}

TEST_CASE("OpRecord replay reproduces recorded outputs bit-exactly") {
    std::mt19937_64 rng(25);
    auto ps = store_with({{"x", testutil::random_tensor({2, 3, 4}, rng)},
                          {"w", testutil::random_tensor({4, 4}, rng)},
                          {"b", testutil::random_tensor({4}, rng)}});
    Graph<double> g(&ps);
    const int y = g.conv1x1(g.param("x"), g.param("w"), g.param("b"));
    const int s = g.softmax_rows(g.reshape(y, Shape{6, 4}));
    g.sum_all(g.sigmoid(s));
    CHECK(g.num_records() >= 5);
    CHECK(g.replay_all());
}

TEST_CASE("backward rejects non-scalar loss") {
    std::mt19937_64 rng(26);
    auto ps = store_with({{"x", testutil::random_tensor({2, 2}, rng)}});
    Graph<double> g(&ps);
    const int x = g.param("x");
    CHECK_THROWS_AS(g.backward(x), std::invalid_argument);
}
