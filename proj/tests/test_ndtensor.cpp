#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "maneuverlab/checkpoint.hpp"
#include "maneuverlab/error.hpp"
#include "maneuverlab/optim.hpp"
#include "maneuverlab/rng.hpp"
#include "maneuverlab/tensor.hpp"
#include "support.hpp"

using namespace mlab;
using nd::Tensor;

namespace {

std::vector<double> values(const Tensor& t) {
    const auto d = t.data();
    return {d.begin(), d.end()};
}

std::vector<double> grads(const Tensor& t) {
    const auto g = t.grad();
    return {g.begin(), g.end()};
}

}  // namespace

TEST_CASE("matmul forward values") {
    const auto eye = Tensor::from({2, 2}, {1, 0, 0, 1});
    const auto m = Tensor::from({2, 2}, {1, 2, 3, 4});
    CHECK(values(nd::matmul(eye, m)) == std::vector<double>{1, 2, 3, 4});
    const auto row = Tensor::from({1, 2}, {1, 2});
    const auto col = Tensor::from({2, 1}, {3, 4});
    CHECK(nd::matmul(row, col).item() == 11.0);
    CHECK_THROWS_AS((void)nd::matmul(row, row), DimensionError);
}

TEST_CASE("matmul gradient of a summed product") {
    auto a = Tensor::from({1, 2}, {1, 1}, true);
    const auto b = Tensor::from({2, 1}, {2, 5});
    nd::sum(nd::matmul(a, b)).backward();
    CHECK(grads(a) == std::vector<double>{2, 5});
}

TEST_CASE("conv1d_dilated is causal with zero left padding") {
    const auto x = Tensor::from({1, 4}, {1, 2, 3, 4});
    CHECK(values(nd::conv1d_dilated(x, Tensor::from({1, 1, 1}, {1}), 3)) == std::vector<double>{1, 2, 3, 4});
    CHECK(values(nd::conv1d_dilated(x, Tensor::from({1, 1, 2}, {1, 1}), 2)) == std::vector<double>{1, 2, 4, 6});
    CHECK_THROWS_AS((void)nd::conv1d_dilated(x, Tensor::from({1, 1, 2}, {1, 1}), 0), ParameterError);
    CHECK_THROWS_AS((void)nd::conv1d_dilated(x, Tensor::from({1, 2, 2}, {1, 1, 1, 1}), 1), DimensionError);
}

TEST_CASE("conv1d_dilated preserves length") {
    Rng rng(3, "test");
    for (std::size_t T : {1u, 2u, 5u, 19u}) {
        for (std::size_t d : {1u, 2u, 4u}) {
            const auto x = testing::random_tensor({3, T}, rng, false);
            const auto w = testing::random_tensor({2, 3, 3}, rng, false);
            const auto y = nd::conv1d_dilated(x, w, d);
            CHECK(y.dim(0) == 2);
            CHECK(y.dim(1) == T);
        }
    }
}

TEST_CASE("conv1d_dilated weight gradient matches finite differences") {
    Rng rng(11, "test");
    const auto x = testing::random_tensor({2, 8}, rng, false);
    auto w = testing::random_tensor({3, 2, 2}, rng);
    const auto up = testing::random_tensor({3, 8}, rng, false);
    const auto r = testing::grad_check({w}, [&] { return nd::sum(nd::mul(nd::conv1d_dilated(x, w, 2), up)); });
    CHECK(r.rel_error < 1e-6);
}

TEST_CASE("global_max_pool values and tie routing") {
    CHECK(values(nd::global_max_pool(Tensor::from({1, 3}, {1, 5, 3}))) == std::vector<double>{5});
    CHECK(values(nd::global_max_pool(Tensor::from({2, 2}, {-1, -2, 0, 0}))) == std::vector<double>{-1, 0});
    auto tie = Tensor::from({1, 2}, {2, 2}, true);
    const auto pooled = nd::global_max_pool(tie);
    CHECK(pooled.item() == 2.0);
    nd::sum(pooled).backward();
    CHECK(grads(tie) == std::vector<double>{1, 0});
    CHECK_THROWS_AS((void)nd::global_max_pool(Tensor::zeros({2, 0})), DimensionError);
}

TEST_CASE("backward basics") {
    auto x = Tensor::vector({1, 2, 3}, true);
    nd::sum(x).backward();
    CHECK(grads(x) == std::vector<double>{1, 1, 1});

    auto y = Tensor::vector({1, 2}, true);
    nd::sum(nd::square(y)).backward();
    CHECK(grads(y) == std::vector<double>{2, 4});

    SUBCASE("gradients accumulate until zero_grad") {
        nd::sum(nd::square(y)).backward();
        CHECK(grads(y) == std::vector<double>{4, 8});
        y.zero_grad();
        CHECK(!y.has_grad());
    }
    SUBCASE("non-scalar loss is rejected") {
        CHECK_THROWS_AS(nd::square(y).backward(), ContractError);
    }
}

TEST_CASE("shared subexpressions sum their gradients") {
    auto x = Tensor::vector({0.5, -1.5}, true);
    const auto h = nd::tanh(x);
    nd::sum(nd::add(nd::mul(h, h), h)).backward();
    for (std::size_t i = 0; i < 2; ++i) {
        const double t = std::tanh(x[i]);
        CHECK(x.grad()[i] == doctest::Approx((2 * t + 1) * (1 - t * t)).epsilon(1e-12));
    }
}

TEST_CASE("every differentiable op matches finite differences") {
    Rng rng(5, "test");
    auto a = testing::random_tensor({3, 4}, rng);
    auto b = testing::random_tensor({3, 4}, rng);
    auto c = testing::random_tensor({4, 2}, rng);
    auto pos = nd::Tensor::from({3, 4}, [&] {
        std::vector<double> v(12);
        for (auto& e : v) e = 0.5 + rng.uniform();
        return v;
    }(), true);
    auto bias = testing::random_tensor({3}, rng);
    auto vec = testing::random_tensor({6}, rng);
    auto kernel = testing::random_tensor({2, 3, 2}, rng);
    std::vector<double> mask(12);
    for (auto& m : mask) m = rng.uniform() < 0.5 ? 0.0 : 2.0;

    Rng up(17, "upstream");
    struct Case {
        const char* name;
        std::vector<Tensor> params;
        std::function<Tensor()> f;
    };
    const std::vector<Case> cases = {
        {"matmul", {a, c}, [&] { return nd::matmul(a, c); }},
        {"transpose", {a}, [&] { return nd::transpose(a); }},
        {"add", {a, b}, [&] { return nd::add(a, b); }},
        {"sub", {a, b}, [&] { return nd::sub(a, b); }},
        {"mul", {a, b}, [&] { return nd::mul(a, b); }},
        {"scale", {a}, [&] { return nd::scale(a, -1.7); }},
        {"add_scalar", {a}, [&] { return nd::add_scalar(a, 0.3); }},
        {"neg", {a}, [&] { return nd::neg(a); }},
        {"square", {a}, [&] { return nd::square(a); }},
        {"tanh", {a}, [&] { return nd::tanh(a); }},
        {"relu", {a}, [&] { return nd::relu(a); }},
        {"sigmoid", {a}, [&] { return nd::sigmoid(a); }},
        {"softplus", {a}, [&] { return nd::softplus(nd::scale(a, 4.0)); }},
        {"exp", {a}, [&] { return nd::exp(a); }},
        {"log", {pos}, [&] { return nd::log(pos); }},
        {"clamp", {a}, [&] { return nd::clamp(a, -0.4, 0.4); }},
        {"dropout", {a}, [&] { return nd::dropout(a, mask); }},
        {"sum", {a}, [&] { return nd::reshape(nd::sum(a), {1}); }},
        {"mean", {a}, [&] { return nd::reshape(nd::mean(a), {1}); }},
        {"reshape", {a}, [&] { return nd::reshape(a, {2, 6}); }},
        {"concat", {vec, bias}, [&] { return nd::concat({vec, bias}); }},
        {"slice", {vec}, [&] { return nd::slice(vec, 2, 3); }},
        {"slice_rows", {a}, [&] { return nd::slice_rows(a, 1, 2); }},
        {"stack_columns", {vec, bias}, [&] {
             const std::vector<Tensor> cols{nd::slice(vec, 0, 3), bias, nd::slice(vec, 3, 3)};
             return nd::stack_columns(cols);
         }},
        {"add_row_bias", {a, bias}, [&] { return nd::add_row_bias(a, bias); }},
        {"conv1d_dilated", {a, kernel}, [&] { return nd::conv1d_dilated(a, kernel, 2); }},
        {"global_max_pool", {a}, [&] { return nd::global_max_pool(a); }},
    };
    for (const auto& tc : cases) {
        CAPTURE(tc.name);
        const auto probe = testing::random_tensor(tc.f().shape(), up, false);
        const auto r = testing::grad_check(tc.params, [&] { return nd::sum(nd::mul(tc.f(), probe)); });
        CHECK(r.checked > 0);
        CHECK(r.rel_error < 1e-5);
    }
}

TEST_CASE("softplus is finite at large magnitudes") {
    const auto y = nd::softplus(Tensor::vector({-800.0, 0.0, 800.0}));
    CHECK(y[0] == doctest::Approx(0.0));
    CHECK(y[1] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(y[2] == doctest::Approx(800.0));
}

TEST_CASE("elementwise ops reject shape mismatch") {
    CHECK_THROWS_AS((void)nd::add(Tensor::zeros({2}), Tensor::zeros({3})), DimensionError);
    CHECK_THROWS_AS((void)nd::mul(Tensor::zeros({2, 1}), Tensor::zeros({1, 2})), DimensionError);
}

TEST_CASE("adam step oracles") {
    SUBCASE("zero gradient leaves parameters unchanged and counts the step") {
        std::vector<double> p{0.7, -0.2};
        std::vector<double> g{0.0, 0.0};
        std::vector<std::span<double>> ps{p};
        std::vector<std::span<const double>> gs{g};
        AdamState st;
        adam_step(ps, gs, st, {});
        CHECK(p == std::vector<double>{0.7, -0.2});
        CHECK(st.step == 1);
    }
    SUBCASE("first step with unit gradient moves by lr") {
        std::vector<double> p{1.0};
        std::vector<double> g{1.0};
        std::vector<std::span<double>> ps{p};
        std::vector<std::span<const double>> gs{g};
        AdamState st;
        adam_step(ps, gs, st, {});
        CHECK(p[0] == doctest::Approx(1.0 - 0.001 / (1.0 + 1e-8)).epsilon(1e-14));
    }
    SUBCASE("minimizes a parabola") {
        auto x = Tensor::vector({1.0}, true);
        ParameterSet params;
        params.add("x", x);
        Adam opt(params, AdamOptions{.lr = 0.1});
        for (int i = 0; i < 100; ++i) {
            opt.zero_grad();
            nd::sum(nd::square(x)).backward();
            opt.step();
        }
        CHECK(std::abs(x[0]) < 0.1);
    }
    SUBCASE("mismatched buffers are rejected") {
        std::vector<double> p{1.0, 2.0};
        std::vector<double> g{1.0};
        std::vector<std::span<double>> ps{p};
        std::vector<std::span<const double>> gs{g};
        AdamState st;
        CHECK_THROWS_AS(adam_step(ps, gs, st, {}), DimensionError);
    }
}

TEST_CASE("checkpoint round trip is bit exact") {
    Rng rng(9, "test");
    Checkpoint ck;
    ck.meta["kind"] = "test";
    ck.meta["note"] = "two words";
    auto w = testing::random_tensor({2, 3, 2}, rng);
    auto s = Tensor::vector({std::numeric_limits<double>::denorm_min(), -0.0, 1e308, 1.0 / 3.0});
    ck.params.add("w", w);
    ck.params.add("s", s);
    const auto path = std::filesystem::temp_directory_path() / "mlab_test_ckpt.txt";
    save_checkpoint(path, ck);
    const auto back = load_checkpoint(path);
    std::filesystem::remove(path);
    CHECK(back.meta == ck.meta);
    REQUIRE(back.params.size() == 2);
    for (const auto& [name, t] : ck.params.entries()) {
        const auto other = back.params.find(name);
        CHECK(other.shape() == t.shape());
        for (std::size_t i = 0; i < t.numel(); ++i) {
            CHECK(std::signbit(other[i]) == std::signbit(t[i]));
            CHECK(other[i] == t[i]);
        }
    }
}

TEST_CASE("assign_parameters requires matching shapes") {
    ParameterSet target, source;
    target.add("a", Tensor::zeros({2}, true));
    source.add("a", Tensor::vector({1, 2}));
    assign_parameters(target, source);
    CHECK(values(target.find("a")) == std::vector<double>{1, 2});
    ParameterSet bad;
    bad.add("a", Tensor::vector({1, 2, 3}));
    CHECK_THROWS((void)assign_parameters(target, bad));
}

TEST_CASE("rng streams are reproducible and independent") {
    Rng a(42, "init"), b(42, "init"), c(42, "reparam");
    bool differs = false;
    for (int i = 0; i < 16; ++i) {
        const double x = a.normal();
        CHECK(x == b.normal());
        differs = differs || x != c.normal();
    }
    CHECK(differs);
    CHECK(derive_seed(1, "x") != derive_seed(2, "x"));
    CHECK(derive_seed(1, "x") != derive_seed(1, "y"));
}

TEST_CASE("detach drops history") {
    auto x = Tensor::vector({1, 2}, true);
    const auto d = nd::square(x).detach();
    CHECK(!d.requires_grad());
    CHECK(values(d) == std::vector<double>{1, 4});
}
