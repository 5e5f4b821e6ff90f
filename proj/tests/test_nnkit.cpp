#include "bread/nnkit/adam.hpp"
#include "bread/nnkit/checkpoint.hpp"
#include "bread/nnkit/layers.hpp"
#include "bread/nnkit/network.hpp"
#include "bread/nnkit/ssim.hpp"

#include "support/gradcheck.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace bread;
using namespace bread::nn;

namespace {

template <class T>
Tensor<T> random_tensor(int c, int h, int w, std::uint64_t seed, double lo = -1.0, double hi = 1.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor<T> t(c, h, w);
    for (T& v : t.data) {
        v = static_cast<T>(u(rng));
    }
    return t;
}

NetworkSpec small_spec(int in, int out, Activation act)
{
    NetworkSpec s;
    s.in_channels = in;
    s.out_channels = out;
    s.base_channels = 4;
    s.max_channels = 8;
    s.final_activation = act;
    return s;
}

// 0.5 * sum((out - target)^2)
OutputLossFn<double> half_squared_error(const std::vector<Tensor<double>>& targets)
{
    return [&targets](const Tensor<double>& out, std::size_t s) {
        OutputLoss<double> r;
        r.grad_output = Tensor<double>(out.channels, out.height, out.width);
        double v = 0;
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            const double d = out.data[i] - targets[s].data[i];
            v += 0.5 * d * d;
            r.grad_output.data[i] = d;
        }
        r.terms.push_back({"sse", v});
        return r;
    };
}

// Finite-difference check of an input gradient for a scalar function of x.
template <class F>
double worst_input_gradient_error(Tensor<double> x, const Tensor<double>& analytic, F&& f, double h)
{
    double worst = 0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double saved = x.data[i];
        x.data[i] = saved + h;
        const double up = f(x);
        x.data[i] = saved - h;
        const double down = f(x);
        x.data[i] = saved;
        worst = std::max(worst, testing::relative_error(analytic.data[i], (up - down) / (2 * h)));
    }
    return worst;
}

double dot(const Tensor<double>& a, const Tensor<double>& b)
{
    double s = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        s += a.data[i] * b.data[i];
    }
    return s;
}

}  // namespace

TEST_CASE("spec validation")
{
    NetworkSpec s;
    CHECK_NOTHROW(s.validate());
    s.base_channels = 0;
    CHECK_THROWS_AS(s.validate(), SpecError);
    s = NetworkSpec{};
    s.out_channels = -1;
    CHECK_THROWS_AS(build_network(s, 1), SpecError);
    s = NetworkSpec{};
    s.depth = 4;
    CHECK_THROWS_AS(s.validate(), SpecError);
    s = NetworkSpec{};
    CHECK(s.level_channels(0) == 32);
    CHECK(s.level_channels(1) == 64);
    CHECK(s.level_channels(2) == 128);
    CHECK(s.level_channels(3) == 128);
}

TEST_CASE("default single-channel topology has a fixed parameter count")
{
    NetworkSpec s;
    // 15 convolutions: 4,8,16 encoder pairs at 32/64/128, 128 bottleneck,
    // concatenating decoder, 1-channel head.
    CHECK(parameter_count(s) == 1209025);
    const auto net = build_network(s, 42);
    CHECK(net.params().count() == 1209025);
    CHECK(net.params().tensors.size() == 30);
    CHECK(net.params().tensors.front().name == "enc0.conv1.weight");
    CHECK(net.params().tensors.back().name == "head.bias");
}

TEST_CASE("same seed gives bitwise identical parameters")
{
    const auto a = build_network(small_spec(2, 1, Activation::none), 9);
    const auto b = build_network(small_spec(2, 1, Activation::none), 9);
    const auto c = build_network(small_spec(2, 1, Activation::none), 10);
    CHECK(a.params() == b.params());
    CHECK_FALSE(a.params() == c.params());
    for (const auto& t : a.params().tensors) {
        if (t.shape.size() == 1) {
            for (float v : t.values) {
                CHECK(v == 0.0f);
            }
        }
    }
}

TEST_CASE("forward preserves spatial shape and respects the head activation")
{
    NetworkSpec ian;
    const auto net = build_network(ian, 1);
    const auto out = net.forward(random_tensor<float>(1, 32, 32, 3, 0, 1));
    CHECK(out.channels == 1);
    CHECK(out.height == 32);
    CHECK(out.width == 32);
    for (float v : out.data) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }

    NetworkSpec can;
    can.in_channels = 4;
    can.out_channels = 2;
    can.base_channels = 8;
    can.max_channels = 32;
    const auto can_out = build_network(can, 2).forward(random_tensor<float>(4, 64, 48, 4, 0, 1));
    CHECK(can_out.channels == 2);
    CHECK(can_out.height == 64);
    CHECK(can_out.width == 48);

    const auto ansn = build_network(small_spec(2, 1, Activation::none), 3);
    const auto res = ansn.forward(random_tensor<float>(2, 16, 16, 5, 0, 1));
    bool outside_unit = false;
    for (float v : res.data) {
        outside_unit = outside_unit || v < 0.0f || v > 1.0f;
    }
    CHECK(outside_unit);
}

TEST_CASE("forward rejects bad sizes and channel counts")
{
    const auto net = build_network(small_spec(1, 1, Activation::sigmoid), 1);
    CHECK_THROWS_AS(net.forward(Tensor<float>(1, 33, 33)), SizeError);
    CHECK_THROWS_AS(net.forward(Tensor<float>(1, 16, 12)), SizeError);
    CHECK_THROWS_AS(net.forward(Tensor<float>(2, 16, 16)), ShapeError);
}

TEST_CASE("batch order does not change per-sample outputs")
{
    const auto net = build_network(small_spec(1, 1, Activation::sigmoid), 4);
    std::vector<Tensor<float>> batch = {random_tensor<float>(1, 16, 16, 1),
                                        random_tensor<float>(1, 16, 16, 2),
                                        random_tensor<float>(1, 16, 16, 3)};
    std::vector<Tensor<float>> outs;
    for (const auto& t : batch) {
        outs.push_back(net.forward(t));
    }
    for (int i = 2; i >= 0; --i) {
        CHECK(net.forward(batch[static_cast<std::size_t>(i)]) == outs[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("primitive input gradients match finite differences")
{
    const double h = 1e-4;
    SUBCASE("conv3x3")
    {
        auto x = random_tensor<double>(3, 5, 6, 1);
        auto w = random_tensor<double>(2 * 3 * 9, 1, 1, 2);
        auto b = random_tensor<double>(2, 1, 1, 3);
        auto probe = random_tensor<double>(2, 5, 6, 4);
        auto f = [&](const Tensor<double>& in) {
            return dot(conv3x3_forward(in, w.data.data(), b.data.data(), 2), probe);
        };
        std::vector<double> dw(w.data.size()), db(2);
        Tensor<double> dx;
        conv3x3_backward(x, w.data.data(), 2, probe, dw.data(), db.data(), &dx);
        CHECK(worst_input_gradient_error(x, dx, f, h) < 1e-6);
        // Weight gradient through the same scalar function.
        double worst = 0;
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            const double saved = w.data[i];
            w.data[i] = saved + h;
            const double up = f(x);
            w.data[i] = saved - h;
            const double down = f(x);
            w.data[i] = saved;
            worst = std::max(worst, testing::relative_error(dw[i], (up - down) / (2 * h)));
        }
        CHECK(worst < 1e-6);
        double bias_sum = 0;
        for (std::size_t i = 0; i < probe.plane_size(); ++i) {
            bias_sum += probe.channel(1)[i];
        }
        CHECK(db[1] == doctest::Approx(bias_sum));
    }
    SUBCASE("sigmoid")
    {
        auto x = random_tensor<double>(2, 3, 4, 5);
        auto probe = random_tensor<double>(2, 3, 4, 6);
        auto f = [&](const Tensor<double>& in) {
            auto y = in;
            sigmoid_inplace(y);
            return dot(y, probe);
        };
        auto y = x;
        sigmoid_inplace(y);
        auto g = probe;
        sigmoid_backward(y, g);
        CHECK(worst_input_gradient_error(x, g, f, h) < 1e-6);
    }
    SUBCASE("relu away from the kink")
    {
        auto x = random_tensor<double>(2, 3, 4, 7);
        for (double& v : x.data) {
            v = v >= 0 ? v + 0.1 : v - 0.1;
        }
        auto probe = random_tensor<double>(2, 3, 4, 8);
        auto f = [&](const Tensor<double>& in) {
            auto y = in;
            relu_inplace(y);
            return dot(y, probe);
        };
        auto y = x;
        relu_inplace(y);
        auto g = probe;
        relu_backward(y, g);
        CHECK(worst_input_gradient_error(x, g, f, h) < 1e-8);
    }
    SUBCASE("maxpool and upsample")
    {
        auto x = random_tensor<double>(2, 4, 6, 9);
        auto probe = random_tensor<double>(2, 2, 3, 10);
        auto f = [&](const Tensor<double>& in) { return dot(maxpool2_forward(in), probe); };
        CHECK(worst_input_gradient_error(x, maxpool2_backward(x, probe), f, h) < 1e-8);

        auto up_probe = random_tensor<double>(2, 8, 12, 11);
        auto fu = [&](const Tensor<double>& in) { return dot(upsample2_forward(in), up_probe); };
        CHECK(worst_input_gradient_error(x, upsample2_backward(up_probe), fu, h) < 1e-8);
    }
    SUBCASE("concat split is the adjoint of concat")
    {
        auto a = random_tensor<double>(2, 3, 3, 12);
        auto b = random_tensor<double>(3, 3, 3, 13);
        auto j = concat_channels(a, b);
        CHECK(j.channels == 5);
        Tensor<double> ga, gb;
        split_channels(j, 2, ga, gb);
        CHECK(ga == a);
        CHECK(gb == b);
    }
}

TEST_CASE("network parameter gradients match central differences")
{
    for (auto act : {Activation::sigmoid, Activation::none}) {
        auto net = network_cast<double>(build_network(small_spec(2, 1, act), 17));
        std::vector<Tensor<double>> batch = {random_tensor<double>(2, 8, 8, 21, 0, 1),
                                             random_tensor<double>(2, 8, 8, 22, 0, 1)};
        std::vector<Tensor<double>> targets = {random_tensor<double>(1, 8, 8, 23, 0, 1),
                                               random_tensor<double>(1, 8, 8, 24, 0, 1)};
        const auto loss = half_squared_error(targets);
        const auto g = gradients<double>(net, batch, loss);
        auto value = [&](const Network<double>& n) {
            double v = 0;
            for (std::size_t s = 0; s < batch.size(); ++s) {
                v += loss(n.forward(batch[s]), s).total();
            }
            return v / static_cast<double>(batch.size());
        };
        CHECK(g.loss == doctest::Approx(value(net)).epsilon(1e-12));
        const auto r =
            testing::check_parameter_gradients(net, g.grads, value, batch, 60, 1e-3, 1e-2, 5);
        CHECK(r.coordinates == 60);
        CHECK(r.failures == 0);
        MESSAGE("worst relative error " << r.worst_relative_error << ", kink crossings "
                                          << r.kink_crossings);
    }
}

TEST_CASE("network input gradient matches central differences")
{
    auto net = network_cast<double>(build_network(small_spec(1, 1, Activation::sigmoid), 3));
    auto x = random_tensor<double>(1, 8, 8, 31, 0, 1);
    auto probe = random_tensor<double>(1, 8, 8, 32);
    ForwardTrace<double> trace;
    net.forward(x, trace);
    auto grads = net.params().zeros_like();
    Tensor<double> gx;
    net.backward(trace, probe, grads, &gx);
    auto f = [&](const Tensor<double>& in) { return dot(net.forward(in), probe); };
    CHECK(worst_input_gradient_error(x, gx, f, 1e-4) < 1e-4);
}

TEST_CASE("gradients of a parameter-sum loss are ones")
{
    auto net = build_network(small_spec(1, 1, Activation::sigmoid), 1);
    ParamLossFn<float> sum = [](const NetworkParams<float>& p, NetworkParams<float>& g) {
        double s = 0;
        for (std::size_t t = 0; t < p.tensors.size(); ++t) {
            for (std::size_t k = 0; k < p.tensors[t].values.size(); ++k) {
                s += p.tensors[t].values[k];
                g.tensors[t].values[k] += 1.0f;
            }
        }
        return s;
    };
    const auto r = gradients<float>(net, {}, {}, sum);
    for (const auto& t : r.grads.tensors) {
        for (float v : t.values) {
            REQUIRE(v == 1.0f);
        }
    }
}

TEST_CASE("dead network on zero input yields zero gradients")
{
    const auto net = build_network(small_spec(1, 1, Activation::none), 8);
    std::vector<Tensor<float>> batch = {Tensor<float>(1, 8, 8)};
    OutputLossFn<float> mse_to_zero = [](const Tensor<float>& out, std::size_t) {
        OutputLoss<float> r;
        r.grad_output = Tensor<float>(out.channels, out.height, out.width);
        double v = 0;
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            v += double(out.data[i]) * out.data[i];
            r.grad_output.data[i] = 2.0f * out.data[i] / static_cast<float>(out.data.size());
        }
        r.terms.push_back({"mse", v / static_cast<double>(out.data.size())});
        return r;
    };
    const auto r = gradients<float>(net, batch, mse_to_zero);
    CHECK(r.loss == 0.0);
    for (const auto& t : r.grads.tensors) {
        for (float v : t.values) {
            REQUIRE(v == 0.0f);
        }
    }
}

TEST_CASE("non-finite loss names the offending term")
{
    const auto net = build_network(small_spec(1, 1, Activation::sigmoid), 8);
    std::vector<Tensor<float>> batch = {Tensor<float>(1, 8, 8)};
    OutputLossFn<float> bad = [](const Tensor<float>& out, std::size_t) {
        OutputLoss<float> r;
        r.grad_output = Tensor<float>(out.channels, out.height, out.width);
        r.terms.push_back({"fidelity", 1.0});
        r.terms.push_back({"smoothness", std::nan("")});
        return r;
    };
    try {
        gradients<float>(net, batch, bad);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(e.term() == "smoothness");
    }
}

TEST_CASE("adam")
{
    NetworkParams<double> p;
    p.tensors.push_back({"w", {1}, {0.0}});
    auto g = p.zeros_like();

    SUBCASE("zero gradient leaves parameters unchanged")
    {
        auto st = OptimizerState<double>::for_params(p);
        auto q = p;
        for (int i = 0; i < 5; ++i) {
            adam_step(q, g, st);
        }
        CHECK(q == p);
    }
    SUBCASE("first step moves by learning rate against the gradient sign")
    {
        // m1 = 0.1, m2 = 0.001; bias-corrected mhat = 1, vhat = 1;
        // w1 = 0 - 1e-3 * 1 / (1 + 1e-8).
        g.tensors[0].values[0] = 1.0;
        auto st = OptimizerState<double>::for_params(p);
        auto q = p;
        adam_step(q, g, st);
        CHECK(q.tensors[0].values[0] == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
        CHECK(st.step == 1);
    }
    SUBCASE("deterministic")
    {
        g.tensors[0].values[0] = 0.3;
        auto s1 = OptimizerState<double>::for_params(p);
        auto s2 = OptimizerState<double>::for_params(p);
        auto q1 = p;
        auto q2 = p;
        adam_step(q1, g, s1);
        adam_step(q2, g, s2);
        CHECK(q1 == q2);
        CHECK(s1 == s2);
    }
    SUBCASE("shape mismatch")
    {
        auto st = OptimizerState<double>::for_params(p);
        NetworkParams<double> wrong;
        wrong.tensors.push_back({"w", {2}, {0.0, 0.0}});
        CHECK_THROWS_AS(adam_step(p, wrong, st), ShapeError);
    }
}

TEST_CASE("checkpoint serialization")
{
    Checkpoint ckpt;
    ckpt.stage = Stage::ansn;
    ckpt.spec = small_spec(2, 1, Activation::none);
    ckpt.params = build_network(ckpt.spec, 77).params();
    ckpt.step = 1234;

    const auto dir = std::filesystem::temp_directory_path() / "bread_ckpt_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "a.ckpt";
    save_checkpoint(ckpt, path);

    SUBCASE("round trip is bitwise identical")
    {
        const auto back = load_checkpoint(path);
        CHECK(back == ckpt);
        CHECK(serialize_checkpoint(back) == serialize_checkpoint(ckpt));
        const auto bytes = serialize_checkpoint(ckpt);
        CHECK(std::string(bytes.begin(), bytes.begin() + 9) == "BREADCKPT");
        CHECK(bytes[9] == 1);
    }
    SUBCASE("truncation is a format error")
    {
        auto bytes = serialize_checkpoint(ckpt);
        for (std::size_t cut : {std::size_t{5}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
            std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
            CHECK_THROWS_AS(deserialize_checkpoint(part), FormatError);
        }
    }
    SUBCASE("wrong magic names the expectation")
    {
        auto bytes = serialize_checkpoint(ckpt);
        bytes[0] = 'X';
        try {
            deserialize_checkpoint(bytes);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("BREADCKPT") != std::string::npos);
        }
    }
    SUBCASE("wrong version")
    {
        auto bytes = serialize_checkpoint(ckpt);
        bytes[9] = 7;
        CHECK_THROWS_AS(deserialize_checkpoint(bytes), FormatError);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("ssim core")
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    Plane<double> x(14, 13), y(14, 13);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = u(rng);
        y[i] = 0.6 * x[i] + 0.4 * u(rng);
    }
    CHECK(ssim_mean(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    Plane<double> g;
    ssim_mean(x, y, &g);
    double worst = 0;
    const double h = 1e-5;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double up = ssim_mean(x, y);
        x[i] = saved - h;
        const double down = ssim_mean(x, y);
        x[i] = saved;
        worst = std::max(worst, testing::relative_error(g[i], (up - down) / (2 * h), 1e-4));
    }
    CHECK(worst < 1e-5);
    CHECK_THROWS_AS(ssim_mean(Plane<double>(10, 20), Plane<double>(10, 20)), SizeError);
}
