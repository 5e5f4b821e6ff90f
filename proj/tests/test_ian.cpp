#include "bread/ian.hpp"

#include "support/loss_oracles.hpp"
#include "support/random.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bread;
using bread::testing::oracle_ian_loss;
using bread::testing::random_plane;

namespace {

nn::Network<float> small_ian(std::uint64_t seed)
{
    return nn::build_network(ian::network_spec(4, 8), seed);
}

}  // namespace

TEST_CASE("adjust_luminance analytic values")
{
    ImagePlane y(1, 3), l(1, 3);
    y[0] = 0.2f, l[0] = 0.5f;
    y[1] = 0.1f, l[1] = 0.1f;
    y[2] = 0.7f, l[2] = 1.0f;
    const auto out = ian::adjust_luminance(y, l);
    CHECK(out[0] == doctest::Approx(0.2 / 0.5001).epsilon(1e-6));
    CHECK(out[1] == doctest::Approx(0.999).epsilon(1e-4));
    CHECK(std::abs(out[2] - 0.7f) / 0.7f <= 1e-4f);
    CHECK_THROWS_AS(ian::adjust_luminance(ImagePlane(2, 2), ImagePlane(2, 3)), ShapeError);
}

TEST_CASE("adjust_luminance is unclamped, monotone, and scale consistent")
{
    const auto y = random_plane<float>(6, 7, 1);
    const auto l = random_plane<float>(6, 7, 2, 0.05, 1.0);
    const auto base = ian::adjust_luminance(y, l);
    ImagePlane brighter = y;
    for (float& v : brighter.values()) {
        v += 0.01f;
    }
    const auto up = ian::adjust_luminance(brighter, l);
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(up[i] >= base[i]);
    }
    // Powers of two keep the float products exact.
    for (float a : {2.0f, 0.25f}) {
        ImagePlane ay = y;
        for (float& v : ay.values()) {
            v *= a;
        }
        const auto scaled = ian::adjust_luminance(ay, l);
        for (std::size_t i = 0; i < y.size(); ++i) {
            CHECK(scaled[i] == a * base[i]);
        }
    }
    ImagePlane dim(1, 1, 0.5f);
    CHECK(ian::adjust_luminance(ImagePlane(1, 1, 0.9f), dim)[0] > 1.0f);
}

TEST_CASE("ian loss fixed points")
{
    SUBCASE("constant scene with unit illumination")
    {
        const Plane<double> c(8, 8, 0.4);
        const Plane<double> l(8, 8, 1.0 - 1e-4);
        const auto v = ian::ian_loss(c, c, l);
        CHECK(v.total() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(v.smoothness == 0.0);
        CHECK(v.consistency == 0.0);
    }
    SUBCASE("exact relative illumination zeroes the fidelity term")
    {
        const auto yh = random_plane<double>(8, 8, 3);
        Plane<double> yl = yh;
        for (double& v : yl.values()) {
            v *= 0.5;
        }
        const auto v = ian::ian_loss(yl, yh, Plane<double>(8, 8, 0.5));
        CHECK(v.fidelity < 1e-7);
    }
}

TEST_CASE("ian loss matches the scalar oracle on random 8x8 instances")
{
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto yl = random_plane<double>(8, 8, 10 + s, 0.0, 0.3);
        const auto yh = random_plane<double>(8, 8, 20 + s);
        const auto l = random_plane<double>(8, 8, 30 + s, 0.01, 1.0);
        const double expect = oracle_ian_loss(yl, yh, l, 4.0, 0.5);
        const double got = ian::ian_loss(yl, yh, l).total();
        CHECK(std::abs(got - expect) / expect < 1e-6);
        CHECK(got >= 0.0);
    }
    const auto yl = random_plane<double>(8, 8, 1);
    const auto l = random_plane<double>(8, 8, 2, 0.1, 1.0);
    ian::LossWeights w{1.5, 2.0};
    CHECK(ian::ian_loss<double>(yl, yl, l, nullptr, w).total() ==
          doctest::Approx(oracle_ian_loss(yl, yl, l, 1.5, 2.0)).epsilon(1e-9));
}

TEST_CASE("ian loss gradient matches finite differences")
{
    const auto yl = random_plane<double>(8, 8, 4, 0.0, 0.3);
    const auto yh = random_plane<double>(8, 8, 5);
    auto l = random_plane<double>(8, 8, 6, 0.1, 1.0);
    Plane<double> grad;
    ian::ian_loss(yl, yh, l, &grad);
    const double h = 1e-7;
    double worst = 0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        const double saved = l[i];
        l[i] = saved + h;
        const double up = ian::ian_loss(yl, yh, l).total();
        l[i] = saved - h;
        const double down = ian::ian_loss(yl, yh, l).total();
        l[i] = saved;
        const double num = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(num - grad[i]) / std::max({std::abs(num), std::abs(grad[i]), 1e-3}));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("ian loss reports the non-finite term")
{
    Plane<double> y(4, 4, 0.2);
    Plane<double> yh(4, 4, 0.3);
    yh[5] = std::nan("");
    try {
        ian::ian_loss(y, yh, Plane<double>(4, 4, 0.5));
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(e.term() == "fidelity");
    }
}

TEST_CASE("estimate_illumination range, continuity, and golden output")
{
    const auto net = small_ian(17);
    const auto y = random_plane<float>(16, 16, 7, 0.0, 0.3);
    const auto l = ian::estimate_illumination(net, y);
    REQUIRE(l.height() == 16);
    for (float v : l.values()) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
    ImagePlane y2 = y;
    for (float& v : y2.values()) {
        v *= 0.999f;
    }
    const auto l2 = ian::estimate_illumination(net, y2);
    double diff = 0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        diff += std::abs(l[i] - l2[i]);
    }
    CHECK(diff / static_cast<double>(l.size()) < 0.05);

    // Frozen from the first run of this seeded, untrained network.
    CHECK(mean(l) == doctest::Approx(0.500898283).epsilon(1e-5));
    CHECK(l(0, 0) == doctest::Approx(0.490550518).epsilon(1e-5));
    CHECK(l(9, 4) == doctest::Approx(0.493385434).epsilon(1e-5));
    CHECK_THROWS_AS(ian::estimate_illumination(net, ImagePlane(12, 16)), SizeError);
}
