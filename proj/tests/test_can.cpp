#include "bread/can.hpp"

#include "support/random.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <utility>

using namespace bread;
using bread::testing::random_plane;
using bread::testing::random_rgb;

TEST_CASE("can loss values")
{
    const auto cb = random_plane<double>(8, 8, 1);
    const auto cr = random_plane<double>(8, 8, 2);
    CHECK(can::can_loss(cb, cr, cb, cr).total() == 0.0);

    Plane<double> shifted = cb;
    for (double& v : shifted.values()) {
        v += 0.1;
    }
    const auto v = can::can_loss(shifted, cr, cb, cr);
    CHECK(v.cb == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(v.cr == 0.0);

    const auto cb_ref = random_plane<double>(8, 8, 3);
    const auto cr_ref = random_plane<double>(8, 8, 4);
    double eb = 0, er = 0;
    for (std::size_t i = 0; i < cb.size(); ++i) {
        eb += (cb[i] - cb_ref[i]) * (cb[i] - cb_ref[i]);
        er += (cr[i] - cr_ref[i]) * (cr[i] - cr_ref[i]);
    }
    const auto r = can::can_loss(cb, cr, cb_ref, cr_ref);
    CHECK(r.cb == doctest::Approx(eb / 64).epsilon(1e-12));
    CHECK(r.cr == doctest::Approx(er / 64).epsilon(1e-12));
    // Swapping the channels swaps the terms.
    const auto s = can::can_loss(cr, cb, cr_ref, cb_ref);
    CHECK(s.cb == r.cr);
    CHECK(s.cr == r.cb);
}

TEST_CASE("can loss gradient matches finite differences")
{
    auto cb = random_plane<double>(6, 6, 5);
    const auto cr = random_plane<double>(6, 6, 6);
    const auto cb_ref = random_plane<double>(6, 6, 7);
    const auto cr_ref = random_plane<double>(6, 6, 8);
    Plane<double> gb, gr;
    can::can_loss(cb, cr, cb_ref, cr_ref, &gb, &gr);
    const double h = 1e-6;
    for (std::size_t i = 0; i < cb.size(); ++i) {
        const double saved = cb[i];
        cb[i] = saved + h;
        const double up = can::can_loss(cb, cr, cb_ref, cr_ref).total();
        cb[i] = saved - h;
        const double down = can::can_loss(cb, cr, cb_ref, cr_ref).total();
        cb[i] = saved;
        CHECK(gb[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
        CHECK(gr[i] == doctest::Approx(2 * (cr[i] - cr_ref[i]) / 36).epsilon(1e-12));
    }
}

TEST_CASE("adapt_color output range and shape")
{
    const auto net = nn::build_network(can::network_spec(4, 8), 9);
    const auto y = random_plane<float>(16, 24, 10, 0.0, 0.3);
    const auto guide = random_plane<float>(16, 24, 11);
    const auto out = can::adapt_color(net, y, random_plane<float>(16, 24, 12, 0.4, 0.6),
                                      random_plane<float>(16, 24, 13, 0.4, 0.6), guide);
    REQUIRE(out.cb.height() == 16);
    REQUIRE(out.cr.width() == 24);
    for (std::size_t i = 0; i < out.cb.size(); ++i) {
        CHECK(out.cb[i] > 0.0f);
        CHECK(out.cb[i] < 1.0f);
        CHECK(out.cr[i] > 0.0f);
        CHECK(out.cr[i] < 1.0f);
    }
    CHECK_THROWS_AS(can::adapt_color(net, y, y, y, ImagePlane(16, 16)), ShapeError);
}

TEST_CASE("multi-exposure pair sampler")
{
    auto sequence = [](int n) {
        can::ExposureSequence seq{"scene", {}};
        for (int i = 0; i < n; ++i) {
            seq.frames.push_back(random_rgb(8, 8, 100 + i, 0.0, 0.2 + 0.15 * i));
        }
        return seq;
    };
    std::mt19937_64 rng(42);

    CHECK_THROWS_AS(can::sample_me_pair(sequence(1), rng), DataError);
    CHECK_THROWS_AS(can::sample_me_pair(can::ExposureSequence{}, rng), DataError);

    SUBCASE("two frames give both orders about equally")
    {
        const auto seq = sequence(2);
        int forward = 0;
        for (int i = 0; i < 1000; ++i) {
            const auto p = can::sample_me_pair(seq, rng);
            CHECK(p.source != p.target);
            forward += p.source == 0 ? 1 : 0;
        }
        // 3 sigma for a fair coin over 1000 draws.
        CHECK(std::abs(forward - 500) < 48);
    }
    SUBCASE("five frames cover all twenty ordered pairs uniformly")
    {
        const auto seq = sequence(5);
        std::map<std::pair<std::size_t, std::size_t>, int> counts;
        for (int i = 0; i < 1000; ++i) {
            const auto p = can::sample_me_pair(seq, rng);
            REQUIRE(p.source != p.target);
            ++counts[{p.source, p.target}];
        }
        CHECK(counts.size() == 20);
        const double sd = std::sqrt(1000 * 0.05 * 0.95);
        for (const auto& [pair, c] : counts) {
            CHECK(std::abs(c - 50.0) < 3 * sd);
        }
    }
    SUBCASE("fields come from the sampled frames")
    {
        const auto seq = sequence(4);
        const auto p = can::sample_me_pair(seq, rng);
        const auto src = rgb_to_ycbcr(seq.frames[p.source]);
        const auto dst = rgb_to_ycbcr(seq.frames[p.target]);
        CHECK(p.input == src);
        CHECK(p.guide == dst.y);
        CHECK(p.chroma.cb == dst.cb);
        CHECK(p.chroma.cr == dst.cr);
    }
    SUBCASE("reproducible for a fixed seed")
    {
        const auto seq = sequence(6);
        std::mt19937_64 a(7), b(7);
        for (int i = 0; i < 20; ++i) {
            const auto x = can::sample_me_pair(seq, a);
            const auto y = can::sample_me_pair(seq, b);
            CHECK(x.source == y.source);
            CHECK(x.target == y.target);
        }
    }
}
