#include "bread/dataprep.hpp"

#include "support/random.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>

using namespace bread;
using bread::testing::random_rgb;
using bread::testing::TempDir;

namespace {

// Pixel (i, j) encodes its own coordinates in R and G.
RgbImage coordinate_image(int h, int w, float offset)
{
    RgbImage img(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            img.r(i, j) = static_cast<float>(i) / 256.0f;
            img.g(i, j) = static_cast<float>(j) / 256.0f;
            img.b(i, j) = offset;
        }
    }
    return img;
}

RgbImage ramp(int n)
{
    RgbImage img(1, n);
    for (int i = 0; i < n; ++i) {
        img.g[static_cast<std::size_t>(i)] = static_cast<float>(i) / static_cast<float>(n - 1);
    }
    return img;
}

std::size_t overexposed(const RgbImage& img, double gain)
{
    std::size_t n = 0;
    const auto peak = max_rgb(img);
    for (float v : peak.values()) {
        n += gain * v > 1.0 ? 1 : 0;
    }
    return n;
}

}  // namespace

TEST_CASE("manifest parsing")
{
    TempDir dir;
    const auto path = dir.write("sets/m.txt",
                                "# pairs\n"
                                "split: eval\n"
                                "low/b.png\thigh/b.png\n"
                                "\n"
                                "low/a.png\thigh/a.png   # trailing comment\n"
                                "scenes/s1\n");
    const auto m = data::read_manifest(path);
    CHECK(m.split == data::Split::eval);
    REQUIRE(m.pairs.size() == 2);
    CHECK(m.pairs[0].first == std::filesystem::absolute(dir / "sets") / "low/b.png");
    CHECK(m.pairs[1].second == std::filesystem::absolute(dir / "sets") / "high/a.png");
    REQUIRE(m.scenes.size() == 1);
    CHECK(m.scenes[0].filename() == "s1");

    CHECK(data::read_manifest(dir.write("t.txt", "a.png\tb.png\n")).split == data::Split::train);
    CHECK_THROWS_AS(data::read_manifest(dir / "absent.txt"), DataError);
    CHECK_THROWS_AS(data::read_manifest(dir.write("bad.txt", "split: test\n")), DataError);
    CHECK_THROWS_AS(data::read_manifest(dir.write("bad2.txt", "a.png\t\n")), DataError);
}

TEST_CASE("paired dataset loading")
{
    TempDir dir;
    for (const char* name : {"2.png", "10.png", "1.png"}) {
        write_png(dir / (std::string("low/") + name), random_rgb(8, 8, name[0]));
        write_png(dir / (std::string("high/") + name), random_rgb(8, 8, name[0] + 1));
    }
    const auto path = dir.write("m.txt", "low/2.png\thigh/2.png\nlow/10.png\thigh/10.png\n"
                                         "low/1.png\thigh/1.png\n");
    const auto m = data::read_manifest(path);
    const auto a = data::load_paired_dataset(m);
    REQUIRE(a.size() == 3);
    CHECK(a[0].scene == "1");
    CHECK(a[1].scene == "10");
    CHECK(a[2].scene == "2");
    CHECK(a[0].low == read_png(dir / "low/1.png"));

    const auto b = data::load_paired_dataset(m);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].low == b[i].low);
        CHECK(a[i].high == b[i].high);
    }

    SUBCASE("missing file is named")
    {
        const auto bad = data::read_manifest(
            dir.write("bad.txt", "low/1.png\thigh/1.png\nlow/404.png\thigh/2.png\n"));
        try {
            data::load_paired_dataset(bad);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("404.png") != std::string::npos);
        }
    }
    SUBCASE("size mismatch")
    {
        write_png(dir / "high/odd.png", random_rgb(8, 16, 3));
        const auto bad = data::read_manifest(dir.write("odd.txt", "low/1.png\thigh/odd.png\n"));
        CHECK_THROWS_AS(data::load_paired_dataset(bad), DataError);
    }
}

TEST_CASE("lol manifests have the published split sizes")
{
    const char* train = std::getenv("BREAD_LOL_TRAIN_MANIFEST");
    const char* eval = std::getenv("BREAD_LOL_EVAL_MANIFEST");
    if (train == nullptr || eval == nullptr) {
        MESSAGE("BREAD_LOL_TRAIN_MANIFEST / BREAD_LOL_EVAL_MANIFEST not set; skipping");
        return;
    }
    CHECK(data::read_manifest(train).pairs.size() == 485);
    CHECK(data::read_manifest(eval).pairs.size() == 15);
}

TEST_CASE("max exposure gain")
{
    CHECK(data::max_exposure_gain(RgbImage(4, 4, 0.25f), 0.25) == 4.0);
    CHECK(data::max_exposure_gain(ramp(101), 0.25) == doctest::Approx(1.0 / 0.75).epsilon(1e-6));
    CHECK(data::max_exposure_gain(RgbImage(4, 4, 1.0f)) == 1.0);
    CHECK(data::max_exposure_gain(RgbImage(4, 4, 0.0f)) == data::kMaxGainCap);
    CHECK(data::max_exposure_gain(RgbImage(4, 4, 0.001f)) == data::kMaxGainCap);
    CHECK_THROWS_AS(data::max_exposure_gain(RgbImage(2, 2, 0.5f), 0.0), DomainError);
    CHECK_THROWS_AS(data::max_exposure_gain(RgbImage(2, 2, 0.5f), 1.0), DomainError);

    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto img = random_rgb(9, 11, 300 + s, 0.0, 0.4);
        for (double frac : {0.1, 0.25, 0.5}) {
            const double g = data::max_exposure_gain(img, frac);
            CHECK(static_cast<double>(overexposed(img, g)) <= frac * 99.0);
            // Any visibly larger gain over-exposes too many pixels.
            if (g < data::kMaxGainCap) {
                CHECK(static_cast<double>(overexposed(img, g * 1.001)) > frac * 99.0);
            }
        }
    }
}

TEST_CASE("exposure synthesis")
{
    const auto low = random_rgb(12, 12, 5, 0.0, 0.3);
    const auto frames = data::synthesize_exposures(low);
    REQUIRE(frames.size() == 8);
    CHECK(frames[0] == clamp01(low));
    const auto gains = data::exposure_gains(low);
    REQUIRE(gains.size() == 8);
    CHECK(gains.front() == 1.0);
    CHECK(gains.back() == data::max_exposure_gain(low));
    for (std::size_t k = 1; k < gains.size(); ++k) {
        CHECK(gains[k] >= gains[k - 1]);
        CHECK(mean_luminance(frames[k]) >= mean_luminance(frames[k - 1]));
        CHECK(gains[k] - gains[k - 1] == doctest::Approx((gains.back() - 1.0) / 7.0));
    }
    for (double g : gains) {
        CHECK(static_cast<double>(overexposed(low, g)) <= 0.25 * 144.0);
    }
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < low.pixel_count(); ++i) {
            CHECK(frames[3].channel(c)[i] ==
                  static_cast<float>(std::min(1.0, gains[3] * low.channel(c)[i])));
        }
    }
    CHECK(data::synthesize_exposures(low, 1).size() == 1);
    CHECK_THROWS_AS(data::synthesize_exposures(low, 0), DomainError);
}

TEST_CASE("patch sampling")
{
    data::PairedSample s{coordinate_image(100, 100, 0.1f), coordinate_image(100, 100, 0.9f), "x"};
    std::mt19937_64 rng(3);

    SUBCASE("full-size window is the identity")
    {
        data::PairedSample small{coordinate_image(32, 32, 0.1f), coordinate_image(32, 32, 0.9f), "y"};
        const auto p = data::random_patch(small, 32, rng, false);
        CHECK(p.low == small.low);
        CHECK(p.high == small.high);
    }
    SUBCASE("reproducible for a fixed seed")
    {
        std::mt19937_64 a(11), b(11);
        const auto x = data::random_window(100, 100, 48, a);
        const auto y = data::random_window(100, 100, 48, b);
        CHECK(x.top == y.top);
        CHECK(x.left == y.left);
        CHECK(x.flip == y.flip);
    }
    SUBCASE("low and high stay pixel aligned")
    {
        for (int k = 0; k < 50; ++k) {
            const auto p = data::random_patch(s, 48, rng);
            CHECK(p.low.r == p.high.r);
            CHECK(p.low.g == p.high.g);
            CHECK(p.low.b(0, 0) == 0.1f);
            CHECK(p.high.b(0, 0) == 0.9f);
        }
    }
    SUBCASE("window origins are uniform")
    {
        // Origins range over 0..52; bins [0,13), [13,26), [26,39), [39,53).
        const int edges[] = {0, 13, 26, 39, 53};
        int rows[4] = {}, cols[4] = {};
        int flips = 0;
        const int n = 10000;
        for (int k = 0; k < n; ++k) {
            const auto w = data::random_window(100, 100, 48, rng);
            for (int b = 0; b < 4; ++b) {
                rows[b] += w.top >= edges[b] && w.top < edges[b + 1] ? 1 : 0;
                cols[b] += w.left >= edges[b] && w.left < edges[b + 1] ? 1 : 0;
            }
            flips += w.flip ? 1 : 0;
        }
        for (int b = 0; b < 4; ++b) {
            const double p = (edges[b + 1] - edges[b]) / 53.0;
            const double sd = std::sqrt(n * p * (1 - p));
            CHECK(std::abs(rows[b] - n * p) < 3 * sd);
            CHECK(std::abs(cols[b] - n * p) < 3 * sd);
        }
        CHECK(std::abs(flips - n / 2) < 3 * std::sqrt(n * 0.25));
    }
    SUBCASE("flipped windows mirror the columns")
    {
        data::PatchWindow w{10, 20, 16, true};
        const auto out = w.apply(s.low);
        CHECK(out.g(0, 0) == s.low.g(10, 35));
        CHECK(out.g(0, 15) == s.low.g(10, 20));
    }
    SUBCASE("invalid sizes")
    {
        CHECK_THROWS_AS(data::random_window(100, 100, 104, rng), SizeError);
        CHECK_THROWS_AS(data::random_window(100, 40, 48, rng), SizeError);
        CHECK_THROWS_AS(data::random_window(100, 100, 20, rng), SizeError);
        CHECK_THROWS_AS(data::random_window(100, 100, 0, rng), SizeError);
    }
}

TEST_CASE("exposure sequences")
{
    TempDir dir;
    for (int f : {2, 0, 1}) {
        write_png(dir / ("scenes/b/frame" + std::to_string(f) + ".png"),
                  RgbImage(8, 8, 0.1f + 0.2f * static_cast<float>(f)));
    }
    write_png(dir / "scenes/a/frame0.png", RgbImage(8, 8, 0.2f));
    write_png(dir / "scenes/a/frame1.png", RgbImage(8, 8, 0.6f));
    write_png(dir / "scenes/c/frame0.png", RgbImage(8, 8, 0.3f));
    write_png(dir / "scenes/d/frame0.png", RgbImage(8, 8, 0.3f));
    write_png(dir / "scenes/d/frame1.png", RgbImage(8, 16, 0.3f));

    const auto seqs = data::load_exposure_sequences(dir / "scenes");
    REQUIRE(seqs.size() == 2);
    CHECK(seqs[0].scene == "a");
    CHECK(seqs[1].scene == "b");
    REQUIRE(seqs[1].frames.size() == 3);
    CHECK(mean_luminance(seqs[1].frames[0]) < mean_luminance(seqs[1].frames[1]));
    CHECK(mean_luminance(seqs[1].frames[1]) < mean_luminance(seqs[1].frames[2]));

    const auto m = data::read_manifest(dir.write("seq.txt", "scenes/b\nscenes/c\n"));
    const auto from_manifest = data::load_exposure_sequences(m);
    REQUIRE(from_manifest.size() == 1);
    CHECK(from_manifest[0].scene == "b");

    CHECK(data::load_exposure_sequences(dir / "nowhere").empty());
}
