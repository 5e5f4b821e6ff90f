#include "bread/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

namespace bread::synthetic {

namespace {

constexpr double kPi = std::numbers::pi;

std::string numbered(int k)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", k);
    return buf;
}

float quantize8(double v)
{
    return static_cast<float>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0);
}

}  // namespace

RgbImage render_scene(int height, int width, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RgbImage img(height, width);

    double top[3], bottom[3];
    for (int c = 0; c < 3; ++c) {
        top[c] = 0.35 + 0.5 * u(rng);
        bottom[c] = 0.15 + 0.5 * u(rng);
    }
    for (int i = 0; i < height; ++i) {
        const double t = static_cast<double>(i) / std::max(1, height - 1);
        for (int j = 0; j < width; ++j) {
            for (int c = 0; c < 3; ++c) {
                img.channel(c)(i, j) = static_cast<float>(top[c] * (1 - t) + bottom[c] * t);
            }
        }
    }

    const int shapes = 6 + static_cast<int>(u(rng) * 6);
    for (int s = 0; s < shapes; ++s) {
        double color[3];
        for (double& c : color) {
            c = 0.05 + 0.9 * u(rng);
        }
        const double ci = u(rng) * height;
        const double cj = u(rng) * width;
        const double ri = (0.08 + 0.25 * u(rng)) * height;
        const double rj = (0.08 + 0.25 * u(rng)) * width;
        const bool disc = u(rng) < 0.5;
        const double freq = 2.0 * kPi / (4.0 + 12.0 * u(rng));
        const double angle = u(rng) * kPi;
        const double amp = 0.12 * u(rng);
        for (int i = 0; i < height; ++i) {
            for (int j = 0; j < width; ++j) {
                const double di = (i - ci) / ri;
                const double dj = (j - cj) / rj;
                const bool inside = disc ? di * di + dj * dj <= 1.0
                                         : std::abs(di) <= 1.0 && std::abs(dj) <= 1.0;
                if (!inside) {
                    continue;
                }
                const double stripe =
                    amp * std::sin(freq * (i * std::cos(angle) + j * std::sin(angle)));
                for (int c = 0; c < 3; ++c) {
                    img.channel(c)(i, j) =
                        static_cast<float>(std::clamp(color[c] + stripe, 0.0, 1.0));
                }
            }
        }
    }
    for (int c = 0; c < 3; ++c) {
        for (float& v : img.channel(c).values()) {
            v = quantize8(v);
        }
    }
    return img;
}

RgbImage darken(const RgbImage& high, std::uint64_t seed, const DarkeningOptions& options)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int h = high.height();
    const int w = high.width();

    // Smooth illumination: a tilted plane plus two broad bumps, normalized
    // into [min, max].
    const double gi = u(rng) - 0.5;
    const double gj = u(rng) - 0.5;
    double bump_i[2], bump_j[2], bump_r[2], bump_a[2];
    for (int k = 0; k < 2; ++k) {
        bump_i[k] = u(rng) * h;
        bump_j[k] = u(rng) * w;
        bump_r[k] = (0.25 + 0.35 * u(rng)) * std::max(h, w);
        bump_a[k] = u(rng);
    }
    Plane<double> field(h, w);
    double lo = 1e300;
    double hi = -1e300;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            double v = gi * i / h + gj * j / w;
            for (int k = 0; k < 2; ++k) {
                const double di = (i - bump_i[k]) / bump_r[k];
                const double dj = (j - bump_j[k]) / bump_r[k];
                v += bump_a[k] * std::exp(-(di * di + dj * dj));
            }
            field(i, j) = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
    double cast[3];
    for (double& c : cast) {
        c = 1.0 + options.color_cast * (2.0 * u(rng) - 1.0);
    }

    RgbImage low(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double t = (field(i, j) - lo) / span;
            const double l =
                options.min_illumination + (options.max_illumination - options.min_illumination) * t;
            for (int c = 0; c < 3; ++c) {
                const double signal = static_cast<double>(high.channel(c)(i, j)) * l * cast[c];
                const double sd = std::sqrt(options.read_noise * options.read_noise +
                                            options.shot_noise * std::max(signal, 0.0));
                low.channel(c)(i, j) = quantize8(signal + sd * normal(rng));
            }
        }
    }
    return low;
}

data::PairedSample make_pair(int height, int width, std::uint64_t seed,
                             const DarkeningOptions& options)
{
    auto high = render_scene(height, width, seed);
    auto low = darken(high, seed ^ 0x9e3779b97f4a7c15ULL, options);
    return {std::move(low), std::move(high), "scene" + numbered(static_cast<int>(seed % 10000))};
}

can::ExposureSequence make_sequence(int height, int width, int frames, std::uint64_t seed)
{
    const auto base = render_scene(height, width, seed);
    std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    can::ExposureSequence seq;
    seq.scene = "scene" + numbered(static_cast<int>(seed % 10000));
    for (int k = 0; k < frames; ++k) {
        const double gain = frames == 1 ? 1.0 : 0.15 + (1.4 - 0.15) * k / (frames - 1);
        // Dim frames lose saturation and pick up a cast, as sensors do.
        const double desat = 0.5 * std::max(0.0, 1.0 - gain);
        double cast[3];
        for (double& c : cast) {
            c = 1.0 + 0.1 * (1.0 - std::min(gain, 1.0)) * (2.0 * u(rng) - 1.0);
        }
        RgbImage f(height, width);
        for (std::size_t i = 0; i < base.pixel_count(); ++i) {
            const double y = kLumaR * base.r[i] + kLumaG * base.g[i] + kLumaB * base.b[i];
            for (int c = 0; c < 3; ++c) {
                const double v = base.channel(c)[i];
                const double mixed = (1.0 - desat) * v + desat * y;
                f.channel(c)[i] = quantize8(gain * mixed * cast[c] + 0.003 * normal(rng));
            }
        }
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

void write_paired_set(const std::filesystem::path& dir, const std::string& manifest_name,
                      int count, int height, int width, std::uint64_t seed, data::Split split)
{
    std::filesystem::create_directories(dir / "low");
    std::filesystem::create_directories(dir / "high");
    std::ofstream manifest(dir / manifest_name);
    manifest << "split: " << (split == data::Split::train ? "train" : "eval") << "\n";
    for (int k = 0; k < count; ++k) {
        const auto pair = make_pair(height, width, seed + static_cast<std::uint64_t>(k) * 7919);
        const auto name = numbered(k) + ".png";
        write_png(dir / "low" / name, pair.low);
        write_png(dir / "high" / name, pair.high);
        manifest << "low/" << name << "\thigh/" << name << "\n";
    }
}

void write_sequence_set(const std::filesystem::path& dir, int scenes, int frames, int height,
                        int width, std::uint64_t seed)
{
    std::ofstream manifest((std::filesystem::create_directories(dir), dir / "sequences.txt"));
    for (int s = 0; s < scenes; ++s) {
        const auto seq = make_sequence(height, width, frames, seed + static_cast<std::uint64_t>(s) * 104729);
        const auto scene_dir = dir / "scenes" / numbered(s);
        for (std::size_t k = 0; k < seq.frames.size(); ++k) {
            write_png(scene_dir / ("frame" + numbered(static_cast<int>(k)) + ".png"), seq.frames[k]);
        }
        manifest << "scenes/" << numbered(s) << "\n";
    }
}

}  // namespace bread::synthetic
