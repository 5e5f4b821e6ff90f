#include "bread/metrics.hpp"

#include "bread/nnkit/ssim.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

namespace bread::metrics {

namespace {

void require_same_size(const RgbImage& a, const RgbImage& b, const char* what)
{
    require_same_shape(a.r, b.r, what);
}

}  // namespace

double psnr(const RgbImage& a, const RgbImage& b)
{
    require_same_size(a, b, "psnr");
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < a.pixel_count(); ++i) {
            const double d = static_cast<double>(a.channel(c)[i]) - b.channel(c)[i];
            sum += d * d;
        }
    }
    const double mse = sum / (3.0 * static_cast<double>(a.pixel_count()));
    if (mse <= 0.0) {
        return kPsnrCap;
    }
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const RgbImage& a, const RgbImage& b)
{
    require_same_size(a, b, "ssim");
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        sum += nn::ssim_mean(a.channel(c), b.channel(c));
    }
    return sum / 3.0;
}

// ---------------------------------------------------------------- color

Lab srgb_to_lab(double r, double g, double b)
{
    const auto linear = [](double v) {
        return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
    };
    const double rl = linear(r);
    const double gl = linear(g);
    const double bl = linear(b);
    const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
    const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
    constexpr double delta = 6.0 / 29.0;
    const auto f = [](double t) {
        return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
    };
    const double fx = f(x / 0.95047);
    const double fy = f(y);
    const double fz = f(z / 1.08883);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double ciede2000(const Lab& x, const Lab& y)
{
    constexpr double pi = std::numbers::pi;
    const auto deg = [](double rad) { return rad * 180.0 / pi; };
    const auto rad = [](double d) { return d * pi / 180.0; };

    const double c1 = std::hypot(x.a, x.b);
    const double c2 = std::hypot(y.a, y.b);
    const double cbar = 0.5 * (c1 + c2);
    const double cbar7 = std::pow(cbar, 7.0);
    const double g = 0.5 * (1.0 - std::sqrt(cbar7 / (cbar7 + std::pow(25.0, 7.0))));
    const double a1 = (1.0 + g) * x.a;
    const double a2 = (1.0 + g) * y.a;
    const double cp1 = std::hypot(a1, x.b);
    const double cp2 = std::hypot(a2, y.b);
    const auto hue = [&](double b, double a) {
        if (a == 0.0 && b == 0.0) {
            return 0.0;
        }
        double h = deg(std::atan2(b, a));
        return h < 0.0 ? h + 360.0 : h;
    };
    const double h1 = hue(x.b, a1);
    const double h2 = hue(y.b, a2);

    const double dl = y.l - x.l;
    const double dc = cp2 - cp1;
    double dh = 0.0;
    if (cp1 * cp2 != 0.0) {
        dh = h2 - h1;
        if (dh > 180.0) {
            dh -= 360.0;
        } else if (dh < -180.0) {
            dh += 360.0;
        }
    }
    const double dH = 2.0 * std::sqrt(cp1 * cp2) * std::sin(rad(dh) / 2.0);

    const double lbar = 0.5 * (x.l + y.l);
    const double cpbar = 0.5 * (cp1 + cp2);
    double hbar = h1 + h2;
    if (cp1 * cp2 != 0.0) {
        if (std::abs(h1 - h2) <= 180.0) {
            hbar = 0.5 * (h1 + h2);
        } else if (h1 + h2 < 360.0) {
            hbar = 0.5 * (h1 + h2 + 360.0);
        } else {
            hbar = 0.5 * (h1 + h2 - 360.0);
        }
    }
    const double t = 1.0 - 0.17 * std::cos(rad(hbar - 30.0)) + 0.24 * std::cos(rad(2.0 * hbar)) +
                     0.32 * std::cos(rad(3.0 * hbar + 6.0)) - 0.20 * std::cos(rad(4.0 * hbar - 63.0));
    const double dtheta = 30.0 * std::exp(-std::pow((hbar - 275.0) / 25.0, 2.0));
    const double cpbar7 = std::pow(cpbar, 7.0);
    const double rc = 2.0 * std::sqrt(cpbar7 / (cpbar7 + std::pow(25.0, 7.0)));
    const double l50 = (lbar - 50.0) * (lbar - 50.0);
    const double sl = 1.0 + 0.015 * l50 / std::sqrt(20.0 + l50);
    const double sc = 1.0 + 0.045 * cpbar;
    const double sh = 1.0 + 0.015 * cpbar * t;
    const double rt = -std::sin(rad(2.0 * dtheta)) * rc;

    const double tl = dl / sl;
    const double tc = dc / sc;
    const double th = dH / sh;
    return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

double delta_e(const RgbImage& a, const RgbImage& b)
{
    require_same_size(a, b, "delta_e");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixel_count(); ++i) {
        sum += ciede2000(srgb_to_lab(a.r[i], a.g[i], a.b[i]), srgb_to_lab(b.r[i], b.g[i], b.b[i]));
    }
    return sum / static_cast<double>(a.pixel_count());
}

// ---------------------------------------------------------------- LOE

namespace {

std::vector<float> loe_lightness(const RgbImage& img)
{
    const auto peak = max_rgb(img);
    const int dh = std::min(img.height(), kLoeGrid);
    const int dw = std::min(img.width(), kLoeGrid);
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(dh) * static_cast<std::size_t>(dw));
    for (int i = 0; i < dh; ++i) {
        const int si = static_cast<int>((i + 0.5) * img.height() / dh);
        for (int j = 0; j < dw; ++j) {
            const int sj = static_cast<int>((j + 0.5) * img.width() / dw);
            out.push_back(peak(si, sj));
        }
    }
    return out;
}

}  // namespace

double loe(const RgbImage& input, const RgbImage& output)
{
    require_same_size(input, output, "loe");
    const auto a = loe_lightness(input);
    const auto b = loe_lightness(output);
    const std::size_t m = a.size();
    std::uint64_t flips = 0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            flips += static_cast<std::uint64_t>((a[i] >= a[j]) != (b[i] >= b[j]));
        }
    }
    return 1000.0 * static_cast<double>(flips) / (static_cast<double>(m) * static_cast<double>(m));
}

// ---------------------------------------------------------------- NIQE

namespace {

using Grid = Plane<double>;

constexpr int kMscnRadius = 3;
constexpr double kMscnSigma = 7.0 / 6.0;

// Separable Gaussian blur with replicated borders.
Grid blur(const Grid& p)
{
    std::array<double, 2 * kMscnRadius + 1> taps{};
    double sum = 0.0;
    for (int k = -kMscnRadius; k <= kMscnRadius; ++k) {
        taps[static_cast<std::size_t>(k + kMscnRadius)] =
            std::exp(-k * k / (2.0 * kMscnSigma * kMscnSigma));
        sum += taps[static_cast<std::size_t>(k + kMscnRadius)];
    }
    for (double& t : taps) {
        t /= sum;
    }
    const int h = p.height();
    const int w = p.width();
    Grid tmp(h, w), out(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            double acc = 0.0;
            for (int k = -kMscnRadius; k <= kMscnRadius; ++k) {
                acc += taps[static_cast<std::size_t>(k + kMscnRadius)] * p(i, std::clamp(j + k, 0, w - 1));
            }
            tmp(i, j) = acc;
        }
    }
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            double acc = 0.0;
            for (int k = -kMscnRadius; k <= kMscnRadius; ++k) {
                acc += taps[static_cast<std::size_t>(k + kMscnRadius)] * tmp(std::clamp(i + k, 0, h - 1), j);
            }
            out(i, j) = acc;
        }
    }
    return out;
}

struct Mscn {
    Grid coeff;
    Grid sigma;
};

Mscn mscn(const Grid& img)
{
    Grid sq(img.height(), img.width());
    for (std::size_t i = 0; i < img.size(); ++i) {
        sq[i] = img[i] * img[i];
    }
    const Grid mu = blur(img);
    const Grid e2 = blur(sq);
    Mscn m{Grid(img.height(), img.width()), Grid(img.height(), img.width())};
    for (std::size_t i = 0; i < img.size(); ++i) {
        m.sigma[i] = std::sqrt(std::abs(e2[i] - mu[i] * mu[i]));
        m.coeff[i] = (img[i] - mu[i]) / (m.sigma[i] + 1.0);
    }
    return m;
}

Grid half_scale(const Grid& p)
{
    const int h = p.height() / 2;
    const int w = p.width() / 2;
    Grid out(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            out(i, j) = 0.25 * (p(2 * i, 2 * j) + p(2 * i + 1, 2 * j) + p(2 * i, 2 * j + 1) +
                                p(2 * i + 1, 2 * j + 1));
        }
    }
    return out;
}

struct ShapeTable {
    std::vector<double> alpha;
    std::vector<double> ggd;   // Gamma(1/a) Gamma(3/a) / Gamma(2/a)^2
    std::vector<double> aggd;  // Gamma(2/a)^2 / (Gamma(1/a) Gamma(3/a))
};

const ShapeTable& shape_table()
{
    static const ShapeTable table = [] {
        ShapeTable t;
        for (int k = 0; k <= 9800; ++k) {
            const double a = 0.2 + 0.001 * k;
            const double g1 = std::tgamma(1.0 / a);
            const double g2 = std::tgamma(2.0 / a);
            const double g3 = std::tgamma(3.0 / a);
            t.alpha.push_back(a);
            t.ggd.push_back(g1 * g3 / (g2 * g2));
            t.aggd.push_back(g2 * g2 / (g1 * g3));
        }
        return t;
    }();
    return table;
}

double best_alpha(const std::vector<double>& ratios, double target)
{
    const auto& t = shape_table();
    std::size_t best = 0;
    double err = std::abs(ratios[0] - target);
    for (std::size_t k = 1; k < ratios.size(); ++k) {
        const double e = std::abs(ratios[k] - target);
        if (e < err) {
            err = e;
            best = k;
        }
    }
    return t.alpha[best];
}

constexpr double kTiny = 1e-12;

void ggd_features(const std::vector<double>& x, std::vector<double>& out)
{
    double sq = 0.0;
    double ab = 0.0;
    for (double v : x) {
        sq += v * v;
        ab += std::abs(v);
    }
    sq /= static_cast<double>(x.size());
    ab /= static_cast<double>(x.size());
    if (sq < kTiny) {
        out.push_back(2.0);
        out.push_back(0.0);
        return;
    }
    out.push_back(best_alpha(shape_table().ggd, sq / (ab * ab)));
    out.push_back(sq);
}

void aggd_features(const std::vector<double>& x, std::vector<double>& out)
{
    double left = 0.0, right = 0.0, sq = 0.0, ab = 0.0;
    std::size_t nl = 0, nr = 0;
    for (double v : x) {
        if (v < 0.0) {
            left += v * v;
            ++nl;
        } else if (v > 0.0) {
            right += v * v;
            ++nr;
        }
        sq += v * v;
        ab += std::abs(v);
    }
    sq /= static_cast<double>(x.size());
    ab /= static_cast<double>(x.size());
    const double lstd = nl ? std::sqrt(left / static_cast<double>(nl)) : 0.0;
    const double rstd = nr ? std::sqrt(right / static_cast<double>(nr)) : 0.0;
    if (sq < kTiny || lstd < kTiny || rstd < kTiny) {
        out.insert(out.end(), {2.0, 0.0, lstd * lstd, rstd * rstd});
        return;
    }
    const double gh = lstd / rstd;
    const double rhat = ab * ab / sq;
    const double rnorm = rhat * (gh * gh * gh + 1.0) * (gh + 1.0) / ((gh * gh + 1.0) * (gh * gh + 1.0));
    const double alpha = best_alpha(shape_table().aggd, rnorm);
    const double scale = std::sqrt(std::tgamma(1.0 / alpha) / std::tgamma(3.0 / alpha));
    const double bl = lstd * scale;
    const double br = rstd * scale;
    const double mean = (br - bl) * std::tgamma(2.0 / alpha) / std::tgamma(1.0 / alpha);
    out.insert(out.end(), {alpha, mean, bl * bl, br * br});
}

// 18 features of one patch of MSCN coefficients.
void patch_features(const Grid& c, int top, int left, int size, std::vector<double>& out)
{
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(size) * static_cast<std::size_t>(size));
    for (int i = top; i < top + size; ++i) {
        for (int j = left; j < left + size; ++j) {
            vals.push_back(c(i, j));
        }
    }
    ggd_features(vals, out);
    constexpr std::array<std::array<int, 2>, 4> shifts{{{0, 1}, {1, 0}, {1, 1}, {1, -1}}};
    for (const auto& s : shifts) {
        std::vector<double> prod;
        for (int i = top; i < top + size; ++i) {
            for (int j = left; j < left + size; ++j) {
                const int i2 = i + s[0];
                const int j2 = j + s[1];
                if (i2 < top + size && j2 >= left && j2 < left + size) {
                    prod.push_back(c(i, j) * c(i2, j2));
                }
            }
        }
        aggd_features(prod, out);
    }
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows, const Eigen::VectorXd& mean)
{
    const Eigen::MatrixXd centered = rows.rowwise() - mean.transpose();
    return centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
}

ImagePlane luminance255(const RgbImage& img)
{
    const auto ycc = rgb_to_ycbcr(img);
    ImagePlane y = ycc.y;
    for (float& v : y.values()) {
        v *= 255.0f;
    }
    return y;
}

}  // namespace

NiqeFeatures niqe_features(const ImagePlane& luminance, int patch)
{
    if (patch < 8 || patch % 2 != 0) {
        throw DomainError("niqe patch size must be even and at least 8");
    }
    const int rows = luminance.height() / patch;
    const int cols = luminance.width() / patch;
    if (rows * cols < 1) {
        throw SizeError("image smaller than one niqe patch");
    }
    const Grid full = plane_cast<double>(luminance);
    const Mscn m1 = mscn(full);
    const Mscn m2 = mscn(half_scale(full));
    NiqeFeatures f;
    f.features.resize(rows * cols, kNiqeFeatures);
    int r = 0;
    std::vector<double> feat;
    for (int pi = 0; pi < rows; ++pi) {
        for (int pj = 0; pj < cols; ++pj) {
            feat.clear();
            patch_features(m1.coeff, pi * patch, pj * patch, patch, feat);
            patch_features(m2.coeff, pi * patch / 2, pj * patch / 2, patch / 2, feat);
            for (int k = 0; k < kNiqeFeatures; ++k) {
                f.features(r, k) = feat[static_cast<std::size_t>(k)];
            }
            double sharp = 0.0;
            for (int i = pi * patch; i < (pi + 1) * patch; ++i) {
                for (int j = pj * patch; j < (pj + 1) * patch; ++j) {
                    sharp += m1.sigma(i, j);
                }
            }
            f.sharpness.push_back(sharp / (static_cast<double>(patch) * patch));
            ++r;
        }
    }
    return f;
}

void NiqeModel::validate() const
{
    if (mean.size() != kNiqeFeatures || covariance.rows() != kNiqeFeatures ||
        covariance.cols() != kNiqeFeatures) {
        throw ModelError("niqe model must have 36 features");
    }
    if (!mean.allFinite() || !covariance.allFinite()) {
        throw ModelError("niqe model holds non-finite values");
    }
    const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw ModelError("niqe covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
        throw ModelError("niqe covariance is not positive semi-definite");
    }
}

NiqeModel fit_niqe_model(std::span<const RgbImage> corpus, int patch, double sharpness_threshold)
{
    if (corpus.empty()) {
        throw ModelError("niqe corpus is empty");
    }
    std::vector<Eigen::VectorXd> selected;
    for (const auto& img : corpus) {
        const auto f = niqe_features(luminance255(img), patch);
        const double top = *std::max_element(f.sharpness.begin(), f.sharpness.end());
        if (!(top > 0.0)) {
            continue;
        }
        for (std::size_t k = 0; k < f.sharpness.size(); ++k) {
            if (f.sharpness[k] > sharpness_threshold * top) {
                selected.push_back(f.features.row(static_cast<Eigen::Index>(k)).transpose());
            }
        }
    }
    if (selected.size() < 2) {
        throw ModelError("niqe corpus yields fewer than 2 textured patches");
    }
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(selected.size()), kNiqeFeatures);
    for (std::size_t k = 0; k < selected.size(); ++k) {
        rows.row(static_cast<Eigen::Index>(k)) = selected[k].transpose();
    }
    NiqeModel model;
    model.patch_size = patch;
    model.sharpness_threshold = sharpness_threshold;
    model.mean = rows.colwise().mean().transpose();
    model.covariance = sample_covariance(rows, model.mean);
    model.covariance = 0.5 * (model.covariance + model.covariance.transpose());
    model.covariance.diagonal().array() += 1e-6;
    model.validate();
    return model;
}

double niqe(const RgbImage& img, const NiqeModel& model)
{
    model.validate();
    const auto f = niqe_features(luminance255(img), model.patch_size);
    if (f.features.rows() < 4) {
        throw SizeError("niqe needs at least 4 patches of size " + std::to_string(model.patch_size));
    }
    const Eigen::VectorXd mu = f.features.colwise().mean().transpose();
    const Eigen::MatrixXd cov = sample_covariance(f.features, mu);
    const Eigen::MatrixXd pooled = 0.5 * (model.covariance + cov);
    const Eigen::VectorXd d = model.mean - mu;
    const Eigen::MatrixXd inv = pooled.completeOrthogonalDecomposition().pseudoInverse();
    const double q = d.dot(inv * d);
    return std::sqrt(std::max(q, 0.0));
}

namespace {

constexpr char kNiqeMagic[8] = {'N', 'I', 'Q', 'E', 'M', 'O', 'D', 'L'};

template <class T>
void put(std::ofstream& out, T v)
{
    static_assert(std::endian::native == std::endian::little);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& in, const std::filesystem::path& path)
{
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw FormatError("truncated niqe model " + path.string());
    }
    return v;
}

}  // namespace

void save_niqe_model(const NiqeModel& model, const std::filesystem::path& path)
{
    model.validate();
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.write(kNiqeMagic, sizeof kNiqeMagic);
    put<std::uint32_t>(out, 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.patch_size));
    put<double>(out, model.sharpness_threshold);
    put<std::uint32_t>(out, kNiqeFeatures);
    for (int k = 0; k < kNiqeFeatures; ++k) {
        put<double>(out, model.mean[k]);
    }
    for (int i = 0; i < kNiqeFeatures; ++i) {
        for (int j = 0; j < kNiqeFeatures; ++j) {
            put<double>(out, model.covariance(i, j));
        }
    }
}

NiqeModel load_niqe_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open niqe model " + path.string());
    }
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kNiqeMagic, sizeof magic) != 0) {
        throw FormatError(path.string() + ": expected magic NIQEMODL");
    }
    if (get<std::uint32_t>(in, path) != 1) {
        throw FormatError(path.string() + ": unsupported niqe model version");
    }
    NiqeModel model;
    model.patch_size = static_cast<int>(get<std::uint32_t>(in, path));
    model.sharpness_threshold = get<double>(in, path);
    if (get<std::uint32_t>(in, path) != kNiqeFeatures) {
        throw FormatError(path.string() + ": niqe model dimension must be 36");
    }
    for (int k = 0; k < kNiqeFeatures; ++k) {
        model.mean[k] = get<double>(in, path);
    }
    for (int i = 0; i < kNiqeFeatures; ++i) {
        for (int j = 0; j < kNiqeFeatures; ++j) {
            model.covariance(i, j) = get<double>(in, path);
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(path.string() + ": trailing bytes in niqe model");
    }
    model.validate();
    return model;
}

// ---------------------------------------------------------------- gamma

namespace {

double gamma_mse(const ImagePlane& x, const ImagePlane& y, double gamma)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = std::pow(std::clamp(static_cast<double>(x[i]), 0.0, 1.0), gamma) - y[i];
        sum += d * d;
    }
    return sum / static_cast<double>(x.size());
}

}  // namespace

GammaFit gamma_align(const ImagePlane& y_out, const ImagePlane& y_ref)
{
    require_same_shape(y_out, y_ref, "gamma_align");
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 0.1;
    double b = 10.0;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = gamma_mse(y_out, y_ref, c);
    double fd = gamma_mse(y_out, y_ref, d);
    while (b - a > 1e-4) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = gamma_mse(y_out, y_ref, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = gamma_mse(y_out, y_ref, d);
        }
    }
    GammaFit fit;
    fit.gamma = 0.5 * (a + b);
    if (gamma_mse(y_out, y_ref, fit.gamma) > gamma_mse(y_out, y_ref, 1.0)) {
        fit.gamma = 1.0;
    }
    fit.aligned = ImagePlane(y_out.height(), y_out.width());
    for (std::size_t i = 0; i < y_out.size(); ++i) {
        fit.aligned[i] = fit.gamma == 1.0
                             ? y_out[i]
                             : static_cast<float>(std::pow(
                                   std::clamp(static_cast<double>(y_out[i]), 0.0, 1.0), fit.gamma));
    }
    return fit;
}

RgbImage gamma_corrected(const RgbImage& output, const RgbImage& reference, double* gamma)
{
    auto ycc = rgb_to_ycbcr(output);
    const auto ref = rgb_to_ycbcr(reference);
    auto fit = gamma_align(ycc.y, ref.y);
    if (gamma != nullptr) {
        *gamma = fit.gamma;
    }
    ycc.y = std::move(fit.aligned);
    return ycbcr_to_rgb(ycc);
}

// ---------------------------------------------------------------- report

void MetricReport::add(const std::string& image, std::map<std::string, double> values)
{
    for (const auto& [k, v] : values) {
        if (std::find(columns.begin(), columns.end(), k) == columns.end()) {
            columns.push_back(k);
        }
    }
    images.push_back(image);
    rows.push_back(std::move(values));
}

std::map<std::string, double> MetricReport::aggregate() const
{
    std::map<std::string, double> sums;
    std::map<std::string, std::size_t> counts;
    for (const auto& row : rows) {
        for (const auto& [k, v] : row) {
            sums[k] += v;
            counts[k] += 1;
        }
    }
    for (auto& [k, v] : sums) {
        v /= static_cast<double>(counts[k]);
    }
    return sums;
}

void MetricReport::write_csv(const std::filesystem::path& path) const
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << "image";
    for (const auto& c : columns) {
        out << ',' << c;
    }
    out << '\n';
    out.precision(10);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out << images[r];
        for (const auto& c : columns) {
            out << ',';
            if (const auto it = rows[r].find(c); it != rows[r].end()) {
                out << it->second;
            }
        }
        out << '\n';
    }
}

void MetricReport::write_json(const std::filesystem::path& path) const
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    nlohmann::ordered_json j;
    j["images"] = rows.size();
    j["variants"] = {{"plain", plain}, {"gamma_aligned", gamma_aligned}};
    nlohmann::ordered_json agg = nlohmann::ordered_json::object();
    const auto means = aggregate();
    for (const auto& c : columns) {
        if (const auto it = means.find(c); it != means.end()) {
            agg[c] = it->second;
        }
    }
    j["aggregate"] = agg;
    j["errors"] = errors;
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

}  // namespace bread::metrics
