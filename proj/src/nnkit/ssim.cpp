#include "bread/nnkit/ssim.hpp"

#include <cmath>
#include <vector>

namespace bread::nn {

std::array<double, kSsimWindow> ssim_gaussian_taps()
{
    std::array<double, kSsimWindow> taps{};
    double sum = 0.0;
    const int half = kSsimWindow / 2;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - half;
        taps[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += taps[static_cast<std::size_t>(i)];
    }
    for (double& t : taps) {
        t /= sum;
    }
    return taps;
}

namespace {

using Grid = Plane<double>;

// Valid-mode separable correlation with the Gaussian window.
Grid filter_valid(const Grid& p, const std::array<double, kSsimWindow>& taps)
{
    const int oh = p.height() - kSsimWindow + 1;
    const int ow = p.width() - kSsimWindow + 1;
    Grid horiz(p.height(), ow);
    for (int i = 0; i < p.height(); ++i) {
        for (int j = 0; j < ow; ++j) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) {
                acc += taps[static_cast<std::size_t>(k)] * p(i, j + k);
            }
            horiz(i, j) = acc;
        }
    }
    Grid out(oh, ow);
    for (int i = 0; i < oh; ++i) {
        for (int k = 0; k < kSsimWindow; ++k) {
            const double t = taps[static_cast<std::size_t>(k)];
            for (int j = 0; j < ow; ++j) {
                out(i, j) += t * horiz(i + k, j);
            }
        }
    }
    return out;
}

// Adjoint of filter_valid.
Grid scatter_full(const Grid& g, int height, int width, const std::array<double, kSsimWindow>& taps)
{
    Grid vert(height, g.width());
    for (int i = 0; i < g.height(); ++i) {
        for (int k = 0; k < kSsimWindow; ++k) {
            const double t = taps[static_cast<std::size_t>(k)];
            for (int j = 0; j < g.width(); ++j) {
                vert(i + k, j) += t * g(i, j);
            }
        }
    }
    Grid out(height, width);
    for (int i = 0; i < height; ++i) {
        for (int j = 0; j < g.width(); ++j) {
            const double v = vert(i, j);
            for (int k = 0; k < kSsimWindow; ++k) {
                out(i, j + k) += taps[static_cast<std::size_t>(k)] * v;
            }
        }
    }
    return out;
}

}  // namespace

template <class T>
double ssim_mean(const Plane<T>& x, const Plane<T>& y, Plane<T>* grad_x)
{
    require_same_shape(x, y, "ssim");
    if (x.height() < kSsimWindow || x.width() < kSsimWindow) {
        throw SizeError("ssim requires both dimensions >= 11, got " + std::to_string(x.height()) +
                        "x" + std::to_string(x.width()));
    }
    const auto taps = ssim_gaussian_taps();
    const int h = x.height();
    const int w = x.width();
    Grid xd(h, w), yd(h, w), xx(h, w), yy(h, w), xy(h, w);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = static_cast<double>(x[i]);
        const double b = static_cast<double>(y[i]);
        xd[i] = a;
        yd[i] = b;
        xx[i] = a * a;
        yy[i] = b * b;
        xy[i] = a * b;
    }
    const Grid mu_x = filter_valid(xd, taps);
    const Grid mu_y = filter_valid(yd, taps);
    const Grid e_xx = filter_valid(xx, taps);
    const Grid e_yy = filter_valid(yy, taps);
    const Grid e_xy = filter_valid(xy, taps);

    const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
    const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
    const std::size_t n = mu_x.size();
    Grid d_mu, d_exx, d_exy;
    if (grad_x) {
        d_mu = Grid(mu_x.height(), mu_x.width());
        d_exx = Grid(mu_x.height(), mu_x.width());
        d_exy = Grid(mu_x.height(), mu_x.width());
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double mx = mu_x[i];
        const double my = mu_y[i];
        const double sxx = e_xx[i] - mx * mx;
        const double syy = e_yy[i] - my * my;
        const double sxy = e_xy[i] - mx * my;
        const double a1 = 2.0 * mx * my + c1;
        const double a2 = 2.0 * sxy + c2;
        const double b1 = mx * mx + my * my + c1;
        const double b2 = sxx + syy + c2;
        const double s = a1 * a2 / (b1 * b2);
        total += s;
        if (grad_x) {
            // Partial derivatives with e_xx, e_xy held fixed.
            d_mu[i] = (2.0 * my * a2 - 2.0 * my * a1) / (b1 * b2) -
                      s * (2.0 * mx / b1 - 2.0 * mx / b2);
            d_exx[i] = -s / b2;
            d_exy[i] = 2.0 * a1 / (b1 * b2);
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    if (grad_x) {
        const Grid g_mu = scatter_full(d_mu, h, w, taps);
        const Grid g_xx = scatter_full(d_exx, h, w, taps);
        const Grid g_xy = scatter_full(d_exy, h, w, taps);
        *grad_x = Plane<T>(h, w);
        for (std::size_t i = 0; i < x.size(); ++i) {
            (*grad_x)[i] = static_cast<T>(
                (g_mu[i] + 2.0 * xd[i] * g_xx[i] + yd[i] * g_xy[i]) * inv_n);
        }
    }
    return total * inv_n;
}

template double ssim_mean(const Plane<float>&, const Plane<float>&, Plane<float>*);
template double ssim_mean(const Plane<double>&, const Plane<double>&, Plane<double>*);

}  // namespace bread::nn
