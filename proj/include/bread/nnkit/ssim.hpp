#pragma once

// Single-scale SSIM with an 11-tap Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, dynamic range 1. Statistics are taken over "valid" window
// positions only, so both dimensions must be at least 11. Computation runs in
// double regardless of T.

#include "bread/imagecore.hpp"

#include <array>

namespace bread::nn {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
std::array<double, kSsimWindow> ssim_gaussian_taps();

/// Mean SSIM of x against y. When grad_x is non-null it receives
/// d(mean SSIM)/d(x). Throws SizeError for planes smaller than the window.
template <class T>
double ssim_mean(const Plane<T>& x, const Plane<T>& y, Plane<T>* grad_x = nullptr);

}  // namespace bread::nn
