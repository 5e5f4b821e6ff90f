#pragma once

// Illumination-guided noise: synthesis of amplified noise, the residual
// denoiser conditioned on a noise level map, and fusion of several
// differently-denoised candidates.

#include "bread/ian.hpp"
#include "bread/imagecore.hpp"
#include "bread/nnkit/network.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace bread::noise {

/// Per-pixel Gaussian standard deviation, image-value units, values >= 0.
using NoiseLevelMap = ImagePlane;

/// Multipliers of the noise level map used at inference.
struct StrengthLadder {
    std::vector<double> scales{0.0, 0.05, 0.1};

    /// Throws DomainError unless there are exactly three nonnegative, strictly
    /// increasing scales.
    void validate() const;
    std::size_t size() const noexcept { return scales.size(); }

    friend bool operator==(const StrengthLadder&, const StrengthLadder&) = default;
};

inline constexpr double kFixedGaussianSigma = 25.0 / 255.0;
inline constexpr double kPoissonPeak = 255.0;

/// exp(-l_hat), elementwise.
NoiseLevelMap noise_level_map(const IllumMap& l_hat);
/// scale * map, elementwise.
NoiseLevelMap scaled(const NoiseLevelMap& map, double scale);

/// y_high + N(0, sigma_map^2) per pixel; unclamped. Throws DomainError for a
/// negative sigma.
ImagePlane synthesize_noisy(const ImagePlane& y_high, const NoiseLevelMap& sigma_map,
                            std::uint64_t seed);
ImagePlane synthesize_fixed_gaussian(const ImagePlane& y_high, double sigma, std::uint64_t seed);
/// Darkens by l_hat, draws Poisson counts at rate y_high * l_hat * peak,
/// divides by peak, and re-brightens by 1 / (l_hat + eps).
ImagePlane synthesize_poisson(const ImagePlane& y_high, const IllumMap& l_hat, double peak,
                              std::uint64_t seed);

nn::NetworkSpec ansn_spec(int base_channels = 32, int max_channels = 128);
/// Input channels are [Y_NS_1, A_1, Y_NS_2, A_2, ...] for `candidates`
/// candidates.
nn::NetworkSpec nfm_spec(int candidates = 3, int base_channels = 32, int max_channels = 128);

/// Predicted noise residual for channels [y_noisy, sigma_map].
ImagePlane ansn_predict(const nn::Network<float>& net, const ImagePlane& y_noisy,
                        const NoiseLevelMap& sigma_map);
/// y_ia - ansn_predict(net, y_ia, sigma_map), unclamped.
ImagePlane denoise(const nn::Network<float>& net, const ImagePlane& y_ia,
                   const NoiseLevelMap& sigma_map);
/// Fused luminance in (0, 1). Throws ArityError when the counts of
/// candidates, maps, and network input pairs disagree.
ImagePlane fuse(const nn::Network<float>& net, std::span<const ImagePlane> candidates,
                std::span<const NoiseLevelMap> maps);

/// mean (pred - truth)^2. grad_pred receives its gradient when non-null.
template <class T>
double ansn_loss(const Plane<T>& pred_noise, const Plane<T>& true_noise,
                 Plane<T>* grad_pred = nullptr);

struct NfmLossValue {
    double mse = 0.0;
    double ssim = 0.0;  ///< 1 - mean SSIM

    double total() const { return mse + ssim; }
    std::vector<nn::LossTerm> terms() const;
};

/// mean squared error plus (1 - mean SSIM).
template <class T>
NfmLossValue nfm_loss(const Plane<T>& y_nf, const Plane<T>& y_high, Plane<T>* grad_nf = nullptr);

}  // namespace bread::noise
