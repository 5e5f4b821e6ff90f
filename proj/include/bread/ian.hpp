#pragma once

// Illumination adjustment: the network predicts the relative illumination
// L = L_low / L_high, and the light-adjusted luminance is Y_low / (L + eps).

#include "bread/imagecore.hpp"
#include "bread/nnkit/network.hpp"

#include <vector>

namespace bread {

/// Shared small constant guarding every division by an illumination map.
inline constexpr double kEpsilon = 1e-4;

/// Values in (0, 1]; a sigmoid output of the illumination network.
using IllumMap = ImagePlane;

}  // namespace bread

namespace bread::ian {

struct LossWeights {
    double alpha = 4.0;  ///< smoothness of the illumination
    double beta = 0.5;   ///< gradient consistency with the input luminance
};

nn::NetworkSpec network_spec(int base_channels = 32, int max_channels = 128);

/// One forward pass. y_low must already be padded to a multiple of 8.
IllumMap estimate_illumination(const nn::Network<float>& net, const ImagePlane& y_low);

/// y_low / (l_hat + eps), unclamped.
ImagePlane adjust_luminance(const ImagePlane& y_low, const IllumMap& l_hat);

struct LossValue {
    double fidelity = 0.0;
    double smoothness = 0.0;   ///< already multiplied by alpha
    double consistency = 0.0;  ///< already multiplied by beta

    double total() const { return fidelity + smoothness + consistency; }
    std::vector<nn::LossTerm> terms() const;
};

/// fidelity    = mean (y_low / (l + eps) - y_high)^2
/// smoothness  = alpha * sum over d in {x, y} of mean |W_d * d(l)|,
///               W_d = 1 / (|d(y_low)| + eps)
/// consistency = beta * sum over d in {x, y} of mean |d(l) - d(y_low)|
///
/// Means run over all H*W positions (the zero border differences included).
/// When grad_l_hat is non-null it receives d(total)/d(l_hat); sign(0) = 0.
/// Throws NumericError naming the first non-finite term.
template <class T>
LossValue ian_loss(const Plane<T>& y_low, const Plane<T>& y_high, const Plane<T>& l_hat,
                   Plane<T>* grad_l_hat = nullptr, LossWeights weights = {});

}  // namespace bread::ian
