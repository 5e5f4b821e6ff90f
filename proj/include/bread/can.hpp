#pragma once

// Chrominance regeneration guided by a target luminance, and the
// multi-exposure pair sampler used to train the exposure-robust variant.

#include "bread/imagecore.hpp"
#include "bread/nnkit/network.hpp"

#include <random>
#include <string>
#include <vector>

namespace bread::can {

struct ChromaPair {
    ImagePlane cb, cr;

    friend bool operator==(const ChromaPair&, const ChromaPair&) = default;
};

/// Frames of one scene ordered by increasing exposure.
struct ExposureSequence {
    std::string scene;
    std::vector<RgbImage> frames;
};

/// Input channels [Y_low, Cb_low, Cr_low, Y_guide]; outputs [Cb, Cr].
nn::NetworkSpec network_spec(int base_channels = 32, int max_channels = 128);

ChromaPair adapt_color(const nn::Network<float>& net, const ImagePlane& y_low,
                       const ImagePlane& cb_low, const ImagePlane& cr_low,
                       const ImagePlane& y_guide);

struct LossValue {
    double cb = 0.0;
    double cr = 0.0;

    double total() const { return cb + cr; }
    std::vector<nn::LossTerm> terms() const;
};

/// mean (cb - cb_ref)^2 + mean (cr - cr_ref)^2, with optional gradients.
template <class T>
LossValue can_loss(const Plane<T>& cb, const Plane<T>& cr, const Plane<T>& cb_ref,
                   const Plane<T>& cr_ref, Plane<T>* grad_cb = nullptr, Plane<T>* grad_cr = nullptr);

inline LossValue can_loss(const ChromaPair& pred, const ChromaPair& ref)
{
    return can_loss(pred.cb, pred.cr, ref.cb, ref.cr);
}

struct MePair {
    std::size_t source = 0;  ///< index of the input exposure
    std::size_t target = 0;  ///< index of the guide/target exposure
    YCbCrImage input;
    ImagePlane guide;
    ChromaPair chroma;
};

/// Draws an ordered pair of distinct exposures uniformly. Throws DataError
/// for sequences shorter than 2.
MePair sample_me_pair(const ExposureSequence& seq, std::mt19937_64& rng);

}  // namespace bread::can
