#include "bread/noise.hpp"

#include "bread/nnkit/ssim.hpp"
#include "detail/finite.hpp"

#include <cmath>
#include <random>
#include <string>

namespace bread::noise {

void StrengthLadder::validate() const
{
    if (scales.size() != 3) {
        throw DomainError("strength ladder needs 3 scales, got " + std::to_string(scales.size()));
    }
    for (std::size_t k = 0; k < scales.size(); ++k) {
        if (!(scales[k] >= 0.0) || (k > 0 && !(scales[k] > scales[k - 1]))) {
            throw DomainError("strength ladder scales must be nonnegative and strictly increasing");
        }
    }
}

NoiseLevelMap noise_level_map(const IllumMap& l_hat)
{
    NoiseLevelMap out(l_hat.height(), l_hat.width());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>(std::exp(-static_cast<double>(l_hat[i])));
    }
    return out;
}

NoiseLevelMap scaled(const NoiseLevelMap& map, double scale)
{
    NoiseLevelMap out(map.height(), map.width());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>(scale * static_cast<double>(map[i]));
    }
    return out;
}

ImagePlane synthesize_noisy(const ImagePlane& y_high, const NoiseLevelMap& sigma_map,
                            std::uint64_t seed)
{
    require_same_shape(y_high, sigma_map, "synthesize_noisy");
    for (float s : sigma_map.values()) {
        if (!(s >= 0.0f)) {
            throw DomainError("noise standard deviation must be nonnegative");
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    ImagePlane out(y_high.height(), y_high.width());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double z = normal(rng);
        out[i] = static_cast<float>(static_cast<double>(y_high[i]) +
                                    static_cast<double>(sigma_map[i]) * z);
    }
    return out;
}

ImagePlane synthesize_fixed_gaussian(const ImagePlane& y_high, double sigma, std::uint64_t seed)
{
    if (!(sigma >= 0.0)) {
        throw DomainError("noise standard deviation must be nonnegative");
    }
    return synthesize_noisy(y_high, NoiseLevelMap(y_high.height(), y_high.width(),
                                                  static_cast<float>(sigma)),
                            seed);
}

ImagePlane synthesize_poisson(const ImagePlane& y_high, const IllumMap& l_hat, double peak,
                              std::uint64_t seed)
{
    require_same_shape(y_high, l_hat, "synthesize_poisson");
    if (!(peak > 0.0)) {
        throw DomainError("poisson peak must be positive");
    }
    std::mt19937_64 rng(seed);
    ImagePlane out(y_high.height(), y_high.width());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double l = static_cast<double>(l_hat[i]);
        const double rate = static_cast<double>(y_high[i]) * l * peak;
        double counts = 0.0;
        if (rate > 0.0) {
            std::poisson_distribution<long long> poisson(rate);
            counts = static_cast<double>(poisson(rng));
        }
        out[i] = static_cast<float>(counts / peak / (l + kEpsilon));
    }
    return out;
}

namespace {

nn::NetworkSpec make_spec(int in, int out, int base, int max, nn::Activation act)
{
    nn::NetworkSpec spec;
    spec.in_channels = in;
    spec.out_channels = out;
    spec.base_channels = base;
    spec.max_channels = max;
    spec.final_activation = act;
    return spec;
}

}  // namespace

nn::NetworkSpec ansn_spec(int base_channels, int max_channels)
{
    return make_spec(2, 1, base_channels, max_channels, nn::Activation::none);
}

nn::NetworkSpec nfm_spec(int candidates, int base_channels, int max_channels)
{
    return make_spec(2 * candidates, 1, base_channels, max_channels, nn::Activation::sigmoid);
}

ImagePlane ansn_predict(const nn::Network<float>& net, const ImagePlane& y_noisy,
                        const NoiseLevelMap& sigma_map)
{
    const auto out = net.forward(nn::stack_planes<float, float>({&y_noisy, &sigma_map}));
    return nn::channel_plane<float>(out, 0);
}

ImagePlane denoise(const nn::Network<float>& net, const ImagePlane& y_ia,
                   const NoiseLevelMap& sigma_map)
{
    const auto residual = ansn_predict(net, y_ia, sigma_map);
    ImagePlane out(y_ia.height(), y_ia.width());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = y_ia[i] - residual[i];
    }
    return out;
}

ImagePlane fuse(const nn::Network<float>& net, std::span<const ImagePlane> candidates,
                std::span<const NoiseLevelMap> maps)
{
    if (candidates.empty() || candidates.size() != maps.size() ||
        2 * static_cast<int>(candidates.size()) != net.spec().in_channels) {
        throw ArityError("fuse: " + std::to_string(candidates.size()) + " candidates, " +
                         std::to_string(maps.size()) + " maps, network expects " +
                         std::to_string(net.spec().in_channels / 2));
    }
    std::vector<ImagePlane> channels;
    channels.reserve(2 * candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        channels.push_back(candidates[k]);
        channels.push_back(maps[k]);
    }
    const auto out = net.forward(nn::stack_planes<float, float>(std::span<const ImagePlane>(channels)));
    return nn::channel_plane<float>(out, 0);
}

template <class T>
double ansn_loss(const Plane<T>& pred_noise, const Plane<T>& true_noise, Plane<T>* grad_pred)
{
    require_same_shape(pred_noise, true_noise, "ansn_loss");
    const double n = static_cast<double>(pred_noise.size());
    double sum = 0.0;
    if (grad_pred != nullptr) {
        *grad_pred = Plane<T>(pred_noise.height(), pred_noise.width());
    }
    for (std::size_t i = 0; i < pred_noise.size(); ++i) {
        const double d = static_cast<double>(pred_noise[i]) - static_cast<double>(true_noise[i]);
        sum += d * d;
        if (grad_pred != nullptr) {
            (*grad_pred)[i] = static_cast<T>(2.0 * d / n);
        }
    }
    const double v = sum / n;
    detail::require_finite("mse", v);
    return v;
}

std::vector<nn::LossTerm> NfmLossValue::terms() const
{
    return {{"mse", mse}, {"ssim", ssim}};
}

template <class T>
NfmLossValue nfm_loss(const Plane<T>& y_nf, const Plane<T>& y_high, Plane<T>* grad_nf)
{
    NfmLossValue v;
    Plane<T> grad_ssim;
    v.mse = ansn_loss(y_nf, y_high, grad_nf);
    v.ssim = 1.0 - nn::ssim_mean(y_nf, y_high, grad_nf != nullptr ? &grad_ssim : nullptr);
    detail::require_finite("ssim", v.ssim);
    if (grad_nf != nullptr) {
        for (std::size_t i = 0; i < grad_nf->size(); ++i) {
            (*grad_nf)[i] -= grad_ssim[i];
        }
    }
    return v;
}

template double ansn_loss(const Plane<float>&, const Plane<float>&, Plane<float>*);
template double ansn_loss(const Plane<double>&, const Plane<double>&, Plane<double>*);
template NfmLossValue nfm_loss(const Plane<float>&, const Plane<float>&, Plane<float>*);
template NfmLossValue nfm_loss(const Plane<double>&, const Plane<double>&, Plane<double>*);

}  // namespace bread::noise
