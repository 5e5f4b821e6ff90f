#include "bread/ian.hpp"

#include "detail/finite.hpp"

#include <cmath>

namespace bread::ian {

nn::NetworkSpec network_spec(int base_channels, int max_channels)
{
    nn::NetworkSpec spec;
    spec.in_channels = 1;
    spec.out_channels = 1;
    spec.base_channels = base_channels;
    spec.max_channels = max_channels;
    spec.final_activation = nn::Activation::sigmoid;
    return spec;
}

IllumMap estimate_illumination(const nn::Network<float>& net, const ImagePlane& y_low)
{
    const auto out = net.forward(nn::stack_planes<float, float>({&y_low}));
    return nn::channel_plane<float>(out, 0);
}

ImagePlane adjust_luminance(const ImagePlane& y_low, const IllumMap& l_hat)
{
    require_same_shape(y_low, l_hat, "adjust_luminance");
    ImagePlane out(y_low.height(), y_low.width());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(y_low[i]) /
                                    (static_cast<double>(l_hat[i]) + kEpsilon));
    }
    return out;
}

std::vector<nn::LossTerm> LossValue::terms() const
{
    return {{"fidelity", fidelity}, {"smoothness", smoothness}, {"consistency", consistency}};
}

template <class T>
LossValue ian_loss(const Plane<T>& y_low, const Plane<T>& y_high, const Plane<T>& l_hat,
                   Plane<T>* grad_l_hat, LossWeights weights)
{
    require_same_shape(y_low, y_high, "ian_loss");
    require_same_shape(y_low, l_hat, "ian_loss");
    const int h = y_low.height();
    const int w = y_low.width();
    const double n = static_cast<double>(y_low.size());
    const auto gy = spatial_gradients(plane_cast<double>(y_low));
    const auto gl = spatial_gradients(plane_cast<double>(l_hat));

    LossValue v;
    Plane<double> grad(h, w);
    for (std::size_t i = 0; i < y_low.size(); ++i) {
        const double denom = static_cast<double>(l_hat[i]) + kEpsilon;
        const double r = static_cast<double>(y_low[i]) / denom - static_cast<double>(y_high[i]);
        v.fidelity += r * r;
        grad[i] = -2.0 * r * static_cast<double>(y_low[i]) / (denom * denom) / n;
    }
    v.fidelity /= n;

    Plane<double> gdx(h, w), gdy(h, w);
    double smooth = 0.0;
    double consist = 0.0;
    const auto accumulate = [&](const Plane<double>& dl, const Plane<double>& dy, Plane<double>& g) {
        for (std::size_t i = 0; i < dl.size(); ++i) {
            const double weight = 1.0 / (std::abs(dy[i]) + kEpsilon);
            smooth += std::abs(weight * dl[i]);
            const double diff = dl[i] - dy[i];
            consist += std::abs(diff);
            g[i] = (weights.alpha * weight * detail::sign(dl[i]) +
                    weights.beta * detail::sign(diff)) / n;
        }
    };
    accumulate(gl.dx, gy.dx, gdx);
    accumulate(gl.dy, gy.dy, gdy);
    v.smoothness = weights.alpha * smooth / n;
    v.consistency = weights.beta * consist / n;

    detail::require_finite("fidelity", v.fidelity);
    detail::require_finite("smoothness", v.smoothness);
    detail::require_finite("consistency", v.consistency);

    if (grad_l_hat != nullptr) {
        spatial_gradients_backward(gdx, gdy, grad);
        *grad_l_hat = plane_cast<T>(grad);
    }
    return v;
}

template LossValue ian_loss<float>(const Plane<float>&, const Plane<float>&, const Plane<float>&,
                                   Plane<float>*, LossWeights);
template LossValue ian_loss<double>(const Plane<double>&, const Plane<double>&,
                                    const Plane<double>&, Plane<double>*, LossWeights);

}  // namespace bread::ian
