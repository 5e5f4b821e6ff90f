#include "bread/can.hpp"

#include "detail/finite.hpp"

namespace bread::can {

nn::NetworkSpec network_spec(int base_channels, int max_channels)
{
    nn::NetworkSpec spec;
    spec.in_channels = 4;
    spec.out_channels = 2;
    spec.base_channels = base_channels;
    spec.max_channels = max_channels;
    spec.final_activation = nn::Activation::sigmoid;
    return spec;
}

ChromaPair adapt_color(const nn::Network<float>& net, const ImagePlane& y_low,
                       const ImagePlane& cb_low, const ImagePlane& cr_low,
                       const ImagePlane& y_guide)
{
    const auto out =
        net.forward(nn::stack_planes<float, float>({&y_low, &cb_low, &cr_low, &y_guide}));
    return {nn::channel_plane<float>(out, 0), nn::channel_plane<float>(out, 1)};
}

std::vector<nn::LossTerm> LossValue::terms() const
{
    return {{"cb", cb}, {"cr", cr}};
}

namespace {

template <class T>
double mse(const Plane<T>& a, const Plane<T>& b, Plane<T>* grad)
{
    require_same_shape(a, b, "can_loss");
    const double n = static_cast<double>(a.size());
    if (grad != nullptr) {
        *grad = Plane<T>(a.height(), a.width());
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += d * d;
        if (grad != nullptr) {
            (*grad)[i] = static_cast<T>(2.0 * d / n);
        }
    }
    return sum / n;
}

}  // namespace

template <class T>
LossValue can_loss(const Plane<T>& cb, const Plane<T>& cr, const Plane<T>& cb_ref,
                   const Plane<T>& cr_ref, Plane<T>* grad_cb, Plane<T>* grad_cr)
{
    require_same_shape(cb, cr, "can_loss");
    LossValue v;
    v.cb = mse(cb, cb_ref, grad_cb);
    v.cr = mse(cr, cr_ref, grad_cr);
    detail::require_finite("cb", v.cb);
    detail::require_finite("cr", v.cr);
    return v;
}

template LossValue can_loss(const Plane<float>&, const Plane<float>&, const Plane<float>&,
                            const Plane<float>&, Plane<float>*, Plane<float>*);
template LossValue can_loss(const Plane<double>&, const Plane<double>&, const Plane<double>&,
                            const Plane<double>&, Plane<double>*, Plane<double>*);

MePair sample_me_pair(const ExposureSequence& seq, std::mt19937_64& rng)
{
    const std::size_t n = seq.frames.size();
    if (n < 2) {
        throw DataError("exposure sequence '" + seq.scene + "' has fewer than 2 frames");
    }
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::uniform_int_distribution<std::size_t> second(0, n - 2);
    MePair p;
    p.source = first(rng);
    p.target = second(rng);
    if (p.target >= p.source) {
        p.target += 1;
    }
    p.input = rgb_to_ycbcr(seq.frames[p.source]);
    auto target = rgb_to_ycbcr(seq.frames[p.target]);
    p.guide = std::move(target.y);
    p.chroma = {std::move(target.cb), std::move(target.cr)};
    return p;
}

}  // namespace bread::can
