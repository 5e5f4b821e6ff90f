#include "bread/nnkit/network.hpp"

#include "bread/nnkit/layers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bread::nn {

void NetworkSpec::validate() const
{
    if (in_channels <= 0 || out_channels <= 0 || base_channels <= 0 || max_channels <= 0) {
        throw SpecError("network channel counts must be positive");
    }
    if (depth != 3) {
        throw SpecError("network depth must be 3, got " + std::to_string(depth));
    }
    if (base_channels > max_channels) {
        throw SpecError("base_channels exceeds max_channels");
    }
}

int NetworkSpec::level_channels(int level) const
{
    long c = base_channels;
    for (int l = 0; l < level && c < max_channels; ++l) {
        c *= 2;
    }
    return static_cast<int>(std::min<long>(c, max_channels));
}

namespace {

struct ConvShape {
    std::string name;
    int in;
    int out;
};

// Conv layers in forward order: encoder levels, bottleneck, decoder levels
// (deepest first), head.
std::vector<ConvShape> conv_layout(const NetworkSpec& spec)
{
    spec.validate();
    std::vector<ConvShape> convs;
    int prev = spec.in_channels;
    for (int l = 0; l < spec.depth; ++l) {
        const int c = spec.level_channels(l);
        const std::string p = "enc" + std::to_string(l);
        convs.push_back({p + ".conv1", prev, c});
        convs.push_back({p + ".conv2", c, c});
        prev = c;
    }
    const int mid = spec.level_channels(spec.depth);
    convs.push_back({"mid.conv1", prev, mid});
    convs.push_back({"mid.conv2", mid, mid});
    prev = mid;
    for (int l = spec.depth - 1; l >= 0; --l) {
        const int c = spec.level_channels(l);
        const std::string p = "dec" + std::to_string(l);
        convs.push_back({p + ".conv1", prev + c, c});
        convs.push_back({p + ".conv2", c, c});
        prev = c;
    }
    convs.push_back({"head", prev, spec.out_channels});
    return convs;
}

}  // namespace

std::vector<ParamTensor<float>> parameter_layout(const NetworkSpec& spec)
{
    std::vector<ParamTensor<float>> out;
    for (const auto& conv : conv_layout(spec)) {
        out.push_back({conv.name + ".weight", {conv.out, conv.in, 3, 3}, {}});
        out.push_back({conv.name + ".bias", {conv.out}, {}});
    }
    return out;
}

std::size_t parameter_count(const NetworkSpec& spec)
{
    std::size_t n = 0;
    for (const auto& conv : conv_layout(spec)) {
        n += static_cast<std::size_t>(conv.out) * conv.in * 9 + conv.out;
    }
    return n;
}

template <class T>
std::size_t NetworkParams<T>::count() const
{
    std::size_t n = 0;
    for (const auto& t : tensors) {
        n += t.values.size();
    }
    return n;
}

template <class T>
NetworkParams<T> NetworkParams<T>::zeros_like() const
{
    NetworkParams<T> out;
    out.tensors.reserve(tensors.size());
    for (const auto& t : tensors) {
        out.tensors.push_back({t.name, t.shape, std::vector<T>(t.values.size(), T{})});
    }
    return out;
}

template <class T>
const ParamTensor<T>* NetworkParams<T>::find(const std::string& name) const
{
    for (const auto& t : tensors) {
        if (t.name == name) {
            return &t;
        }
    }
    return nullptr;
}

Network<float> build_network(const NetworkSpec& spec, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    NetworkParams<float> params;
    for (auto& layout : parameter_layout(spec)) {
        std::size_t n = 1;
        for (int d : layout.shape) {
            n *= static_cast<std::size_t>(d);
        }
        layout.values.assign(n, 0.0f);
        if (layout.shape.size() == 4) {
            const double fan_in = static_cast<double>(layout.shape[1]) * 9.0;
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
            for (float& v : layout.values) {
                v = static_cast<float>(dist(rng));
            }
        }
        params.tensors.push_back(std::move(layout));
    }
    return Network<float>(spec, std::move(params));
}

template <class T>
Network<T>::Network(NetworkSpec spec, NetworkParams<T> params)
    : spec_(spec), params_(std::move(params))
{
    const auto layout = parameter_layout(spec_);
    if (layout.size() != params_.tensors.size()) {
        throw SpecError("parameter set has " + std::to_string(params_.tensors.size()) +
                        " tensors, spec requires " + std::to_string(layout.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& t = params_.tensors[i];
        std::size_t n = 1;
        for (int d : layout[i].shape) {
            n *= static_cast<std::size_t>(d);
        }
        if (t.name != layout[i].name || t.shape != layout[i].shape || t.values.size() != n) {
            throw SpecError("parameter '" + t.name + "' inconsistent with spec (expected '" +
                            layout[i].name + "')");
        }
    }
}

template <class T>
void Network<T>::check_input(const Tensor<T>& input) const
{
    if (input.channels != spec_.in_channels) {
        throw ShapeError("network expects " + std::to_string(spec_.in_channels) +
                         " input channels, got " + std::to_string(input.channels));
    }
    const int m = spec_.size_multiple();
    if (input.height <= 0 || input.width <= 0 || input.height % m != 0 || input.width % m != 0) {
        throw SizeError("network input " + std::to_string(input.height) + "x" +
                        std::to_string(input.width) + " not divisible by " + std::to_string(m));
    }
}

template <class T>
Tensor<T> Network<T>::forward(const Tensor<T>& input) const
{
    return run(input, nullptr);
}

template <class T>
Tensor<T> Network<T>::forward(const Tensor<T>& input, ForwardTrace<T>& trace) const
{
    return run(input, &trace);
}

template <class T>
Tensor<T> Network<T>::run(const Tensor<T>& input, ForwardTrace<T>* trace) const
{
    check_input(input);
    if (trace) {
        trace->conv_inputs.clear();
        trace->conv_outputs.clear();
    }
    std::size_t layer = 0;
    auto conv = [&](const Tensor<T>& x, bool relu) {
        const auto& w = params_.tensors[2 * layer];
        const auto& b = params_.tensors[2 * layer + 1];
        Tensor<T> y = conv3x3_forward(x, w.values.data(), b.values.data(), w.shape[0]);
        if (relu) {
            relu_inplace(y);
        }
        if (trace) {
            trace->conv_inputs.push_back(x);
            trace->conv_outputs.push_back(y);
        }
        ++layer;
        return y;
    };

    std::vector<Tensor<T>> skips;
    Tensor<T> x = input;
    for (int l = 0; l < spec_.depth; ++l) {
        Tensor<T> a = conv(x, true);
        skips.push_back(conv(a, true));
        x = maxpool2_forward(skips.back());
    }
    x = conv(conv(x, true), true);
    for (int l = spec_.depth - 1; l >= 0; --l) {
        Tensor<T> joined = concat_channels(upsample2_forward(x), skips[static_cast<std::size_t>(l)]);
        x = conv(conv(joined, true), true);
    }
    Tensor<T> out = conv(x, false);
    if (spec_.final_activation == Activation::sigmoid) {
        sigmoid_inplace(out);
        if (trace) {
            trace->conv_outputs.back() = out;
        }
    }
    return out;
}

template <class T>
void Network<T>::backward(const ForwardTrace<T>& trace, const Tensor<T>& grad_output,
                          NetworkParams<T>& grads, Tensor<T>* grad_input) const
{
    const std::size_t layers = params_.tensors.size() / 2;
    if (trace.conv_inputs.size() != layers) {
        throw ShapeError("backward: trace does not match network");
    }
    if (!grad_output.same_shape(trace.conv_outputs.back())) {
        throw ShapeError("backward: output gradient shape mismatch");
    }
    std::size_t layer = layers;
    // Back through conv `layer - 1`; g is the gradient w.r.t. its activated
    // output on entry and w.r.t. its input on return.
    auto conv_back = [&](Tensor<T>& g, bool relu, bool need_input_grad) {
        --layer;
        if (relu) {
            relu_backward(trace.conv_outputs[layer], g);
        }
        const auto& w = params_.tensors[2 * layer];
        Tensor<T> gx;
        conv3x3_backward(trace.conv_inputs[layer], w.values.data(), w.shape[0], g,
                         grads.tensors[2 * layer].values.data(),
                         grads.tensors[2 * layer + 1].values.data(),
                         need_input_grad ? &gx : nullptr);
        g = std::move(gx);
    };

    Tensor<T> g = grad_output;
    if (spec_.final_activation == Activation::sigmoid) {
        sigmoid_backward(trace.conv_outputs.back(), g);
    }
    conv_back(g, false, true);

    std::vector<Tensor<T>> skip_grads(static_cast<std::size_t>(spec_.depth));
    for (int l = 0; l < spec_.depth; ++l) {
        conv_back(g, true, true);
        conv_back(g, true, true);
        Tensor<T> g_up;
        const int up_channels = g.channels - spec_.level_channels(l);
        split_channels(g, up_channels, g_up, skip_grads[static_cast<std::size_t>(l)]);
        g = upsample2_backward(g_up);
    }
    conv_back(g, true, true);
    conv_back(g, true, true);
    for (int l = spec_.depth - 1; l >= 0; --l) {
        // conv2 of encoder level l produced the skip; its output feeds the pool.
        const Tensor<T>& skip = trace.conv_outputs[layer - 1];
        Tensor<T> gs = maxpool2_backward(skip, g);
        const auto& extra = skip_grads[static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < gs.data.size(); ++i) {
            gs.data[i] += extra.data[i];
        }
        g = std::move(gs);
        conv_back(g, true, true);
        conv_back(g, true, l > 0 || grad_input != nullptr);
    }
    if (grad_input) {
        *grad_input = std::move(g);
    }
}

template <class T>
double OutputLoss<T>::total() const
{
    double s = 0.0;
    for (const auto& t : terms) {
        s += t.value;
    }
    return s;
}

template <class T>
GradientResult<T> gradients(const Network<T>& net, std::span<const Tensor<T>> batch,
                            const OutputLossFn<T>& output_loss, const ParamLossFn<T>& param_loss)
{
    GradientResult<T> result;
    result.grads = net.params().zeros_like();
    ForwardTrace<T> trace;
    const double inv_batch = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const Tensor<T> out = net.forward(batch[s], trace);
        OutputLoss<T> loss = output_loss(out, s);
        for (const auto& term : loss.terms) {
            if (!std::isfinite(term.value)) {
                throw NumericError(term.name, "non-finite loss term '" + term.name + "'");
            }
            auto it = std::find_if(result.terms.begin(), result.terms.end(),
                                   [&](const LossTerm& t) { return t.name == term.name; });
            if (it == result.terms.end()) {
                result.terms.push_back({term.name, term.value * inv_batch});
            } else {
                it->value += term.value * inv_batch;
            }
        }
        result.loss += loss.total() * inv_batch;
        for (T& v : loss.grad_output.data) {
            v *= static_cast<T>(inv_batch);
        }
        net.backward(trace, loss.grad_output, result.grads);
    }
    if (param_loss) {
        const double v = param_loss(net.params(), result.grads);
        if (!std::isfinite(v)) {
            throw NumericError("param_loss", "non-finite loss term 'param_loss'");
        }
        result.terms.push_back({"param_loss", v});
        result.loss += v;
    }
    return result;
}

template struct NetworkParams<float>;
template struct NetworkParams<double>;
template class Network<float>;
template class Network<double>;
template struct OutputLoss<float>;
template struct OutputLoss<double>;
template GradientResult<float> gradients(const Network<float>&, std::span<const Tensor<float>>,
                                         const OutputLossFn<float>&, const ParamLossFn<float>&);
template GradientResult<double> gradients(const Network<double>&, std::span<const Tensor<double>>,
                                          const OutputLossFn<double>&, const ParamLossFn<double>&);

}  // namespace bread::nn
