#pragma once

// U-shaped sub-network shared by the illumination, denoising, fusion, and
// color stages.
//
// Topology for depth D (always 3) and level widths c_l = min(base * 2^l, max):
//
//   encoder level l < D : conv3x3 -> ReLU -> conv3x3 -> ReLU   (skip_l)
//                         2x2 max-pool
//   bottleneck          : conv3x3 -> ReLU -> conv3x3 -> ReLU   (width c_D)
//   decoder level l     : nearest x2 upsample, concat [up, skip_l],
//                         conv3x3 -> ReLU -> conv3x3 -> ReLU   (width c_l)
//   head                : conv3x3 to out_channels, then sigmoid or identity
//
// Inputs must have height and width divisible by 2^D.

#include "bread/nnkit/tensor.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bread::nn {

enum class Activation : std::uint8_t { sigmoid = 0, none = 1 };

struct NetworkSpec {
    int in_channels = 1;
    int out_channels = 1;
    int base_channels = 32;
    int max_channels = 128;
    int depth = 3;
    Activation final_activation = Activation::sigmoid;

    /// Throws SpecError on nonpositive counts, depth != 3, or base > max.
    void validate() const;
    int level_channels(int level) const;
    int size_multiple() const { return 1 << depth; }

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

template <class T>
struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<T> values;

    friend bool operator==(const ParamTensor&, const ParamTensor&) = default;
};

template <class T>
struct NetworkParams {
    std::vector<ParamTensor<T>> tensors;

    std::size_t count() const;
    /// Same names and shapes, all values zero.
    NetworkParams zeros_like() const;
    const ParamTensor<T>* find(const std::string& name) const;

    friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// Cached activations from a training forward pass.
template <class T>
struct ForwardTrace {
    std::vector<Tensor<T>> conv_inputs;
    std::vector<Tensor<T>> conv_outputs;  ///< after the layer's activation
};

template <class T>
class Network {
public:
    Network() = default;
    /// Throws SpecError when params do not match the layout implied by spec.
    Network(NetworkSpec spec, NetworkParams<T> params);

    const NetworkSpec& spec() const noexcept { return spec_; }
    const NetworkParams<T>& params() const noexcept { return params_; }
    NetworkParams<T>& params() noexcept { return params_; }

    Tensor<T> forward(const Tensor<T>& input) const;
    Tensor<T> forward(const Tensor<T>& input, ForwardTrace<T>& trace) const;

    /// Accumulates parameter gradients into `grads` (laid out like params());
    /// writes the input gradient when grad_input is non-null.
    void backward(const ForwardTrace<T>& trace, const Tensor<T>& grad_output,
                  NetworkParams<T>& grads, Tensor<T>* grad_input = nullptr) const;

private:
    Tensor<T> run(const Tensor<T>& input, ForwardTrace<T>* trace) const;
    void check_input(const Tensor<T>& input) const;

    NetworkSpec spec_;
    NetworkParams<T> params_;
};

/// Parameter names and shapes in canonical order, values empty.
std::vector<ParamTensor<float>> parameter_layout(const NetworkSpec& spec);
std::size_t parameter_count(const NetworkSpec& spec);

/// He-normal weights (std = sqrt(2 / fan_in)) from `seed`, zero biases.
Network<float> build_network(const NetworkSpec& spec, std::uint64_t seed);

template <class To, class From>
NetworkParams<To> params_cast(const NetworkParams<From>& p)
{
    NetworkParams<To> out;
    out.tensors.reserve(p.tensors.size());
    for (const auto& t : p.tensors) {
        out.tensors.push_back({t.name, t.shape, std::vector<To>(t.values.begin(), t.values.end())});
    }
    return out;
}

template <class To, class From>
Network<To> network_cast(const Network<From>& net)
{
    return Network<To>(net.spec(), params_cast<To>(net.params()));
}

/// One named contribution to a scalar loss.
struct LossTerm {
    std::string name;
    double value = 0.0;
};

/// Value of a per-sample loss and its gradient with respect to the network
/// output.
template <class T>
struct OutputLoss {
    std::vector<LossTerm> terms;
    Tensor<T> grad_output;

    double total() const;
};

template <class T>
using OutputLossFn = std::function<OutputLoss<T>(const Tensor<T>& output, std::size_t sample)>;

/// Optional loss on the parameters themselves; returns its value and adds its
/// gradient into `grads`.
template <class T>
using ParamLossFn = std::function<double(const NetworkParams<T>& params, NetworkParams<T>& grads)>;

template <class T>
struct GradientResult {
    double loss = 0.0;
    std::vector<LossTerm> terms;  ///< batch means of the per-sample terms
    NetworkParams<T> grads;
};

/// d(loss)/d(params) where loss = mean over the batch of output_loss plus
/// param_loss. Throws NumericError naming the first non-finite term.
template <class T>
GradientResult<T> gradients(const Network<T>& net, std::span<const Tensor<T>> batch,
                            const OutputLossFn<T>& output_loss,
                            const ParamLossFn<T>& param_loss = {});

}  // namespace bread::nn
