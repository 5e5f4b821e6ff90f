#pragma once

#include "bread/nnkit/network.hpp"

#include <cstdint>
#include <vector>

namespace bread::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

template <class T>
struct OptimizerState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;

    /// Zeroed accumulators mirroring the shapes of `params`.
    static OptimizerState for_params(const NetworkParams<T>& params, AdamConfig config = {});

    friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

/// One bias-corrected Adam update, in place. Throws ShapeError when params,
/// grads, and state disagree.
template <class T>
void adam_step(NetworkParams<T>& params, const NetworkParams<T>& grads, OptimizerState<T>& state);

}  // namespace bread::nn
