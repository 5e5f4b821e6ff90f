#include "bread/nnkit/adam.hpp"

#include <cmath>

namespace bread::nn {

template <class T>
OptimizerState<T> OptimizerState<T>::for_params(const NetworkParams<T>& params, AdamConfig config)
{
    OptimizerState state;
    state.config = config;
    for (const auto& t : params.tensors) {
        state.first_moment.emplace_back(t.values.size(), 0.0);
        state.second_moment.emplace_back(t.values.size(), 0.0);
    }
    return state;
}

template <class T>
void adam_step(NetworkParams<T>& params, const NetworkParams<T>& grads, OptimizerState<T>& state)
{
    const std::size_t n = params.tensors.size();
    if (grads.tensors.size() != n || state.first_moment.size() != n ||
        state.second_moment.size() != n) {
        throw ShapeError("adam_step: parameter/gradient/state tensor counts differ");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = params.tensors[i].values.size();
        if (grads.tensors[i].values.size() != m || state.first_moment[i].size() != m ||
            state.second_moment[i].size() != m) {
            throw ShapeError("adam_step: shape mismatch for '" + params.tensors[i].name + "'");
        }
    }
    const AdamConfig& c = state.config;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(c.beta1, t);
    const double bias2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < n; ++i) {
        auto& p = params.tensors[i].values;
        const auto& g = grads.tensors[i].values;
        auto& m1 = state.first_moment[i];
        auto& m2 = state.second_moment[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double gk = static_cast<double>(g[k]);
            m1[k] = c.beta1 * m1[k] + (1.0 - c.beta1) * gk;
            m2[k] = c.beta2 * m2[k] + (1.0 - c.beta2) * gk * gk;
            const double mhat = m1[k] / bias1;
            const double vhat = m2[k] / bias2;
            p[k] = static_cast<T>(static_cast<double>(p[k]) -
                                  c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon));
        }
    }
}

template struct OptimizerState<float>;
template struct OptimizerState<double>;
template void adam_step(NetworkParams<float>&, const NetworkParams<float>&, OptimizerState<float>&);
template void adam_step(NetworkParams<double>&, const NetworkParams<double>&,
                        OptimizerState<double>&);

}  // namespace bread::nn
