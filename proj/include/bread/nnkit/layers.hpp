#pragma once

// Differentiable primitives of the U-shaped sub-networks. Each forward has a
// matching backward that maps the output gradient to input (and parameter)
// gradients. Instantiated for float and double.

#include "bread/nnkit/tensor.hpp"

namespace bread::nn {

/// 3x3 convolution, stride 1, zero padding 1. Weights are laid out
/// [out][in][ky][kx]; bias is [out].
template <class T>
Tensor<T> conv3x3_forward(const Tensor<T>& x, const T* weight, const T* bias, int out_channels);

/// Accumulates into grad_weight/grad_bias; writes grad_input when non-null.
template <class T>
void conv3x3_backward(const Tensor<T>& x, const T* weight, int out_channels,
                      const Tensor<T>& grad_output, T* grad_weight, T* grad_bias,
                      Tensor<T>* grad_input);

template <class T>
void relu_inplace(Tensor<T>& x);
/// grad *= (output > 0)
template <class T>
void relu_backward(const Tensor<T>& output, Tensor<T>& grad);

template <class T>
void sigmoid_inplace(Tensor<T>& x);
/// grad *= output * (1 - output)
template <class T>
void sigmoid_backward(const Tensor<T>& output, Tensor<T>& grad);

/// 2x2 max-pool, stride 2. Ties resolve to the first element in raster order.
template <class T>
Tensor<T> maxpool2_forward(const Tensor<T>& x);
template <class T>
Tensor<T> maxpool2_backward(const Tensor<T>& x, const Tensor<T>& grad_output);

/// Nearest-neighbor x2 upsampling.
template <class T>
Tensor<T> upsample2_forward(const Tensor<T>& x);
template <class T>
Tensor<T> upsample2_backward(const Tensor<T>& grad_output);

/// Channel concatenation, a's channels first.
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
/// Splits a gradient for concat_channels(a, b) back into its two parts.
template <class T>
void split_channels(const Tensor<T>& grad, int first_channels, Tensor<T>& grad_a, Tensor<T>& grad_b);

}  // namespace bread::nn
