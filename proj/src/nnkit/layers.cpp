#include "bread/nnkit/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace bread::nn {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using StridedMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <class T>
using ConstStridedMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

// Upper bound on the number of im2col elements materialized at once.
constexpr std::size_t kMaxColumnElements = std::size_t{1} << 21;

int rows_per_block(int channels, int height, int width)
{
    const std::size_t per_row = static_cast<std::size_t>(channels) * 9 * width;
    const std::size_t rows = std::max<std::size_t>(1, kMaxColumnElements / per_row);
    return static_cast<int>(std::min<std::size_t>(rows, static_cast<std::size_t>(height)));
}

// col[(c*9 + ky*3 + kx), (r - r0)*W + x] = x[c, r + ky - 1, x + kx - 1]
template <class T>
void im2col(const Tensor<T>& x, int r0, int r1, T* col)
{
    const int w = x.width;
    const std::size_t n = static_cast<std::size_t>(r1 - r0) * w;
    for (int c = 0; c < x.channels; ++c) {
        const T* src = x.channel(c);
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                T* row = col + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * n;
                for (int r = r0; r < r1; ++r) {
                    T* dst = row + static_cast<std::size_t>(r - r0) * w;
                    const int sr = r + ky - 1;
                    if (sr < 0 || sr >= x.height) {
                        std::fill_n(dst, w, T{});
                        continue;
                    }
                    const T* line = src + static_cast<std::size_t>(sr) * w;
                    const int shift = kx - 1;
                    if (shift == 0) {
                        std::memcpy(dst, line, sizeof(T) * w);
                    } else if (shift < 0) {
                        dst[0] = T{};
                        std::memcpy(dst + 1, line, sizeof(T) * (w - 1));
                    } else {
                        std::memcpy(dst, line + 1, sizeof(T) * (w - 1));
                        dst[w - 1] = T{};
                    }
                }
            }
        }
    }
}

template <class T>
void col2im_add(const T* col, int r0, int r1, Tensor<T>& x)
{
    const int w = x.width;
    const std::size_t n = static_cast<std::size_t>(r1 - r0) * w;
    for (int c = 0; c < x.channels; ++c) {
        T* dst_plane = x.channel(c);
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const T* row = col + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * n;
                for (int r = r0; r < r1; ++r) {
                    const int sr = r + ky - 1;
                    if (sr < 0 || sr >= x.height) {
                        continue;
                    }
                    const T* src = row + static_cast<std::size_t>(r - r0) * w;
                    T* line = dst_plane + static_cast<std::size_t>(sr) * w;
                    const int shift = kx - 1;
                    const int j0 = shift < 0 ? 1 : 0;
                    const int j1 = shift > 0 ? w - 1 : w;
                    for (int j = j0; j < j1; ++j) {
                        line[j + shift] += src[j];
                    }
                }
            }
        }
    }
}

template <class T>
std::vector<T>& scratch(int slot)
{
    thread_local std::vector<T> buffers[2];
    return buffers[slot];
}

}  // namespace

template <class T>
Tensor<T> conv3x3_forward(const Tensor<T>& x, const T* weight, const T* bias, int out_channels)
{
    const int k = x.channels * 9;
    const int w = x.width;
    const auto hw = static_cast<Eigen::Index>(x.plane_size());
    Tensor<T> y(out_channels, x.height, x.width);
    Eigen::Map<const RowMat<T>> wmat(weight, out_channels, k);
    const int block = rows_per_block(x.channels, x.height, x.width);
    auto& col = scratch<T>(0);
    for (int r0 = 0; r0 < x.height; r0 += block) {
        const int r1 = std::min(x.height, r0 + block);
        const Eigen::Index n = static_cast<Eigen::Index>(r1 - r0) * w;
        col.resize(static_cast<std::size_t>(k) * n);
        im2col(x, r0, r1, col.data());
        Eigen::Map<const RowMat<T>> cmat(col.data(), k, n);
        StridedMap<T> yblk(y.data.data() + static_cast<std::size_t>(r0) * w, out_channels, n,
                           Eigen::OuterStride<>(hw));
        yblk.noalias() = wmat * cmat;
        for (int o = 0; o < out_channels; ++o) {
            yblk.row(o).array() += bias[o];
        }
    }
    return y;
}

template <class T>
void conv3x3_backward(const Tensor<T>& x, const T* weight, int out_channels,
                      const Tensor<T>& grad_output, T* grad_weight, T* grad_bias,
                      Tensor<T>* grad_input)
{
    if (grad_output.channels != out_channels || grad_output.height != x.height ||
        grad_output.width != x.width) {
        throw ShapeError("conv3x3_backward: gradient shape mismatch");
    }
    const int k = x.channels * 9;
    const int w = x.width;
    const auto hw = static_cast<Eigen::Index>(x.plane_size());
    Eigen::Map<const RowMat<T>> wmat(weight, out_channels, k);
    Eigen::Map<RowMat<T>> dwmat(grad_weight, out_channels, k);
    if (grad_input) {
        *grad_input = Tensor<T>(x.channels, x.height, x.width);
    }
    const int block = rows_per_block(x.channels, x.height, x.width);
    auto& col = scratch<T>(0);
    auto& dcol = scratch<T>(1);
    for (int r0 = 0; r0 < x.height; r0 += block) {
        const int r1 = std::min(x.height, r0 + block);
        const Eigen::Index n = static_cast<Eigen::Index>(r1 - r0) * w;
        col.resize(static_cast<std::size_t>(k) * n);
        im2col(x, r0, r1, col.data());
        Eigen::Map<const RowMat<T>> cmat(col.data(), k, n);
        ConstStridedMap<T> gblk(grad_output.data.data() + static_cast<std::size_t>(r0) * w,
                                out_channels, n, Eigen::OuterStride<>(hw));
        dwmat.noalias() += gblk * cmat.transpose();
        for (int o = 0; o < out_channels; ++o) {
            T sum{};
            for (Eigen::Index i = 0; i < n; ++i) {
                sum += gblk(o, i);
            }
            grad_bias[o] += sum;
        }
        if (grad_input) {
            dcol.resize(static_cast<std::size_t>(k) * n);
            Eigen::Map<RowMat<T>> dcmat(dcol.data(), k, n);
            dcmat.noalias() = wmat.transpose() * gblk;
            col2im_add(dcol.data(), r0, r1, *grad_input);
        }
    }
}

template <class T>
void relu_inplace(Tensor<T>& x)
{
    for (T& v : x.data) {
        v = v > T{} ? v : T{};
    }
}

template <class T>
void relu_backward(const Tensor<T>& output, Tensor<T>& grad)
{
    for (std::size_t i = 0; i < grad.data.size(); ++i) {
        if (!(output.data[i] > T{})) {
            grad.data[i] = T{};
        }
    }
}

template <class T>
void sigmoid_inplace(Tensor<T>& x)
{
    for (T& v : x.data) {
        v = T{1} / (T{1} + std::exp(-v));
    }
}

template <class T>
void sigmoid_backward(const Tensor<T>& output, Tensor<T>& grad)
{
    for (std::size_t i = 0; i < grad.data.size(); ++i) {
        const T s = output.data[i];
        grad.data[i] *= s * (T{1} - s);
    }
}

template <class T>
Tensor<T> maxpool2_forward(const Tensor<T>& x)
{
    if (x.height % 2 != 0 || x.width % 2 != 0) {
        throw SizeError("maxpool2: odd spatial size");
    }
    Tensor<T> y(x.channels, x.height / 2, x.width / 2);
    for (int c = 0; c < x.channels; ++c) {
        for (int i = 0; i < y.height; ++i) {
            for (int j = 0; j < y.width; ++j) {
                y.at(c, i, j) = std::max({x.at(c, 2 * i, 2 * j), x.at(c, 2 * i, 2 * j + 1),
                                          x.at(c, 2 * i + 1, 2 * j),
                                          x.at(c, 2 * i + 1, 2 * j + 1)});
            }
        }
    }
    return y;
}

template <class T>
Tensor<T> maxpool2_backward(const Tensor<T>& x, const Tensor<T>& grad_output)
{
    Tensor<T> dx(x.channels, x.height, x.width);
    for (int c = 0; c < x.channels; ++c) {
        for (int i = 0; i < grad_output.height; ++i) {
            for (int j = 0; j < grad_output.width; ++j) {
                int bi = 2 * i;
                int bj = 2 * j;
                T best = x.at(c, bi, bj);
                for (int di = 0; di < 2; ++di) {
                    for (int dj = 0; dj < 2; ++dj) {
                        const T v = x.at(c, 2 * i + di, 2 * j + dj);
                        if (v > best) {
                            best = v;
                            bi = 2 * i + di;
                            bj = 2 * j + dj;
                        }
                    }
                }
                dx.at(c, bi, bj) += grad_output.at(c, i, j);
            }
        }
    }
    return dx;
}

template <class T>
Tensor<T> upsample2_forward(const Tensor<T>& x)
{
    Tensor<T> y(x.channels, x.height * 2, x.width * 2);
    for (int c = 0; c < x.channels; ++c) {
        for (int i = 0; i < y.height; ++i) {
            const T* src = x.channel(c) + static_cast<std::size_t>(i / 2) * x.width;
            T* dst = y.channel(c) + static_cast<std::size_t>(i) * y.width;
            for (int j = 0; j < y.width; ++j) {
                dst[j] = src[j / 2];
            }
        }
    }
    return y;
}

template <class T>
Tensor<T> upsample2_backward(const Tensor<T>& grad_output)
{
    Tensor<T> dx(grad_output.channels, grad_output.height / 2, grad_output.width / 2);
    for (int c = 0; c < grad_output.channels; ++c) {
        for (int i = 0; i < grad_output.height; ++i) {
            const T* src = grad_output.channel(c) + static_cast<std::size_t>(i) * grad_output.width;
            T* dst = dx.channel(c) + static_cast<std::size_t>(i / 2) * dx.width;
            for (int j = 0; j < grad_output.width; ++j) {
                dst[j / 2] += src[j];
            }
        }
    }
    return dx;
}

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b)
{
    if (a.height != b.height || a.width != b.width) {
        throw ShapeError("concat_channels: spatial mismatch");
    }
    Tensor<T> y(a.channels + b.channels, a.height, a.width);
    std::copy(a.data.begin(), a.data.end(), y.data.begin());
    std::copy(b.data.begin(), b.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return y;
}

template <class T>
void split_channels(const Tensor<T>& grad, int first_channels, Tensor<T>& grad_a, Tensor<T>& grad_b)
{
    grad_a = Tensor<T>(first_channels, grad.height, grad.width);
    grad_b = Tensor<T>(grad.channels - first_channels, grad.height, grad.width);
    const auto split = static_cast<std::ptrdiff_t>(grad_a.size());
    std::copy(grad.data.begin(), grad.data.begin() + split, grad_a.data.begin());
    std::copy(grad.data.begin() + split, grad.data.end(), grad_b.data.begin());
}

#define BREAD_INSTANTIATE_LAYERS(T)                                                            \
    template Tensor<T> conv3x3_forward(const Tensor<T>&, const T*, const T*, int);            \
    template void conv3x3_backward(const Tensor<T>&, const T*, int, const Tensor<T>&, T*, T*, \
                                   Tensor<T>*);                                               \
    template void relu_inplace(Tensor<T>&);                                                    \
    template void relu_backward(const Tensor<T>&, Tensor<T>&);                                 \
    template void sigmoid_inplace(Tensor<T>&);                                                 \
    template void sigmoid_backward(const Tensor<T>&, Tensor<T>&);                              \
    template Tensor<T> maxpool2_forward(const Tensor<T>&);                                     \
    template Tensor<T> maxpool2_backward(const Tensor<T>&, const Tensor<T>&);                  \
    template Tensor<T> upsample2_forward(const Tensor<T>&);                                    \
    template Tensor<T> upsample2_backward(const Tensor<T>&);                                   \
    template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                    \
    template void split_channels(const Tensor<T>&, int, Tensor<T>&, Tensor<T>&);

BREAD_INSTANTIATE_LAYERS(float)
BREAD_INSTANTIATE_LAYERS(double)

#undef BREAD_INSTANTIATE_LAYERS

}  // namespace bread::nn
