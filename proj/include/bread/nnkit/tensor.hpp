#pragma once

#include "bread/error.hpp"
#include "bread/imagecore.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bread::nn {

/// Channel-major (C, H, W) activation map for one sample.
template <class T>
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int c, int h, int w, T fill = T{})
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
                   static_cast<std::size_t>(w),
               fill) {}

    std::size_t plane_size() const noexcept
    {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }
    std::size_t size() const noexcept { return data.size(); }

    T* channel(int c) noexcept { return data.data() + static_cast<std::size_t>(c) * plane_size(); }
    const T* channel(int c) const noexcept
    {
        return data.data() + static_cast<std::size_t>(c) * plane_size();
    }

    T& at(int c, int i, int j) noexcept
    {
        return data[static_cast<std::size_t>(c) * plane_size() +
                    static_cast<std::size_t>(i) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(j)];
    }
    const T& at(int c, int i, int j) const noexcept
    {
        return const_cast<Tensor*>(this)->at(c, i, j);
    }

    bool same_shape(const Tensor& o) const noexcept
    {
        return channels == o.channels && height == o.height && width == o.width;
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Stacks planes of identical shape as channels, in order.
template <class T, class P>
Tensor<T> stack_planes(std::initializer_list<const Plane<P>*> planes)
{
    const Plane<P>& first = **planes.begin();
    Tensor<T> out(static_cast<int>(planes.size()), first.height(), first.width());
    int c = 0;
    for (const Plane<P>* p : planes) {
        require_same_shape(first, *p, "stack_planes");
        T* dst = out.channel(c++);
        for (std::size_t i = 0; i < p->size(); ++i) {
            dst[i] = static_cast<T>((*p)[i]);
        }
    }
    return out;
}

template <class T, class P>
Tensor<T> stack_planes(std::span<const Plane<P>> planes)
{
    if (planes.empty()) {
        throw ArityError("stack_planes: no planes");
    }
    Tensor<T> out(static_cast<int>(planes.size()), planes[0].height(), planes[0].width());
    for (std::size_t c = 0; c < planes.size(); ++c) {
        require_same_shape(planes[0], planes[c], "stack_planes");
        T* dst = out.channel(static_cast<int>(c));
        for (std::size_t i = 0; i < planes[c].size(); ++i) {
            dst[i] = static_cast<T>(planes[c][i]);
        }
    }
    return out;
}

template <class P, class T>
Plane<P> channel_plane(const Tensor<T>& t, int c)
{
    Plane<P> out(t.height, t.width);
    const T* src = t.channel(c);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<P>(src[i]);
    }
    return out;
}

}  // namespace bread::nn
