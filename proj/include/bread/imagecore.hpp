#pragma once

// Image containers, the YCbCr decomposition, and the first-order difference
// operator shared by the losses.
//
// Layout: every plane is a dense row-major array, element (row, col) lives at
// values[row * width + col]. Pixel values are real numbers; images crossing
// module boundaries are normalized to [0, 1] (8-bit files are divided by 255
// on load, multiplied and rounded on save).

#include "bread/error.hpp"

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bread {

template <class T>
class Plane {
public:
    using value_type = T;

    Plane() = default;
    Plane(int height, int width, T fill = T{}) : height_(height), width_(width)
    {
        if (height < 1 || width < 1) {
            throw SizeError("plane dimensions must be positive, got " + std::to_string(height) +
                            "x" + std::to_string(width));
        }
        values_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
    }
    Plane(int height, int width, std::vector<T> values) : Plane(height, width)
    {
        if (values.size() != values_.size()) {
            throw ShapeError("plane value count does not match " + std::to_string(height) + "x" +
                             std::to_string(width));
        }
        values_ = std::move(values);
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    T& operator()(int row, int col) noexcept { return values_[index(row, col)]; }
    const T& operator()(int row, int col) const noexcept { return values_[index(row, col)]; }
    T& operator[](std::size_t i) noexcept { return values_[i]; }
    const T& operator[](std::size_t i) const noexcept { return values_[i]; }

    std::span<T> values() noexcept { return values_; }
    std::span<const T> values() const noexcept { return values_; }
    T* data() noexcept { return values_.data(); }
    const T* data() const noexcept { return values_.data(); }

    bool same_shape(const Plane& other) const noexcept
    {
        return height_ == other.height_ && width_ == other.width_;
    }

    template <class U>
    bool same_shape(const Plane<U>& other) const noexcept
    {
        return height_ == other.height() && width_ == other.width();
    }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    std::size_t index(int row, int col) const noexcept
    {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<T> values_;
};

using ImagePlane = Plane<float>;

/// Throws ShapeError unless a and b share height and width.
template <class A, class B>
void require_same_shape(const Plane<A>& a, const Plane<B>& b, const char* what)
{
    if (a.height() != b.height() || a.width() != b.width()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.height()) +
                         "x" + std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                         "x" + std::to_string(b.width()));
    }
}

template <class To, class From>
Plane<To> plane_cast(const Plane<From>& p)
{
    Plane<To> out(p.height(), p.width());
    std::transform(p.values().begin(), p.values().end(), out.values().begin(),
                   [](From v) { return static_cast<To>(v); });
    return out;
}

struct RgbImage {
    ImagePlane r, g, b;

    RgbImage() = default;
    RgbImage(int height, int width, float fill = 0.0f)
        : r(height, width, fill), g(height, width, fill), b(height, width, fill) {}
    RgbImage(ImagePlane red, ImagePlane green, ImagePlane blue);

    int height() const noexcept { return r.height(); }
    int width() const noexcept { return r.width(); }
    std::size_t pixel_count() const noexcept { return r.size(); }

    ImagePlane& channel(int c) { return c == 0 ? r : (c == 1 ? g : b); }
    const ImagePlane& channel(int c) const { return c == 0 ? r : (c == 1 ? g : b); }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Full-range YCbCr; cb and cr are centered on 0.5.
struct YCbCrImage {
    ImagePlane y, cb, cr;

    YCbCrImage() = default;
    YCbCrImage(ImagePlane luma, ImagePlane blue_diff, ImagePlane red_diff);

    int height() const noexcept { return y.height(); }
    int width() const noexcept { return y.width(); }

    friend bool operator==(const YCbCrImage&, const YCbCrImage&) = default;
};

// Full-range BT.601 analog coefficients on normalized values. This is the
// single definition of the luma/chroma decomposition for the whole library.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;
inline constexpr double kCbScale = 0.564;
inline constexpr double kCrScale = 0.713;
inline constexpr double kChromaCenter = 0.5;

YCbCrImage rgb_to_ycbcr(const RgbImage& img);
RgbImage ycbcr_to_rgb(const YCbCrImage& img);

/// Unclamped conversions; exact algebraic inverses of each other.
void rgb_to_ycbcr_pixel(double r, double g, double b, double& y, double& cb, double& cr) noexcept;
void ycbcr_to_rgb_pixel(double y, double cb, double cr, double& r, double& g, double& b) noexcept;

template <class T>
struct Gradients {
    Plane<T> dx;  ///< p(i, j+1) - p(i, j); last column 0
    Plane<T> dy;  ///< p(i+1, j) - p(i, j); last row 0
};

/// Forward differences with a zero trailing row/column.
template <class T>
Gradients<T> spatial_gradients(const Plane<T>& p)
{
    const int h = p.height();
    const int w = p.width();
    Gradients<T> g{Plane<T>(h, w), Plane<T>(h, w)};
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j + 1 < w; ++j) {
            g.dx(i, j) = p(i, j + 1) - p(i, j);
        }
    }
    for (int i = 0; i + 1 < h; ++i) {
        for (int j = 0; j < w; ++j) {
            g.dy(i, j) = p(i + 1, j) - p(i, j);
        }
    }
    return g;
}

/// Adjoint of spatial_gradients: accumulates d(loss)/d(p) given the
/// upstream gradients with respect to dx and dy.
template <class T>
void spatial_gradients_backward(const Plane<T>& grad_dx, const Plane<T>& grad_dy, Plane<T>& grad_p)
{
    const int h = grad_p.height();
    const int w = grad_p.width();
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j + 1 < w; ++j) {
            grad_p(i, j + 1) += grad_dx(i, j);
            grad_p(i, j) -= grad_dx(i, j);
        }
    }
    for (int i = 0; i + 1 < h; ++i) {
        for (int j = 0; j < w; ++j) {
            grad_p(i + 1, j) += grad_dy(i, j);
            grad_p(i, j) -= grad_dy(i, j);
        }
    }
}

ImagePlane clamp01(const ImagePlane& p);
RgbImage clamp01(const RgbImage& img);

/// Mean value, accumulated in double.
double mean(const ImagePlane& p);
double mean_luminance(const RgbImage& img);

/// Per-pixel max over R, G, B.
ImagePlane max_rgb(const RgbImage& img);

/// Pads bottom and right by mirror reflection (edge not repeated) so both
/// dimensions become multiples of `multiple`. Requires each dimension to be
/// larger than the padding it receives.
ImagePlane reflect_pad(const ImagePlane& p, int multiple);
ImagePlane crop(const ImagePlane& p, int top, int left, int height, int width);
RgbImage crop(const RgbImage& img, int top, int left, int height, int width);
ImagePlane flip_horizontal(const ImagePlane& p);
RgbImage flip_horizontal(const RgbImage& img);

/// Reads any 8-bit or 16-bit PNG, converted to RGB and normalized to [0, 1].
/// Throws DataError when the file is missing or undecodable.
RgbImage read_png(const std::filesystem::path& path);
/// Writes an 8-bit RGB PNG; values are clamped, scaled by 255, and rounded.
void write_png(const std::filesystem::path& path, const RgbImage& img);

}  // namespace bread
