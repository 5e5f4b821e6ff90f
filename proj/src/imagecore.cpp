#include "bread/imagecore.hpp"

#include <png.h>

#include <cmath>
#include <cstdint>
#include <memory>

namespace bread {

RgbImage::RgbImage(ImagePlane red, ImagePlane green, ImagePlane blue)
    : r(std::move(red)), g(std::move(green)), b(std::move(blue))
{
    require_same_shape(r, g, "RgbImage");
    require_same_shape(r, b, "RgbImage");
}

YCbCrImage::YCbCrImage(ImagePlane luma, ImagePlane blue_diff, ImagePlane red_diff)
    : y(std::move(luma)), cb(std::move(blue_diff)), cr(std::move(red_diff))
{
    require_same_shape(y, cb, "YCbCrImage");
    require_same_shape(y, cr, "YCbCrImage");
}

void rgb_to_ycbcr_pixel(double r, double g, double b, double& y, double& cb, double& cr) noexcept
{
    y = kLumaR * r + kLumaG * g + kLumaB * b;
    cb = kCbScale * (b - y) + kChromaCenter;
    cr = kCrScale * (r - y) + kChromaCenter;
}

void ycbcr_to_rgb_pixel(double y, double cb, double cr, double& r, double& g, double& b) noexcept
{
    r = y + (cr - kChromaCenter) / kCrScale;
    b = y + (cb - kChromaCenter) / kCbScale;
    g = (y - kLumaR * r - kLumaB * b) / kLumaG;
}

namespace {

float clamp_unit(double v) noexcept
{
    return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

}  // namespace

YCbCrImage rgb_to_ycbcr(const RgbImage& img)
{
    require_same_shape(img.r, img.g, "rgb_to_ycbcr");
    require_same_shape(img.r, img.b, "rgb_to_ycbcr");
    const int h = img.height();
    const int w = img.width();
    YCbCrImage out(ImagePlane(h, w), ImagePlane(h, w), ImagePlane(h, w));
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        double y, cb, cr;
        rgb_to_ycbcr_pixel(img.r[i], img.g[i], img.b[i], y, cb, cr);
        out.y[i] = clamp_unit(y);
        out.cb[i] = clamp_unit(cb);
        out.cr[i] = clamp_unit(cr);
    }
    return out;
}

RgbImage ycbcr_to_rgb(const YCbCrImage& img)
{
    require_same_shape(img.y, img.cb, "ycbcr_to_rgb");
    require_same_shape(img.y, img.cr, "ycbcr_to_rgb");
    const int h = img.height();
    const int w = img.width();
    RgbImage out(h, w);
    for (std::size_t i = 0; i < img.y.size(); ++i) {
        double r, g, b;
        ycbcr_to_rgb_pixel(img.y[i], img.cb[i], img.cr[i], r, g, b);
        out.r[i] = clamp_unit(r);
        out.g[i] = clamp_unit(g);
        out.b[i] = clamp_unit(b);
    }
    return out;
}

ImagePlane clamp01(const ImagePlane& p)
{
    ImagePlane out = p;
    for (float& v : out.values()) {
        v = std::min(std::max(v, 0.0f), 1.0f);
    }
    return out;
}

RgbImage clamp01(const RgbImage& img)
{
    return RgbImage(clamp01(img.r), clamp01(img.g), clamp01(img.b));
}

double mean(const ImagePlane& p)
{
    double acc = 0.0;
    for (float v : p.values()) {
        acc += v;
    }
    return acc / static_cast<double>(p.size());
}

double mean_luminance(const RgbImage& img)
{
    return mean(rgb_to_ycbcr(img).y);
}

ImagePlane max_rgb(const RgbImage& img)
{
    ImagePlane out(img.height(), img.width());
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        out[i] = std::max({img.r[i], img.g[i], img.b[i]});
    }
    return out;
}

namespace {

int reflect_index(int i, int n)
{
    if (i < n) {
        return i;
    }
    return 2 * n - 2 - i;
}

int round_up(int v, int multiple)
{
    return (v + multiple - 1) / multiple * multiple;
}

}  // namespace

ImagePlane reflect_pad(const ImagePlane& p, int multiple)
{
    const int h = round_up(p.height(), multiple);
    const int w = round_up(p.width(), multiple);
    if (h == p.height() && w == p.width()) {
        return p;
    }
    if (h - p.height() >= p.height() || w - p.width() >= p.width()) {
        throw SizeError("reflect_pad: plane " + std::to_string(p.height()) + "x" +
                        std::to_string(p.width()) + " too small to pad to a multiple of " +
                        std::to_string(multiple));
    }
    ImagePlane out(h, w);
    for (int i = 0; i < h; ++i) {
        const int si = reflect_index(i, p.height());
        for (int j = 0; j < w; ++j) {
            out(i, j) = p(si, reflect_index(j, p.width()));
        }
    }
    return out;
}

ImagePlane crop(const ImagePlane& p, int top, int left, int height, int width)
{
    if (top < 0 || left < 0 || height < 1 || width < 1 || top + height > p.height() ||
        left + width > p.width()) {
        throw SizeError("crop window out of bounds");
    }
    ImagePlane out(height, width);
    for (int i = 0; i < height; ++i) {
        std::copy_n(&p(top + i, left), width, &out(i, 0));
    }
    return out;
}

RgbImage crop(const RgbImage& img, int top, int left, int height, int width)
{
    return RgbImage(crop(img.r, top, left, height, width), crop(img.g, top, left, height, width),
                    crop(img.b, top, left, height, width));
}

ImagePlane flip_horizontal(const ImagePlane& p)
{
    ImagePlane out(p.height(), p.width());
    for (int i = 0; i < p.height(); ++i) {
        for (int j = 0; j < p.width(); ++j) {
            out(i, j) = p(i, p.width() - 1 - j);
        }
    }
    return out;
}

RgbImage flip_horizontal(const RgbImage& img)
{
    return RgbImage(flip_horizontal(img.r), flip_horizontal(img.g), flip_horizontal(img.b));
}

namespace {

struct PngImageGuard {
    png_image* image;
    ~PngImageGuard() { png_image_free(image); }
};

}  // namespace

RgbImage read_png(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) {
        throw DataError("missing image file: " + path.string());
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    PngImageGuard guard{&image};
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw DataError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        throw DataError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    const int h = static_cast<int>(image.height);
    const int w = static_cast<int>(image.width);
    RgbImage out(h, w);
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
        out.r[i] = static_cast<float>(buffer[3 * i + 0]) / 255.0f;
        out.g[i] = static_cast<float>(buffer[3 * i + 1]) / 255.0f;
        out.b[i] = static_cast<float>(buffer[3 * i + 2]) / 255.0f;
    }
    return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& img)
{
    std::vector<std::uint8_t> buffer(img.pixel_count() * 3);
    auto quantize = [](float v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    };
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        buffer[3 * i + 0] = quantize(img.r[i]);
        buffer[3 * i + 1] = quantize(img.g[i]);
        buffer[3 * i + 2] = quantize(img.b[i]);
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGB;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DataError("cannot write PNG " + path.string() + ": " + msg);
    }
}

}  // namespace bread
