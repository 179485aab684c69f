#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "evtrack/errors.hpp"

namespace evtrack {

// Row-major interleaved image. Color channels are float in [0, 1].
template <class T>
struct Image {
    int width = 0, height = 0, channels = 1;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, int c, T fill = T(0)) : width(w), height(h), channels(c), data(std::size_t(w) * h * c, fill) {}

    T& at(int x, int y, int c = 0) { return data[(std::size_t(y) * width + x) * channels + c]; }
    const T& at(int x, int y, int c = 0) const { return data[(std::size_t(y) * width + x) * channels + c]; }

    bool empty() const { return data.empty(); }
};

using ImageF = Image<float>;
using ImageU8 = Image<std::uint8_t>;
using ImageU16 = Image<std::uint16_t>;

inline float luminance(float r, float g, float b) {
    return 0.299f * r + 0.587f * g + 0.114f * b;
}

// 3-channel color to single-channel luminance (Rec. 601 weights).
inline ImageF to_luminance(const ImageF& rgb) {
    ImageF out(rgb.width, rgb.height, 1);
    for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x)
            out.at(x, y) = luminance(rgb.at(x, y, 0), rgb.at(x, y, 1), rgb.at(x, y, 2));
    return out;
}

// Bilinear sample with edge clamp; u, v in [0, 1] map across the full image.
inline void sample_bilinear(const ImageF& img, double u, double v, float* out) {
    const double fx = u * img.width - 0.5;
    const double fy = v * img.height - 0.5;
    const int x0 = int(std::floor(fx)), y0 = int(std::floor(fy));
    const double ax = fx - x0, ay = fy - y0;
    const auto cl = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };
    const int x0c = cl(x0, img.width), x1c = cl(x0 + 1, img.width);
    const int y0c = cl(y0, img.height), y1c = cl(y0 + 1, img.height);
    for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(x0c, y0c, c) * (1 - ax) + img.at(x1c, y0c, c) * ax;
        const double bot = img.at(x0c, y1c, c) * (1 - ax) + img.at(x1c, y1c, c) * ax;
        out[c] = float(top * (1 - ay) + bot * ay);
    }
}

// Resamples to (w, h) with plain bilinear interpolation.
inline ImageF resize_bilinear(const ImageF& img, int w, int h) {
    ImageF out(w, h, img.channels);
    std::vector<float> px(img.channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            sample_bilinear(img, (x + 0.5) / w, (y + 0.5) / h, px.data());
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = px[c];
        }
    return out;
}

// --- PNG I/O -------------------------------------------------------------------

namespace detail {
struct PngCloser {
    std::FILE* f;
    ~PngCloser() {
        if (f) std::fclose(f);
    }
};
}  // namespace detail

// Reads an 8-bit PNG as 3-channel RGB (palette and gray inputs are expanded).
inline ImageU8 load_png_rgb8(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open image: " + path);
    detail::PngCloser closer{f};

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed decoding PNG: " + path);
    }
    png_init_io(png, f);
    png_read_info(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int w = int(png_get_image_width(png, info));
    const int h = int(png_get_image_height(png, info));
    ImageU8 img(w, h, 3);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = img.data.data() + std::size_t(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline void save_png_rgb8(const std::string& path, const ImageU8& img) {
    if (img.channels != 3) throw IoError("save_png_rgb8 needs a 3-channel image");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open image for writing: " + path);
    detail::PngCloser closer{f};

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed encoding PNG: " + path);
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.data.data() + std::size_t(y) * img.width * 3);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// 16-bit single-channel PNG, used for depth maps in millimeters.
inline ImageU16 load_png_gray16(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open image: " + path);
    detail::PngCloser closer{f};

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed decoding PNG: " + path);
    }
    png_init_io(png, f);
    png_read_info(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("expected 16-bit grayscale PNG: " + path);
    }
    png_set_swap(png);  // PNG stores big-endian samples
    png_read_update_info(png, info);

    const int w = int(png_get_image_width(png, info));
    const int h = int(png_get_image_height(png, info));
    ImageU16 img(w, h, 1);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = reinterpret_cast<png_bytep>(img.data.data() + std::size_t(y) * w);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline void save_png_gray16(const std::string& path, const ImageU16& img) {
    if (img.channels != 1) throw IoError("save_png_gray16 needs a 1-channel image");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open image for writing: " + path);
    detail::PngCloser closer{f};

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed encoding PNG: " + path);
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_set_swap(png);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(const_cast<std::uint16_t*>(img.data.data()) + std::size_t(y) * img.width);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline ImageF to_float(const ImageU8& img) {
    ImageF out(img.width, img.height, img.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = img.data[i] / 255.0f;
    return out;
}

inline ImageU8 to_u8(const ImageF& img) {
    ImageU8 out(img.width, img.height, img.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = std::uint8_t(std::clamp(std::lround(img.data[i] * 255.0f), 0l, 255l));
    return out;
}

}  // namespace evtrack
