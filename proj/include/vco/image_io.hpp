#pragma once

/// @file image_io.hpp
/// @brief 8-bit grayscale PGM/PNG reading and writing, RGB overlay PNGs and
/// raw scalar-map dumps.

#include <png.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "vco/core.hpp"

namespace vco {

namespace detail {

inline bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Channels: 1 = gray, 3 = RGB.
inline void write_png(const std::string& path, int w, int h, int channels, const std::uint8_t* data) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("cannot write " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, w, h, 8, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y)
        png_write_row(png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * w * channels));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline GrayImage read_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw Error("cannot open " + path);
    std::array<unsigned char, 8> sig{};
    if (std::fread(sig.data(), 1, 8, f.get()) != 8 || png_sig_cmp(sig.data(), 0, 8)) throw Error("not a PNG: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("libpng init failed");
    }
    GrayImage img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("corrupt PNG: " + path);
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int bit_depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGBA || color == PNG_COLOR_TYPE_PALETTE)
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    if (png_get_channels(png, info) != 1) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("unsupported PNG layout: " + path);
    }
    img = GrayImage(w, h, 0);
    for (int y = 0; y < h; ++y) png_read_row(png, img.data().data() + static_cast<std::size_t>(y) * w, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw Error("not a binary PGM: " + path);
    auto next_int = [&]() {
        int v = -1;
        for (;;) {
            in >> std::ws;
            if (in.peek() == '#') {
                std::string line;
                std::getline(in, line);
                continue;
            }
            break;
        }
        if (!(in >> v)) throw Error("corrupt PGM header: " + path);
        return v;
    };
    const int w = next_int(), h = next_int(), maxval = next_int();
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw Error("unsupported PGM: " + path);
    in.get();
    GrayImage img(w, h, 0);
    in.read(reinterpret_cast<char*>(img.data().data()), static_cast<std::streamsize>(img.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.size())) throw Error("truncated PGM: " + path);
    return img;
}

}  // namespace detail

/// Reads an 8-bit grayscale frame; format by extension (.png or .pgm).
inline GrayImage read_image(const std::string& path) {
    GrayImage img = detail::has_suffix(path, ".pgm") ? detail::read_pgm(path) : detail::read_png(path);
    require_frame(img);
    return img;
}

inline void write_image(const GrayImage& img, const std::string& path) {
    if (detail::has_suffix(path, ".pgm")) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path);
        out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
        out.write(reinterpret_cast<const char*>(img.data().data()), static_cast<std::streamsize>(img.size()));
        if (!out) throw Error("cannot write " + path);
        return;
    }
    detail::write_png(path, img.width(), img.height(), 1, img.data().data());
}

/// Frame in gray with the given pixels painted in red.
inline void write_overlay(const GrayImage& img, const std::vector<Pixel>& pixels, const std::string& path) {
    std::vector<std::uint8_t> rgb(img.size() * 3);
    for (std::size_t i = 0; i < img.size(); ++i) rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = img.data()[i];
    for (const Pixel& p : pixels) {
        if (!img.contains(p)) continue;
        const std::size_t i = img.index(p.x, p.y) * 3;
        rgb[i] = 255;
        rgb[i + 1] = 0;
        rgb[i + 2] = 0;
    }
    detail::write_png(path, img.width(), img.height(), 3, rgb.data());
}

/// Text header line "VCOMAP <w> <h>" followed by row-major float32 values.
inline void write_scalar_map(const ScalarMap& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << "VCOMAP " << m.width() << ' ' << m.height() << '\n';
    for (double v : m.data()) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), sizeof f);
    }
}

inline ScalarMap read_scalar_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::string tag;
    int w = 0, h = 0;
    if (!(in >> tag >> w >> h) || tag != "VCOMAP" || w <= 0 || h <= 0) throw Error("bad scalar map: " + path);
    in.get();
    ScalarMap m(w, h, 0.0);
    for (double& v : m.data()) {
        float f = 0;
        if (!in.read(reinterpret_cast<char*>(&f), sizeof f)) throw Error("truncated scalar map: " + path);
        v = f;
    }
    return m;
}

}  // namespace vco
