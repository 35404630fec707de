#pragma once

/// @file core.hpp
/// @brief Pixel coordinates, dense 2-D images and the library error type.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vco {

/// Raised for contract violations and unrecoverable pipeline states.
/// The message is the short machine-checkable reason (e.g. "no centerline").
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integer pixel coordinate, image frame (origin top-left, x to the right, y down).
struct Pixel {
    int x = 0;
    int y = 0;

    friend constexpr bool operator==(const Pixel&, const Pixel&) = default;
    friend constexpr auto operator<=>(const Pixel& a, const Pixel& b) {
        if (auto c = a.y <=> b.y; c != 0) return c;
        return a.x <=> b.x;
    }
    constexpr Pixel operator+(const Pixel& o) const { return {x + o.x, y + o.y}; }
    constexpr Pixel operator-(const Pixel& o) const { return {x - o.x, y - o.y}; }
};

struct Vec2d {
    double x = 0.0;
    double y = 0.0;

    friend constexpr bool operator==(const Vec2d&, const Vec2d&) = default;
    constexpr Vec2d operator+(const Vec2d& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2d operator-(const Vec2d& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2d operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2d to_vec(Pixel p) { return {static_cast<double>(p.x), static_cast<double>(p.y)}; }
inline Pixel round_pixel(Vec2d v) {
    return {static_cast<int>(std::lround(v.x)), static_cast<int>(std::lround(v.y))};
}
inline double distance(Pixel a, Pixel b) { return std::hypot(double(a.x - b.x), double(a.y - b.y)); }
inline long squared_distance(Pixel a, Pixel b) {
    const long dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

/// Row-major dense image. GrayImage, ScalarMap and Mask are the instantiations
/// used across the library.
template <class T>
class Image {
public:
    using value_type = T;

    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(checked_size(width, height), fill) {}
    Image(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != checked_size(width, height))
            throw Error("image data size does not match dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool contains(Pixel p) const { return contains(p.x, p.y); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](Pixel p) { return data_[index(p.x, p.y)]; }
    const T& operator[](Pixel p) const { return data_[index(p.x, p.y)]; }

    /// Edge-replicated read.
    const T& clamped(int x, int y) const {
        return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
    }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }
    Pixel pixel_at(std::size_t idx) const {
        return {static_cast<int>(idx % static_cast<std::size_t>(width_)),
                static_cast<int>(idx / static_cast<std::size_t>(width_))};
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    static std::size_t checked_size(int w, int h) {
        if (w < 0 || h < 0) throw Error("negative image dimensions");
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using GrayImage = Image<std::uint8_t>;
using ScalarMap = Image<double>;
/// Binary mask, nonzero = set.
using Mask = Image<std::uint8_t>;

inline constexpr int kMinFrameSide = 16;

inline void require_frame(const GrayImage& img) {
    if (img.width() < kMinFrameSide || img.height() < kMinFrameSide)
        throw Error("frame smaller than 16x16");
}

/// Set pixels of a mask in raster order.
inline std::vector<Pixel> mask_pixels(const Mask& m) {
    std::vector<Pixel> out;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m(x, y)) out.push_back({x, y});
    return out;
}

inline Mask pixels_to_mask(const std::vector<Pixel>& pixels, int width, int height) {
    Mask m(width, height, 0);
    for (const Pixel& p : pixels)
        if (m.contains(p)) m[p] = 1;
    return m;
}

/// Pixels of the digital line from a to b (inclusive), 8-connected.
inline std::vector<Pixel> line_pixels(Pixel a, Pixel b) {
    std::vector<Pixel> out;
    int dx = std::abs(b.x - a.x), sx = a.x < b.x ? 1 : -1;
    int dy = -std::abs(b.y - a.y), sy = a.y < b.y ? 1 : -1;
    int err = dx + dy;
    Pixel p = a;
    for (;;) {
        out.push_back(p);
        if (p == b) break;
        const int e2 = 2 * err;
        if (e2 >= dy) { err += dy; p.x += sx; }
        if (e2 <= dx) { err += dx; p.y += sy; }
    }
    return out;
}

}  // namespace vco
