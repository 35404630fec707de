#pragma once

/// @file descriptor.hpp
/// @brief Upright 128-d gradient-orientation histogram over a fixed 32x32 patch.
///
/// The patch is split into 4x4 cells of 8x8 pixels; each sample votes its
/// Gaussian-weighted (sigma 16 px) gradient magnitude into 8 orientation bins
/// with bilinear spatial and linear orientation interpolation. The histogram
/// is L2-normalized, clamped at 0.2 and renormalized.

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "vco/core.hpp"

namespace vco {

inline constexpr int kDescriptorSize = 128;
inline constexpr int kPatchSide = 32;
inline constexpr int kPatchHalf = 16;

using Descriptor = std::array<float, kDescriptorSize>;

inline double descriptor_distance(const Descriptor& a, const Descriptor& b) {
    double acc = 0.0;
    for (int i = 0; i < kDescriptorSize; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// Descriptor computation for one image with a lazily filled per-tile cache.
/// Not thread-safe; use one extractor per thread.
class DescriptorExtractor {
public:
    explicit DescriptorExtractor(const GrayImage& img) : width_(img.width()), height_(img.height()) {
        build_sample_table();
        build_gradients(img);
        tiles_x_ = (width_ + kTile - 1) / kTile;
        tiles_y_ = (height_ + kTile - 1) / kTile;
        tiles_.resize(static_cast<std::size_t>(tiles_x_) * tiles_y_);
    }

    int width() const { return width_; }
    int height() const { return height_; }

    /// Descriptor at an in-image pixel. The reference stays valid for the
    /// extractor's lifetime.
    const Descriptor& at(Pixel p) {
        if (p.x < 0 || p.y < 0 || p.x >= width_ || p.y >= height_) throw Error("descriptor outside image");
        const int tx = p.x / kTile, ty = p.y / kTile;
        auto& tile = tiles_[static_cast<std::size_t>(ty) * tiles_x_ + tx];
        if (!tile) {
            tile = std::make_unique<std::vector<Descriptor>>(kTile * kTile);
            for (int y = 0; y < kTile; ++y)
                for (int x = 0; x < kTile; ++x) {
                    const int gx = tx * kTile + x, gy = ty * kTile + y;
                    if (gx < width_ && gy < height_) (*tile)[y * kTile + x] = compute({gx, gy});
                }
        }
        return (*tile)[(p.y % kTile) * kTile + (p.x % kTile)];
    }

    /// Uncached computation.
    Descriptor compute(Pixel p) const {
        std::array<double, kDescriptorSize> hist{};
        for (int s = 0; s < kPatchSide * kPatchSide; ++s) {
            const int dx = s % kPatchSide - kPatchHalf, dy = s / kPatchSide - kPatchHalf;
            const Grad& g = grad(p.x + dx, p.y + dy);
            if (g.mag == 0.0f) continue;
            const SampleWeights& sw = samples_[s];
            for (int c = 0; c < sw.count; ++c) {
                const double w = sw.weight[c] * g.mag;
                double* cell = hist.data() + sw.cell[c] * 8;
                cell[g.bin] += w * (1.0 - g.frac);
                cell[(g.bin + 1) % 8] += w * g.frac;
            }
        }
        normalize(hist);
        for (double& v : hist) v = std::min(v, 0.2);
        normalize(hist);
        Descriptor out{};
        for (int i = 0; i < kDescriptorSize; ++i) out[i] = static_cast<float>(hist[i]);
        return out;
    }

private:
    static constexpr int kTile = 16;
    static constexpr int kPad = kPatchHalf + 1;

    struct Grad {
        float mag = 0.0f;
        float frac = 0.0f;
        int bin = 0;
    };
    struct SampleWeights {
        int count = 0;
        std::array<int, 4> cell{};
        std::array<double, 4> weight{};
    };

    static void normalize(std::array<double, kDescriptorSize>& h) {
        double n = 0.0;
        for (double v : h) n += v * v;
        n = std::sqrt(n);
        if (n <= 0.0) return;
        for (double& v : h) v /= n;
    }

    void build_sample_table() {
        constexpr double sigma = 16.0;
        samples_.resize(kPatchSide * kPatchSide);
        for (int s = 0; s < kPatchSide * kPatchSide; ++s) {
            const double u = s % kPatchSide - kPatchHalf + 0.5;
            const double v = s / kPatchSide - kPatchHalf + 0.5;
            const double gauss = std::exp(-(u * u + v * v) / (2.0 * sigma * sigma));
            const double cx = (u + kPatchHalf) / 8.0 - 0.5, cy = (v + kPatchHalf) / 8.0 - 0.5;
            const int x0 = static_cast<int>(std::floor(cx)), y0 = static_cast<int>(std::floor(cy));
            const double fx = cx - x0, fy = cy - y0;
            SampleWeights& sw = samples_[s];
            for (int j = 0; j < 2; ++j)
                for (int i = 0; i < 2; ++i) {
                    const int xi = x0 + i, yj = y0 + j;
                    if (xi < 0 || xi > 3 || yj < 0 || yj > 3) continue;
                    const double w = (i ? fx : 1.0 - fx) * (j ? fy : 1.0 - fy);
                    if (w <= 0.0) continue;
                    sw.cell[sw.count] = yj * 4 + xi;
                    sw.weight[sw.count] = w * gauss;
                    ++sw.count;
                }
        }
    }

    // Gradients of the edge-replicated image over a padded domain.
    void build_gradients(const GrayImage& img) {
        padded_w_ = width_ + 2 * kPad;
        padded_h_ = height_ + 2 * kPad;
        grads_.assign(static_cast<std::size_t>(padded_w_) * padded_h_, {});
        auto value = [&](int x, int y) { return static_cast<double>(img.clamped(x, y)); };
        constexpr double two_pi = 2.0 * std::numbers::pi;
        for (int py = 0; py < padded_h_; ++py)
            for (int px = 0; px < padded_w_; ++px) {
                const int x = px - kPad, y = py - kPad;
                const double gx = 0.5 * (value(x + 1, y) - value(x - 1, y));
                const double gy = 0.5 * (value(x, y + 1) - value(x, y - 1));
                Grad& g = grads_[static_cast<std::size_t>(py) * padded_w_ + px];
                g.mag = static_cast<float>(std::hypot(gx, gy));
                if (g.mag == 0.0f) continue;
                double theta = std::atan2(gy, gx);
                if (theta < 0.0) theta += two_pi;
                double o = theta / two_pi * 8.0;
                if (o >= 8.0) o -= 8.0;
                g.bin = static_cast<int>(std::floor(o));
                g.frac = static_cast<float>(o - g.bin);
            }
    }

    const Grad& grad(int x, int y) const {
        const int px = std::clamp(x + kPad, 0, padded_w_ - 1);
        const int py = std::clamp(y + kPad, 0, padded_h_ - 1);
        return grads_[static_cast<std::size_t>(py) * padded_w_ + px];
    }

    int width_ = 0, height_ = 0;
    int padded_w_ = 0, padded_h_ = 0;
    int tiles_x_ = 0, tiles_y_ = 0;
    std::vector<SampleWeights> samples_;
    std::vector<Grad> grads_;
    std::vector<std::unique_ptr<std::vector<Descriptor>>> tiles_;
};

inline Descriptor descriptor(const GrayImage& img, Pixel p) {
    return DescriptorExtractor(img).compute(p);
}

}  // namespace vco
