#pragma once

/// @file image_ops.hpp
/// @brief Vesselness enhancement, thresholding, thinning, exact Euclidean
/// distance transform and connected components.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "vco/core.hpp"

namespace vco {

struct VesselnessParams {
    std::vector<double> scales{1.5, 2.5, 3.5};
    double beta = 0.5;
    /// Structureness constant as a fraction of the largest S at each scale.
    double c_fraction = 0.5;
};

namespace detail {

/// Separable convolution with edge replication. Kernel is centered.
inline ScalarMap convolve_rows(const ScalarMap& in, const std::vector<double>& k) {
    const int r = static_cast<int>(k.size() / 2);
    ScalarMap out(in.width(), in.height(), 0.0);
    for (int y = 0; y < in.height(); ++y)
        for (int x = 0; x < in.width(); ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[i + r] * in.clamped(x - i, y);
            out(x, y) = acc;
        }
    return out;
}

inline ScalarMap convolve_cols(const ScalarMap& in, const std::vector<double>& k) {
    const int r = static_cast<int>(k.size() / 2);
    ScalarMap out(in.width(), in.height(), 0.0);
    for (int y = 0; y < in.height(); ++y)
        for (int x = 0; x < in.width(); ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[i + r] * in.clamped(x, y - i);
            out(x, y) = acc;
        }
    return out;
}

/// Sampled Gaussian and its first two derivatives, scale-normalized so that
/// convolving with g''·g yields σ²-normalized second derivatives.
struct GaussianKernels {
    std::vector<double> g, d1, d2;
};

inline GaussianKernels gaussian_kernels(double sigma) {
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    GaussianKernels k;
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        k.g.push_back(v);
        sum += v;
    }
    for (double& v : k.g) v /= sum;
    // Applied as convolution, out(x) = Σ k[i] in(x - i).
    for (int i = -r; i <= r; ++i) {
        const double g = k.g[i + r];
        k.d1.push_back(-i / (sigma * sigma) * g);
        k.d2.push_back((i * i - sigma * sigma) / (sigma * sigma * sigma * sigma) * g);
    }
    double mean2 = 0.0;
    for (double v : k.d2) mean2 += v;
    mean2 /= static_cast<double>(k.d2.size());
    for (double& v : k.d2) v -= mean2;
    return k;
}

}  // namespace detail

inline ScalarMap to_scalar(const GrayImage& img) {
    ScalarMap out(img.width(), img.height(), 0.0);
    for (std::size_t i = 0; i < img.size(); ++i) out.data()[i] = img.data()[i];
    return out;
}

/// Multiscale Hessian tubularity for dark vessels on a bright background,
/// max-normalized to [0, 1].
inline ScalarMap vesselness(const GrayImage& img, const VesselnessParams& params = {}) {
    if (params.scales.empty()) throw Error("no vesselness scales");
    for (double s : params.scales)
        if (!(s >= 0.5)) throw Error("vesselness scale below 0.5 px");

    const ScalarMap f = to_scalar(img);
    ScalarMap best(img.width(), img.height(), 0.0);
    const double two_beta2 = 2.0 * params.beta * params.beta;

    for (double sigma : params.scales) {
        const auto k = detail::gaussian_kernels(sigma);
        const ScalarMap dxx = detail::convolve_cols(detail::convolve_rows(f, k.d2), k.g);
        const ScalarMap dyy = detail::convolve_rows(detail::convolve_cols(f, k.d2), k.g);
        const ScalarMap dxy = detail::convolve_cols(detail::convolve_rows(f, k.d1), k.d1);

        const double norm = sigma * sigma;
        std::vector<std::array<double, 2>> eig(f.size());
        double s_max = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double a = norm * dxx.data()[i], d = norm * dyy.data()[i], b = norm * dxy.data()[i];
            const double half_tr = 0.5 * (a + d);
            const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
            double l1 = half_tr - disc, l2 = half_tr + disc;
            if (std::abs(l1) > std::abs(l2)) std::swap(l1, l2);
            eig[i] = {l1, l2};
            s_max = std::max(s_max, std::sqrt(l1 * l1 + l2 * l2));
        }
        // Flat input: Hessian entries are pure roundoff.
        if (s_max < 1e-6) continue;
        const double c = params.c_fraction * s_max;
        const double two_c2 = 2.0 * c * c;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const auto [l1, l2] = eig[i];
            if (l2 <= 0.0) continue;
            const double rb = l1 / l2;
            const double s2 = l1 * l1 + l2 * l2;
            const double v = std::exp(-rb * rb / two_beta2) * (1.0 - std::exp(-s2 / two_c2));
            best.data()[i] = std::max(best.data()[i], v);
        }
    }

    const double peak = *std::max_element(best.data().begin(), best.data().end());
    if (peak > 0.0)
        for (double& v : best.data()) v /= peak;
    return best;
}

inline Mask binarize(const ScalarMap& map, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw Error("threshold outside (0, 1)");
    Mask out(map.width(), map.height(), 0);
    for (std::size_t i = 0; i < map.size(); ++i) out.data()[i] = map.data()[i] >= threshold ? 1 : 0;
    return out;
}

namespace detail {

// Neighbor offsets, counter-clockwise starting east (y grows downward, so
// "north" is -y).
inline constexpr std::array<Pixel, 8> kRing{{{1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

inline std::array<int, 8> ring_values(const Mask& m, int x, int y) {
    std::array<int, 8> v{};
    for (int k = 0; k < 8; ++k) {
        const int xx = x + kRing[k].x, yy = y + kRing[k].y;
        v[k] = m.contains(xx, yy) && m(xx, yy) ? 1 : 0;
    }
    return v;
}

/// Yokoi connectivity number for 8-connected foreground.
inline int yokoi8(const std::array<int, 8>& v) {
    int n = 0;
    for (int k = 0; k < 8; k += 2) {
        const int a = 1 - v[k], b = 1 - v[(k + 1) % 8], c = 1 - v[(k + 2) % 8];
        n += a - a * b * c;
    }
    return n;
}

}  // namespace detail

/// Topology-preserving thinning to a one-pixel-wide 8-connected skeleton.
/// Each directional sub-iteration collects the current border pixels on one
/// side, then deletes those still simple and not endpoints, re-checked
/// against the live mask.
inline std::vector<Pixel> skeletonize(const Mask& mask) {
    Mask m = mask;
    for (auto& v : m.data()) v = v ? 1 : 0;
    auto deletable = [&m](Pixel p, int side) {
        const auto v = detail::ring_values(m, p.x, p.y);
        if (v[side]) return false;
        int count = 0;
        for (int k : v) count += k;
        return count > 1 && detail::yokoi8(v) == 1;
    };
    // E, N, W, S border directions.
    constexpr std::array<int, 4> kSide{0, 2, 4, 6};
    std::vector<Pixel> border;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int side : kSide) {
            border.clear();
            for (int y = 0; y < m.height(); ++y)
                for (int x = 0; x < m.width(); ++x)
                    if (m(x, y) && deletable({x, y}, side)) border.push_back({x, y});
            for (const Pixel& p : border)
                if (deletable(p, side)) {
                    m[p] = 0;
                    changed = true;
                }
        }
    }
    return mask_pixels(m);
}

/// Exact Euclidean distance transform to the nearest set pixel of `seeds`
/// (separable lower-envelope algorithm on squared distances).
inline ScalarMap distance_transform(const Mask& seeds) {
    const int w = seeds.width(), h = seeds.height();
    bool any = false;
    for (auto v : seeds.data()) any |= v != 0;
    if (!any) throw Error("no target shape");

    const double inf = std::numeric_limits<double>::infinity();
    auto envelope = [inf](const std::vector<double>& f, std::vector<double>& d) {
        const int n = static_cast<int>(f.size());
        std::vector<int> v(n);
        std::vector<double> z(n + 1);
        int k = -1;
        for (int q = 0; q < n; ++q) {
            if (f[q] == inf) continue;
            while (k >= 0) {
                const double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * (q - v[k]));
                if (s <= z[k]) {
                    --k;
                    continue;
                }
                ++k;
                v[k] = q;
                z[k] = s;
                z[k + 1] = inf;
                break;
            }
            if (k < 0) {
                k = 0;
                v[0] = q;
                z[0] = -inf;
                z[1] = inf;
            }
        }
        if (k < 0) {
            std::fill(d.begin(), d.end(), inf);
            return;
        }
        int j = 0;
        for (int q = 0; q < n; ++q) {
            while (z[j + 1] < q) ++j;
            const double dq = q - v[j];
            d[q] = dq * dq + f[v[j]];
        }
    };

    ScalarMap sq(w, h, inf);
    std::vector<double> f(h), d(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = seeds(x, y) ? 0.0 : inf;
        envelope(f, d);
        for (int y = 0; y < h; ++y) sq(x, y) = d[y];
    }
    f.resize(w);
    d.resize(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = sq(x, y);
        envelope(f, d);
        for (int x = 0; x < w; ++x) sq(x, y) = std::sqrt(d[x]);
    }
    return sq;
}

inline ScalarMap distance_transform(const std::vector<Pixel>& seeds, int width, int height) {
    if (seeds.empty()) throw Error("no target shape");
    return distance_transform(pixels_to_mask(seeds, width, height));
}

/// 8-connected component labels (0 = background, 1..n in raster order of
/// first pixel). Returns the component count.
inline int label_components(const Mask& mask, Image<int>& labels) {
    labels = Image<int>(mask.width(), mask.height(), 0);
    int next = 0;
    std::vector<Pixel> stack;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(x, y) || labels(x, y)) continue;
            ++next;
            labels(x, y) = next;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                for (const Pixel& o : detail::kRing) {
                    const Pixel q = p + o;
                    if (mask.contains(q) && mask[q] && !labels[q]) {
                        labels[q] = next;
                        stack.push_back(q);
                    }
                }
            }
        }
    return next;
}

inline int count_components(const std::vector<Pixel>& pixels, int width, int height) {
    Image<int> labels;
    return label_components(pixels_to_mask(pixels, width, height), labels);
}

/// Disk dilation of a pixel set.
inline Mask dilate(const std::vector<Pixel>& pixels, int width, int height, double radius) {
    Mask out(width, height, 0);
    const int r = static_cast<int>(std::floor(radius));
    for (const Pixel& p : pixels)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (dx * dx + dy * dy > radius * radius) continue;
                const Pixel q{p.x + dx, p.y + dy};
                if (out.contains(q)) out[q] = 1;
            }
    return out;
}

}  // namespace vco
