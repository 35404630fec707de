#pragma once

/// @file synth.hpp
/// @brief Synthetic angiography-like sequences with exact ground truth:
/// random smooth vessel trees, global plus smooth local motion, contrast
/// inflow and noisy rendering.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "vco/core.hpp"
#include "vco/vessel_graph.hpp"

namespace vco {

struct SynthConfig {
    std::uint64_t seed = 1;
    int width = 512;
    int height = 512;
    int depth = 4;
    double branch_prob = 0.8;
    /// Vessel diameter range in pixels (root widest).
    double width_min = 3.0;
    double width_max = 7.0;
    double root_length = 220.0;
    /// Global sinusoidal translation amplitude per axis and its period.
    double global_amplitude_x = 8.0;
    double global_amplitude_y = 5.0;
    double global_period = 20.0;
    /// Per-frame translation; overrides the sinusoid when non-empty.
    std::vector<Vec2d> global_shifts;
    /// Peak magnitude of the smooth local displacement field.
    double local_amplitude = 3.0;
    double local_sigma = 40.0;
    double local_period = 16.0;
    double noise_sigma = 4.0;
    double background = 180.0;
    double background_texture = 12.0;
    double contrast = 75.0;
    /// Fraction of the arc length from the root that is opacified, linear
    /// from the first to the last frame.
    double inflow_start = 1.0;
    double inflow_end = 1.0;
    /// When >= 0, the longest leaf branch stays hidden before this frame.
    int reveal_frame = -1;
    double sample_interval = 5.0;

    void validate() const {
        if (width < kMinFrameSide || height < kMinFrameSide) throw Error("synthetic frame too small");
        if (depth < 1) throw Error("depth must be >= 1");
        if (!(branch_prob >= 0.0 && branch_prob <= 1.0)) throw Error("branch_prob outside [0, 1]");
        if (!(width_min > 0.0 && width_max >= width_min)) throw Error("bad width range");
        if (global_amplitude_x < 0 || global_amplitude_y < 0 || local_amplitude < 0) throw Error("negative amplitude");
        if (!(local_sigma > 0.0)) throw Error("local_sigma must be positive");
        if (noise_sigma < 0) throw Error("negative noise");
        if (!(inflow_start >= 0 && inflow_end <= 1 && inflow_start <= inflow_end)) throw Error("bad inflow schedule");
    }
};

/// Vessel tree in its rest configuration.
struct SynthTree {
    /// Dense centerline of each branch at ~1 px spacing; a child starts at
    /// its parent's last sample.
    std::vector<std::vector<Vec2d>> curves;
    std::vector<int> parent;
    std::vector<int> level;
    std::vector<double> radius;
    /// Arc length from the root at each branch start.
    std::vector<double> arc_start;

    /// Sampled material points with fixed ids.
    VesselGraph graph;
    std::vector<Vec2d> rest;       ///< rest position per graph index
    std::vector<double> arc;       ///< arc length from the root per graph index
    std::vector<int> branch_of;    ///< owning branch per graph index
    int hidden_branch = -1;
};

/// Smooth displacement field with max magnitude 1 over the frame.
struct DisplacementField {
    int step = 8;
    int gw = 0, gh = 0;
    std::vector<Vec2d> grid;

    Vec2d at(Vec2d p) const {
        if (grid.empty()) return {0, 0};
        const double gx = std::clamp(p.x / step, 0.0, gw - 1.0), gy = std::clamp(p.y / step, 0.0, gh - 1.0);
        const int x0 = std::min(static_cast<int>(gx), gw - 2), y0 = std::min(static_cast<int>(gy), gh - 2);
        const double fx = gx - x0, fy = gy - y0;
        auto g = [&](int x, int y) { return grid[static_cast<std::size_t>(y) * gw + x]; };
        const Vec2d top = g(x0, y0) * (1 - fx) + g(x0 + 1, y0) * fx;
        const Vec2d bot = g(x0, y0 + 1) * (1 - fx) + g(x0 + 1, y0 + 1) * fx;
        return top * (1 - fy) + bot * fy;
    }
};

struct SyntheticSequence {
    SynthTree tree;
    std::vector<GrayImage> frames;
    /// Visible sampled structure per frame.
    std::vector<VesselGraph> truth_graphs;
    /// Rasterized visible centerline per frame.
    std::vector<std::vector<Pixel>> truth_pixels;
    /// For the pair (t, t+1): id visible in frame t -> position in frame t+1.
    std::vector<std::map<int, Pixel>> correspondences;
    /// Ids whose deformed position fell outside the frame and was clamped.
    std::vector<std::vector<int>> clamped;
    std::vector<Vec2d> global_shift;
};

namespace detail {

inline std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

/// Quadratic Bezier leaving p0 along `heading`, ending `length` away at
/// heading + bend, resampled to ~1 px arc spacing.
inline std::vector<Vec2d> quadratic_curve(Vec2d p0, double heading, double bend, double length) {
    const Vec2d p2 = p0 + Vec2d{std::cos(heading + bend), std::sin(heading + bend)} * length;
    const Vec2d p1 = p0 + Vec2d{std::cos(heading), std::sin(heading)} * (0.5 * length);
    const int n = std::max(8, static_cast<int>(4 * length));
    std::vector<Vec2d> fine;
    for (int i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / n;
        fine.push_back(p0 * ((1 - t) * (1 - t)) + p1 * (2 * (1 - t) * t) + p2 * (t * t));
    }
    std::vector<Vec2d> out{fine.front()};
    double acc = 0.0;
    for (std::size_t i = 1; i < fine.size(); ++i) {
        acc += (fine[i] - fine[i - 1]).norm();
        if (acc >= 1.0 || i + 1 == fine.size()) {
            out.push_back(fine[i]);
            acc = 0.0;
        }
    }
    return out;
}

inline double curve_length(const std::vector<Vec2d>& c) {
    double len = 0.0;
    for (std::size_t i = 1; i < c.size(); ++i) len += (c[i] - c[i - 1]).norm();
    return len;
}

inline double end_heading(const std::vector<Vec2d>& c) {
    const std::size_t n = c.size();
    const Vec2d d = c[n - 1] - c[n >= 4 ? n - 4 : 0];
    return std::atan2(d.y, d.x);
}

}  // namespace detail

/// Random tree of smooth branches. Depth 1 gives a single branch; deeper
/// trees always split at the root end, other branches split at their end
/// with branch_prob and may sprout up to two side branches.
/// Children that leave the frame margin or pass close to other vessels are
/// re-drawn or dropped.
inline SynthTree generate_tree(const SynthConfig& cfg) {
    cfg.validate();
    auto rng = detail::derived_rng(cfg.seed, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    const double W = cfg.width, H = cfg.height;
    const double margin = 0.06 * std::min(W, H);
    SynthTree tree;

    auto radius_at = [&](int level) { return 0.5 * std::max(cfg.width_min, cfg.width_max * std::pow(0.78, level)); };
    auto inside = [&](const std::vector<Vec2d>& c) {
        for (const Vec2d& p : c)
            if (p.x < margin || p.y < margin || p.x > W - 1 - margin || p.y > H - 1 - margin) return false;
        return true;
    };
    auto clear_of_others = [&](const std::vector<Vec2d>& c, double r) {
        for (std::size_t b = 0; b < tree.curves.size(); ++b) {
            const double gap = r + tree.radius[b] + 6.0;
            // Samples near the junction are exempt.
            for (std::size_t i = static_cast<std::size_t>(3.0 * gap); i < c.size(); i += 2)
                for (std::size_t k = 0; k < tree.curves[b].size(); k += 2)
                    if ((c[i] - tree.curves[b][k]).norm() < gap) return false;
        }
        return true;
    };

    // Root: starts in the left part of the frame, heading toward the center.
    const double scale = std::min(W, H) / 512.0;
    double root_len = cfg.root_length * scale;
    for (int attempt = 0;; ++attempt) {
        const Vec2d start{uni(margin + 10, 0.3 * W), uni(0.2 * H, 0.8 * H)};
        const double heading = std::atan2(0.5 * H - start.y, 0.6 * W - start.x) + uni(-0.5, 0.5);
        auto c = detail::quadratic_curve(start, heading, uni(-0.4, 0.4), root_len);
        if (inside(c) || attempt > 50) {
            tree.curves.push_back(std::move(c));
            break;
        }
        root_len *= 0.97;
    }
    tree.parent.push_back(-1);
    tree.level.push_back(0);
    tree.radius.push_back(radius_at(0));
    tree.arc_start.push_back(0.0);
    std::vector<std::size_t> attach_index{0};  // dense index on the parent

    auto cumulative = [](const std::vector<Vec2d>& c) {
        std::vector<double> cum{0.0};
        for (std::size_t i = 1; i < c.size(); ++i) cum.push_back(cum.back() + (c[i] - c[i - 1]).norm());
        return cum;
    };
    auto try_child = [&](std::size_t b, std::size_t at, double heading, double len) {
        const double r = radius_at(tree.level[b] + 1);
        auto c = detail::quadratic_curve(tree.curves[b][at], heading, uni(-0.3, 0.3), len);
        if (!inside(c) || !clear_of_others(c, r)) return false;
        tree.arc_start.push_back(tree.arc_start[b] + cumulative(tree.curves[b])[at]);
        tree.curves.push_back(std::move(c));
        tree.parent.push_back(static_cast<int>(b));
        tree.level.push_back(tree.level[b] + 1);
        tree.radius.push_back(r);
        attach_index.push_back(at);
        return true;
    };

    for (std::size_t b = 0; b < tree.curves.size(); ++b) {
        if (tree.level[b] + 1 >= cfg.depth) continue;
        const auto cum = cumulative(tree.curves[b]);
        const double len = cum.back();
        const std::size_t n = tree.curves[b].size();
        // Side branches leave the interior of the branch.
        for (int k = 0; k < 2; ++k) {
            if (u(rng) >= 0.6 * cfg.branch_prob) continue;
            const double frac = uni(0.3, 0.75);
            const std::size_t at = static_cast<std::size_t>(
                std::lower_bound(cum.begin(), cum.end(), frac * len) - cum.begin());
            if (at == 0 || at + 1 >= n) continue;
            const Vec2d d = tree.curves[b][std::min(n - 1, at + 2)] - tree.curves[b][at >= 2 ? at - 2 : 0];
            const double tangent = std::atan2(d.y, d.x);
            for (int attempt = 0; attempt < 8; ++attempt) {
                const double side = u(rng) < 0.5 ? -1.0 : 1.0;
                if (try_child(b, at, tangent + side * uni(0.5, 1.0), std::max(40.0 * scale, len * uni(0.4, 0.65))))
                    break;
            }
        }
        // Terminal split: always at the root, otherwise with branch_prob.
        if (b != 0 && u(rng) >= cfg.branch_prob) continue;
        const double heading = detail::end_heading(tree.curves[b]);
        for (int side : {-1, 1})
            for (int attempt = 0; attempt < 8; ++attempt)
                if (try_child(b, n - 1, heading + side * uni(0.3, 0.65), std::max(40.0 * scale, len * uni(0.5, 0.75))))
                    break;
    }

    // Material samples: each branch is cut at its attachment points and the
    // pieces are split into equal arc steps no longer than the interval. A
    // child's first sample is the parent's sample at the attachment.
    std::vector<std::map<std::size_t, int>> id_at(tree.curves.size());
    for (std::size_t b = 0; b < tree.curves.size(); ++b) {
        const auto& c = tree.curves[b];
        const auto cum = cumulative(c);
        std::set<std::size_t> cuts{0, c.size() - 1};
        for (std::size_t ch = b + 1; ch < tree.curves.size(); ++ch)
            if (tree.parent[ch] == static_cast<int>(b)) cuts.insert(attach_index[ch]);
        auto emit = [&](Vec2d p, double arc, int prev) {
            const int id = tree.graph.add_point(round_pixel(p));
            tree.rest.push_back(p);
            tree.arc.push_back(tree.arc_start[b] + arc);
            tree.branch_of.push_back(static_cast<int>(b));
            if (prev >= 0) tree.graph.add_edge(prev, id);
            return id;
        };
        int prev = tree.parent[b] >= 0 ? id_at[tree.parent[b]].at(attach_index[b]) : emit(c.front(), 0.0, -1);
        id_at[b][0] = prev;
        for (auto it = std::next(cuts.begin()); it != cuts.end(); ++it) {
            const std::size_t i0 = *std::prev(it), i1 = *it;
            const double span = cum[i1] - cum[i0];
            const int steps = std::max(1, static_cast<int>(std::ceil(span / cfg.sample_interval - 1e-9)));
            std::size_t seg = i0 + 1;
            for (int k = 1; k <= steps; ++k) {
                const double s_k = cum[i0] + span * k / steps;
                Vec2d p = c[i1];
                if (k < steps) {
                    while (seg < i1 && cum[seg] < s_k) ++seg;
                    const double w = cum[seg] - cum[seg - 1];
                    const double f = w > 0 ? std::clamp((s_k - cum[seg - 1]) / w, 0.0, 1.0) : 0.0;
                    p = c[seg - 1] * (1 - f) + c[seg] * f;
                }
                prev = emit(p, s_k, prev);
            }
            id_at[b][i1] = prev;
        }
    }
    finalize_topology(tree.graph);

    if (cfg.reveal_frame >= 0) {
        double best = 0.0;
        for (std::size_t b = 1; b < tree.curves.size(); ++b) {
            if (std::find(tree.parent.begin(), tree.parent.end(), static_cast<int>(b)) != tree.parent.end()) continue;
            const double len = detail::curve_length(tree.curves[b]);
            if (len > best) {
                best = len;
                tree.hidden_branch = static_cast<int>(b);
            }
        }
        if (tree.hidden_branch < 0) throw Error("no leaf branch to hide");
    }
    return tree;
}

/// Smooth random field: Gaussian-filtered white noise on a coarse grid,
/// scaled so the largest vector has unit length.
inline DisplacementField make_displacement_field(const SynthConfig& cfg) {
    DisplacementField f;
    f.gw = cfg.width / f.step + 2;
    f.gh = cfg.height / f.step + 2;
    auto rng = detail::derived_rng(cfg.seed, 1);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<Vec2d> white(static_cast<std::size_t>(f.gw) * f.gh);
    for (Vec2d& v : white) v = {n(rng), n(rng)};
    const double s = cfg.local_sigma / f.step;
    const int r = std::max(1, static_cast<int>(std::ceil(3 * s)));
    std::vector<double> k;
    for (int i = -r; i <= r; ++i) k.push_back(std::exp(-(i * i) / (2 * s * s)));
    auto blur = [&](const std::vector<Vec2d>& in, bool along_x) {
        std::vector<Vec2d> out(in.size());
        for (int y = 0; y < f.gh; ++y)
            for (int x = 0; x < f.gw; ++x) {
                Vec2d acc{0, 0};
                for (int i = -r; i <= r; ++i) {
                    const int xx = along_x ? std::clamp(x + i, 0, f.gw - 1) : x;
                    const int yy = along_x ? y : std::clamp(y + i, 0, f.gh - 1);
                    acc = acc + in[static_cast<std::size_t>(yy) * f.gw + xx] * k[i + r];
                }
                out[static_cast<std::size_t>(y) * f.gw + x] = acc;
            }
        return out;
    };
    f.grid = blur(blur(white, true), false);
    double peak = 0.0;
    for (const Vec2d& v : f.grid) peak = std::max(peak, v.norm());
    if (peak > 0)
        for (Vec2d& v : f.grid) v = v * (1.0 / peak);
    return f;
}

inline Vec2d global_shift_at(const SynthConfig& cfg, int frame) {
    if (!cfg.global_shifts.empty()) {
        if (frame >= static_cast<int>(cfg.global_shifts.size())) throw Error("global_shifts shorter than sequence");
        return cfg.global_shifts[frame];
    }
    const double ph = 2.0 * std::numbers::pi * frame / cfg.global_period;
    return {cfg.global_amplitude_x * std::sin(ph), cfg.global_amplitude_y * std::sin(ph)};
}

inline double local_gain_at(const SynthConfig& cfg, int frame) {
    return std::sin(2.0 * std::numbers::pi * frame / cfg.local_period);
}

/// Displacement of a rest position in a frame: global shift plus the local
/// field scaled by the frame's gain (|gain| <= 1, zero at frame 0).
inline Vec2d displacement(const SynthConfig& cfg, const DisplacementField& field, int frame, Vec2d rest) {
    return global_shift_at(cfg, frame) + field.at(rest) * (cfg.local_amplitude * local_gain_at(cfg, frame));
}

inline double visible_fraction_at(const SynthConfig& cfg, int frame, int n_frames) {
    if (n_frames <= 1) return cfg.inflow_end;
    return cfg.inflow_start + (cfg.inflow_end - cfg.inflow_start) * frame / (n_frames - 1.0);
}

/// Static textured background: smooth low-frequency modulation around the
/// base level.
inline ScalarMap make_background(const SynthConfig& cfg) {
    auto rng = detail::derived_rng(cfg.seed, 2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    constexpr int step = 32;
    const int gw = cfg.width / step + 2, gh = cfg.height / step + 2;
    std::vector<double> g(static_cast<std::size_t>(gw) * gh);
    for (double& v : g) v = u(rng);
    ScalarMap bg(cfg.width, cfg.height, cfg.background);
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            const double gx = double(x) / step, gy = double(y) / step;
            const int x0 = static_cast<int>(gx), y0 = static_cast<int>(gy);
            const double fx = gx - x0, fy = gy - y0;
            // Smoothstep weights keep the texture free of grid creases.
            const double sx = fx * fx * (3 - 2 * fx), sy = fy * fy * (3 - 2 * fy);
            auto at = [&](int xx, int yy) { return g[static_cast<std::size_t>(yy) * gw + xx]; };
            const double v = (at(x0, y0) * (1 - sx) + at(x0 + 1, y0) * sx) * (1 - sy) +
                             (at(x0, y0 + 1) * (1 - sx) + at(x0 + 1, y0 + 1) * sx) * sy;
            bg(x, y) += cfg.background_texture * v;
        }
    return bg;
}

/// Darkening of visible vessel segments (cylindrical absorption profile,
/// maximum over overlapping vessels) on top of `background`, plus noise.
inline GrayImage render_frame(const std::vector<std::vector<Vec2d>>& curves, const std::vector<double>& radius,
                              const std::vector<std::vector<std::uint8_t>>& visible, const ScalarMap& background,
                              const SynthConfig& cfg, std::mt19937_64& noise_rng) {
    ScalarMap dark(background.width(), background.height(), 0.0);
    for (std::size_t b = 0; b < curves.size(); ++b) {
        const double r = radius[b];
        const double reach = r + 0.5;
        for (std::size_t i = 1; i < curves[b].size(); ++i) {
            if (!visible[b][i - 1] || !visible[b][i]) continue;
            const Vec2d a = curves[b][i - 1], c = curves[b][i];
            const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, c.x) - reach)));
            const int x1 = std::min(dark.width() - 1, static_cast<int>(std::ceil(std::max(a.x, c.x) + reach)));
            const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, c.y) - reach)));
            const int y1 = std::min(dark.height() - 1, static_cast<int>(std::ceil(std::max(a.y, c.y) + reach)));
            const Vec2d ac = c - a;
            const double len2 = ac.x * ac.x + ac.y * ac.y;
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const Vec2d ap = Vec2d{double(x), double(y)} - a;
                    const double t = len2 > 0 ? std::clamp((ap.x * ac.x + ap.y * ac.y) / len2, 0.0, 1.0) : 0.0;
                    const double d = (ap - ac * t).norm();
                    if (d >= reach) continue;
                    // Chord length through the cylinder, softened over the last half pixel.
                    const double dd = std::min(d, r);
                    double v = std::sqrt(std::max(0.0, 1.0 - (dd / r) * (dd / r)));
                    if (d > r - 0.5) v = std::max(v, 0.25 * (reach - d));
                    dark(x, y) = std::max(dark(x, y), cfg.contrast * v);
                }
        }
    }
    std::normal_distribution<double> n(0.0, 1.0);
    GrayImage img(background.width(), background.height(), 0);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double noise = cfg.noise_sigma > 0 ? cfg.noise_sigma * n(noise_rng) : 0.0;
        const double v = background.data()[i] - dark.data()[i] + noise;
        img.data()[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
    return img;
}

/// Tree, per-frame deformation, visibility and rendering.
inline SyntheticSequence generate_sequence(const SynthConfig& cfg, int n_frames) {
    if (n_frames < 2) throw Error("need at least 2 frames");
    SyntheticSequence seq;
    seq.tree = generate_tree(cfg);
    const SynthTree& tree = seq.tree;
    const auto field = make_displacement_field(cfg);
    const auto background = make_background(cfg);

    double total_arc = 0.0;
    for (std::size_t b = 0; b < tree.curves.size(); ++b)
        total_arc = std::max(total_arc, tree.arc_start[b] + detail::curve_length(tree.curves[b]));

    std::vector<std::vector<std::uint8_t>> prev_visible_pts;
    for (int t = 0; t < n_frames; ++t) {
        const double limit = visible_fraction_at(cfg, t, n_frames) * total_arc + 1e-9;
        const bool hide = tree.hidden_branch >= 0 && t < cfg.reveal_frame;
        seq.global_shift.push_back(global_shift_at(cfg, t));

        // Dense curves, deformed, with visibility by arc length.
        std::vector<std::vector<Vec2d>> curves(tree.curves.size());
        std::vector<std::vector<std::uint8_t>> vis(tree.curves.size());
        std::vector<Pixel> pixels;
        for (std::size_t b = 0; b < tree.curves.size(); ++b) {
            double arc = tree.arc_start[b];
            for (std::size_t i = 0; i < tree.curves[b].size(); ++i) {
                if (i > 0) arc += (tree.curves[b][i] - tree.curves[b][i - 1]).norm();
                const Vec2d rest = tree.curves[b][i];
                curves[b].push_back(rest + displacement(cfg, field, t, rest));
                const bool on = arc <= limit && !(hide && static_cast<int>(b) == tree.hidden_branch && i > 0);
                vis[b].push_back(on ? 1 : 0);
            }
            for (std::size_t i = 1; i < curves[b].size(); ++i)
                if (vis[b][i - 1] && vis[b][i])
                    for (Pixel p : line_pixels(round_pixel(curves[b][i - 1]), round_pixel(curves[b][i])))
                        if (p.x >= 0 && p.y >= 0 && p.x < cfg.width && p.y < cfg.height) pixels.push_back(p);
        }
        std::sort(pixels.begin(), pixels.end());
        pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
        seq.truth_pixels.push_back(std::move(pixels));

        auto noise_rng = detail::derived_rng(cfg.seed, 100 + static_cast<std::uint64_t>(t));
        seq.frames.push_back(render_frame(curves, tree.radius, vis, background, cfg, noise_rng));

        // Material points.
        VesselGraph g;
        std::vector<std::uint8_t> vis_pts(tree.graph.size(), 0);
        std::vector<Pixel> pos(tree.graph.size());
        std::vector<int> clamped;
        for (std::size_t k = 0; k < tree.graph.size(); ++k) {
            const Vec2d p = tree.rest[k] + displacement(cfg, field, t, tree.rest[k]);
            Pixel q = round_pixel(p);
            if (q.x < 0 || q.y < 0 || q.x >= cfg.width || q.y >= cfg.height) {
                q = {std::clamp(q.x, 0, cfg.width - 1), std::clamp(q.y, 0, cfg.height - 1)};
                clamped.push_back(tree.graph.points()[k].id);
            }
            pos[k] = q;
            const bool hidden = hide && tree.branch_of[k] == tree.hidden_branch;
            vis_pts[k] = tree.arc[k] <= limit && !hidden ? 1 : 0;
        }
        for (std::size_t k = 0; k < tree.graph.size(); ++k)
            if (vis_pts[k]) g.add_point(tree.graph.points()[k].id, pos[k]);
        for (const auto& [a, b] : tree.graph.edges())
            if (g.has_point(a) && g.has_point(b)) g.add_edge(a, b);
        // Drop points left without any visible edge.
        VesselGraph clean;
        for (const auto& p : g.points())
            if (g.degree(p.id) > 0) clean.add_point(p.id, p.pos);
        for (const auto& [a, b] : g.edges()) clean.add_edge(a, b);
        if (!clean.empty()) finalize_topology(clean);
        seq.clamped.push_back(std::move(clamped));

        if (t > 0) {
            std::map<int, Pixel> corr;
            for (const auto& p : seq.truth_graphs.back().points()) corr[p.id] = pos[tree.graph.index_of(p.id)];
            seq.correspondences.push_back(std::move(corr));
        }
        seq.truth_graphs.push_back(std::move(clean));
    }
    return seq;
}

}  // namespace vco
