#pragma once

/// @file fast_marching.hpp
/// @brief First-order fast marching on the 4-neighbor grid and steepest-descent
/// backtracking of minimal paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "vco/core.hpp"
#include "vco/image_ops.hpp"

namespace vco {

/// Arrival times from a seed set (+inf where unreachable).
struct ArrivalMap {
    ScalarMap time;
    std::vector<Pixel> seeds;
    /// Pixels whose final value came from the seed-disk initialization
    /// rather than an upwind update.
    Mask from_init;

    bool reachable(Pixel p) const { return time.contains(p) && std::isfinite(time[p]); }
};

struct FastMarchParams {
    /// Pixels within this Euclidean radius of a seed, with an unobstructed
    /// digital line to it, start from the straight-line travel time.
    double init_radius = 4.0;
};

namespace detail {

inline constexpr std::array<Pixel, 4> kAxisSteps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

/// Upwind update of pixel p from neighbors accepted so far. The crossing
/// cost of a step is the mean of the reciprocal speeds at both ends. The
/// result is the least of every one-sided update and every two-sided
/// (x-neighbor, y-neighbor) update, so adding neighbors never raises it.
inline double upwind_value(const ScalarMap& speed, const ScalarMap& time, Pixel p,
                           const std::function<bool(Pixel)>& usable) {
    const double inf = std::numeric_limits<double>::infinity();
    const double fp = speed[p];
    if (!(fp > 0.0)) return inf;
    double t[4], cost[4];
    for (int k = 0; k < 4; ++k) {
        const Pixel q = p + kAxisSteps[k];
        t[k] = inf;
        cost[k] = inf;
        if (!time.contains(q) || !usable(q) || !(speed[q] > 0.0)) continue;
        t[k] = time[q];
        cost[k] = 0.5 * (1.0 / fp + 1.0 / speed[q]);
    }
    double best = inf;
    for (int k = 0; k < 4; ++k) best = std::min(best, t[k] + cost[k]);
    for (int i = 0; i < 2; ++i)
        for (int j = 2; j < 4; ++j) {
            if (!std::isfinite(t[i]) || !std::isfinite(t[j])) continue;
            const double P = std::min(cost[i], cost[j]);
            const double diff = t[i] - t[j];
            if (std::abs(diff) < P) best = std::min(best, 0.5 * (t[i] + t[j] + std::sqrt(2.0 * P * P - diff * diff)));
        }
    return best;
}

}  // namespace detail

/// Solves |grad T| F = 1 from the seeds. Speed must be >= 0; zero-speed
/// pixels are never reached. Seeds get T = 0 regardless of their speed.
inline ArrivalMap fast_march(const ScalarMap& speed, const std::vector<Pixel>& seeds,
                             const FastMarchParams& params = {}) {
    if (seeds.empty()) throw Error("no seeds");
    for (double v : speed.data())
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error("speed must be finite and non-negative");
    const int w = speed.width(), h = speed.height();
    const double inf = std::numeric_limits<double>::infinity();

    ArrivalMap out{ScalarMap(w, h, inf), {}, Mask(w, h, 0)};
    Mask known(w, h, 0);
    ScalarMap init(w, h, inf);
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

    for (const Pixel& s : seeds) {
        if (!speed.contains(s)) throw Error("seed outside map");
        if (out.time[s] == 0.0) continue;
        out.time[s] = 0.0;
        out.seeds.push_back(s);
        heap.emplace(0.0, speed.index(s.x, s.y));
    }

    const int r = static_cast<int>(std::floor(params.init_radius));
    for (const Pixel& s : out.seeds) {
        if (!(speed[s] > 0.0)) continue;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                const double d = std::hypot(double(dx), double(dy));
                const Pixel p{s.x + dx, s.y + dy};
                if (d == 0.0 || d > params.init_radius || !speed.contains(p)) continue;
                double recip = 0.0;
                bool clear = true;
                const auto line = line_pixels(s, p);
                for (const Pixel& q : line) {
                    if (!(speed[q] > 0.0)) {
                        clear = false;
                        break;
                    }
                    recip += 1.0 / speed[q];
                }
                if (!clear) continue;
                const double v = d * recip / static_cast<double>(line.size());
                if (v < init[p]) {
                    init[p] = v;
                    if (v < out.time[p]) {
                        out.time[p] = v;
                        heap.emplace(v, speed.index(p.x, p.y));
                    }
                }
            }
    }

    auto is_known = [&known](Pixel q) { return known[q] != 0; };
    while (!heap.empty()) {
        const auto [t, idx] = heap.top();
        heap.pop();
        if (known.data()[idx] || t > out.time.data()[idx]) continue;
        known.data()[idx] = 1;
        const Pixel p = speed.pixel_at(idx);
        if (t > 0.0 && t == init[p]) out.from_init[p] = 1;
        for (const Pixel& step : detail::kAxisSteps) {
            const Pixel q = p + step;
            if (!speed.contains(q) || known[q]) continue;
            const double v = detail::upwind_value(speed, out.time, q, is_known);
            if (v < out.time[q]) {
                out.time[q] = v;
                heap.emplace(v, speed.index(q.x, q.y));
            }
        }
    }
    return out;
}

namespace detail {

/// Central-difference gradient of the arrival map, one-sided where a
/// neighbor is unreachable or outside.
inline Vec2d arrival_gradient(const ScalarMap& T, Pixel p) {
    auto diff = [&](Pixel step) {
        const Pixel f = p + step, b = p - step;
        const bool hf = T.contains(f) && std::isfinite(T[f]), hb = T.contains(b) && std::isfinite(T[b]);
        if (hf && hb) return 0.5 * (T[f] - T[b]);
        if (hf) return T[f] - T[p];
        if (hb) return T[p] - T[b];
        return 0.0;
    };
    return {diff({1, 0}), diff({0, 1})};
}

}  // namespace detail

/// Descent path from `start` to a seed over the 8-neighborhood. A continuous
/// trail follows the negative arrival gradient in quarter-pixel steps until
/// it rounds to a new pixel; that pixel is taken if its arrival is lower,
/// otherwise the lower-arrival neighbor closest to the trail. Arrival
/// strictly decreases along the returned path.
inline std::vector<Pixel> backtrace(const ArrivalMap& arrival, Pixel start) {
    if (!arrival.reachable(start)) throw Error("start unreachable");
    const ScalarMap& T = arrival.time;
    std::vector<Pixel> path{start};
    Pixel p = start;
    Vec2d trail = to_vec(start);
    while (T[p] > 0.0) {
        // Walk the trail until it leaves the 3x3 block around p; the last
        // neighbor it rounded to is the proposed step.
        Pixel r = p;
        Vec2d at_r = trail;
        for (int sub = 0; sub < 12; ++sub) {
            Pixel at = round_pixel(trail);
            if (!T.contains(at) || !std::isfinite(T[at])) at = p;
            const Vec2d g = detail::arrival_gradient(T, at);
            if (g.norm() == 0.0) break;
            const Vec2d moved = trail - g * (0.25 / g.norm());
            const Pixel mp = round_pixel(moved);
            if (std::max(std::abs(mp.x - p.x), std::abs(mp.y - p.y)) > 1) break;
            trail = moved;
            if (mp != p) {
                r = mp;
                at_r = trail;
            }
        }
        trail = at_r;
        Pixel next = p;
        if (r != p && std::abs(r.x - p.x) <= 1 && std::abs(r.y - p.y) <= 1 && T.contains(r) && T[r] < T[p]) {
            next = r;
        } else {
            double best = std::numeric_limits<double>::infinity();
            for (const Pixel& o : detail::kRing) {
                const Pixel q = p + o;
                if (!T.contains(q) || !(T[q] < T[p])) continue;
                const double d = (to_vec(q) - trail).norm();
                if (d < best) {
                    best = d;
                    next = q;
                }
            }
            if (next == p) throw Error("backtrace stalled");
            trail = to_vec(next);
        }
        path.push_back(next);
        p = next;
    }
    return path;
}

/// Sum of step lengths (1 or sqrt 2) along an 8-connected path.
inline double path_length(const std::vector<Pixel>& path) {
    double len = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) len += distance(path[i - 1], path[i]);
    return len;
}

}  // namespace vco
