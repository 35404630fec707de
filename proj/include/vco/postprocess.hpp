#pragma once

/// @file postprocess.hpp
/// @brief Reconnects surviving correspondences into a centerline and grows
/// branches that became visible in the destination frame.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "vco/core.hpp"
#include "vco/fast_marching.hpp"
#include "vco/image_ops.hpp"
#include "vco/mrf.hpp"
#include "vco/vessel_graph.hpp"

namespace vco {

struct PostprocessParams {
    VesselnessParams vesselness;
    double threshold = 0.15;
    /// Added to vesselness so reconnection paths can cross weak gaps.
    double speed_epsilon = 1e-3;
    /// Padding of the local window used for each point-to-point march.
    int roi_margin = 20;
    /// Minimum length of a grown branch; <= 0 estimates it from the mask.
    double r_max = 8.0;
    int max_new_branches = 20;
    /// Mask components are kept if they touch V dilated by this radius.
    double attach_radius = 2.0;
};

/// Minimal path from a to b under `speed`, marched in a window around both.
inline std::vector<Pixel> minimal_path(const ScalarMap& speed, Pixel a, Pixel b, int margin) {
    if (a == b) return {a};
    const int pad = margin + static_cast<int>(0.5 * distance(a, b));
    const int x0 = std::max(0, std::min(a.x, b.x) - pad), x1 = std::min(speed.width() - 1, std::max(a.x, b.x) + pad);
    const int y0 = std::max(0, std::min(a.y, b.y) - pad), y1 = std::min(speed.height() - 1, std::max(a.y, b.y) + pad);
    ScalarMap roi(x1 - x0 + 1, y1 - y0 + 1, 0.0);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) roi(x - x0, y - y0) = speed(x, y);
    const Pixel o{x0, y0};
    const auto arrival = fast_march(roi, {a - o});
    auto path = backtrace(arrival, b - o);
    for (Pixel& p : path) p = p + o;
    return path;  // b first, a last
}

namespace detail {

/// Adds the interior of `path` (ends excluded) as a chain from id_a to id_b.
inline void add_path_chain(VesselGraph& g, int id_from, int id_to, const std::vector<Pixel>& path) {
    int prev = id_from;
    for (std::size_t k = 1; k + 1 < path.size(); ++k) {
        const int id = g.add_point(path[k]);
        g.add_edge(prev, id);
        prev = id;
    }
    if (prev != id_to) g.add_edge(prev, id_to);
}

inline std::vector<std::vector<int>> graph_components(const VesselGraph& g) {
    std::map<int, int> comp;
    std::vector<std::vector<int>> out;
    for (const auto& p : g.points()) {
        if (comp.count(p.id)) continue;
        out.emplace_back();
        std::vector<int> stack{p.id};
        comp[p.id] = static_cast<int>(out.size()) - 1;
        while (!stack.empty()) {
            const int id = stack.back();
            stack.pop_back();
            out.back().push_back(id);
            for (int n : g.neighbors(id))
                if (comp.emplace(n, static_cast<int>(out.size()) - 1).second) stack.push_back(n);
        }
        std::sort(out.back().begin(), out.back().end());
    }
    return out;
}

}  // namespace detail

inline ScalarMap reconnection_speed(const GrayImage& dst, const PostprocessParams& params) {
    ScalarMap s = vesselness(dst, params.vesselness);
    for (double& v : s.data()) v += params.speed_epsilon;
    return s;
}

/// Links surviving points along the source topology with minimal paths over
/// `speed`. Consecutive survivors of each source branch are joined; at a
/// dropped keypoint the nearest survivors of its incident branches are
/// joined; source components that still split are bridged between their
/// closest pieces. Survivors keep their source ids, path pixels get fresh ids.
inline VesselGraph connect_points(const std::vector<SurvivingPoint>& survivors, const VesselGraph& source,
                                  const ScalarMap& speed, const PostprocessParams& params = {}) {
    if (survivors.size() < 2) throw Error("degenerate result");
    VesselGraph src = source;
    if (src.branches().empty()) finalize_topology(src);

    VesselGraph out;
    std::map<int, Pixel> alive;
    for (const auto& s : survivors) {
        if (!src.has_point(s.id)) throw Error("survivor not in source graph");
        if (!speed.contains(s.pos)) throw Error("survivor outside frame");
        alive[s.id] = s.pos;
        out.add_point(s.id, s.pos);
    }
    std::set<std::pair<int, int>> linked;
    auto link = [&](int a, int b) {
        if (a == b || !linked.insert(std::minmax(a, b)).second) return;
        const auto path = minimal_path(speed, alive.at(b), alive.at(a), params.roi_margin);
        detail::add_path_chain(out, a, b, path);
    };

    std::map<int, std::vector<int>> orphans;  // dropped keypoint -> nearest survivors
    for (const Branch& br : src.branches()) {
        std::vector<int> kept;
        for (int id : br.point_ids)
            if (alive.count(id) && (kept.empty() || kept.back() != id)) kept.push_back(id);
        for (std::size_t k = 1; k < kept.size(); ++k) link(kept[k - 1], kept[k]);
        if (kept.empty()) continue;
        if (!alive.count(br.endpoint_a)) orphans[br.endpoint_a].push_back(kept.front());
        if (!alive.count(br.endpoint_b)) orphans[br.endpoint_b].push_back(kept.back());
    }
    for (const auto& [kp, ids] : orphans)
        for (std::size_t k = 1; k < ids.size(); ++k) link(ids[0], ids[k]);

    // Bridge pieces that belong to one source component.
    const auto src_comps = detail::graph_components(src);
    for (const auto& sc : src_comps) {
        std::vector<int> members;
        for (int id : sc)
            if (alive.count(id)) members.push_back(id);
        for (;;) {
            const auto out_comps = detail::graph_components(out);
            std::map<int, int> comp_of;
            for (std::size_t c = 0; c < out_comps.size(); ++c)
                for (int id : out_comps[c]) comp_of[id] = static_cast<int>(c);
            if (members.empty()) break;
            const int root = comp_of.at(members[0]);
            long best = -1;
            int ba = -1, bb = -1;
            for (int a : members) {
                if (comp_of.at(a) != root) continue;
                for (int b : members) {
                    if (comp_of.at(b) == root) continue;
                    const long d = squared_distance(alive.at(a), alive.at(b));
                    if (best < 0 || d < best) {
                        best = d;
                        ba = a;
                        bb = b;
                    }
                }
            }
            if (ba < 0) break;
            link(ba, bb);
        }
    }
    return out;
}

inline VesselGraph connect_points(const std::vector<SurvivingPoint>& survivors, const VesselGraph& source,
                                  const GrayImage& dst, const PostprocessParams& params = {}) {
    return connect_points(survivors, source, reconnection_speed(dst, params), params);
}

/// Mask components touching the centerline (within attach_radius).
inline Mask attached_mask(const ScalarMap& vessel_map, const std::vector<Pixel>& centerline, double threshold,
                          double attach_radius) {
    const Mask mask = binarize(vessel_map, threshold);
    Image<int> labels;
    const int n = label_components(mask, labels);
    const Mask near = dilate(centerline, mask.width(), mask.height(), attach_radius);
    std::vector<uint8_t> keep(n + 1, 0);
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (near.data()[i] && labels.data()[i]) keep[labels.data()[i]] = 1;
    Mask out(mask.width(), mask.height(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) out.data()[i] = keep[labels.data()[i]] && labels.data()[i] ? 1 : 0;
    return out;
}

/// 95th percentile of the mask distance transform along the centerline.
inline double estimate_r_max(const ScalarMap& mask_dt, const std::vector<Pixel>& centerline) {
    std::vector<double> v;
    for (const Pixel& p : centerline)
        if (mask_dt.contains(p)) v.push_back(mask_dt[p]);
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    return v[static_cast<std::size_t>(std::floor(0.95 * (v.size() - 1)))];
}

struct GrowthResult {
    VesselGraph graph;
    int added = 0;
    double r_max = 0.0;
    /// Each added path, tip first.
    std::vector<std::vector<Pixel>> branches;
};

/// Repeatedly marches from the current centerline with the vessel-mask
/// distance transform as speed, backtraces from the latest finite arrival
/// inside the mask and keeps the path while it is longer than r_max. The
/// path tip is pulled back from the mask rim to where the mask distance
/// stops increasing.
inline GrowthResult grow_branches(const VesselGraph& V, const ScalarMap& vessel_map, const PostprocessParams& params) {
    if (V.empty()) throw Error("empty centerline");
    GrowthResult res{V, 0, params.r_max, {}};
    auto centerline = centerline_pixels(V);
    const Mask mask = attached_mask(vessel_map, centerline, params.threshold, params.attach_radius);
    bool any_bg = false;
    for (auto v : mask.data()) any_bg |= v == 0;
    if (!any_bg) return res;
    Mask background(mask.width(), mask.height(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) background.data()[i] = mask.data()[i] ? 0 : 1;
    const ScalarMap dt = distance_transform(background);
    if (res.r_max <= 0.0) res.r_max = estimate_r_max(dt, centerline);

    std::vector<Pixel> seeds;
    for (const Pixel& p : centerline)
        if (dt.contains(p)) seeds.push_back(p);
    for (int iter = 0; iter < params.max_new_branches; ++iter) {
        const auto arrival = fast_march(dt, seeds);
        double latest = -1.0;
        Pixel tip{-1, -1};
        for (std::size_t i = 0; i < mask.size(); ++i) {
            const double t = arrival.time.data()[i];
            if (mask.data()[i] && std::isfinite(t) && t > latest) {
                latest = t;
                tip = mask.pixel_at(i);
            }
        }
        if (latest <= 0.0) break;
        auto path = backtrace(arrival, tip);
        // The latest arrival sits on the mask rim past the vessel end; step
        // back while the mask distance keeps growing to reach the cap center.
        std::size_t start = 0;
        while (start + 2 < path.size() && dt[path[start + 1]] > dt[path[start]]) ++start;
        path.erase(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(start));
        if (!(path_length(path) > res.r_max)) break;

        // Attach at the graph point nearest to where the path meets V.
        const Pixel foot = path.back();
        int anchor = res.graph.points().front().id;
        long best = -1;
        for (const auto& p : res.graph.points()) {
            const long d = squared_distance(p.pos, foot);
            if (best < 0 || d < best || (d == best && p.id < anchor)) {
                best = d;
                anchor = p.id;
            }
        }
        int prev = anchor;
        for (std::size_t k = path.size() - 1; k-- > 0;) {
            const int id = res.graph.add_point(path[k]);
            res.graph.add_edge(prev, id);
            prev = id;
        }
        for (std::size_t k = 0; k + 1 < path.size(); ++k) seeds.push_back(path[k]);
        res.branches.push_back(path);
        ++res.added;
    }
    return res;
}

inline VesselGraph extract_new_branches(const VesselGraph& V, const GrayImage& dst,
                                        const PostprocessParams& params = {}) {
    return grow_branches(V, vesselness(dst, params.vesselness), params).graph;
}

/// Resamples a dense (per-pixel) centerline into a sparse source graph for
/// the next frame. Isolated points and zero-length runs are dropped.
inline VesselGraph resample_dense(const VesselGraph& dense, double interval) {
    VesselGraph g;
    for (const auto& p : dense.points())
        if (dense.degree(p.id) > 0) g.add_point(p.id, p.pos);
    for (const auto& [a, b] : dense.edges()) g.add_edge(a, b);
    if (g.empty()) throw Error("no centerline");
    finalize_topology(g);
    std::vector<std::vector<Vec2d>> lines;
    for (auto& line : branch_polylines(g)) {
        std::vector<Vec2d> clean;
        for (const Vec2d& v : line)
            if (clean.empty() || clean.back().x != v.x || clean.back().y != v.y) clean.push_back(v);
        if (clean.size() >= 2) lines.push_back(std::move(clean));
    }
    if (lines.empty()) throw Error("no centerline");
    VesselGraph out = resample_centerline(lines, interval);
    finalize_topology(out);
    return out;
}

}  // namespace vco
