#pragma once

/// @file vessel_graph.hpp
/// @brief Sampled vessel centerlines: points, connectivity, keypoints, branches.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vco/core.hpp"

namespace vco {

struct VesselPoint {
    int id = 0;
    Pixel pos;
    friend bool operator==(const VesselPoint&, const VesselPoint&) = default;
};

/// Centerline run between two keypoints. point_ids starts at endpoint_a and
/// ends at endpoint_b; endpoint_a == endpoint_b for a loop.
struct Branch {
    int endpoint_a = 0;
    int endpoint_b = 0;
    std::vector<int> point_ids;
    friend bool operator==(const Branch&, const Branch&) = default;
};

/// Undirected graph over sampled centerline points. Edges are stored with the
/// smaller id first and are unique.
class VesselGraph {
public:
    /// Adds a point with the next free id and returns the id.
    int add_point(Pixel pos) {
        add_point(next_id_, pos);
        return next_id_ - 1;
    }

    void add_point(int id, Pixel pos) {
        if (index_.count(id)) throw Error("duplicate point id " + std::to_string(id));
        index_.emplace(id, points_.size());
        points_.push_back({id, pos});
        adjacency_.emplace_back();
        next_id_ = std::max(next_id_, id + 1);
    }

    /// Adds the undirected edge {a, b}. Returns false if it already exists.
    bool add_edge(int a, int b) {
        if (a == b) throw Error("self edge on point " + std::to_string(a));
        const std::size_t ia = index_of(a), ib = index_of(b);
        const auto key = std::minmax(a, b);
        if (!edge_set_.insert(key).second) return false;
        edges_.emplace_back(key.first, key.second);
        adjacency_[ia].push_back(b);
        adjacency_[ib].push_back(a);
        return true;
    }

    bool has_point(int id) const { return index_.count(id) != 0; }
    bool has_edge(int a, int b) const { return edge_set_.count(std::minmax(a, b)) != 0; }

    std::size_t index_of(int id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw Error("unknown point id " + std::to_string(id));
        return it->second;
    }

    const VesselPoint& point(int id) const { return points_[index_of(id)]; }
    Pixel pos(int id) const { return point(id).pos; }
    const std::vector<int>& neighbors(int id) const { return adjacency_[index_of(id)]; }
    int degree(int id) const { return static_cast<int>(neighbors(id).size()); }

    const std::vector<VesselPoint>& points() const { return points_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<int>& keypoints() const { return keypoints_; }
    const std::vector<Branch>& branches() const { return branches_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    int next_id() const { return next_id_; }

    void set_keypoints(std::vector<int> ids) { keypoints_ = std::move(ids); }
    void set_branches(std::vector<Branch> b) { branches_ = std::move(b); }

    friend bool operator==(const VesselGraph& a, const VesselGraph& b) {
        return a.points_ == b.points_ && a.edges_ == b.edges_ && a.keypoints_ == b.keypoints_ &&
               a.branches_ == b.branches_;
    }

private:
    std::vector<VesselPoint> points_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> adjacency_;
    std::unordered_map<int, std::size_t> index_;
    std::set<std::pair<int, int>> edge_set_;
    std::vector<int> keypoints_;
    std::vector<Branch> branches_;
    int next_id_ = 0;
};

namespace detail {

/// 8-connected digital path through the rounded polyline vertices.
inline std::vector<Pixel> digital_path(const std::vector<Vec2d>& polyline) {
    std::vector<Pixel> path;
    for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
        for (Pixel p : line_pixels(round_pixel(polyline[i]), round_pixel(polyline[i + 1])))
            if (path.empty() || path.back() != p) path.push_back(p);
    }
    return path;
}

inline double step_length(Pixel a, Pixel b) {
    return (a.x != b.x && a.y != b.y) ? std::sqrt(2.0) : 1.0;
}

}  // namespace detail

/// Samples each chain along its digital arc length at `interval` pixels and
/// assembles one graph. Chain endpoints within 1 px of an earlier chain
/// endpoint are merged into that point.
inline VesselGraph resample_centerline(const std::vector<std::vector<Vec2d>>& polylines, double interval) {
    if (!(interval > 0.0)) throw Error("bad interval");
    if (polylines.empty()) throw Error("no centerline");

    constexpr double kMergeTolerance = 1.0;
    constexpr double kSlack = 0.5;

    VesselGraph graph;
    std::vector<int> endpoint_ids;

    auto endpoint_for = [&](Pixel p) {
        for (int id : endpoint_ids)
            if (distance(graph.pos(id), p) <= kMergeTolerance) return id;
        const int id = graph.add_point(p);
        endpoint_ids.push_back(id);
        return id;
    };

    for (const auto& polyline : polylines) {
        if (polyline.size() < 2) throw Error("degenerate polyline");
        const std::vector<Pixel> path = detail::digital_path(polyline);
        if (path.size() < 2) throw Error("degenerate polyline");

        std::vector<Pixel> samples{path.front()};
        double since_last = 0.0;
        for (std::size_t i = 1; i < path.size(); ++i) {
            since_last += detail::step_length(path[i - 1], path[i]);
            const bool last = i + 1 == path.size();
            const double next = last ? 0.0 : detail::step_length(path[i], path[i + 1]);
            if (last || since_last >= interval - 1e-9 || since_last + next > interval + kSlack) {
                samples.push_back(path[i]);
                since_last = 0.0;
            }
        }

        int prev = endpoint_for(samples.front());
        for (std::size_t i = 1; i < samples.size(); ++i) {
            const int cur = (i + 1 == samples.size()) ? endpoint_for(samples[i]) : graph.add_point(samples[i]);
            if (cur != prev) graph.add_edge(prev, cur);
            prev = cur;
        }
    }
    return graph;
}

/// Ids with degree 1 (endpoints) or degree >= 3 (junctions), ascending.
inline std::vector<int> detect_keypoints(const VesselGraph& graph) {
    std::vector<int> out;
    for (const auto& p : graph.points()) {
        const int d = graph.degree(p.id);
        if (d == 1 || d >= 3) out.push_back(p.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Splits the graph into keypoint-to-keypoint runs. A component that is a
/// plain cycle (no keypoints) becomes a loop anchored at its smallest id.
inline std::vector<Branch> split_branches(const VesselGraph& graph) {
    std::set<int> stops(graph.keypoints().begin(), graph.keypoints().end());
    for (const auto& p : graph.points())
        if (graph.degree(p.id) == 0) throw Error("unbranchable point");

    std::set<std::pair<int, int>> used;
    auto take = [&](int a, int b) { return used.insert(std::minmax(a, b)).second; };

    std::vector<Branch> branches;
    auto walk_from = [&](int start) {
        std::vector<int> nbrs = graph.neighbors(start);
        std::sort(nbrs.begin(), nbrs.end());
        for (int first : nbrs) {
            if (!take(start, first)) continue;
            Branch br{start, start, {start}};
            int prev = start, cur = first;
            while (!stops.count(cur)) {
                br.point_ids.push_back(cur);
                int next = -1;
                for (int n : graph.neighbors(cur)) {
                    if (n == prev && graph.degree(cur) != 1) continue;
                    if (used.count(std::minmax(cur, n))) continue;
                    next = n;
                    break;
                }
                if (next < 0) break;
                take(cur, next);
                prev = cur;
                cur = next;
            }
            br.point_ids.push_back(cur);
            br.endpoint_b = cur;
            branches.push_back(std::move(br));
        }
    };

    for (int kp : graph.keypoints()) walk_from(kp);

    // Remaining edges belong to keypoint-free cycles.
    std::vector<int> ids;
    for (const auto& p : graph.points()) ids.push_back(p.id);
    std::sort(ids.begin(), ids.end());
    for (int id : ids) {
        bool has_unused = false;
        for (int n : graph.neighbors(id)) has_unused |= !used.count(std::minmax(id, n));
        if (!has_unused) continue;
        stops.insert(id);
        walk_from(id);
    }
    return branches;
}

/// Detects keypoints and branches and stores them on the graph. Loop anchors
/// of keypoint-free cycles are added to the keypoint list.
inline void finalize_topology(VesselGraph& graph) {
    graph.set_keypoints(detect_keypoints(graph));
    auto branches = split_branches(graph);
    std::set<int> kps(graph.keypoints().begin(), graph.keypoints().end());
    for (const auto& b : branches) {
        kps.insert(b.endpoint_a);
        kps.insert(b.endpoint_b);
    }
    graph.set_keypoints({kps.begin(), kps.end()});
    graph.set_branches(std::move(branches));
}

/// Coordinates of each branch, in branch order.
inline std::vector<std::vector<Vec2d>> branch_polylines(const VesselGraph& graph) {
    std::vector<std::vector<Vec2d>> out;
    for (const auto& b : graph.branches()) {
        std::vector<Vec2d> line;
        for (int id : b.point_ids) line.push_back(to_vec(graph.pos(id)));
        out.push_back(std::move(line));
    }
    return out;
}

/// Rasterized centerline: every point plus the digital line along every edge.
inline std::vector<Pixel> centerline_pixels(const VesselGraph& graph) {
    std::set<Pixel> px;
    for (const auto& p : graph.points()) px.insert(p.pos);
    for (const auto& [a, b] : graph.edges())
        for (Pixel p : line_pixels(graph.pos(a), graph.pos(b))) px.insert(p);
    return {px.begin(), px.end()};
}

/// Degree histogram as (endpoints, junctions).
inline std::pair<int, int> keypoint_census(const VesselGraph& graph) {
    int ends = 0, junctions = 0;
    for (const auto& p : graph.points()) {
        const int d = graph.degree(p.id);
        ends += d == 1;
        junctions += d >= 3;
    }
    return {ends, junctions};
}

// ---------------------------------------------------------------- file format

inline nlohmann::json graph_to_json(const VesselGraph& g) {
    nlohmann::json j;
    j["points"] = nlohmann::json::array();
    for (const auto& p : g.points()) j["points"].push_back({{"id", p.id}, {"x", p.pos.x}, {"y", p.pos.y}});
    j["edges"] = nlohmann::json::array();
    for (const auto& [a, b] : g.edges()) j["edges"].push_back({a, b});
    j["keypoints"] = g.keypoints();
    j["branches"] = nlohmann::json::array();
    for (const auto& b : g.branches())
        j["branches"].push_back({{"a", b.endpoint_a}, {"b", b.endpoint_b}, {"points", b.point_ids}});
    return j;
}

inline VesselGraph graph_from_json(const nlohmann::json& j) {
    try {
        VesselGraph g;
        for (const auto& p : j.at("points")) g.add_point(p.at("id").get<int>(), {p.at("x").get<int>(), p.at("y").get<int>()});
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) throw Error("edge must be an id pair");
            g.add_edge(e[0].get<int>(), e[1].get<int>());
        }
        if (j.contains("keypoints")) {
            std::vector<int> kps = j["keypoints"].get<std::vector<int>>();
            for (int id : kps) g.index_of(id);
            g.set_keypoints(std::move(kps));
        }
        if (j.contains("branches")) {
            std::vector<Branch> branches;
            for (const auto& b : j["branches"]) {
                Branch br{b.at("a").get<int>(), b.at("b").get<int>(), b.at("points").get<std::vector<int>>()};
                for (int id : br.point_ids) g.index_of(id);
                branches.push_back(std::move(br));
            }
            g.set_branches(std::move(branches));
        }
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed vessel graph: ") + e.what());
    }
}

inline void save_graph(const VesselGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << graph_to_json(g).dump(1) << '\n';
}

inline VesselGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed vessel graph: " + std::string(e.what()));
    }
    return graph_from_json(j);
}

}  // namespace vco
