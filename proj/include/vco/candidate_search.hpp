#pragma once

/// @file candidate_search.hpp
/// @brief Keypoint matching, branch displacement sets and per-point
/// correspondence candidates.

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "json.hpp"
#include "vco/core.hpp"
#include "vco/descriptor.hpp"
#include "vco/global_align.hpp"
#include "vco/vessel_graph.hpp"

namespace vco {

struct SearchParams {
    int keypoint_matches = 2;    ///< matches kept per keypoint
    int keypoint_window_w = 101;
    int keypoint_window_h = 101;
    int point_matches = 5;       ///< matches kept per point search window
    int point_window_w = 21;
    int point_window_h = 21;
    int nms_radius = 3;
    /// Off: skip keypoint/branch tiers and search one flat window per point.
    bool hierarchical = true;
    int flat_window_w = 81;
    int flat_window_h = 81;

    /// Label budget per point (excluding the dummy).
    int max_candidates() const { return point_matches * (keypoint_matches * 2 + 1); }
};

/// One scored destination pixel.
struct Match {
    Pixel pos;
    double distance = 0.0;
    friend bool operator==(const Match&, const Match&) = default;
};

struct KeypointMatch {
    int keypoint_id = 0;
    /// Window center: keypoint position plus the global shift.
    Pixel origin;
    /// Ascending by distance.
    std::vector<Match> matches;
};

struct BranchCandidates {
    int branch_index = 0;
    /// Offsets relative to the globally shifted position; zero vector last.
    std::vector<Pixel> displacements;
};

/// Candidate lists aligned with the point order of the source graph.
struct CandidateSet {
    std::vector<int> point_ids;
    std::vector<std::vector<Match>> candidates;

    const std::vector<Match>& of(int id) const {
        for (std::size_t i = 0; i < point_ids.size(); ++i)
            if (point_ids[i] == id) return candidates[i];
        throw Error("no candidates for point " + std::to_string(id));
    }
};

namespace detail {

inline bool match_before(const Match& a, const Match& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.pos < b.pos;
}

}  // namespace detail

/// Dense scan of a w x h window centered at `center`, clipped to the image.
/// A pixel survives non-max suppression if no pixel within `nms_radius`
/// (inside the image, not only the window) scores better, ties broken by
/// raster order. Returns the `keep` best survivors.
inline std::vector<Match> window_search(DescriptorExtractor& dst, const Descriptor& ref, Pixel center, int w, int h,
                                        int nms_radius, int keep) {
    const int x0 = std::max(0, center.x - w / 2), x1 = std::min(dst.width() - 1, center.x + w / 2);
    const int y0 = std::max(0, center.y - h / 2), y1 = std::min(dst.height() - 1, center.y + h / 2);
    if (x0 > x1 || y0 > y1 || keep <= 0) return {};

    const int r = std::max(0, nms_radius);
    const int ex0 = std::max(0, x0 - r), ex1 = std::min(dst.width() - 1, x1 + r);
    const int ey0 = std::max(0, y0 - r), ey1 = std::min(dst.height() - 1, y1 + r);
    const int ew = ex1 - ex0 + 1;
    std::vector<double> score(static_cast<std::size_t>(ew) * (ey1 - ey0 + 1));
    for (int y = ey0; y <= ey1; ++y)
        for (int x = ex0; x <= ex1; ++x)
            score[static_cast<std::size_t>(y - ey0) * ew + (x - ex0)] = descriptor_distance(ref, dst.at({x, y}));
    auto at = [&](int x, int y) { return score[static_cast<std::size_t>(y - ey0) * ew + (x - ex0)]; };

    std::vector<Match> survivors;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double s = at(x, y);
            bool keep_px = true;
            for (int dy = -r; dy <= r && keep_px; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    if ((dx == 0 && dy == 0) || dx * dx + dy * dy > r * r) continue;
                    const int qx = x + dx, qy = y + dy;
                    if (qx < ex0 || qx > ex1 || qy < ey0 || qy > ey1) continue;
                    const double q = at(qx, qy);
                    if (q < s || (q == s && Pixel{qx, qy} < Pixel{x, y})) {
                        keep_px = false;
                        break;
                    }
                }
            if (keep_px) survivors.push_back({{x, y}, s});
        }
    std::sort(survivors.begin(), survivors.end(), detail::match_before);
    if (survivors.size() > static_cast<std::size_t>(keep)) survivors.resize(keep);
    return survivors;
}

inline std::vector<KeypointMatch> match_keypoints(DescriptorExtractor& src, DescriptorExtractor& dst,
                                                  const VesselGraph& graph, const GlobalShift& shift,
                                                  const SearchParams& params) {
    std::vector<KeypointMatch> out;
    for (int id : graph.keypoints()) {
        const Pixel p = graph.pos(id);
        KeypointMatch km{id, p + shift.offset(), {}};
        km.matches = window_search(dst, src.at(p), km.origin, params.keypoint_window_w, params.keypoint_window_h,
                                   params.nms_radius, params.keypoint_matches);
        out.push_back(std::move(km));
    }
    return out;
}

/// Displacements of both endpoint match lists (endpoint a first, each in
/// rank order), deduplicated, followed by the zero vector.
inline BranchCandidates branch_candidates(int branch_index, const KeypointMatch& a, const KeypointMatch& b) {
    BranchCandidates bc{branch_index, {}};
    std::set<Pixel> seen{{0, 0}};
    for (const KeypointMatch* km : {&a, &b})
        for (const Match& m : km->matches) {
            const Pixel d = m.pos - km->origin;
            if (seen.insert(d).second) bc.displacements.push_back(d);
        }
    bc.displacements.push_back({0, 0});
    return bc;
}

/// Windowed search around p + shift + δ for every δ; duplicates keep the
/// smaller distance. Sorted ascending and capped at max_candidates().
inline std::vector<Match> point_candidates(DescriptorExtractor& src, DescriptorExtractor& dst, const VesselPoint& point,
                                           const GlobalShift& shift, const std::vector<Pixel>& displacements,
                                           const SearchParams& params) {
    const Descriptor& ref = src.at(point.pos);
    std::map<Pixel, double> best;
    auto add = [&](const std::vector<Match>& found) {
        for (const Match& m : found) {
            auto [it, inserted] = best.emplace(m.pos, m.distance);
            if (!inserted) it->second = std::min(it->second, m.distance);
        }
    };
    int cap = params.max_candidates();
    if (params.hierarchical) {
        for (const Pixel& d : displacements)
            add(window_search(dst, ref, point.pos + shift.offset() + d, params.point_window_w, params.point_window_h,
                              params.nms_radius, params.point_matches));
    } else {
        add(window_search(dst, ref, point.pos + shift.offset(), params.flat_window_w, params.flat_window_h,
                          params.nms_radius, cap));
    }
    std::vector<Match> out;
    for (const auto& [pos, dist] : best) out.push_back({pos, dist});
    std::sort(out.begin(), out.end(), detail::match_before);
    if (out.size() > static_cast<std::size_t>(cap)) out.resize(cap);
    return out;
}

struct CandidateSearchResult {
    std::vector<KeypointMatch> keypoint_matches;
    std::vector<BranchCandidates> branch_candidates;
    CandidateSet candidates;
};

/// Runs the keypoint, branch and point tiers for every graph point. The graph
/// must have keypoints and branches set. A keypoint takes the union of the
/// displacement sets of all branches meeting at it.
inline CandidateSearchResult search_candidates(DescriptorExtractor& src, DescriptorExtractor& dst,
                                               const VesselGraph& graph, const GlobalShift& shift,
                                               const SearchParams& params) {
    CandidateSearchResult res;
    std::map<int, std::vector<Pixel>> disps_of;
    if (params.hierarchical) {
        res.keypoint_matches = match_keypoints(src, dst, graph, shift, params);
        std::map<int, const KeypointMatch*> by_id;
        for (const auto& km : res.keypoint_matches) by_id[km.keypoint_id] = &km;
        const auto& branches = graph.branches();
        for (std::size_t bi = 0; bi < branches.size(); ++bi) {
            const Branch& br = branches[bi];
            const auto ia = by_id.find(br.endpoint_a), ib = by_id.find(br.endpoint_b);
            if (ia == by_id.end() || ib == by_id.end()) throw Error("branch endpoint is not a keypoint");
            res.branch_candidates.push_back(branch_candidates(static_cast<int>(bi), *ia->second, *ib->second));
            const auto& ds = res.branch_candidates.back().displacements;
            for (int id : br.point_ids) {
                auto& acc = disps_of[id];
                for (const Pixel& d : ds)
                    if (std::find(acc.begin(), acc.end(), d) == acc.end()) acc.push_back(d);
            }
        }
        // Zero vector last for keypoints that collected several sets.
        for (auto& [id, ds] : disps_of) {
            std::erase(ds, Pixel{0, 0});
            ds.push_back({0, 0});
        }
    }
    for (const auto& p : graph.points()) {
        res.candidates.point_ids.push_back(p.id);
        auto it = disps_of.find(p.id);
        const std::vector<Pixel> zero{{0, 0}};
        res.candidates.candidates.push_back(
            point_candidates(src, dst, p, shift, it == disps_of.end() ? zero : it->second, params));
    }
    return res;
}

inline nlohmann::json candidates_to_json(const CandidateSet& cs) {
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t i = 0; i < cs.point_ids.size(); ++i) {
        nlohmann::json list = nlohmann::json::array();
        for (const Match& m : cs.candidates[i]) list.push_back({{"x", m.pos.x}, {"y", m.pos.y}, {"d", m.distance}});
        j.push_back({{"id", cs.point_ids[i]}, {"candidates", list}});
    }
    return j;
}

}  // namespace vco
