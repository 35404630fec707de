#pragma once

/// @file pipeline.hpp
/// @brief Frame-pair extraction and sequence tracking built from the stage
/// modules, with a deterministic run log.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "vco/candidate_search.hpp"
#include "vco/config.hpp"
#include "vco/descriptor.hpp"
#include "vco/global_align.hpp"
#include "vco/image_ops.hpp"
#include "vco/mrf.hpp"
#include "vco/postprocess.hpp"
#include "vco/vessel_graph.hpp"

namespace vco {

/// FNV-1a over a byte string.
inline std::uint64_t fingerprint(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct PairResult {
    GlobalShift shift;
    CandidateSearchResult search;
    VcoProblem problem;
    Labeling labeling;
    std::vector<SurvivingPoint> survivors;
    int dummy_count = 0;
    VesselGraph connected;
    GrowthResult growth;
    /// Final destination centerline.
    VesselGraph output;
    std::string log;
};

namespace detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline std::string graph_text(const VesselGraph& g) {
    std::ostringstream os;
    for (const auto& p : g.points()) os << p.id << ' ' << p.pos.x << ' ' << p.pos.y << '\n';
    for (const auto& [a, b] : g.edges()) os << a << '-' << b << '\n';
    return os.str();
}

// Without the dummy label a point with no candidate has no admissible
// label, so it leaves the field together with its edges.
inline std::pair<VesselGraph, CandidateSet> drop_unmatched(const VesselGraph& graph, const CandidateSet& cands) {
    VesselGraph kept;
    CandidateSet kc;
    for (std::size_t k = 0; k < graph.size(); ++k)
        if (!cands.candidates[k].empty()) {
            kept.add_point(graph.points()[k].id, graph.points()[k].pos);
            kc.point_ids.push_back(cands.point_ids[k]);
            kc.candidates.push_back(cands.candidates[k]);
        }
    for (const auto& [a, b] : graph.edges())
        if (kept.has_point(a) && kept.has_point(b)) kept.add_edge(a, b);
    return {std::move(kept), std::move(kc)};
}

}  // namespace detail

/// Registers `src_graph` from `src` onto `dst` and reconstructs the
/// destination centerline.
inline PairResult run_pair(const GrayImage& src, const GrayImage& dst, const VesselGraph& src_graph,
                           const PipelineConfig& cfg) {
    cfg.validate();
    require_frame(src);
    require_frame(dst);
    if (src.width() != dst.width() || src.height() != dst.height()) throw Error("frame sizes differ");
    if (src_graph.size() < 2) throw Error("source graph needs at least 2 points");
    for (const auto& p : src_graph.points())
        if (!src.contains(p.pos)) throw Error("source point outside frame");

    VesselGraph graph = src_graph;
    if (graph.branches().empty()) finalize_topology(graph);

    PairResult r;
    std::ostringstream log;

    // Global translation.
    const ScalarMap dst_vessel = vesselness(dst, cfg.vesselness);
    const auto target = skeletonize(binarize(dst_vessel, cfg.vessel_threshold));
    if (target.empty()) throw Error("no vessels detected in destination");
    std::vector<Pixel> tmpl;
    for (const auto& p : graph.points()) tmpl.push_back(p.pos);
    r.shift = chamfer_match(tmpl, distance_transform(target, dst.width(), dst.height()), cfg.chamfer_radius);
    log << "global_shift " << r.shift.dx << ' ' << r.shift.dy << ' ' << detail::fmt("%.6f", r.shift.cost) << '\n';

    // Candidates.
    DescriptorExtractor src_desc(src), dst_desc(dst);
    r.search = search_candidates(src_desc, dst_desc, graph, r.shift, cfg.search);
    std::size_t total = 0, empty = 0;
    for (const auto& c : r.search.candidates.candidates) {
        total += c.size();
        empty += c.empty();
    }
    log << "keypoints " << graph.keypoints().size() << " branches " << graph.branches().size() << '\n';
    log << "candidates " << total << " points " << graph.size() << " empty " << empty << '\n';

    // Correspondence MRF.
    VesselGraph field = graph;
    CandidateSet cands = r.search.candidates;
    if (!cfg.energy.dummy_label && empty > 0) std::tie(field, cands) = detail::drop_unmatched(graph, cands);
    r.problem = build_problem(field, cands, cfg.energy, cfg.search.max_candidates());
    r.labeling = minimize(r.problem.mrf, cfg.solver);
    r.survivors = apply_labeling(field, cands, r.problem, r.labeling);
    r.dummy_count = 0;
    for (int l : r.labeling.labels) r.dummy_count += l == r.problem.dummy;
    log << "mrf nodes " << r.problem.mrf.node_count() << " edges " << r.problem.mrf.edges.size() << " labels "
        << r.problem.label_count << '\n';
    log << "energy " << detail::fmt("%.9f", r.labeling.energy) << " lower_bound "
        << detail::fmt("%.9f", r.labeling.lower_bound) << " iterations " << r.labeling.iterations << '\n';
    log << "dummy_count " << r.dummy_count << " survivors " << r.survivors.size() << '\n';
    if (r.survivors.size() < 2) throw Error("degenerate result");

    // Reconstruction.
    const PostprocessParams pp = cfg.postprocess();
    ScalarMap speed = dst_vessel;
    for (double& v : speed.data()) v += pp.speed_epsilon;
    r.connected = connect_points(r.survivors, graph, speed, pp);
    log << "connected points " << r.connected.size() << " edges " << r.connected.edges().size() << '\n';
    if (cfg.grow_branches) {
        r.growth = grow_branches(r.connected, dst_vessel, pp);
    } else {
        r.growth.graph = r.connected;
        r.growth.r_max = pp.r_max;
    }
    r.output = r.growth.graph;
    log << "new_branches " << r.growth.added << " r_max " << detail::fmt("%.3f", r.growth.r_max) << '\n';
    log << "output points " << r.output.size() << " edges " << r.output.edges().size() << '\n';

    // Stage fingerprints.
    {
        std::ostringstream s;
        s << r.shift.dx << ' ' << r.shift.dy;
        log << "fingerprint shift " << hex64(fingerprint(s.str())) << '\n';
    }
    log << "fingerprint candidates " << hex64(fingerprint(candidates_to_json(r.search.candidates).dump())) << '\n';
    {
        std::ostringstream s;
        for (const auto& sp : r.survivors) s << sp.id << ' ' << sp.pos.x << ' ' << sp.pos.y << '\n';
        log << "fingerprint labeling " << hex64(fingerprint(s.str())) << '\n';
    }
    log << "fingerprint connected " << hex64(fingerprint(detail::graph_text(r.connected))) << '\n';
    log << "fingerprint output " << hex64(fingerprint(detail::graph_text(r.output))) << '\n';
    r.log = log.str();
    return r;
}

struct TrackResult {
    /// Destination graphs for frames 1..n-1 that succeeded.
    std::vector<VesselGraph> outputs;
    std::vector<std::string> logs;
    /// Index of the last frame with an output (0 if none).
    int last_good_frame = 0;
    std::optional<std::string> failure;
};

/// Feeds each frame's output, resampled to the sampling interval, as the
/// next frame's source. Stops at the first failing frame.
inline TrackResult run_track(const std::vector<GrayImage>& frames, const VesselGraph& initial,
                             const PipelineConfig& cfg) {
    if (frames.size() < 2) throw Error("need at least 2 frames");
    TrackResult tr;
    VesselGraph src = initial;
    for (std::size_t t = 1; t < frames.size(); ++t) {
        try {
            auto r = run_pair(frames[t - 1], frames[t], src, cfg);
            tr.outputs.push_back(r.output);
            tr.logs.push_back(r.log);
            tr.last_good_frame = static_cast<int>(t);
            if (t + 1 < frames.size()) src = resample_dense(r.output, cfg.sample_interval);
        } catch (const Error& e) {
            tr.failure = "frame " + std::to_string(t) + ": " + e.what();
            break;
        }
    }
    return tr;
}

}  // namespace vco
