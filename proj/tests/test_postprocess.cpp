#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vco/postprocess.hpp"

using namespace vco;

namespace {

double segment_distance(Vec2d p, Vec2d a, Vec2d b) {
    const Vec2d ab = b - a, ap = p - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    const double t = len2 > 0 ? std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0) : 0.0;
    return (ap - ab * t).norm();
}

double directed_hausdorff(const std::vector<Pixel>& from, const std::vector<Pixel>& to) {
    double worst = 0.0;
    for (const Pixel& p : from) {
        double best = 1e18;
        for (const Pixel& q : to) best = std::min(best, distance(p, q));
        worst = std::max(worst, best);
    }
    return worst;
}

std::vector<SurvivingPoint> all_points(const VesselGraph& g) {
    std::vector<SurvivingPoint> s;
    for (const auto& p : g.points()) s.push_back({p.id, p.pos});
    return s;
}

// Y-shaped tree: trunk from the left meeting two arms at (60, 60).
const std::vector<std::pair<Vec2d, Vec2d>> kY{{{10, 60}, {60, 60}}, {{60, 60}, {105, 25}}, {{60, 60}, {105, 100}}};

VesselGraph y_graph() {
    auto g = resample_centerline({{{10, 60}, {60, 60}}, {{60, 60}, {105, 25}}, {{60, 60}, {105, 100}}}, 5.0);
    finalize_topology(g);
    return g;
}

}  // namespace

TEST(MinimalPath, FollowsTube) {
    const auto img = test::render_tubes(120, 120, {{{10, 20}, {100, 90}}}, 2.5);
    const auto speed = reconnection_speed(img, {});
    const auto path = minimal_path(speed, {12, 22}, {98, 88}, 20);
    EXPECT_EQ(path.front(), (Pixel{98, 88}));
    EXPECT_EQ(path.back(), (Pixel{12, 22}));
    for (const Pixel& p : path) EXPECT_LE(segment_distance(to_vec(p), {10, 20}, {100, 90}), 2.0);
}

TEST(ConnectPoints, TwoPointsOnTube) {
    const auto img = test::render_tubes(120, 120, {{{10, 100}, {110, 15}}}, 2.5);
    VesselGraph src;
    src.add_point({12, 98});
    src.add_point({108, 17});
    src.add_edge(0, 1);
    const auto out = connect_points(all_points(src), src, img);
    EXPECT_TRUE(out.has_point(0) && out.has_point(1));
    for (const Pixel& p : centerline_pixels(out)) EXPECT_LE(segment_distance(to_vec(p), {10, 100}, {110, 15}), 2.0);
    EXPECT_EQ(detail::graph_components(out).size(), 1u);
}

TEST(ConnectPoints, IntactEdgesKeepTopology) {
    const auto img = test::render_tubes(120, 120, kY, 2.5);
    const auto src = y_graph();
    const auto out = connect_points(all_points(src), src, img);
    EXPECT_EQ(keypoint_census(out), keypoint_census(src));
    for (const auto& p : src.points()) EXPECT_EQ(out.pos(p.id), p.pos);
    EXPECT_LE(directed_hausdorff(centerline_pixels(out), centerline_pixels(src)), 1.0);
    EXPECT_LE(directed_hausdorff(centerline_pixels(src), centerline_pixels(out)), 1.0);
}

TEST(ConnectPoints, BridgesDroppedInteriorAndJunction) {
    const auto img = test::render_tubes(120, 120, kY, 2.5);
    const auto src = y_graph();
    const auto [ends, junctions] = keypoint_census(src);
    ASSERT_EQ(junctions, 1);
    int junction = -1;
    for (const auto& p : src.points())
        if (src.degree(p.id) == 3) junction = p.id;
    std::vector<SurvivingPoint> kept;
    for (const auto& p : src.points())
        if (p.id != junction && p.id % 4 != 1) kept.push_back({p.id, p.pos});
    const auto out = connect_points(kept, src, img);
    EXPECT_EQ(detail::graph_components(out).size(), 1u);
    for (const auto& s : kept) EXPECT_EQ(out.pos(s.id), s.pos);
    EXPECT_EQ(keypoint_census(out).first, ends);
    for (const Pixel& p : centerline_pixels(out)) {
        double d = 1e9;
        for (const auto& [a, b] : kY) d = std::min(d, segment_distance(to_vec(p), a, b));
        EXPECT_LE(d, 2.0);
    }
}

TEST(ConnectPoints, SplitComponentsStaySeparate) {
    const auto img = test::render_tubes(120, 120, {{{10, 20}, {110, 20}}, {{10, 90}, {110, 90}}}, 2.5);
    auto src = resample_centerline({{{10, 20}, {110, 20}}, {{10, 90}, {110, 90}}}, 5.0);
    finalize_topology(src);
    const auto out = connect_points(all_points(src), src, img);
    EXPECT_EQ(detail::graph_components(out).size(), 2u);
}

TEST(ConnectPoints, TooFewPoints) {
    const auto src = y_graph();
    try {
        connect_points({{src.points()[0].id, src.points()[0].pos}}, src, GrayImage(120, 120, 200));
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "degenerate result");
    }
}

TEST(NewBranches, CoveredMaskAddsNothing) {
    const auto img = test::render_tubes(120, 120, kY, 2.5);
    const auto V = connect_points(all_points(y_graph()), y_graph(), img);
    const auto grown = extract_new_branches(V, img);
    EXPECT_EQ(grown, V);
}

TEST(NewBranches, RecoversExtraBranch) {
    // A 60 px side branch leaves the trunk at (40, 60) heading down.
    auto segs = kY;
    segs.push_back({{40, 60}, {40, 120 - 2}});
    const auto img = test::render_tubes(140, 140, segs, 2.5);
    const auto V = connect_points(all_points(y_graph()), y_graph(), img);
    PostprocessParams pp;
    pp.r_max = 8.0;
    const auto res = grow_branches(V, vesselness(img, pp.vesselness), pp);
    ASSERT_EQ(res.added, 1);
    EXPECT_LE(distance(res.branches[0].front(), {40, 118}), 3.0);
    // Idempotent.
    const auto again = grow_branches(res.graph, vesselness(img, pp.vesselness), pp);
    EXPECT_EQ(again.added, 0);
    EXPECT_EQ(again.graph, res.graph);
}

TEST(NewBranches, ShortBlobIgnored) {
    auto segs = kY;
    segs.push_back({{35, 60}, {35, 64}});  // stub shorter than r_max
    const auto img = test::render_tubes(120, 120, segs, 3.0);
    const auto V = connect_points(all_points(y_graph()), y_graph(), img);
    PostprocessParams pp;
    pp.r_max = 8.0;
    EXPECT_EQ(grow_branches(V, vesselness(img, pp.vesselness), pp).added, 0);
}

TEST(ResampleDense, SparseGraphAlongCenterline) {
    const auto img = test::render_tubes(120, 120, kY, 2.5);
    const auto V = connect_points(all_points(y_graph()), y_graph(), img);
    const auto g = resample_dense(V, 5.0);
    EXPECT_EQ(keypoint_census(g), keypoint_census(y_graph()));
    EXPECT_LE(directed_hausdorff(centerline_pixels(g), centerline_pixels(V)), 1.5);
}
