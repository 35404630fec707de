#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "test_util.hpp"
#include "vco/vessel_graph.hpp"

using namespace vco;

namespace {

std::string error_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

// Degree by scanning the edge list, independent of the graph's adjacency.
std::map<int, int> scan_degrees(const VesselGraph& g) {
    std::map<int, int> deg;
    for (const auto& p : g.points()) deg[p.id] = 0;
    for (const auto& [a, b] : g.edges()) {
        ++deg[a];
        ++deg[b];
    }
    return deg;
}

VesselGraph y_graph() {
    return resample_centerline({{{30, 30}, {30, 10}}, {{30, 30}, {10, 45}}, {{30, 30}, {50, 45}}}, 5.0);
}

}  // namespace

TEST(Resample, StraightChainAtArcPositions) {
    const auto g = resample_centerline({{{0, 0}, {20, 0}}}, 5.0);
    ASSERT_EQ(g.size(), 5u);
    std::set<int> xs;
    for (const auto& p : g.points()) {
        EXPECT_EQ(p.pos.y, 0);
        xs.insert(p.pos.x);
    }
    EXPECT_EQ(xs, (std::set<int>{0, 5, 10, 15, 20}));
    EXPECT_EQ(g.edges().size(), 4u);
}

TEST(Resample, Errors) {
    EXPECT_EQ(error_of([] { resample_centerline({{{3, 3}, {3, 3}}}, 5.0); }), "degenerate polyline");
    EXPECT_EQ(error_of([] { resample_centerline({}, 5.0); }), "no centerline");
    EXPECT_EQ(error_of([] { resample_centerline({{{0, 0}, {9, 0}}}, 0.0); }), "bad interval");
    EXPECT_EQ(error_of([] { resample_centerline({{{0, 0}, {9, 0}}}, -1.0); }), "bad interval");
}

TEST(Resample, YShapeMergesSharedEndpoint) {
    const auto g = y_graph();
    const auto deg = scan_degrees(g);
    int deg3 = 0;
    for (const auto& [id, d] : deg) {
        EXPECT_GE(d, 1);
        deg3 += d == 3;
    }
    EXPECT_EQ(deg3, 1);
}

TEST(Resample, EndpointsWithinOnePixelMerge) {
    const auto g = resample_centerline({{{0, 0}, {20, 0}}, {{21, 0}, {21, 20}}}, 5.0);
    EXPECT_EQ(keypoint_census(g), std::make_pair(2, 0));
}

TEST(Resample, SpacingNeverExceedsIntervalPlusHalf) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> c(0.0, 200.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Vec2d> line;
        const int n = 2 + trial % 6;
        for (int i = 0; i < n; ++i) line.push_back({c(rng), c(rng)});
        const double interval = 2.0 + trial % 7;
        const auto g = resample_centerline({line}, interval);
        for (const auto& [a, b] : g.edges()) EXPECT_LE(distance(g.pos(a), g.pos(b)), interval + 0.5);
    }
}

TEST(Keypoints, PathEnds) {
    const auto g = resample_centerline({{{0, 0}, {20, 0}}}, 5.0);
    const auto kps = detect_keypoints(g);
    ASSERT_EQ(kps.size(), 2u);
    for (int id : kps) EXPECT_TRUE(g.pos(id).x == 0 || g.pos(id).x == 20);
}

TEST(Keypoints, YGraph) {
    const auto g = y_graph();
    EXPECT_EQ(detect_keypoints(g).size(), 4u);
}

TEST(Keypoints, XGraphCrossing) {
    VesselGraph g;
    const int c = g.add_point({10, 10});
    for (Pixel d : {Pixel{1, 0}, Pixel{-1, 0}, Pixel{0, 1}, Pixel{0, -1}}) {
        int prev = c;
        for (int k = 1; k <= 3; ++k) {
            const int id = g.add_point({10 + d.x * 5 * k, 10 + d.y * 5 * k});
            g.add_edge(prev, id);
            prev = id;
        }
    }
    int ends = 0, junctions = 0;
    for (const auto& [id, d] : scan_degrees(g)) {
        ends += d == 1;
        junctions += d >= 3;
    }
    const auto kps = detect_keypoints(g);
    EXPECT_EQ(static_cast<int>(kps.size()), ends + junctions);
    EXPECT_EQ(ends, 4);
    EXPECT_EQ(junctions, 1);
}

TEST(Keypoints, IdempotentAndDegreeOnly) {
    std::mt19937 rng(3);
    for (int t = 0; t < 50; ++t) {
        auto g = test::random_graph(rng, 20, 5);
        const auto k1 = detect_keypoints(g);
        g.set_keypoints(k1);
        EXPECT_EQ(detect_keypoints(g), k1);
        const auto deg = scan_degrees(g);
        for (const auto& [id, d] : deg) {
            const bool is_kp = std::binary_search(k1.begin(), k1.end(), id);
            EXPECT_EQ(is_kp, d == 1 || d >= 3);
        }
    }
}

TEST(Branches, StraightAndY) {
    auto line = resample_centerline({{{0, 0}, {20, 0}}}, 5.0);
    finalize_topology(line);
    ASSERT_EQ(line.branches().size(), 1u);
    EXPECT_EQ(line.branches()[0].point_ids.size(), line.size());

    auto y = y_graph();
    finalize_topology(y);
    ASSERT_EQ(y.branches().size(), 3u);
    int junction = -1;
    for (const auto& p : y.points())
        if (y.degree(p.id) == 3) junction = p.id;
    for (const auto& b : y.branches()) EXPECT_TRUE(b.endpoint_a == junction || b.endpoint_b == junction);
}

TEST(Branches, LoopAtJunction) {
    // Tail 0-1-2 then loop 2-3-4-5-2; node 2 has degree 3.
    VesselGraph g;
    for (int i = 0; i < 6; ++i) g.add_point({i * 5, 0});
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.add_edge(2, 3);
    g.add_edge(3, 4);
    g.add_edge(4, 5);
    g.add_edge(5, 2);
    finalize_topology(g);
    ASSERT_EQ(g.branches().size(), 2u);
    int loops = 0;
    for (const auto& b : g.branches())
        if (b.endpoint_a == b.endpoint_b) {
            ++loops;
            EXPECT_EQ(b.endpoint_a, 2);
            EXPECT_EQ(b.point_ids.size(), 5u);
        }
    EXPECT_EQ(loops, 1);
}

TEST(Branches, PureCycleAnchoredAtSmallestId) {
    VesselGraph g;
    for (int i = 0; i < 4; ++i) g.add_point({i, i});
    for (int i = 0; i < 4; ++i) g.add_edge(i, (i + 1) % 4);
    finalize_topology(g);
    ASSERT_EQ(g.branches().size(), 1u);
    EXPECT_EQ(g.branches()[0].endpoint_a, 0);
    EXPECT_EQ(g.branches()[0].endpoint_b, 0);
    EXPECT_EQ(g.keypoints(), std::vector<int>{0});
}

TEST(Branches, IsolatedPointRejected) {
    VesselGraph g;
    g.add_point({1, 1});
    g.set_keypoints(detect_keypoints(g));
    try {
        split_branches(g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "unbranchable point");
    }
}

TEST(Branches, EdgePartitionProperty) {
    std::mt19937 rng(11);
    for (int t = 0; t < 100; ++t) {
        auto g = test::random_graph(rng, 5 + t % 30, t % 6);
        finalize_topology(g);
        std::size_t edge_count = 0;
        std::set<std::pair<int, int>> seen;
        std::set<int> covered;
        const std::set<int> kps(g.keypoints().begin(), g.keypoints().end());
        for (const auto& b : g.branches()) {
            ASSERT_GE(b.point_ids.size(), 2u);
            EXPECT_EQ(b.point_ids.front(), b.endpoint_a);
            EXPECT_EQ(b.point_ids.back(), b.endpoint_b);
            EXPECT_TRUE(kps.count(b.endpoint_a) && kps.count(b.endpoint_b));
            edge_count += b.point_ids.size() - 1;
            for (std::size_t k = 0; k + 1 < b.point_ids.size(); ++k) {
                EXPECT_TRUE(g.has_edge(b.point_ids[k], b.point_ids[k + 1]));
                EXPECT_TRUE(seen.insert(std::minmax(b.point_ids[k], b.point_ids[k + 1])).second);
            }
            for (std::size_t k = 1; k + 1 < b.point_ids.size(); ++k) EXPECT_EQ(g.degree(b.point_ids[k]), 2);
            covered.insert(b.point_ids.begin(), b.point_ids.end());
        }
        EXPECT_EQ(edge_count, g.edges().size());
        EXPECT_EQ(covered.size(), g.size());
    }
}

TEST(GraphFile, RoundTripIsLossless) {
    std::mt19937 rng(5);
    for (int t = 0; t < 20; ++t) {
        auto g = test::random_graph(rng, 3 + t, t % 4);
        if (t % 2) finalize_topology(g);
        const auto back = graph_from_json(nlohmann::json::parse(graph_to_json(g).dump()));
        EXPECT_EQ(back, g);
        EXPECT_EQ(graph_to_json(back).dump(), graph_to_json(g).dump());
    }
}

TEST(GraphFile, RejectsBadEdges) {
    const auto j = nlohmann::json::parse(R"({"points":[{"id":0,"x":0,"y":0}],"edges":[[0,7]]})");
    EXPECT_THROW(graph_from_json(j), Error);
    const auto dup = nlohmann::json::parse(R"({"points":[{"id":0,"x":0,"y":0},{"id":0,"x":1,"y":0}],"edges":[]})");
    EXPECT_THROW(graph_from_json(dup), Error);
}
