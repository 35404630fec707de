#include <gtest/gtest.h>

#include <random>
#include <set>

#include "test_util.hpp"
#include "vco/candidate_search.hpp"

using namespace vco;

namespace {

GrayImage textured_y(unsigned seed) {
    auto img = test::render_tubes(160, 160, {{{80, 80}, {80, 20}}, {{80, 80}, {30, 130}}, {{80, 80}, {130, 130}}}, 3.0);
    std::mt19937 rng(seed);
    std::normal_distribution<double> n(0.0, 4.0);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(std::clamp(v + n(rng), 0.0, 255.0));
    return img;
}

VesselGraph y_graph() {
    auto g = resample_centerline({{{80, 80}, {80, 20}}, {{80, 80}, {30, 130}}, {{80, 80}, {130, 130}}}, 5.0);
    finalize_topology(g);
    return g;
}

GrayImage translate(const GrayImage& img, Pixel d) {
    GrayImage out(img.width(), img.height(), 0);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) out(x, y) = img.clamped(x - d.x, y - d.y);
    return out;
}

}  // namespace

TEST(KeypointMatch, SelfMatch) {
    const auto img = textured_y(1);
    const auto g = y_graph();
    DescriptorExtractor src(img), dst(img);
    SearchParams params;
    const auto kms = match_keypoints(src, dst, g, {}, params);
    ASSERT_EQ(kms.size(), g.keypoints().size());
    for (const auto& km : kms) {
        ASSERT_FALSE(km.matches.empty());
        EXPECT_LE(km.matches.size(), 2u);
        EXPECT_EQ(km.matches[0].pos, g.pos(km.keypoint_id));
        EXPECT_EQ(km.matches[0].distance, 0.0);
        for (std::size_t a = 0; a < km.matches.size(); ++a)
            for (std::size_t b = a + 1; b < km.matches.size(); ++b)
                EXPECT_GT(distance(km.matches[a].pos, km.matches[b].pos), params.nms_radius);
    }
}

TEST(KeypointMatch, RecoversTranslation) {
    const auto img = textured_y(2);
    const auto moved = translate(img, {9, 2});
    const auto g = y_graph();
    DescriptorExtractor src(img), dst(moved);
    const auto kms = match_keypoints(src, dst, g, {9, 2, 0.0}, SearchParams{});
    for (const auto& km : kms) {
        const Pixel p = g.pos(km.keypoint_id);
        // Keypoints near the image edge see replicated padding; check interior ones.
        if (p.x < 20 || p.y < 20 || p.x > 130 || p.y > 130) continue;
        EXPECT_EQ(km.matches[0].pos, (p + Pixel{9, 2}));
        EXPECT_LE(km.matches[0].distance, 1e-6);
    }
}

TEST(KeypointMatch, TwinPatchesBothReturned) {
    // Two identical crosses 20 px apart inside one window.
    std::vector<std::pair<Vec2d, Vec2d>> segs;
    for (double cx : {60.0, 80.0}) {
        segs.push_back({{cx - 2, 60}, {cx + 2, 60}});
        segs.push_back({{cx, 58}, {cx, 62}});
    }
    // Thin arms keep each 32x32 patch free of the twin's gradients.
    const auto img = test::render_tubes(140, 120, segs, 1.0);
    VesselGraph g;
    const int a = g.add_point({60, 60});
    const int b = g.add_point({60, 58});
    g.add_edge(a, b);
    g.set_keypoints({a});
    DescriptorExtractor src(img), dst(img);
    SearchParams params;
    params.keypoint_window_w = params.keypoint_window_h = 61;
    const auto kms = match_keypoints(src, dst, g, {10, 0, 0.0}, params);
    ASSERT_EQ(kms[0].matches.size(), 2u);
    std::set<Pixel> got{kms[0].matches[0].pos, kms[0].matches[1].pos};
    EXPECT_EQ(got, (std::set<Pixel>{{60, 60}, {80, 60}}));
    EXPECT_EQ(kms[0].matches[0].distance, 0.0);
    EXPECT_EQ(kms[0].matches[1].distance, 0.0);
}

TEST(BranchCandidates, Cases) {
    KeypointMatch none_a{0, {10, 10}, {}}, none_b{1, {20, 20}, {}};
    EXPECT_EQ(branch_candidates(0, none_a, none_b).displacements, (std::vector<Pixel>{{0, 0}}));

    KeypointMatch a{0, {10, 10}, {{{12, 10}, 0.1}, {{10, 14}, 0.2}}};
    KeypointMatch b{1, {20, 20}, {{{19, 20}, 0.1}, {{20, 17}, 0.3}}};
    const auto five = branch_candidates(0, a, b).displacements;
    EXPECT_EQ(five, (std::vector<Pixel>{{2, 0}, {0, 4}, {-1, 0}, {0, -3}, {0, 0}}));

    KeypointMatch sa{0, {10, 10}, {{{13, 13}, 0.1}}}, sb{1, {20, 20}, {{{23, 23}, 0.1}}};
    EXPECT_EQ(branch_candidates(0, sa, sb).displacements, (std::vector<Pixel>{{3, 3}, {0, 0}}));

    // A match equal to the zero displacement is reported once, last.
    KeypointMatch za{0, {10, 10}, {{{10, 10}, 0.0}, {{11, 10}, 0.1}}};
    EXPECT_EQ(branch_candidates(0, za, none_b).displacements, (std::vector<Pixel>{{1, 0}, {0, 0}}));
}

TEST(PointCandidates, SelfIsRankOne) {
    const auto img = textured_y(3);
    DescriptorExtractor src(img), dst(img);
    const auto g = y_graph();
    for (const auto& p : g.points()) {
        const auto c = point_candidates(src, dst, p, {}, {{0, 0}}, SearchParams{});
        ASSERT_FALSE(c.empty());
        EXPECT_EQ(c[0].pos, p.pos);
        EXPECT_EQ(c[0].distance, 0.0);
        EXPECT_LE(c.size(), 5u);
    }
}

TEST(PointCandidates, BoundedByLabelBudgetAndDeduplicated) {
    const auto img = textured_y(4);
    DescriptorExtractor src(img), dst(img);
    const VesselPoint p{0, {80, 50}};
    const std::vector<Pixel> five{{4, 0}, {-4, 0}, {0, 6}, {0, -6}, {0, 0}};
    const auto c = point_candidates(src, dst, p, {}, five, SearchParams{});
    EXPECT_LE(c.size(), 25u);
    std::set<Pixel> unique;
    for (const auto& m : c) EXPECT_TRUE(unique.insert(m.pos).second);
    // Same window twice gives the same list as once.
    const auto once = point_candidates(src, dst, p, {}, {{0, 0}}, SearchParams{});
    const auto twice = point_candidates(src, dst, p, {}, {{0, 0}, {0, 0}}, SearchParams{});
    EXPECT_EQ(once, twice);
    for (std::size_t k = 1; k < c.size(); ++k) EXPECT_LE(c[k - 1].distance, c[k].distance);
}

TEST(PointCandidates, ShrinkingWindowNeverAddsCandidates) {
    const auto img = textured_y(5);
    DescriptorExtractor src(img), dst(img);
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> c(5, 154);
    for (int t = 0; t < 30; ++t) {
        const VesselPoint p{0, {c(rng), c(rng)}};
        std::size_t prev = 1000;
        for (int w : {31, 21, 15, 9, 5}) {
            SearchParams params;
            params.point_window_w = params.point_window_h = w;
            params.point_matches = 25;
            const auto list = point_candidates(src, dst, p, {3, -2, 0}, {{0, 0}}, params);
            EXPECT_LE(list.size(), prev);
            prev = list.size();
        }
    }
}

TEST(SearchCandidates, IdentityPairFindsEveryPoint) {
    const auto img = textured_y(6);
    DescriptorExtractor src(img), dst(img);
    const auto g = y_graph();
    const auto res = search_candidates(src, dst, g, {}, SearchParams{});
    ASSERT_EQ(res.candidates.point_ids.size(), g.size());
    EXPECT_EQ(res.branch_candidates.size(), g.branches().size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto& list = res.candidates.candidates[k];
        ASSERT_FALSE(list.empty());
        EXPECT_LE(list.size(), 25u);
        EXPECT_EQ(list[0].pos, g.points()[k].pos);
        EXPECT_EQ(list[0].distance, 0.0);
        for (const auto& m : list) EXPECT_TRUE(img.contains(m.pos));
    }
}

TEST(SearchCandidates, CandidatesStayInBoundsUnderLargeShift) {
    const auto img = textured_y(7);
    DescriptorExtractor src(img), dst(img);
    const auto g = y_graph();
    for (bool hier : {true, false}) {
        SearchParams params;
        params.hierarchical = hier;
        const auto res = search_candidates(src, dst, g, {60, -70, 0}, params);
        for (const auto& list : res.candidates.candidates) {
            EXPECT_LE(list.size(), 25u);
            for (const auto& m : list) EXPECT_TRUE(img.contains(m.pos));
        }
    }
}
