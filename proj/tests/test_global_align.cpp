#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"
#include "vco/global_align.hpp"

using namespace vco;

namespace {

// Independent exhaustive scan; same summation order as the definition
// (template order), explicit tie-break comparisons.
GlobalShift oracle_scan(const std::vector<Pixel>& tmpl, const ScalarMap& dt, int radius) {
    struct Cand {
        int dx, dy;
        double sum;
    };
    std::vector<Cand> all;
    for (int dx = -radius; dx <= radius; ++dx)
        for (int dy = -radius; dy <= radius; ++dy) {
            double s = 0.0;
            for (const Pixel& p : tmpl) {
                const int x = std::min(std::max(p.x + dx, 0), dt.width() - 1);
                const int y = std::min(std::max(p.y + dy, 0), dt.height() - 1);
                s += dt(x, y);
            }
            all.push_back({dx, dy, s});
        }
    std::sort(all.begin(), all.end(), [](const Cand& a, const Cand& b) {
        if (a.sum != b.sum) return a.sum < b.sum;
        const int na = a.dx * a.dx + a.dy * a.dy, nb = b.dx * b.dx + b.dy * b.dy;
        if (na != nb) return na < nb;
        if (a.dy != b.dy) return a.dy < b.dy;
        return a.dx < b.dx;
    });
    return {all[0].dx, all[0].dy, all[0].sum / tmpl.size()};
}

std::vector<Pixel> random_pixels(std::mt19937& rng, int n, int lo, int hi) {
    std::uniform_int_distribution<int> c(lo, hi);
    std::vector<Pixel> out;
    for (int i = 0; i < n; ++i) out.push_back({c(rng), c(rng)});
    return out;
}

}  // namespace

TEST(Chamfer, SelfMatch) {
    std::mt19937 rng(1);
    const auto target = random_pixels(rng, 40, 20, 80);
    const auto dt = distance_transform(target, 100, 100);
    const auto s = chamfer_match(target, dt, 10);
    EXPECT_EQ(s.dx, 0);
    EXPECT_EQ(s.dy, 0);
    EXPECT_EQ(s.cost, 0.0);
}

TEST(Chamfer, ExactTranslation) {
    std::mt19937 rng(2);
    const auto tmpl = random_pixels(rng, 40, 20, 80);
    std::vector<Pixel> target;
    for (const Pixel& p : tmpl) target.push_back(p + Pixel{6, -4});
    const auto s = chamfer_match(tmpl, distance_transform(target, 100, 100), 10);
    EXPECT_EQ(s.dx, 6);
    EXPECT_EQ(s.dy, -4);
    EXPECT_EQ(s.cost, 0.0);
}

TEST(Chamfer, TieBreakPrefersSmallestShift) {
    // Uniform DT: every shift ties, so (0,0) wins; then a symmetric case.
    ScalarMap flat(30, 30, 1.0);
    const auto s = chamfer_match({{15, 15}}, flat, 5);
    EXPECT_EQ(s.offset(), (Pixel{0, 0}));
    // Two targets at (+2,0) and (0,-2) and (-2,0), (0,2) from the template:
    // all four have zero cost and norm 2; smallest dy wins, then dx.
    const auto dt = distance_transform({{17, 15}, {15, 13}, {13, 15}, {15, 17}}, 30, 30);
    const auto t = chamfer_match({{15, 15}}, dt, 5);
    EXPECT_EQ(t.offset(), (Pixel{0, -2}));
}

TEST(Chamfer, MatchesExhaustiveOracle) {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const auto target = random_pixels(rng, 15, 0, 63);
        const auto tmpl = random_pixels(rng, 10, 0, 63);
        const auto dt = distance_transform(target, 64, 64);
        const auto got = chamfer_match(tmpl, dt, 8);
        const auto want = oracle_scan(tmpl, dt, 8);
        EXPECT_EQ(got.offset(), want.offset());
        EXPECT_DOUBLE_EQ(got.cost, want.cost);
        EXPECT_LE(got.cost, chamfer_sum(tmpl, dt, {0, 0}) / tmpl.size());
    }
}

TEST(Chamfer, CommonTranslationLeavesRelativeShift) {
    std::mt19937 rng(4);
    const auto tmpl = random_pixels(rng, 30, 40, 80);
    std::vector<Pixel> target;
    for (const Pixel& p : tmpl) target.push_back(p + Pixel{3, 5});
    const auto a = chamfer_match(tmpl, distance_transform(target, 128, 128), 8);
    std::vector<Pixel> tmpl2, target2;
    for (const Pixel& p : tmpl) tmpl2.push_back(p + Pixel{-11, 7});
    for (const Pixel& p : target) target2.push_back(p + Pixel{-11, 7});
    const auto b = chamfer_match(tmpl2, distance_transform(target2, 128, 128), 8);
    EXPECT_EQ(a.offset(), b.offset());
}

TEST(Chamfer, EmptyTemplateRejected) { EXPECT_THROW(chamfer_match({}, ScalarMap(20, 20, 0.0), 3), Error); }

TEST(TargetShape, ConstantImageHasNoVessels) {
    try {
        build_target_shape(GrayImage(64, 64, 100));
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "no vessels detected in destination");
    }
}

TEST(TargetShape, SingleTubeNearCenterline) {
    const auto img = test::render_tubes(96, 96, {{{10, 30}, {85, 60}}}, 2.5);
    const auto skel = build_target_shape(img);
    ASSERT_FALSE(skel.empty());
    // Distance from each skeleton pixel to the segment.
    const Vec2d a{10, 30}, b{85, 60};
    for (const Pixel& p : skel) {
        const Vec2d ab = b - a, ap = to_vec(p) - a;
        const double t = std::clamp((ap.x * ab.x + ap.y * ab.y) / (ab.x * ab.x + ab.y * ab.y), 0.0, 1.0);
        EXPECT_LE((ap - ab * t).norm(), 2.0) << p.x << "," << p.y;
    }
}

TEST(TargetShape, TwoDisjointTubes) {
    const auto img = test::render_tubes(96, 96, {{{10, 20}, {85, 20}}, {{10, 70}, {85, 75}}}, 2.5);
    const auto skel = build_target_shape(img);
    EXPECT_EQ(count_components(skel, 96, 96), 2);
}
