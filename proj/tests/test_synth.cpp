#include <gtest/gtest.h>

#include "vco/image_ops.hpp"
#include "vco/metrics.hpp"
#include "vco/synth.hpp"

using namespace vco;

namespace {

SynthConfig still(std::uint64_t seed = 3) {
    SynthConfig c;
    c.seed = seed;
    c.global_amplitude_x = c.global_amplitude_y = 0.0;
    c.local_amplitude = 0.0;
    return c;
}

}  // namespace

TEST(Synth, SameSeedSameSequence) {
    SynthConfig c;
    c.seed = 11;
    const auto a = generate_sequence(c, 3), b = generate_sequence(c, 3);
    for (int t = 0; t < 3; ++t) {
        EXPECT_EQ(a.frames[t].data(), b.frames[t].data());
        EXPECT_EQ(a.truth_pixels[t], b.truth_pixels[t]);
    }
    c.seed = 12;
    EXPECT_NE(generate_sequence(c, 2).frames[0].data(), a.frames[0].data());
}

TEST(Synth, DepthOneIsSingleBranch) {
    SynthConfig c = still();
    c.depth = 1;
    const auto tree = generate_tree(c);
    EXPECT_EQ(tree.curves.size(), 1u);
    const auto [ends, junctions] = keypoint_census(tree.graph);
    EXPECT_EQ(ends, 2);
    EXPECT_EQ(junctions, 0);
}

TEST(Synth, DeepTreesBranch) {
    int branched = 0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        SynthConfig c = still(s);
        const auto tree = generate_tree(c);
        EXPECT_GE(tree.curves.size(), 3u) << "seed " << s;
        branched += keypoint_census(tree.graph).second >= 3;
    }
    EXPECT_GE(branched, 18);
}

TEST(Synth, TreeGraphHasSampleSpacing) {
    const auto tree = generate_tree(still());
    for (const auto& [a, b] : tree.graph.edges()) {
        const double d = distance(tree.graph.pos(a), tree.graph.pos(b));
        EXPECT_LE(d, 5.0 * 1.5 + 1.0);
    }
}

TEST(Synth, NoMotionIsIdentity) {
    const auto seq = generate_sequence(still(), 3);
    for (const auto& corr : seq.correspondences)
        for (const auto& [id, p] : corr) EXPECT_EQ(p, seq.truth_graphs[0].pos(id));
    std::map<int, Pixel> own;
    for (const auto& p : seq.truth_graphs[1].points()) own[p.id] = p.pos;
    EXPECT_EQ(tre(own, seq.correspondences[0]), 0.0);
}

TEST(Synth, PureGlobalShiftIsExact) {
    SynthConfig c = still();
    c.global_shifts = {{0, 0}, {10, 0}};
    const auto seq = generate_sequence(c, 2);
    std::size_t checked = 0;
    for (const auto& [id, p] : seq.correspondences[0]) {
        const Pixel q = seq.truth_graphs[0].pos(id);
        if (q.x + 10 >= c.width) continue;
        EXPECT_EQ(p, (Pixel{q.x + 10, q.y}));
        ++checked;
    }
    EXPECT_GT(checked, 100u);
}

TEST(Synth, LocalDisplacementIsBounded) {
    SynthConfig c;
    c.seed = 5;
    c.local_amplitude = 5.0;
    const auto field = make_displacement_field(c);
    for (int t = 0; t < 20; ++t) {
        const Vec2d g = global_shift_at(c, t);
        for (int y = 0; y < c.height; y += 7)
            for (int x = 0; x < c.width; x += 7) {
                const Vec2d d = displacement(c, field, t, {double(x), double(y)});
                EXPECT_LE((d - g).norm(), 5.0 + 1e-6);
            }
    }
}

TEST(Synth, NothingVisibleIsBackgroundOnly) {
    SynthConfig c = still();
    c.inflow_start = c.inflow_end = 0.0;
    c.noise_sigma = 0.0;
    const auto seq = generate_sequence(c, 2);
    const auto bg = make_background(c);
    for (std::size_t i = 0; i < bg.size(); ++i)
        ASSERT_EQ(seq.frames[0].data()[i], std::lround(std::clamp(bg.data()[i], 0.0, 255.0)));
    EXPECT_TRUE(seq.truth_pixels[0].empty());
}

TEST(Synth, VesselsAreDarkAndTubular) {
    SynthConfig c = still();
    c.noise_sigma = 0.0;
    const auto seq = generate_sequence(c, 2);
    const auto bg = make_background(c);
    const auto& img = seq.frames[0];
    double dark = 0.0;
    for (const Pixel& p : seq.truth_pixels[0]) dark += bg[p] - img[p];
    EXPECT_GT(dark / seq.truth_pixels[0].size(), 30.0);

    SynthConfig noisy = c;
    noisy.noise_sigma = 4.0;
    const auto v = vesselness(generate_sequence(noisy, 2).frames[0]);
    // Allow one pixel for rasterization offset from the ridge.
    std::size_t strong = 0;
    for (const Pixel& p : seq.truth_pixels[0]) {
        double best = 0.0;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (v.contains(p + Pixel{dx, dy})) best = std::max(best, v[p + Pixel{dx, dy}]);
        strong += best >= 0.15;
    }
    EXPECT_GE(double(strong) / seq.truth_pixels[0].size(), 0.95);
}

TEST(Synth, InflowRevealsMoreOverTime) {
    SynthConfig c = still();
    c.inflow_start = 0.5;
    c.inflow_end = 1.0;
    const auto seq = generate_sequence(c, 4);
    for (int t = 1; t < 4; ++t) {
        EXPECT_GE(seq.truth_pixels[t].size(), seq.truth_pixels[t - 1].size());
        EXPECT_GE(seq.truth_graphs[t].size(), seq.truth_graphs[t - 1].size());
    }
    EXPECT_GT(seq.truth_pixels[3].size(), seq.truth_pixels[0].size());
}

TEST(Synth, RevealHidesOneLeafUntilItsFrame) {
    SynthConfig c = still();
    c.reveal_frame = 1;
    const auto seq = generate_sequence(c, 2);
    ASSERT_GE(seq.tree.hidden_branch, 1);
    EXPECT_GT(seq.truth_graphs[1].size(), seq.truth_graphs[0].size());
    const int leaf = seq.tree.hidden_branch;
    for (std::size_t k = 0; k < seq.tree.graph.size(); ++k)
        if (seq.tree.branch_of[k] == leaf) {
            EXPECT_FALSE(seq.truth_graphs[0].has_point(seq.tree.graph.points()[k].id));
        }
}

TEST(Synth, RejectsBadConfig) {
    SynthConfig c;
    c.branch_prob = 1.5;
    EXPECT_THROW(c.validate(), Error);
    EXPECT_THROW(generate_sequence(SynthConfig{}, 1), Error);
}
