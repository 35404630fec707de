#pragma once

/// @file global_align.hpp
/// @brief Global translation by brute-force chamfer matching on a distance
/// transform of the destination's skeletonized vessel map.

#include <cstdlib>
#include <vector>

#include "vco/core.hpp"
#include "vco/image_ops.hpp"

namespace vco {

struct GlobalShift {
    int dx = 0;
    int dy = 0;
    /// Mean DT value over template points at this shift.
    double cost = 0.0;

    Pixel offset() const { return {dx, dy}; }
};

/// Σ DT(p + shift) over the template, with edge-clamped reads, summed in
/// template order.
inline double chamfer_sum(const std::vector<Pixel>& tmpl, const ScalarMap& dt, Pixel shift) {
    double sum = 0.0;
    for (const Pixel& p : tmpl) sum += dt.clamped(p.x + shift.x, p.y + shift.y);
    return sum;
}

/// True if shift a precedes b in the tie-break order: smaller |shift|, then
/// smaller dy, then smaller dx.
inline bool shift_precedes(Pixel a, Pixel b) {
    const long na = long(a.x) * a.x + long(a.y) * a.y, nb = long(b.x) * b.x + long(b.y) * b.y;
    if (na != nb) return na < nb;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
}

inline GlobalShift chamfer_match(const std::vector<Pixel>& tmpl, const ScalarMap& target_dt, int radius) {
    if (tmpl.empty()) throw Error("empty chamfer template");
    if (radius < 0) throw Error("negative search radius");
    Pixel best{0, 0};
    double best_sum = chamfer_sum(tmpl, target_dt, best);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            const Pixel s{dx, dy};
            const double sum = chamfer_sum(tmpl, target_dt, s);
            if (sum < best_sum || (sum == best_sum && shift_precedes(s, best))) {
                best = s;
                best_sum = sum;
            }
        }
    return {best.x, best.y, best_sum / static_cast<double>(tmpl.size())};
}

struct TargetShapeParams {
    VesselnessParams vesselness;
    double threshold = 0.15;
};

/// Skeleton of the thresholded vesselness of the destination frame.
inline std::vector<Pixel> build_target_shape(const GrayImage& dst, const TargetShapeParams& params = {}) {
    const auto skeleton = skeletonize(binarize(vesselness(dst, params.vesselness), params.threshold));
    if (skeleton.empty()) throw Error("no vessels detected in destination");
    return skeleton;
}

}  // namespace vco
