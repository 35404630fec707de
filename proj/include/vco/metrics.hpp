#pragma once

/// @file metrics.hpp
/// @brief Radius-matched precision/recall, target registration error and
/// sufficiency run length.

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <vector>

#include "vco/core.hpp"
#include "vco/image_ops.hpp"

namespace vco {

struct ExtractionScore {
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
};

inline double f_measure(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

namespace detail {

// Fraction of `from` pixels with a `to` pixel within `radius`, using a
// dilation of `to` over the joint bounding box.
inline double covered_fraction(const std::vector<Pixel>& from, const std::vector<Pixel>& to, double radius) {
    if (from.empty()) return 0.0;
    if (to.empty()) return 0.0;
    int x0 = from[0].x, x1 = x0, y0 = from[0].y, y1 = y0;
    for (const auto* set : {&from, &to})
        for (const Pixel& p : *set) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
    const Pixel o{x0, y0};
    std::vector<Pixel> shifted;
    shifted.reserve(to.size());
    for (const Pixel& p : to) shifted.push_back(p - o);
    const Mask near = dilate(shifted, x1 - x0 + 1, y1 - y0 + 1, radius);
    std::size_t hit = 0;
    for (const Pixel& p : from) hit += near[p - o] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(from.size());
}

}  // namespace detail

/// An extracted pixel is a true positive if a truth pixel lies within
/// `radius`; recall counts truth pixels with an extracted pixel within
/// `radius`. Empty extraction scores zero.
inline ExtractionScore score_centerline(const std::vector<Pixel>& extracted, const std::vector<Pixel>& truth,
                                        double radius) {
    if (truth.empty()) throw Error("empty truth");
    if (!(radius > 0.0)) throw Error("radius must be positive");
    ExtractionScore s;
    s.precision = detail::covered_fraction(extracted, truth, radius);
    s.recall = detail::covered_fraction(truth, extracted, radius);
    s.f_measure = f_measure(s.precision, s.recall);
    return s;
}

/// Mean Euclidean distance over ids present in both maps.
inline double tre(const std::map<int, Pixel>& estimated, const std::map<int, Pixel>& truth) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [id, p] : estimated) {
        auto it = truth.find(id);
        if (it == truth.end()) continue;
        sum += distance(p, it->second);
        ++n;
    }
    if (n == 0) throw Error("no shared ids");
    return sum / static_cast<double>(n);
}

/// Consecutive leading frames with F above the threshold.
inline int sufficiency_run_length(const std::vector<double>& f_values, double threshold) {
    if (f_values.empty()) throw Error("no frames");
    int n = 0;
    while (n < static_cast<int>(f_values.size()) && f_values[n] > threshold) ++n;
    return n;
}

struct FrameScore {
    int frame = 0;
    ExtractionScore score;
    /// Negative when unavailable.
    double tre = -1.0;
};

inline void write_scores_csv(const std::vector<FrameScore>& rows, std::ostream& os) {
    os << "frame,precision,recall,f,tre\n";
    char buf[160];
    for (const auto& r : rows) {
        if (r.tre >= 0.0)
            std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f\n", r.frame, r.score.precision, r.score.recall,
                          r.score.f_measure, r.tre);
        else
            std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,\n", r.frame, r.score.precision, r.score.recall,
                          r.score.f_measure);
        os << buf;
    }
}

}  // namespace vco
