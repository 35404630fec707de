#pragma once

/// @file config.hpp
/// @brief Pipeline tunables and their flat `key = value` file format.

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "vco/candidate_search.hpp"
#include "vco/core.hpp"
#include "vco/global_align.hpp"
#include "vco/mrf.hpp"
#include "vco/postprocess.hpp"

namespace vco {

struct PipelineConfig {
    double sample_interval = 5.0;
    int chamfer_radius = 30;
    SearchParams search;
    EnergyParams energy;
    SolverParams solver;
    VesselnessParams vesselness;
    double vessel_threshold = 0.15;
    PostprocessParams post;
    bool grow_branches = true;
    double eval_radius = 2.0;

    TargetShapeParams target_shape() const { return {vesselness, vessel_threshold}; }

    PostprocessParams postprocess() const {
        PostprocessParams p = post;
        p.vesselness = vesselness;
        p.threshold = vessel_threshold;
        return p;
    }

    void validate() const {
        auto odd = [](int v) { return v >= 1 && v % 2 == 1; };
        if (!odd(search.keypoint_window_w) || !odd(search.keypoint_window_h) || !odd(search.point_window_w) ||
            !odd(search.point_window_h) || !odd(search.flat_window_w) || !odd(search.flat_window_h))
            throw Error("window sizes must be odd and positive");
        if (search.keypoint_matches < 1 || search.point_matches < 1) throw Error("match counts must be >= 1");
        if (search.nms_radius < 0 || chamfer_radius < 0) throw Error("radii must be >= 0");
        if (!(sample_interval > 0)) throw Error("bad interval");
        if (!(energy.lambda > 0 && energy.unary_truncation > 0 && energy.pairwise_truncation > 0))
            throw Error("energy parameters must be positive");
        if (!(vessel_threshold > 0 && vessel_threshold < 1)) throw Error("vessel_threshold outside (0, 1)");
        if (vesselness.scales.empty()) throw Error("no vesselness scales");
        if (solver.max_iters < 1) throw Error("max_iters must be >= 1");
        if (post.max_new_branches < 0) throw Error("max_new_branches must be >= 0");
        if (!(eval_radius > 0)) throw Error("eval_radius must be positive");
    }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw Error("bad value for " + key + ": '" + s + "'");
    return v;
}

inline int parse_int(const std::string& key, const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw Error("bad value for " + key + ": '" + s + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "on" || s == "true" || s == "1" || s == "yes") return true;
    if (s == "off" || s == "false" || s == "0" || s == "no") return false;
    throw Error("bad value for " + key + ": '" + s + "'");
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace detail

struct ConfigKey {
    std::string name;
    std::string help;
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

/// Every tunable, in file order.
inline const std::vector<ConfigKey>& config_keys() {
    using C = PipelineConfig;
    auto real = [](std::string name, std::string help, double C::*outer) {
        return ConfigKey{name, help, [name, outer](C& c, const std::string& s) { c.*outer = detail::parse_double(name, s); },
                         [outer](const C& c) { return detail::format_double(c.*outer); }};
    };
    auto real_at = [](std::string name, std::string help, std::function<double&(C&)> ref) {
        return ConfigKey{name, help, [name, ref](C& c, const std::string& s) { ref(c) = detail::parse_double(name, s); },
                         [ref](const C& c) { return detail::format_double(ref(const_cast<C&>(c))); }};
    };
    auto int_at = [](std::string name, std::string help, std::function<int&(C&)> ref) {
        return ConfigKey{name, help, [name, ref](C& c, const std::string& s) { ref(c) = detail::parse_int(name, s); },
                         [ref](const C& c) { return std::to_string(ref(const_cast<C&>(c))); }};
    };
    auto flag_at = [](std::string name, std::string help, std::function<bool&(C&)> ref) {
        return ConfigKey{name, help, [name, ref](C& c, const std::string& s) { ref(c) = detail::parse_bool(name, s); },
                         [ref](const C& c) { return std::string(ref(const_cast<C&>(c)) ? "on" : "off"); }};
    };
    static const std::vector<ConfigKey> keys = {
        real("sample_interval", "source resampling interval (px)", &C::sample_interval),
        int_at("chamfer_radius", "global search radius (px)", [](C& c) -> int& { return c.chamfer_radius; }),
        int_at("keypoint_matches", "matches kept per keypoint", [](C& c) -> int& { return c.search.keypoint_matches; }),
        int_at("keypoint_window_w", "keypoint window width", [](C& c) -> int& { return c.search.keypoint_window_w; }),
        int_at("keypoint_window_h", "keypoint window height", [](C& c) -> int& { return c.search.keypoint_window_h; }),
        int_at("point_matches", "matches kept per point window", [](C& c) -> int& { return c.search.point_matches; }),
        int_at("point_window_w", "point window width", [](C& c) -> int& { return c.search.point_window_w; }),
        int_at("point_window_h", "point window height", [](C& c) -> int& { return c.search.point_window_h; }),
        int_at("flat_window_w", "window width without hierarchical search",
               [](C& c) -> int& { return c.search.flat_window_w; }),
        int_at("flat_window_h", "window height without hierarchical search",
               [](C& c) -> int& { return c.search.flat_window_h; }),
        int_at("nms_radius", "non-maximum suppression radius (px)", [](C& c) -> int& { return c.search.nms_radius; }),
        flag_at("hierarchical_search", "keypoint and branch tiers", [](C& c) -> bool& { return c.search.hierarchical; }),
        real_at("lambda", "pairwise weight", [](C& c) -> double& { return c.energy.lambda; }),
        real_at("unary_truncation", "unary truncation", [](C& c) -> double& { return c.energy.unary_truncation; }),
        real_at("pairwise_truncation", "pairwise truncation (px)",
                [](C& c) -> double& { return c.energy.pairwise_truncation; }),
        real_at("dummy_cost_fraction", "dummy unary as a fraction of unary_truncation",
                [](C& c) -> double& { return c.energy.dummy_cost_fraction; }),
        flag_at("dummy_label", "allow points without correspondence", [](C& c) -> bool& { return c.energy.dummy_label; }),
        int_at("max_iters", "solver iteration cap", [](C& c) -> int& { return c.solver.max_iters; }),
        real_at("convergence_eps", "solver bound-improvement threshold",
                [](C& c) -> double& { return c.solver.convergence_eps; }),
        {"vesselness_scales", "comma-separated Gaussian scales (px)",
         [](C& c, const std::string& s) {
             std::vector<double> v;
             std::stringstream ss(s);
             std::string item;
             while (std::getline(ss, item, ',')) v.push_back(detail::parse_double("vesselness_scales", detail::trim(item)));
             if (v.empty()) throw Error("bad value for vesselness_scales");
             c.vesselness.scales = v;
         },
         [](const C& c) {
             std::string out;
             for (std::size_t i = 0; i < c.vesselness.scales.size(); ++i)
                 out += (i ? "," : "") + detail::format_double(c.vesselness.scales[i]);
             return out;
         }},
        real_at("vesselness_beta", "blob suppression", [](C& c) -> double& { return c.vesselness.beta; }),
        real_at("vesselness_c", "structureness constant as a fraction of the peak",
                [](C& c) -> double& { return c.vesselness.c_fraction; }),
        real("vessel_threshold", "vesselness threshold", &C::vessel_threshold),
        real_at("speed_epsilon", "speed floor for reconnection", [](C& c) -> double& { return c.post.speed_epsilon; }),
        int_at("roi_margin", "reconnection window padding (px)", [](C& c) -> int& { return c.post.roi_margin; }),
        {"r_max", "minimum new-branch length (px) or 'auto'",
         [](C& c, const std::string& s) { c.post.r_max = s == "auto" ? 0.0 : detail::parse_double("r_max", s); },
         [](const C& c) { return c.post.r_max <= 0 ? std::string("auto") : detail::format_double(c.post.r_max); }},
        int_at("max_new_branches", "branch growth bound", [](C& c) -> int& { return c.post.max_new_branches; }),
        real_at("attach_radius", "mask attachment radius (px)", [](C& c) -> double& { return c.post.attach_radius; }),
        flag_at("grow_branches", "grow newly visible branches", [](C& c) -> bool& { return c.grow_branches; }),
        real("eval_radius", "matching radius for scoring (px)", &C::eval_radius),
    };
    return keys;
}

inline const ConfigKey& config_key(const std::string& name) {
    for (const auto& k : config_keys())
        if (k.name == name) return k;
    throw Error("unknown config key '" + name + "'");
}

inline void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    config_key(key).set(cfg, value);
}

/// Applies `key = value` lines; '#' starts a comment.
inline void apply_config_text(PipelineConfig& cfg, std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key = value");
        set_config_value(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    PipelineConfig cfg;
    apply_config_text(cfg, in);
    cfg.validate();
    return cfg;
}

inline void write_config(const PipelineConfig& cfg, std::ostream& os) {
    for (const auto& k : config_keys()) os << k.name << " = " << k.get(cfg) << '\n';
}

}  // namespace vco
