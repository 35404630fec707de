// Command-line driver: extract, track, synth and eval.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <set>
#include <string>

#include "vco/config.hpp"
#include "vco/image_io.hpp"
#include "vco/metrics.hpp"
#include "vco/pipeline.hpp"
#include "vco/synth.hpp"

namespace fs = std::filesystem;
using namespace vco;

namespace {

constexpr int kInputError = 2;
constexpr int kInfeasible = 3;

struct InputError : Error {
    using Error::Error;
};

std::string frame_name(const std::string& stem, int t, const std::string& ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03d%s", stem.c_str(), t, ext.c_str());
    return buf;
}

// Frame indices of files named <stem>_NNN<ext> in a directory.
std::set<int> indexed_files(const fs::path& dir, const std::string& stem, const std::string& ext) {
    std::set<int> out;
    if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
    const std::regex re(stem + "_([0-9]{3,})" + std::regex_replace(ext, std::regex(R"(\.)"), R"(\.)"));
    for (const auto& e : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = e.path().filename().string();
        if (std::regex_match(name, m, re)) out.insert(std::stoi(m[1]));
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

void save_points(const std::map<int, Pixel>& pts, const fs::path& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [id, p] : pts) arr.push_back({{"id", id}, {"x", p.x}, {"y", p.y}});
    write_text(path, nlohmann::json{{"points", arr}}.dump(1) + "\n");
}

std::map<int, Pixel> load_points(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::map<int, Pixel> out;
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& e : j.at("points")) out[e.at("id").get<int>()] = {e.at("x").get<int>(), e.at("y").get<int>()};
    } catch (const nlohmann::json::exception& e) {
        throw InputError("bad point file " + path.string() + ": " + e.what());
    }
    return out;
}

std::vector<Pixel> bright_pixels(const GrayImage& img) {
    std::vector<Pixel> out;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (img(x, y) > 127) out.push_back({x, y});
    return out;
}

GrayImage pixels_to_image(const std::vector<Pixel>& px, int w, int h) {
    GrayImage img(w, h, 0);
    for (const Pixel& p : px)
        if (img.contains(p)) img[p] = 255;
    return img;
}

GrayImage load_image(const std::string& path) {
    try {
        return read_image(path);
    } catch (const Error& e) {
        throw InputError(e.what());
    }
}

VesselGraph load_graph_input(const std::string& path) {
    try {
        return load_graph(path);
    } catch (const Error& e) {
        throw InputError(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw InputError("bad graph file " + path + ": " + e.what());
    }
}

// Shared pipeline options: --config, one flag per key and the ablation switches.
struct PipelineOptions {
    std::string config_path;
    bool no_hierarchical = false;
    bool no_dummy = false;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "key = value configuration file");
        app->add_flag("--no-hierarchical", no_hierarchical, "flat candidate search per point");
        app->add_flag("--no-dummy", no_dummy, "disable the no-correspondence label");
        for (const auto& k : config_keys())
            options[k.name] = app->add_option("--" + k.name, values[k.name], k.help)->group("Config keys");
    }

    PipelineConfig resolve() const {
        PipelineConfig cfg;
        try {
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) throw Error("cannot open " + config_path);
                apply_config_text(cfg, in);
            }
            for (const auto& k : config_keys())
                if (options.at(k.name)->count() > 0) k.set(cfg, values.at(k.name));
            if (no_hierarchical) cfg.search.hierarchical = false;
            if (no_dummy) cfg.energy.dummy_label = false;
            cfg.validate();
        } catch (const Error& e) {
            throw InputError(e.what());
        }
        return cfg;
    }
};

void check_pair_inputs(const GrayImage& src, const GrayImage& dst, const VesselGraph& g) {
    if (src.width() != dst.width() || src.height() != dst.height()) throw InputError("frame sizes differ");
    if (g.size() < 2) throw InputError("source graph needs at least 2 points");
    for (const auto& p : g.points())
        if (!src.contains(p.pos)) throw InputError("source point outside frame");
}

std::map<int, Pixel> survivor_map(const PairResult& r) {
    std::map<int, Pixel> m;
    for (const auto& s : r.survivors) m[s.id] = s.pos;
    return m;
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
    std::string src, dst, graph, out, log, overlay, matches;
    PipelineOptions pipe;
};

int cmd_extract(const ExtractArgs& a) {
    const PipelineConfig cfg = a.pipe.resolve();
    const GrayImage src = load_image(a.src), dst = load_image(a.dst);
    const VesselGraph g = load_graph_input(a.graph);
    check_pair_inputs(src, dst, g);
    const PairResult r = run_pair(src, dst, g, cfg);
    save_graph(r.output, a.out);
    if (a.log.empty())
        std::cout << r.log;
    else
        write_text(a.log, r.log);
    if (!a.overlay.empty()) write_overlay(dst, centerline_pixels(r.output), a.overlay);
    if (!a.matches.empty()) save_points(survivor_map(r), a.matches);
    return 0;
}

// ---------------------------------------------------------------- track

struct TrackArgs {
    std::string seq, initial, out;
    bool overlay = false;
    PipelineOptions pipe;
};

int cmd_track(const TrackArgs& a) {
    const PipelineConfig cfg = a.pipe.resolve();
    const fs::path seq(a.seq), out(a.out);
    const auto idx = indexed_files(seq, "frame", ".png");
    if (idx.size() < 2) throw InputError("need at least 2 frames in " + a.seq);
    int expect = 0;
    for (int t : idx)
        if (t != expect++) throw InputError("frame numbering has gaps in " + a.seq);
    std::vector<GrayImage> frames;
    for (int t : idx) frames.push_back(load_image((seq / frame_name("frame", t, ".png")).string()));
    VesselGraph src = load_graph_input(a.initial);
    check_pair_inputs(frames[0], frames[1], src);
    fs::create_directories(out);

    // Truth is optional; scores need it for every tracked frame.
    const auto truth_idx = indexed_files(seq, "truth", ".png");
    bool have_truth = true;
    for (int t = 1; t < static_cast<int>(frames.size()); ++t) have_truth &= truth_idx.count(t) > 0;

    std::vector<FrameScore> rows;
    std::vector<double> fs_values;
    int last_good = 0;
    std::string failure;
    for (std::size_t t = 1; t < frames.size(); ++t) {
        PairResult r;
        try {
            r = run_pair(frames[t - 1], frames[t], src, cfg);
        } catch (const Error& e) {
            failure = e.what();
            break;
        }
        last_good = static_cast<int>(t);
        save_graph(r.output, (out / frame_name("graph", t, ".json")).string());
        // Later sources are resampled with fresh ids, so only the first pair
        // keeps ids that the truth correspondences refer to.
        if (t == 1) save_points(survivor_map(r), out / frame_name("matches", t, ".json"));
        write_text(out / frame_name("log", t, ".txt"), r.log);
        if (a.overlay) write_overlay(frames[t], centerline_pixels(r.output), (out / frame_name("overlay", t, ".png")).string());
        if (have_truth) {
            FrameScore row;
            row.frame = static_cast<int>(t);
            const auto truth = bright_pixels(load_image((seq / frame_name("truth", t, ".png")).string()));
            row.score = score_centerline(centerline_pixels(r.output), truth, cfg.eval_radius);
            const fs::path corr = seq / frame_name("corr", t, ".json");
            if (t == 1 && fs::exists(corr)) {
                try {
                    row.tre = tre(survivor_map(r), load_points(corr));
                } catch (const Error&) {
                    row.tre = -1;
                }
            }
            rows.push_back(row);
            fs_values.push_back(row.score.f_measure);
        }
        if (t + 1 < frames.size()) {
            try {
                src = resample_dense(r.output, cfg.sample_interval);
            } catch (const Error& e) {
                failure = e.what();
                break;
            }
        }
    }
    if (have_truth && !rows.empty()) {
        std::ofstream csv(out / "scores.csv");
        write_scores_csv(rows, csv);
        std::cout << "run_length " << sufficiency_run_length(fs_values, 0.7) << '\n';
    }
    std::cout << "last_good_frame " << last_good << '\n';
    if (!failure.empty()) {
        std::cerr << "tracking stopped at frame " << last_good + 1 << ": " << failure << '\n';
        return kInfeasible;
    }
    return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string out;
    int frames = 15;
    SynthConfig cfg;
    double global_amplitude = -1;
};

int cmd_synth(SynthArgs a) {
    if (a.frames < 2) throw InputError("need at least 2 frames");
    if (a.global_amplitude >= 0) a.cfg.global_amplitude_x = a.cfg.global_amplitude_y = a.global_amplitude;
    try {
        a.cfg.validate();
    } catch (const Error& e) {
        throw InputError(e.what());
    }
    const auto seq = generate_sequence(a.cfg, a.frames);
    const fs::path out(a.out);
    fs::create_directories(out);
    const SynthConfig& c = a.cfg;
    for (int t = 0; t < a.frames; ++t) {
        write_image(seq.frames[t], (out / frame_name("frame", t, ".png")).string());
        write_image(pixels_to_image(seq.truth_pixels[t], c.width, c.height),
                    (out / frame_name("truth", t, ".png")).string());
        save_graph(seq.truth_graphs[t], (out / frame_name("truth", t, ".json")).string());
        if (t > 0) save_points(seq.correspondences[t - 1], out / frame_name("corr", t, ".json"));
    }
    nlohmann::json manifest = {{"seed", c.seed},
                               {"frames", a.frames},
                               {"width", c.width},
                               {"height", c.height},
                               {"depth", c.depth},
                               {"branch_prob", c.branch_prob},
                               {"local_amplitude", c.local_amplitude},
                               {"noise_sigma", c.noise_sigma},
                               {"inflow_start", c.inflow_start},
                               {"inflow_end", c.inflow_end},
                               {"reveal_frame", c.reveal_frame}};
    nlohmann::json shifts = nlohmann::json::array();
    for (const Vec2d& s : seq.global_shift) shifts.push_back({s.x, s.y});
    manifest["global_shift"] = shifts;
    write_text(out / "sequence.json", manifest.dump(1) + "\n");
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string results, truth, out;
    double radius = 2.0;
};

int cmd_eval(const EvalArgs& a) {
    if (!(a.radius > 0)) throw InputError("radius must be positive");
    const fs::path res(a.results), tru(a.truth);
    const auto truth_idx = indexed_files(tru, "truth", ".png");
    if (truth_idx.empty()) throw InputError("no truth frames in " + a.truth);
    // Result frames: extracted graphs, else centerline masks.
    auto res_idx = indexed_files(res, "graph", ".json");
    const bool masks = res_idx.empty();
    if (masks) res_idx = indexed_files(res, "truth", ".png");
    if (res_idx.empty()) throw InputError("no result frames in " + a.results);

    std::set<int> need(truth_idx.begin(), truth_idx.end());
    if (!res_idx.count(0)) need.erase(0);
    if (res_idx != need)
        throw InputError("frame count mismatch: " + std::to_string(res_idx.size()) + " results vs " +
                         std::to_string(need.size()) + " truth frames");

    std::vector<FrameScore> rows;
    for (int t : res_idx) {
        FrameScore row;
        row.frame = t;
        std::vector<Pixel> extracted;
        std::map<int, Pixel> est;
        if (masks) {
            extracted = bright_pixels(load_image((res / frame_name("truth", t, ".png")).string()));
            const fs::path g = res / frame_name("truth", t, ".json");
            if (fs::exists(g)) {
                const VesselGraph tg = load_graph_input(g.string());
                for (const auto& p : tg.points()) est[p.id] = p.pos;
            }
        } else {
            extracted = centerline_pixels(load_graph_input((res / frame_name("graph", t, ".json")).string()));
            const fs::path m = res / frame_name("matches", t, ".json");
            if (fs::exists(m)) est = load_points(m);
        }
        row.score = score_centerline(extracted, bright_pixels(load_image((tru / frame_name("truth", t, ".png")).string())),
                                     a.radius);
        const fs::path corr = tru / frame_name("corr", t, ".json");
        if (!est.empty() && fs::exists(corr)) {
            try {
                row.tre = tre(est, load_points(corr));
            } catch (const Error&) {
                row.tre = -1;
            }
        }
        rows.push_back(row);
    }
    if (a.out.empty()) {
        write_scores_csv(rows, std::cout);
    } else {
        std::ofstream csv(a.out);
        if (!csv) throw Error("cannot write " + a.out);
        write_scores_csv(rows, csv);
        double f = 0;
        for (const auto& r : rows) f += r.score.f_measure;
        std::printf("frames %zu mean_f %.6f\n", rows.size(), f / rows.size());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vessel centerline registration between fluoroscopic frames"};
    app.require_subcommand(1);

    ExtractArgs ex;
    auto* extract = app.add_subcommand("extract", "register a source centerline onto the next frame");
    extract->add_option("src", ex.src, "source frame (PNG or PGM)")->required();
    extract->add_option("dst", ex.dst, "destination frame")->required();
    extract->add_option("graph", ex.graph, "source centerline graph (JSON)")->required();
    extract->add_option("-o,--out", ex.out, "destination graph output")->required();
    extract->add_option("--log", ex.log, "run log (stdout if omitted)");
    extract->add_option("--overlay", ex.overlay, "overlay PNG of the result");
    extract->add_option("--matches", ex.matches, "surviving point positions (JSON)");
    ex.pipe.attach(extract);

    TrackArgs tr;
    auto* track = app.add_subcommand("track", "propagate a centerline through a frame sequence");
    track->add_option("sequence", tr.seq, "directory with frame_NNN.png (and optional truth)")->required();
    track->add_option("initial", tr.initial, "centerline graph of frame 0")->required();
    track->add_option("-o,--out", tr.out, "output directory")->required();
    track->add_flag("--overlay", tr.overlay, "write overlay_NNN.png per frame");
    tr.pipe.attach(track);

    SynthArgs sy;
    auto* synth = app.add_subcommand("synth", "write a synthetic sequence with ground truth");
    synth->add_option("-o,--out", sy.out, "output directory")->required();
    synth->add_option("--seed", sy.cfg.seed, "random seed");
    synth->add_option("--frames", sy.frames, "number of frames");
    synth->add_option("--size", sy.cfg.width, "frame side (px)");
    synth->add_option("--depth", sy.cfg.depth, "tree depth");
    synth->add_option("--branch-prob", sy.cfg.branch_prob, "branching probability");
    synth->add_option("--global-amplitude", sy.global_amplitude, "global motion amplitude on both axes (px)");
    synth->add_option("--local-amplitude", sy.cfg.local_amplitude, "local deformation amplitude (px)");
    synth->add_option("--local-sigma", sy.cfg.local_sigma, "local deformation smoothness (px)");
    synth->add_option("--noise", sy.cfg.noise_sigma, "noise standard deviation");
    synth->add_option("--inflow-start", sy.cfg.inflow_start, "visible tree fraction in the first frame");
    synth->add_option("--inflow-end", sy.cfg.inflow_end, "visible tree fraction in the last frame");
    synth->add_option("--reveal-frame", sy.cfg.reveal_frame, "hide the longest leaf before this frame");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "score results against synthetic truth");
    eval->add_option("results", ev.results, "directory with graph_NNN.json or truth_NNN.png")->required();
    eval->add_option("truth", ev.truth, "synthetic sequence directory")->required();
    eval->add_option("-o,--out", ev.out, "CSV output (stdout if omitted)");
    eval->add_option("--radius", ev.radius, "matching radius (px)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInputError;
    }
    sy.cfg.height = sy.cfg.width;

    try {
        if (*extract) return cmd_extract(ex);
        if (*track) return cmd_track(tr);
        if (*synth) return cmd_synth(sy);
        if (*eval) return cmd_eval(ev);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    }
    return 0;
}
