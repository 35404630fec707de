#pragma once

/// @file mrf.hpp
/// @brief Pairwise MRF over vessel points and its minimization by sequential
/// tree-reweighted message passing (TRW-S).

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vco/candidate_search.hpp"
#include "vco/core.hpp"
#include "vco/vessel_graph.hpp"

namespace vco {

inline constexpr double kInfCost = std::numeric_limits<double>::infinity();

/// Dense pairwise table, row = label of node i, column = label of node j.
struct MrfEdge {
    int i = 0;
    int j = 0;
    std::vector<double> cost;
};

/// Generic discrete pairwise energy: Σ unary[i][x_i] + Σ edge.cost(x_i, x_j).
/// Unary entries may be +inf (forbidden label); pairwise entries are finite.
struct MrfProblem {
    std::vector<std::vector<double>> unary;
    std::vector<MrfEdge> edges;

    int node_count() const { return static_cast<int>(unary.size()); }
    int label_count(int node) const { return static_cast<int>(unary[node].size()); }

    void add_edge(int i, int j, std::vector<double> cost) {
        if (i == j || i < 0 || j < 0 || i >= node_count() || j >= node_count()) throw Error("bad MRF edge");
        if (cost.size() != static_cast<std::size_t>(label_count(i)) * label_count(j))
            throw Error("pairwise table size mismatch");
        for (double c : cost)
            if (!std::isfinite(c)) throw Error("pairwise cost must be finite");
        edges.push_back({i, j, std::move(cost)});
    }
};

struct Labeling {
    std::vector<int> labels;
    double energy = 0.0;
    double lower_bound = -kInfCost;
    /// Lower bound after each iteration.
    std::vector<double> bound_history;
    int iterations = 0;
};

struct SolverParams {
    int max_iters = 200;
    double convergence_eps = 1e-5;
    /// Window over which the bound improvement is measured.
    int convergence_window = 5;
};

/// Energy of a labeling, recomputed from the tables.
inline double evaluate_energy(const MrfProblem& problem, const std::vector<int>& labels) {
    if (labels.size() != problem.unary.size()) throw Error("labeling size mismatch");
    double e = 0.0;
    for (int i = 0; i < problem.node_count(); ++i) e += problem.unary[i][labels[i]];
    for (const auto& edge : problem.edges)
        e += edge.cost[static_cast<std::size_t>(labels[edge.i]) * problem.label_count(edge.j) + labels[edge.j]];
    return e;
}

namespace detail {

class TrwsSolver {
public:
    explicit TrwsSolver(const MrfProblem& p) : p_(p) {
        const int n = p.node_count();
        incident_.resize(n);
        for (int e = 0; e < static_cast<int>(p.edges.size()); ++e) {
            incident_[p.edges[e].i].push_back(e);
            incident_[p.edges[e].j].push_back(e);
        }
        gamma_.resize(n);
        for (int i = 0; i < n; ++i) {
            int fwd = 0, bwd = 0;
            for (int e : incident_[i]) (other(e, i) > i ? fwd : bwd)++;
            gamma_[i] = 1.0 / std::max({fwd, bwd, 1});
        }
        to_j_.resize(p.edges.size());
        to_i_.resize(p.edges.size());
        for (std::size_t e = 0; e < p.edges.size(); ++e) {
            to_j_[e].assign(p.label_count(p.edges[e].j), 0.0);
            to_i_[e].assign(p.label_count(p.edges[e].i), 0.0);
        }
    }

    /// One forward and one backward sweep; returns the lower bound.
    double iterate() {
        const int n = p_.node_count();
        for (int i = 0; i < n; ++i) {
            belief(i);
            for (int e : incident_[i])
                if (other(e, i) > i) send(e, i);
        }
        double bound = 0.0;
        for (int i = n - 1; i >= 0; --i) {
            belief(i);
            const double m = *std::min_element(d_.begin(), d_.end());
            for (double& v : d_) v -= m;
            bound += m;
            for (int e : incident_[i])
                if (other(e, i) < i) bound += send(e, i);
        }
        return bound;
    }

    /// Greedy decoding in node order conditioned on already fixed labels and
    /// on messages from later neighbors. Ties go to the lowest label.
    std::vector<int> decode() const {
        const int n = p_.node_count();
        std::vector<int> x(n, 0);
        std::vector<double> score;
        for (int i = 0; i < n; ++i) {
            score = p_.unary[i];
            for (int e : incident_[i]) {
                const MrfEdge& edge = p_.edges[e];
                const int j = other(e, i);
                if (j < i) {
                    for (int a = 0; a < static_cast<int>(score.size()); ++a)
                        score[a] += i == edge.i ? edge.cost[static_cast<std::size_t>(a) * p_.label_count(j) + x[j]]
                                                : edge.cost[static_cast<std::size_t>(x[j]) * score.size() + a];
                } else {
                    const auto& msg = incoming(e, i);
                    for (int a = 0; a < static_cast<int>(score.size()); ++a) score[a] += msg[a];
                }
            }
            int best = 0;
            for (int a = 1; a < static_cast<int>(score.size()); ++a)
                if (score[a] < score[best]) best = a;
            x[i] = best;
        }
        return x;
    }

private:
    int other(int e, int node) const { return p_.edges[e].i == node ? p_.edges[e].j : p_.edges[e].i; }

    const std::vector<double>& incoming(int e, int node) const { return p_.edges[e].i == node ? to_i_[e] : to_j_[e]; }
    std::vector<double>& outgoing(int e, int node) { return p_.edges[e].i == node ? to_j_[e] : to_i_[e]; }

    void belief(int i) {
        d_ = p_.unary[i];
        for (int e : incident_[i]) {
            const auto& msg = incoming(e, i);
            for (std::size_t a = 0; a < d_.size(); ++a) d_[a] += msg[a];
        }
    }

    // Message from `from` across edge e using the current belief d_.
    double send(int e, int from) {
        const MrfEdge& edge = p_.edges[e];
        const bool forward_dir = edge.i == from;
        const auto& back = incoming(e, from);
        auto& out = outgoing(e, from);
        const int la = static_cast<int>(d_.size());
        const int lb = static_cast<int>(out.size());
        const int lj = p_.label_count(edge.j);
        tmp_.resize(la);
        for (int a = 0; a < la; ++a) tmp_[a] = gamma_[from] * d_[a] - back[a];
        for (int b = 0; b < lb; ++b) {
            double best = kInfCost;
            for (int a = 0; a < la; ++a) {
                const double c = forward_dir ? edge.cost[static_cast<std::size_t>(a) * lj + b]
                                             : edge.cost[static_cast<std::size_t>(b) * lj + a];
                best = std::min(best, tmp_[a] + c);
            }
            out[b] = best;
        }
        const double m = *std::min_element(out.begin(), out.end());
        for (double& v : out) v -= m;
        return m;
    }

    const MrfProblem& p_;
    std::vector<std::vector<int>> incident_;
    std::vector<double> gamma_;
    std::vector<std::vector<double>> to_j_, to_i_;
    std::vector<double> d_, tmp_;
};

}  // namespace detail

/// TRW-S. Runs until max_iters, until the bound improves by less than
/// convergence_eps over convergence_window iterations, or until the best
/// decoded energy meets the bound. Returns the best labeling seen.
inline Labeling minimize(const MrfProblem& problem, const SolverParams& params = {}) {
    for (int i = 0; i < problem.node_count(); ++i) {
        const auto& u = problem.unary[i];
        if (u.empty() || std::none_of(u.begin(), u.end(), [](double v) { return std::isfinite(v); }))
            throw Error("infeasible node");
    }
    Labeling best;
    if (problem.node_count() == 0) {
        best.energy = 0.0;
        best.lower_bound = 0.0;
        return best;
    }
    detail::TrwsSolver solver(problem);
    best.energy = kInfCost;
    for (int it = 1; it <= std::max(1, params.max_iters); ++it) {
        const double bound = solver.iterate();
        best.bound_history.push_back(bound);
        best.lower_bound = bound;
        best.iterations = it;
        auto labels = solver.decode();
        const double e = evaluate_energy(problem, labels);
        if (e < best.energy) {
            best.energy = e;
            best.labels = std::move(labels);
        }
        if (best.energy - bound <= 1e-9 * std::max(1.0, std::abs(best.energy))) break;
        const int w = params.convergence_window;
        if (it > w && bound - best.bound_history[it - 1 - w] < params.convergence_eps) break;
    }
    return best;
}

// ------------------------------------------------------------ vessel energy

struct EnergyParams {
    double lambda = 0.05;
    double unary_truncation = 1.0;     ///< descriptor-distance units
    double pairwise_truncation = 10.0; ///< pixels
    double dummy_cost_fraction = 0.8;  ///< dummy unary = fraction * unary_truncation
    bool dummy_label = true;

    double dummy_cost() const { return dummy_cost_fraction * unary_truncation; }
    /// Pairwise contribution of each dummy endpoint of an edge.
    double dummy_pairwise() const { return 0.5 * lambda * pairwise_truncation; }
};

inline double unary_cost(double descriptor_dist, double truncation) { return std::min(descriptor_dist, truncation); }

inline double pairwise_cost(Vec2d disp_i, Vec2d disp_j, double lambda, double truncation) {
    return lambda * std::min((disp_i - disp_j).norm(), truncation);
}

/// MRF built from a vessel graph and its candidates. Node k is
/// point_ids[k]; label l < candidate count selects that candidate, the last
/// label (when enabled) is the dummy.
struct VcoProblem {
    MrfProblem mrf;
    std::vector<int> point_ids;
    int label_count = 0;
    int dummy = -1;
    EnergyParams params;
};

inline VcoProblem build_problem(const VesselGraph& graph, const CandidateSet& cands, const EnergyParams& params,
                                int max_candidates) {
    if (cands.point_ids.size() != graph.size() || cands.candidates.size() != graph.size())
        throw Error("candidate set does not match graph");
    for (std::size_t k = 0; k < graph.size(); ++k)
        if (cands.point_ids[k] != graph.points()[k].id) throw Error("candidate set does not match graph");
    if (!(params.lambda > 0 && params.unary_truncation > 0 && params.pairwise_truncation > 0))
        throw Error("energy parameters must be positive");

    VcoProblem vp;
    vp.params = params;
    vp.point_ids = cands.point_ids;
    vp.label_count = max_candidates + (params.dummy_label ? 1 : 0);
    vp.dummy = params.dummy_label ? max_candidates : -1;
    const int L = vp.label_count;

    std::vector<std::vector<Vec2d>> disp(graph.size());
    for (std::size_t k = 0; k < graph.size(); ++k) {
        const auto& list = cands.candidates[k];
        if (list.size() > static_cast<std::size_t>(max_candidates)) throw Error("too many candidates");
        std::vector<double> u(L, kInfCost);
        for (std::size_t l = 0; l < list.size(); ++l) {
            u[l] = unary_cost(list[l].distance, params.unary_truncation);
            disp[k].push_back(to_vec(graph.points()[k].pos - list[l].pos));
        }
        if (vp.dummy >= 0) u[vp.dummy] = params.dummy_cost();
        vp.mrf.unary.push_back(std::move(u));
    }

    const double ceiling = params.lambda * params.pairwise_truncation;
    for (const auto& [a, b] : graph.edges()) {
        const int i = static_cast<int>(graph.index_of(a)), j = static_cast<int>(graph.index_of(b));
        std::vector<double> cost(static_cast<std::size_t>(L) * L, ceiling);
        for (int la = 0; la < L; ++la)
            for (int lb = 0; lb < L; ++lb) {
                double& c = cost[static_cast<std::size_t>(la) * L + lb];
                const bool da = la == vp.dummy, db = lb == vp.dummy;
                if (da || db) {
                    c = params.dummy_pairwise() * (int(da) + int(db));
                } else if (la < static_cast<int>(disp[i].size()) && lb < static_cast<int>(disp[j].size())) {
                    c = pairwise_cost(disp[i][la], disp[j][lb], params.lambda, params.pairwise_truncation);
                }
            }
        vp.mrf.add_edge(i, j, std::move(cost));
    }
    return vp;
}

struct SurvivingPoint {
    int id = 0;
    Pixel pos;
    friend bool operator==(const SurvivingPoint&, const SurvivingPoint&) = default;
};

/// Destination coordinates of non-dummy nodes, in graph point order.
inline std::vector<SurvivingPoint> apply_labeling(const VesselGraph& graph, const CandidateSet& cands,
                                                  const VcoProblem& problem, const Labeling& labeling) {
    if (labeling.labels.size() != graph.size()) throw Error("labeling does not match graph");
    std::vector<SurvivingPoint> out;
    for (std::size_t k = 0; k < graph.size(); ++k) {
        const int l = labeling.labels[k];
        if (l == problem.dummy) continue;
        const auto& list = cands.candidates[k];
        if (l < 0 || l >= static_cast<int>(list.size())) throw Error("label selects no candidate");
        out.push_back({graph.points()[k].id, list[l].pos});
    }
    return out;
}

inline void dump_problem(const MrfProblem& p, std::ostream& os) {
    auto put = [&os](double v) {
        if (std::isinf(v)) os << " inf";
        else os << ' ' << v;
    };
    os << "mrf " << p.node_count() << ' ' << p.edges.size() << '\n';
    for (int i = 0; i < p.node_count(); ++i) {
        os << "node " << i << ' ' << p.label_count(i);
        for (double v : p.unary[i]) put(v);
        os << '\n';
    }
    for (const auto& e : p.edges) {
        os << "edge " << e.i << ' ' << e.j;
        for (double v : e.cost) put(v);
        os << '\n';
    }
}

}  // namespace vco
