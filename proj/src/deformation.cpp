#include "crt/deformation.hpp"

#include "byte_io.hpp"
#include "crt/errors.hpp"
#include "crt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <unordered_map>

namespace crt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Smallest exponent gap that still survives exp() in double precision.
constexpr double kLinearRange = -700.0;

double log_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == -kInf) return a;
    return a + std::log1p(std::exp(b - a));
}

std::unordered_map<Eigen::Index, std::size_t> row_index(const WeightTable& w) {
    std::unordered_map<Eigen::Index, std::size_t> row;
    for (std::size_t i = 0; i < w.points.size(); ++i) row.emplace(w.points[i].index, i);
    return row;
}

double vertex_log_bound(const WeightTable& w, const std::unordered_map<Eigen::Index, std::size_t>& row,
                        const FillingVertex& v) {
    if (v.level == 0) return 0.0;
    if (v.level > w.n_max) throw InvalidArgument("weight table lacks level " + std::to_string(v.level));
    const auto it = row.find(v.point.index);
    if (it == row.end()) throw InvalidArgument("net point missing from weight table");
    double s = 0.0;
    for (int j = 1; j <= v.level; ++j) s += std::log(w.at(it->second, j).varrho);
    return s;
}

void check_sizes(const FillingGraph& graph, const FillingWeights& fw) {
    if (fw.vertices.size() != graph.vertices.size()) throw InvalidArgument("filling weights do not match the graph");
}

}  // namespace

double log_quasimetric(const ContourTree& tree, const FillingGraph& graph, const FillingWeights& fw,
                       const TreePoint& a, const TreePoint& b) {
    check_sizes(graph, fw);
    double best = kInf;
    for (std::size_t v = 0; v < graph.vertices.size(); ++v) {
        const auto& x = graph.vertices[v];
        const double r = 2.0 * std::pow(graph.alpha, x.level);
        if (tree.dist(x.point, a) < r && tree.dist(x.point, b) < r) best = std::min(best, fw.vertices[v].log_pi);
    }
    if (best == kInf) throw InvariantViolation("no filling vertex contains both points");
    return best;
}

Eigen::MatrixXd quasimetric_table(const ContourTree& tree, const FillingGraph& graph, const FillingWeights& fw,
                                  const std::vector<TreePoint>& carrier) {
    check_sizes(graph, fw);
    for (const auto& c : carrier) (void)tree.time(c);
    const auto N = static_cast<Eigen::Index>(carrier.size());
    Eigen::MatrixXd q = Eigen::MatrixXd::Constant(N, N, kInf);
    std::vector<Eigen::Index> members;
    for (std::size_t v = 0; v < graph.vertices.size(); ++v) {
        const auto& x = graph.vertices[v];
        const double r = 2.0 * std::pow(graph.alpha, x.level);
        const double lp = fw.vertices[v].log_pi;
        members.clear();
        for (Eigen::Index i = 0; i < N; ++i)
            if (tree.dist_idx(x.point.index, carrier[i].index) < r) members.push_back(i);
        for (auto i : members)
            for (auto j : members) q(i, j) = std::min(q(i, j), lp);
    }
    if (!q.allFinite()) throw InvariantViolation("no filling vertex contains some carrier pair");
    return q;
}

ChainMetricTable chain_metrize(const std::vector<TreePoint>& carrier, const Eigen::MatrixXd& log_q) {
    const Eigen::Index N = log_q.rows();
    if (log_q.cols() != N || static_cast<std::size_t>(N) != carrier.size())
        throw InvalidArgument("q table does not match the carrier");
    if (!log_q.allFinite()) throw InvalidArgument("q table must be finite");
    if (log_q != log_q.transpose())
        throw InvalidArgument("q table must be symmetric");

    ChainMetricTable t;
    t.carrier = carrier;
    t.log_q = log_q;
    if (N == 0) return t;
    const double shift = log_q.maxCoeff();
    const double low = log_q.minCoeff() - shift;

    Eigen::MatrixXd D;
    if (low > kLinearRange) {
        D = (log_q.array() - shift).exp().matrix();
        D.diagonal().setZero();
        for (Eigen::Index k = 0; k < N; ++k)
            for (Eigen::Index j = 0; j < N; ++j) D.col(j) = D.col(j).cwiseMin((D.col(k).array() + D(k, j)).matrix());
        D = D.cwiseMin(D.transpose()).eval();
        t.log_D = (D.array().log() + shift).matrix();
    } else {
        D = log_q;
        D.diagonal().setConstant(-kInf);
        for (Eigen::Index k = 0; k < N; ++k)
            for (Eigen::Index j = 0; j < N; ++j) {
                const double dkj = D(k, j);
                if (dkj == -kInf && k != j) continue;
                for (Eigen::Index i = 0; i < N; ++i) D(i, j) = std::min(D(i, j), log_add(D(i, k), dkj));
            }
        t.log_D = D.cwiseMin(D.transpose());
    }
    // exp/log round trips may overshoot a single hop by an ulp
    t.log_D = t.log_D.cwiseMin(log_q);
    t.log_D.diagonal().setConstant(-kInf);
    return t;
}

void check_chain_metric(const ChainMetricTable& t, double rel_tol) {
    const Eigen::Index N = t.log_D.rows();
    for (Eigen::Index i = 0; i < N; ++i) {
        if (t.log_D(i, i) != -kInf) throw InvariantViolation("chain metric: nonzero diagonal");
        for (Eigen::Index j = 0; j < N; ++j) {
            if (t.log_D(i, j) != t.log_D(j, i)) throw InvariantViolation("chain metric: asymmetric");
            if (i != j && t.log_D(i, j) > t.log_q(i, j)) throw InvariantViolation("chain metric: exceeds q");
        }
    }
    const double slack = std::log1p(rel_tol);
    for (Eigen::Index k = 0; k < N; ++k)
        for (Eigen::Index j = 0; j < N; ++j)
            for (Eigen::Index i = 0; i < N; ++i)
                if (t.log_D(i, j) > log_add(t.log_D(i, k), t.log_D(k, j)) + slack)
                    throw InvariantViolation("chain metric: triangle inequality fails");
}

DiamBoundTable diam_bounds(const FillingGraph& graph, const WeightTable& weights) {
    const auto row = row_index(weights);
    DiamBoundTable b;
    b.log_bound.reserve(graph.vertices.size());
    for (const auto& v : graph.vertices) b.log_bound.push_back(vertex_log_bound(weights, row, v));
    return b;
}

std::vector<double> diam_ratio_log(const ContourTree& tree, const FillingGraph& graph, const DiamBoundTable& bounds,
                                   const ChainMetricTable& table) {
    if (bounds.log_bound.size() != graph.vertices.size()) throw InvalidArgument("bounds do not match the graph");
    std::vector<double> out(graph.vertices.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<Eigen::Index> ball;
    for (std::size_t v = 0; v < graph.vertices.size(); ++v) {
        const auto& x = graph.vertices[v];
        if (x.level == 0) continue;
        const double r = std::pow(graph.alpha, x.level);
        ball.clear();
        for (std::size_t i = 0; i < table.carrier.size(); ++i)
            if (tree.dist(x.point, table.carrier[i]) < r) ball.push_back(static_cast<Eigen::Index>(i));
        if (ball.size() < 2) continue;
        double diam = -kInf;
        for (auto i : ball)
            for (auto j : ball) diam = std::max(diam, table.log_D(i, j));
        out[v] = diam - bounds.log_bound[v];
    }
    return out;
}

double main_sum_log(const FillingGraph& graph, const WeightTable& weights, int n, double p) {
    if (n < 0 || n > graph.max_level()) throw InvalidArgument("level out of range");
    if (!(p > 1.0 && p < 2.0)) throw InvalidArgument("p must lie in (1, 2)");
    const auto row = row_index(weights);
    double acc = -kInf;
    for (std::size_t v = graph.level_offset[n]; v < graph.level_offset[n + 1]; ++v)
        acc = log_add(acc, p * vertex_log_bound(weights, row, graph.vertices[v]));
    return acc;
}

ProbeReport quasisymmetry_probe(const ContourTree& tree, const ChainMetricTable& table, std::size_t trials,
                                std::uint64_t seed, int half_bins) {
    if (half_bins < 1) throw InvalidArgument("half_bins must be positive");
    if (table.carrier.size() < 2) throw InvalidArgument("probe needs at least two carrier points");
    ProbeReport rep;
    rep.trials = trials;
    for (int k = -half_bins; k < half_bins; ++k) {
        ProbeBin b;
        b.lo = k == -half_bins ? 0.0 : std::ldexp(1.0, k);
        b.hi = k == half_bins - 1 ? kInf : std::ldexp(1.0, k + 1);
        rep.bins.push_back(b);
    }
    auto rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, table.carrier.size() - 1);
    for (std::size_t s = 0; s < trials; ++s) {
        const auto x = pick(rng), y = pick(rng), z = pick(rng);
        const auto& c = table.carrier;
        const double dyz = tree.dist(c[y], c[z]);
        if (y == z || dyz <= tree.tol_eq()) {
            ++rep.degenerate;
            continue;
        }
        const double in = tree.dist(c[x], c[z]) / dyz;
        const double out = std::exp(table.log_D(x, z) - table.log_D(y, z));
        const int k = in > 0.0 ? std::clamp(static_cast<int>(std::floor(std::log2(in))), -half_bins, half_bins - 1)
                                : -half_bins;
        auto& b = rep.bins[static_cast<std::size_t>(k + half_bins)];
        ++b.count;
        b.max_output = std::max(b.max_output, out);
    }
    double env = 0.0;
    for (auto& b : rep.bins) {
        if (b.count > 0 && !std::isfinite(b.max_output)) rep.finite = false;
        env = std::max(env, b.max_output);
        b.envelope = env;
    }
    return rep;
}

void write_metric_binary(std::ostream& out, const ChainMetricTable& t) {
    out.write("CRTM", 4);
    const auto N = t.log_D.rows();
    detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(N));
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j) detail::put_le<double>(out, t.log_D(i, j));
}

void write_metric_index(std::ostream& out, const ContourTree& tree, const ChainMetricTable& t) {
    out.precision(17);
    for (const auto& p : t.carrier) out << tree.time(p) << '\n';
}

}  // namespace crt
