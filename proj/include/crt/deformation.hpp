#pragma once

#include "crt/contour_tree.hpp"
#include "crt/filling_net.hpp"
#include "crt/weights.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace crt {

/// Pairwise deformed metric on a finite carrier, all values in natural log
/// scale (the diagonal is -inf).
struct ChainMetricTable {
    std::vector<TreePoint> carrier;
    Eigen::MatrixXd log_q;
    Eigen::MatrixXd log_D;
};

/// log q(a, b): least log pi over filling vertices (x, n) whose
/// 2 alpha^n-ball contains both a and b.
double log_quasimetric(const ContourTree& tree, const FillingGraph& graph, const FillingWeights& fw,
                       const TreePoint& a, const TreePoint& b);

/// The full q table over `carrier`; symmetric, diagonal = finest pi at each point.
Eigen::MatrixXd quasimetric_table(const ContourTree& tree, const FillingGraph& graph, const FillingWeights& fw,
                                  const std::vector<TreePoint>& carrier);

/// Largest metric dominated by q: all-pairs shortest chains.
ChainMetricTable chain_metrize(const std::vector<TreePoint>& carrier, const Eigen::MatrixXd& log_q);

/// Throws InvariantViolation if symmetry, zero diagonal, dominance by q or
/// the triangle inequality (relative slack rel_tol) fails.
void check_chain_metric(const ChainMetricTable& t, double rel_tol = 1e-12);

/// log of prod_{j=1..n} varrho(x, j) for every filling vertex; 0 at level 0.
struct DiamBoundTable {
    std::vector<double> log_bound;  ///< indexed like FillingGraph::vertices
};

DiamBoundTable diam_bounds(const FillingGraph& graph, const WeightTable& weights);

/// For each vertex (x, n) with n >= 1: log of the D_sigma-diameter of the
/// carrier points within alpha^n of x, minus log_bound. NaN when fewer than
/// two carrier points fall in the ball.
std::vector<double> diam_ratio_log(const ContourTree& tree, const FillingGraph& graph, const DiamBoundTable& bounds,
                                   const ChainMetricTable& table);

/// log of sum over level-n net points of prod_{j=1..n} varrho(x, j)^p.
double main_sum_log(const FillingGraph& graph, const WeightTable& weights, int n, double p);

struct ProbeBin {
    double lo = 0.0;  ///< input ratio range [lo, hi)
    double hi = 0.0;
    std::size_t count = 0;
    double max_output = 0.0;
    double envelope = 0.0;  ///< running max over this and all lower bins
};

struct ProbeReport {
    std::size_t trials = 0;
    std::size_t degenerate = 0;  ///< triples with y = z under tol_eq
    std::vector<ProbeBin> bins;  ///< log2-spaced, first and last bins open-ended
    bool finite = true;          ///< every nonempty bin has a finite max
};

/// Samples carrier triples (x, y, z) and bins dist(x,z)/dist(y,z) against
/// D_sigma(x,z)/D_sigma(y,z).
ProbeReport quasisymmetry_probe(const ContourTree& tree, const ChainMetricTable& table, std::size_t trials,
                                std::uint64_t seed, int half_bins = 8);

/// Binary "CRTM" + u64 n + row-major f64 log D_sigma.
void write_metric_binary(std::ostream& out, const ChainMetricTable& t);
/// One carrier grid time per line.
void write_metric_index(std::ostream& out, const ContourTree& tree, const ChainMetricTable& t);

}  // namespace crt
