#pragma once

#include "crt/contour_tree.hpp"
#include "crt/excursion.hpp"
#include "crt/filling_net.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace crt {

/// Largest closure diameter among subtrees branching off [[x, R_t(x)]].
///
/// In two-sided mode the part of the segment past the truncation-safe range
/// runs up the spine above the anchor height; subtrees hanging there are read
/// from `extension`, a spine forest starting at tree.anchor_height(). Without
/// an extension such rays throw OutOfSafeRange.
double max_branching_diameter(const ContourTree& tree, const TreePoint& x, double t,
                              const SpineForest* extension = nullptr);

/// Some subtree off [[x, R_{4 alpha^n}(x)]] has diameter >= alpha^{n-1} / 4.
bool detect_event_E(const ContourTree& tree, const TreePoint& x, int n, double alpha,
                    const SpineForest* extension = nullptr);
/// As detect_event_E with segment length 32 alpha^n.
bool detect_event_E_tilde(const ContourTree& tree, const TreePoint& x, int n, double alpha,
                          const SpineForest* extension = nullptr);

/// Spine forest above the anchor long enough for every event query on
/// `points` at levels 1..n_max; nullopt if no query leaves the safe range.
std::optional<SpineForest> spine_extension_for(const ContourTree& tree, const std::vector<TreePoint>& points,
                                               int n_max, double alpha, std::uint64_t seed);

struct WeightEntry {
    bool E = false;
    bool E_tilde = false;
    double sigma = 0.0;
    double varrho = 0.0;
    double varsigma = 0.0;
    double log_varpi = 0.0;
};

/// Weights for every (point, n) with n in 1..n_max, stored point-major.
struct WeightTable {
    double alpha = 0.0;
    double eta = 0.0;
    int n_max = 0;
    std::vector<TreePoint> points;
    std::vector<double> grid_times;
    std::vector<WeightEntry> entries;
    std::size_t extension_atoms = 0;

    const WeightEntry& at(std::size_t i, int n) const { return entries[i * static_cast<std::size_t>(n_max) + (n - 1)]; }
    /// Sum of log varsigma(x, j) for j = 1..n; 0 at n = 0.
    double log_varpi(std::size_t i, int n) const { return n == 0 ? 0.0 : at(i, n).log_varpi; }
};

/// eta defaults to alpha^100 when not given.
double default_eta(double alpha);

/// varrho takes its sup over `points` within 26 alpha^n, not over the whole tree.
WeightTable weights_for(const ContourTree& tree, const std::vector<TreePoint>& points, int n_max, double alpha,
                        double eta, std::uint64_t seed = 0);

void write_weight_table(std::ostream& out, const WeightTable& w);

/// Pairs (x, x') of table points with dist <= radius_factor * alpha^n.
struct PairCheck {
    std::size_t pairs = 0;
    std::size_t violations = 0;
};

/// varrho(x, n) <= varsigma(x', n) whenever dist(x, x') <= 2 alpha^n.
PairCheck check_varrho_varsigma(const ContourTree& tree, const WeightTable& w, int n);

/// Robustness: E(x', n) with dist(x, x') < 28 alpha^n implies E_tilde(x, n).
PairCheck check_event_robustness(const ContourTree& tree, const WeightTable& w, int n);

struct AdmissibilityReport {
    std::size_t requested = 0;
    std::size_t instances = 0;  ///< chains meeting all three hypotheses
    std::size_t rejected = 0;   ///< generated chains failing a hypothesis
    std::size_t failures = 0;   ///< instances with sum sigma < 1
    double min_sum = 0.0;       ///< over instances; NaN if there are none
    bool no_instance() const { return instances == 0; }
};

/// Random ball chains (y, x_0..x_N) at level n: x_0 within alpha^{n-1} of y,
/// consecutive centers closer than 8 alpha^n, and x_N at distance
/// >= 2 alpha^{n-1} from y. Chains follow geodesics with random detours.
AdmissibilityReport admissibility_harness(const ContourTree& tree, double alpha, int n, std::size_t trials,
                                          std::uint64_t seed);

struct VertexWeights {
    std::size_t parent = 0;  ///< vertex id of g(x, n)_{n-1}; the root points to itself
    double nu = 0.0;
    double mu = 0.0;
    double rho_assign = 0.0;
    double log_pi = 0.0;
};

struct FillingWeights {
    double eta = 0.0;
    std::vector<VertexWeights> vertices;  ///< indexed like FillingGraph::vertices
};

/// Parent chains, nu, mu = clamp(nu, eta, 1 - eta), rho_assign = mu and
/// log pi along parent chains. Every net point must appear in `weights`.
FillingWeights filling_machinery(const ContourTree& tree, const FillingGraph& graph, const WeightTable& weights,
                                 double eta);

}  // namespace crt
