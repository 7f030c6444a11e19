#pragma once

#include "crt/contour_tree.hpp"
#include "crt/deformation.hpp"
#include "crt/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace crt {

struct RunConfig {
    double alpha = 0.25;
    double eta_exponent = 3.0;  ///< eta = alpha^eta_exponent
    double p = 1.5;
    double zeta = 0.5;
    std::int64_t grid_size = 1 << 16;  ///< steps per side (two-sided) or in total (finite)
    double horizon = 8.0;              ///< time horizon per side of two-sided trees
    std::int64_t n_max = 4;
    std::int64_t carrier_cap = 500;
    std::int64_t replicas = 4;
    std::uint64_t master_seed = 1;
    std::string output_dir = "crt_out";

    double eta() const;
    /// Throws InvalidArgument naming the first bad field.
    void validate() const;
};

/// Independent stream for replica r of an experiment.
std::uint64_t replica_seed(std::uint64_t master, std::uint64_t experiment, std::uint64_t r);

enum class Comparison { le, ge };

/// A recorded statistic checked against a recorded threshold.
struct StatReport {
    std::string name;
    std::vector<double> values;  ///< per replica (or per cell)
    double mean = 0.0;
    double se = 0.0;
    std::string statistic_rule;  ///< how `statistic` derives from values
    double statistic = 0.0;
    Comparison comparison = Comparison::le;
    double threshold = 0.0;
    std::string provenance;  ///< "PAPER", "DERIVED" or "KNOB"
    std::vector<std::pair<std::string, double>> extras;
    bool pass = false;
};

/// Fills mean and se from values, then pass from statistic and threshold.
void finalize(StatReport& r);
bool passes(const StatReport& r);

/// Least-squares slope of ys against xs.
double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys);

struct BoxCount {
    std::vector<double> scales;
    std::vector<std::size_t> counts;  ///< greedy eps-net sizes
    double slope = 0.0;               ///< of log N against log(1/eps)
};

/// Scales must be positive, distinct, at least three and span >= 2 octaves.
void check_scales(const std::vector<double>& scales);
/// Greedy nets over points 0..n-1 scanned in order.
BoxCount box_dimension(std::size_t n, const std::function<double(std::size_t, std::size_t)>& dist,
                       const std::vector<double>& scales);
/// Greedy nets over every grid time of the tree, in index order.
BoxCount box_dimension(const ContourTree& tree, const std::vector<double>& scales);
/// Greedy nets over the carrier under D_sigma.
BoxCount box_dimension(const ChainMetricTable& table, const std::vector<double>& scales);

/// Finite tree from a normalized excursion with `steps` steps.
ContourTree finite_tree(std::int64_t steps, std::uint64_t seed);
/// Two-sided tree with `steps` steps per side over [-horizon, horizon].
ContourTree infinite_tree(std::int64_t steps, double horizon, std::uint64_t seed);
/// infinite_tree redrawn (seeds derived from `seed`) until the anchor height
/// exceeds `radius`, so the ball B_radius(o) lies in the trusted window.
/// `redrawn` counts rejected draws. Throws InvalidState after 100 draws.
ContourTree infinite_tree_covering(std::int64_t steps, double horizon, double radius, std::uint64_t seed,
                                   std::size_t* redrawn = nullptr);

/// Per replica and eps: min over the carrier of ball_mass / eps^(2 + zeta).
/// Values are 1/0 per (replica, eps) cell; passes at a cell fraction >= 0.95.
StatReport verify_ball_volume(const RunConfig& cfg, double zeta, const std::vector<double>& eps_list);

/// Sups of excursions from N( . | duration >= a_min).
std::vector<double> sample_ito_sups(std::size_t n, double a_min, std::uint64_t seed);
/// Tail counts at each r in r_list; values are count(r) / count(2r) for r
/// whose 2r is also listed. Passes when every ratio is within 3 SE of 2 and
/// the log-log profile slope is within 0.1 of -1. r below 8 sqrt(a_min) is
/// flagged and skipped.
StatReport verify_tail_law(const std::vector<double>& sups, const std::vector<double>& r_list, double a_min);

/// P(some subtree off [[R_s(o), R_t(o)]] has diameter >= r) over two-sided
/// grid trees. Trees whose anchor height is below t are redrawn (per replica
/// seed) and counted.
StatReport verify_subtree_probability(const RunConfig& cfg, double s, double t, double r, std::size_t replicas);

/// Indicators of E_tilde(o, n) for n = 1..n_max from the spine PPP around o,
/// sampled region by region at the resolution each level needs.
std::vector<char> sample_event_tilde_levels(double alpha, int n_max, Rng& rng);

/// Empirical P[E_tilde(o, n)] against 256 alpha + 3 SE, one report per level;
/// all levels share each replica's sample.
std::vector<StatReport> verify_event_probability(double alpha, const std::vector<int>& levels, std::size_t replicas,
                                                 std::uint64_t seed);

struct MomentReport {
    std::vector<int> levels;
    std::vector<double> log_mean;  ///< log of the mean of varpi(o, n)^p
    double slope = 0.0;
    double log_c_fit = 0.0;  ///< slope - (p + 1) log alpha
    StatReport stat;         ///< slope <= -1
};

MomentReport verify_expectation_bound(double alpha, double eta, double p, const std::vector<int>& levels,
                                      std::size_t replicas, std::uint64_t seed);

struct DimensionReplica {
    std::uint64_t seed = 0;
    std::size_t redrawn = 0;
    std::size_t carrier = 0;
    double dim_original = 0.0;
    double dim_deformed = 0.0;  ///< after the snowflake correction log(eta) / log(alpha)
    std::vector<double> main_sum_log;  ///< levels 0..n_max
};

struct DimensionReport {
    std::vector<double> scales;
    double snowflake = 1.0;  ///< log(eta) / log(alpha)
    std::vector<DimensionReplica> replicas;
    double mean_original = 0.0, se_original = 0.0;
    double mean_deformed = 0.0, se_deformed = 0.0;
};

/// tree -> carrier -> nets -> weights -> D_sigma -> box counts under both
/// metrics on the same carrier. null_weights forces sigma = 0 and varrho = eta.
DimensionReport dimension_experiment(const RunConfig& cfg, const std::vector<double>& scales,
                                     bool null_weights = false);

}  // namespace crt
