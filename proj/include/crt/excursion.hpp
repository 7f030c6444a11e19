#pragma once

#include "crt/path_grid.hpp"
#include "crt/rng.hpp"

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace crt {

/// Brownian bridge from 0 to 0 on [0, 1] sampled at m + 1 grid points by
/// conditioned-increment recursion.
Eigen::VectorXd sample_brownian_bridge(Eigen::Index m, Rng& rng);

/// Cyclic shift of a bridge (values[0] == values[m]) placing its argmin at 0.
struct VervaatShift {
    Eigen::VectorXd values;
    Eigen::Index argmin;
};
VervaatShift vervaat_transform(const Eigen::VectorXd& bridge);

Eigen::VectorXd normalized_excursion_values(Eigen::Index m, Rng& rng);
PathGrid sample_normalized_excursion(Eigen::Index m, std::uint64_t seed);

/// Two independent BES(3) paths from 0 on [0, horizon], each the norm of a
/// 3-dimensional Brownian motion with exact Gaussian increments.
std::pair<PathGrid, PathGrid> sample_bes3_pair(double horizon, Eigen::Index m, std::uint64_t seed);

struct RerootedPair {
    PathGrid forward;
    PathGrid backward;
    double pivot;
};

/// Re-rooting of a two-sided BES(3) contour at time t > 0 (snapped to the grid).
///
/// Tail infima in the s > t branch are taken over the sampled horizon and
/// over `beyond`, the infima of (forward, backward) after the horizon. The
/// default treats the horizon as the end of time.
RerootedPair reroot_transform(const std::pair<PathGrid, PathGrid>& pair, double t,
                              std::pair<double, double> beyond = {std::numeric_limits<double>::infinity(),
                                                                  std::numeric_limits<double>::infinity()});

/// Infimum of a BES(3) path over [T, infinity) given R_T = value; it is
/// uniform on [0, value].
double bes3_future_infimum(double value, Rng& rng);

/// N(duration > a) for the excursion measure with N(sup > r) = 1/(2r).
double ito_duration_tail(double a);

struct ItoOptions {
    Eigen::Index grid = 256;
    double a_max_factor = 1e4;  ///< durations are capped at a_max_factor * a_min
    /// If positive, long excursions get grid = ceil(duration / max_step),
    /// between grid and max_grid.
    double max_step = 0.0;
    Eigen::Index max_grid = 1 << 14;
};

struct ItoExcursion {
    PathGrid path;
    double duration;
};

/// Fraction of N(duration > a_min) lost to the a_max cap.
double ito_discarded_mass(const ItoOptions& opts);

ItoExcursion sample_ito_excursion(double a_min, Rng& rng, const ItoOptions& opts = {});
PathGrid sample_ito_excursion(double a_min, std::uint64_t seed, const ItoOptions& opts = {});

struct ForestAtom {
    double attach_time;
    PathGrid path;  ///< kind spine_forest, origin_time == attach_time
};

/// Poisson point process of excursions with intensity 2 N(. ; duration >= a_min) x dt
/// on a spine of length L.
std::vector<ForestAtom> spine_ppp_forest(double length, double a_min, Rng& rng,
                                         const ItoOptions& opts = {});
std::vector<ForestAtom> spine_ppp_forest(double length, double a_min, std::uint64_t seed,
                                         const ItoOptions& opts = {});

/// Closure diameter of the tree coded by an excursion, rooted at its ends:
/// max(sup e, max over u <= w <= v of e_u - 2 e_w + e_v).
double excursion_tree_diameter(const Eigen::VectorXd& e);

/// A subtree hanging off the spine, reduced to what event detection needs.
struct SpineAtom {
    double attach;    ///< spine height of the root
    double height;    ///< sup of the coding excursion
    double diameter;  ///< closure diameter, including the root
};

/// Subtrees branching off the spine over [start, end], sorted by attach.
/// Atoms of diameter below min_diameter may be missing.
struct SpineForest {
    double start = 0.0;
    double end = 0.0;
    double min_diameter = 0.0;
    std::vector<SpineAtom> atoms;

    /// Largest diameter among atoms attached in (lo, hi]; 0 if none.
    double max_diameter(double lo, double hi) const;
};

/// PPP spine forest that is complete for diameters >= min_diameter. Durations
/// start at (min_diameter / 16)^2; a shorter excursion would need a
/// normalized sup above 8 to reach height min_diameter / 2 (probability
/// below 1e-50). Each excursion is sampled with step at most
/// (resolution * min_diameter)^2.
SpineForest sample_spine_forest(double start, double end, double min_diameter, Rng& rng,
                                double resolution = 0.02);

}  // namespace crt
