#pragma once

#include "crt/path_grid.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace crt {

enum class TreeMode { finite, two_sided };

/// A grid time standing for its projection in a particular ContourTree.
struct TreePoint {
    Eigen::Index index = 0;
    std::uint64_t tree_id = 0;
    friend bool operator==(const TreePoint&, const TreePoint&) = default;
};

/// A subtree coded by the contiguous index range [first, last].
///
/// root_busemann is the Busemann value of the (possibly off-grid) root, so
/// height = max over the interval of busemann(u) - root_busemann.
struct SubtreeHandle {
    TreePoint root;
    Eigen::Index first = 0;
    Eigen::Index last = 0;
    double root_busemann = 0.0;
    double attach_distance = 0.0;  ///< distance from the segment start to the root
    double height = 0.0;
    double diameter = 0.0;
};

/// Metric tree coded by a contour, with O(1) range-minimum queries.
///
/// Finite mode is built from one excursion and rooted at proj(0) = proj(1);
/// rays run toward that root. Two-sided mode glues a pair of BES(3) halves at
/// time 0 (negative times are stored first) and rays run toward infinity.
/// The two-sided tail infima are truncated at the sampled horizon; ray queries
/// beyond the far anchor are refused with OutOfSafeRange.
class ContourTree {
public:
    explicit ContourTree(const PathGrid& excursion);
    ContourTree(const PathGrid& forward, const PathGrid& backward, double safety_fraction = 0.25);

    TreeMode mode() const { return mode_; }
    std::uint64_t id() const { return id_; }
    Eigen::Index size() const { return values_.size(); }
    double step() const { return step_; }
    double mass_per_step() const { return step_; }
    double total_mass() const { return step_ * static_cast<double>(values_.size()); }
    double tol_eq() const { return tol_eq_; }
    const Eigen::VectorXd& values() const { return values_; }
    /// Index of time 0 (two-sided) or 0 (finite).
    Eigen::Index zero_index() const { return zero_; }

    TreePoint point(Eigen::Index index) const;
    TreePoint root() const { return point(zero_); }
    double time(const TreePoint& p) const;
    bool tree_equal(const TreePoint& a, const TreePoint& b) const { return dist(a, b) <= tol_eq_; }

    double dist(const TreePoint& a, const TreePoint& b) const;
    /// Signed distance toward the reference end; decreases by t along R_t.
    double busemann(const TreePoint& p) const;

    TreePoint meet(const TreePoint& a, const TreePoint& b) const;
    std::vector<TreePoint> segment_points(const TreePoint& a, const TreePoint& b) const;

    /// Largest t accepted by ray_point(x, t).
    double safe_ray_length(const TreePoint& x) const;
    TreePoint far_anchor() const;
    /// Anchor height on the spine; infinity in finite mode.
    double anchor_height() const { return anchor_height_; }
    /// First grid representative at distance >= t along the ray from x.
    TreePoint ray_point(const TreePoint& x, double t) const;

    std::vector<SubtreeHandle> branching_subtrees(const TreePoint& x, double t) const;
    /// Largest diameter among branching_subtrees(x, t). The scan stops once
    /// some subtree reaches stop_at, returning a value >= stop_at.
    double max_branching_diameter(const TreePoint& x, double t,
                                  double stop_at = std::numeric_limits<double>::infinity()) const;
    double subtree_diameter(const SubtreeHandle& h) const;
    /// Handle for the subtree coded by [first, last], rooted at its minimum.
    SubtreeHandle interval_subtree(Eigen::Index first, Eigen::Index last) const;

    double ball_mass(const TreePoint& x, double eps) const;
    /// Index range containing every grid time within distance eps of x.
    std::pair<Eigen::Index, Eigen::Index> ball_scan_range(const TreePoint& x, double eps) const;

    /// Index range of all grid times whose ray passes through index i.
    std::pair<Eigen::Index, Eigen::Index> descendant_interval(Eigen::Index i) const;

    // Raw index queries for hot loops; no tree-id validation.
    double dist_idx(Eigen::Index i, Eigen::Index j) const;
    double busemann_idx(Eigen::Index i) const;
    double range_min(Eigen::Index i, Eigen::Index j) const { return values_[range_argmin(i, j)]; }
    Eigen::Index range_argmin(Eigen::Index i, Eigen::Index j) const;

private:
    void build();
    void check(const TreePoint& p) const;
    int direction(Eigen::Index i) const;
    double tail_min(Eigen::Index i) const;
    double scan_branching(const TreePoint& x, double t, double stop_at, std::vector<SubtreeHandle>* out) const;
    double closure_diameter(Eigen::Index first, Eigen::Index last, double root_busemann) const;
    bool on_spine(Eigen::Index i) const;
    Eigen::Index ray_index(Eigen::Index i, double t) const;
    // nearest index from `from` in direction dir whose value is <= thr (or < thr)
    Eigen::Index seek_below(Eigen::Index from, int dir, double thr, bool strict) const;

    TreeMode mode_;
    std::uint64_t id_;
    double step_;
    Eigen::Index zero_ = 0;
    Eigen::VectorXd values_;
    Eigen::VectorXd prefix_min_;
    Eigen::VectorXd suffix_min_;
    std::vector<std::vector<std::int32_t>> sparse_;
    double tol_eq_ = 0.0;
    double anchor_height_ = 0.0;
    Eigen::Index anchor_index_ = 0;
};

}  // namespace crt
