#pragma once

#include "crt/contour_tree.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace crt {

struct NetLevel {
    int n = 0;
    std::vector<TreePoint> points;
};

/// Nested maximal alpha^n-separated nets over a finite carrier.
///
/// Maximality and covering hold relative to the carrier, not the whole tree.
struct NetHierarchy {
    double alpha = 0.5;
    std::vector<NetLevel> levels;
    std::vector<TreePoint> carrier;
};

enum class NetOrder { shuffled, carrier_order };

/// Grid times within distance < radius of the root, in index order. With
/// cap > 0 a seeded uniform subsample of that size is kept; the root is
/// always included.
std::vector<TreePoint> ball_carrier(const ContourTree& tree, double radius = 1.0, std::size_t cap = 0,
                                    std::uint64_t seed = 0);

/// Greedy nets: level 0 is {root}; level n starts from level n - 1 and scans
/// the carrier (in a seeded shuffle or in carrier order), adding every point
/// at distance >= alpha^n from all points chosen so far.
NetHierarchy build_nested_nets(const ContourTree& tree, const std::vector<TreePoint>& carrier, double alpha,
                               int n_max, std::uint64_t seed = 0, NetOrder order = NetOrder::shuffled);

/// Throws InvariantViolation if nesting, separation or covering fails.
void check_net_invariants(const ContourTree& tree, const NetHierarchy& nets);

struct CoverReport {
    std::size_t needed = 0;  ///< first K whose samples eps-cover the carrier (0 if never)
    std::size_t budget = 0;  ///< ceil(eps^-(2 + zeta))
    bool covered = false;    ///< needed found and needed <= budget
    std::size_t carrier_size = 0;
};

/// Draws i.i.d. grid times uniformly from [-T, T] and records when their
/// eps-balls first cover the carrier. Draws stop at max_factor * budget.
CoverReport iid_cover_experiment(const ContourTree& tree, const std::vector<TreePoint>& carrier, double T,
                                 double eps, double zeta, std::uint64_t seed, double max_factor = 64.0);
/// Same, with the carrier ball_carrier(tree, 1.0).
CoverReport iid_cover_experiment(const ContourTree& tree, double T, double eps, double zeta, std::uint64_t seed,
                                 double max_factor = 64.0);

struct FillingVertex {
    TreePoint point;
    int level = 0;
    std::size_t index = 0;  ///< position within its net level
    double grid_time = 0.0;
};

/// Layered graph over a net hierarchy. Vertices are ordered by (level, index).
struct FillingGraph {
    double alpha = 0.5;
    std::vector<FillingVertex> vertices;
    std::vector<std::size_t> level_offset;  ///< first vertex of each level, plus a sentinel
    std::vector<std::vector<std::size_t>> same_level;
    std::vector<std::vector<std::size_t>> cross_level;

    std::size_t vertex_id(int level, std::size_t index) const { return level_offset[level] + index; }
    int max_level() const { return static_cast<int>(level_offset.size()) - 2; }
    /// Every edge once as (a, b) with a < b, sorted.
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;
    /// Whether the subgraph on levels 0..n is connected.
    bool connected_up_to(int n) const;
};

/// Same-level edges when dist < 8 alpha^n, cross-level edges between
/// adjacent levels when dist < alpha^m + alpha^n.
FillingGraph build_filling_graph(const ContourTree& tree, const NetHierarchy& nets);

/// "level index grid_time" per vertex.
void write_vertex_table(std::ostream& out, const FillingGraph& g);
/// "level_a index_a level_b index_b" per edge.
void write_edge_list(std::ostream& out, const FillingGraph& g);

}  // namespace crt
