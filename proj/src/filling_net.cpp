#include "crt/filling_net.hpp"

#include "crt/errors.hpp"
#include "crt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

namespace crt {

std::vector<TreePoint> ball_carrier(const ContourTree& tree, double radius, std::size_t cap, std::uint64_t seed) {
    if (!(radius > 0.0)) throw InvalidArgument("carrier radius must be positive");
    const TreePoint o = tree.root();
    const auto [lo, hi] = tree.ball_scan_range(o, radius);
    std::vector<Eigen::Index> idx;
    for (Eigen::Index u = lo; u <= hi; ++u)
        if (tree.dist_idx(u, o.index) < radius) idx.push_back(u);
    if (cap > 0 && idx.size() > cap) {
        auto rng = make_rng(seed);
        std::vector<Eigen::Index> others;
        for (auto u : idx)
            if (u != o.index) others.push_back(u);
        std::shuffle(others.begin(), others.end(), rng);
        others.resize(cap - 1);
        others.push_back(o.index);
        std::sort(others.begin(), others.end());
        idx = std::move(others);
    }
    std::vector<TreePoint> out;
    out.reserve(idx.size());
    for (auto u : idx) out.push_back(tree.point(u));
    return out;
}

NetHierarchy build_nested_nets(const ContourTree& tree, const std::vector<TreePoint>& carrier, double alpha,
                               int n_max, std::uint64_t seed, NetOrder order) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (n_max < 0) throw InvalidArgument("n_max must be nonnegative");
    if (carrier.empty()) throw InvalidArgument("empty carrier");
    for (const auto& p : carrier) (void)tree.time(p);  // validates tree membership

    std::vector<std::size_t> scan(carrier.size());
    std::iota(scan.begin(), scan.end(), std::size_t{0});
    if (order == NetOrder::shuffled) {
        auto rng = make_rng(seed);
        std::shuffle(scan.begin(), scan.end(), rng);
    }

    NetHierarchy nets;
    nets.alpha = alpha;
    nets.carrier = carrier;
    nets.levels.push_back({0, {tree.root()}});
    std::vector<Eigen::Index> chosen{tree.root().index};
    for (int n = 1; n <= n_max; ++n) {
        const double r = std::pow(alpha, n);
        for (std::size_t k : scan) {
            const Eigen::Index u = carrier[k].index;
            bool far = true;
            for (Eigen::Index c : chosen)
                if (tree.dist_idx(u, c) < r) {
                    far = false;
                    break;
                }
            if (far) chosen.push_back(u);
        }
        NetLevel level{n, {}};
        level.points.reserve(chosen.size());
        for (auto c : chosen) level.points.push_back(tree.point(c));
        nets.levels.push_back(std::move(level));
    }
    return nets;
}

void check_net_invariants(const ContourTree& tree, const NetHierarchy& nets) {
    for (std::size_t l = 0; l < nets.levels.size(); ++l) {
        const auto& pts = nets.levels[l].points;
        const double r = std::pow(nets.alpha, nets.levels[l].n);
        if (l > 0) {
            const auto& prev = nets.levels[l - 1].points;
            if (pts.size() < prev.size() || !std::equal(prev.begin(), prev.end(), pts.begin()))
                throw InvariantViolation("net nesting fails at level " + std::to_string(l));
        }
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                if (tree.dist(pts[i], pts[j]) < r - tree.tol_eq())
                    throw InvariantViolation("net separation fails at level " + std::to_string(l));
        for (const auto& c : nets.carrier) {
            bool near = false;
            for (const auto& p : pts)
                if (tree.dist(c, p) < r) {
                    near = true;
                    break;
                }
            if (!near) throw InvariantViolation("net covering fails at level " + std::to_string(l));
        }
    }
}

CoverReport iid_cover_experiment(const ContourTree& tree, const std::vector<TreePoint>& carrier, double T,
                                 double eps, double zeta, std::uint64_t seed, double max_factor) {
    if (tree.mode() != TreeMode::two_sided) throw InvalidArgument("cover experiment needs a two-sided tree");
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("eps must lie in (0, 1)");
    if (!(zeta > 0.0)) throw InvalidArgument("zeta must be positive");
    if (!(T > 0.0)) throw InvalidArgument("T must be positive");
    if (carrier.empty()) throw InvalidState("cover experiment: empty carrier");

    CoverReport rep;
    rep.carrier_size = carrier.size();
    rep.budget = static_cast<std::size_t>(std::ceil(std::pow(eps, -(2.0 + zeta))));

    std::vector<char> pending(static_cast<std::size_t>(tree.size()), 0);
    std::size_t remaining = 0;
    for (const auto& c : carrier) {
        (void)tree.time(c);
        if (!pending[c.index]) {
            pending[c.index] = 1;
            ++remaining;
        }
    }

    const auto half = static_cast<Eigen::Index>(std::floor(T / tree.step()));
    const Eigen::Index lo = std::max<Eigen::Index>(0, tree.zero_index() - half);
    const Eigen::Index hi = std::min<Eigen::Index>(tree.size() - 1, tree.zero_index() + half);
    auto rng = make_rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(lo, hi);
    const auto max_draws = static_cast<std::size_t>(max_factor * static_cast<double>(rep.budget));
    for (std::size_t k = 1; k <= max_draws; ++k) {
        const TreePoint x = tree.point(pick(rng));
        const auto [a, b] = tree.ball_scan_range(x, eps);
        for (Eigen::Index u = a; u <= b; ++u)
            if (pending[u] && tree.dist_idx(u, x.index) < eps) {
                pending[u] = 0;
                --remaining;
            }
        if (remaining == 0) {
            rep.needed = k;
            break;
        }
    }
    rep.covered = rep.needed > 0 && rep.needed <= rep.budget;
    return rep;
}

CoverReport iid_cover_experiment(const ContourTree& tree, double T, double eps, double zeta, std::uint64_t seed,
                                 double max_factor) {
    return iid_cover_experiment(tree, ball_carrier(tree, 1.0), T, eps, zeta, seed, max_factor);
}

FillingGraph build_filling_graph(const ContourTree& tree, const NetHierarchy& nets) {
    FillingGraph g;
    g.alpha = nets.alpha;
    for (const auto& level : nets.levels) {
        g.level_offset.push_back(g.vertices.size());
        for (std::size_t i = 0; i < level.points.size(); ++i)
            g.vertices.push_back({level.points[i], level.n, i, tree.time(level.points[i])});
    }
    g.level_offset.push_back(g.vertices.size());
    g.same_level.assign(g.vertices.size(), {});
    g.cross_level.assign(g.vertices.size(), {});

    const int top = g.max_level();
    for (int n = 0; n <= top; ++n) {
        const double rn = std::pow(nets.alpha, n);
        const std::size_t b0 = g.level_offset[n], b1 = g.level_offset[n + 1];
        for (std::size_t a = b0; a < b1; ++a)
            for (std::size_t b = a + 1; b < b1; ++b)
                if (tree.dist(g.vertices[a].point, g.vertices[b].point) < 8.0 * rn) {
                    g.same_level[a].push_back(b);
                    g.same_level[b].push_back(a);
                }
        if (n == top) continue;
        const double thr = rn + rn * nets.alpha;
        const std::size_t c1 = g.level_offset[n + 2];
        for (std::size_t a = b0; a < b1; ++a)
            for (std::size_t b = b1; b < c1; ++b)
                if (tree.dist(g.vertices[a].point, g.vertices[b].point) < thr) {
                    g.cross_level[a].push_back(b);
                    g.cross_level[b].push_back(a);
                }
    }
    for (auto& adj : g.same_level) std::sort(adj.begin(), adj.end());
    for (auto& adj : g.cross_level) std::sort(adj.begin(), adj.end());
    return g;
}

std::vector<std::pair<std::size_t, std::size_t>> FillingGraph::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a = 0; a < vertices.size(); ++a) {
        for (auto b : same_level[a])
            if (a < b) out.emplace_back(a, b);
        for (auto b : cross_level[a])
            if (a < b) out.emplace_back(a, b);
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool FillingGraph::connected_up_to(int n) const {
    if (n < 0 || n > max_level()) throw InvalidArgument("level out of range");
    const std::size_t limit = level_offset[n + 1];
    std::vector<char> seen(limit, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (const auto* adj : {&same_level[v], &cross_level[v]})
            for (auto w : *adj)
                if (w < limit && !seen[w]) {
                    seen[w] = 1;
                    ++count;
                    stack.push_back(w);
                }
    }
    return count == limit;
}

void write_vertex_table(std::ostream& out, const FillingGraph& g) {
    out << "level index grid_time\n";
    out.precision(17);
    for (const auto& v : g.vertices) out << v.level << ' ' << v.index << ' ' << v.grid_time << '\n';
}

void write_edge_list(std::ostream& out, const FillingGraph& g) {
    out << "level_a index_a level_b index_b\n";
    for (const auto& [a, b] : g.edges()) {
        const auto& va = g.vertices[a];
        const auto& vb = g.vertices[b];
        out << va.level << ' ' << va.index << ' ' << vb.level << ' ' << vb.index << '\n';
    }
}

}  // namespace crt
