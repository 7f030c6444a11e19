#include "crt/weights.hpp"

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

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
}

double branching_diameter(const ContourTree& tree, const TreePoint& x, double t, const SpineForest* ext,
                          double stop_at) {
    const double safe = tree.safe_ray_length(x);
    if (tree.mode() == TreeMode::finite || t <= safe) return tree.max_branching_diameter(x, t, stop_at);
    // Past the anchor the ray runs up the spine; the seam sits at height A.
    const double A = tree.anchor_height();
    const double seam = tree.busemann(x) + A;
    if (seam < safe - 1e-12)
        throw OutOfSafeRange("ray leaves the sampled window before the anchor height", safe);
    if (!ext || ext->start != A || A + (t - seam) > ext->end + 1e-12)
        throw OutOfSafeRange("branching query beyond the spine extension", safe);
    const double grid = tree.max_branching_diameter(x, seam, stop_at);
    if (grid >= stop_at) return grid;
    return std::max(grid, ext->max_diameter(A, A + (t - seam)));
}

bool detect(const ContourTree& tree, const TreePoint& x, double length, int n, double alpha,
            const SpineForest* ext) {
    check_alpha(alpha);
    if (n < 1) throw InvalidArgument("event level must be >= 1");
    const double thr = std::pow(alpha, n - 1) / 4.0;
    return branching_diameter(tree, x, length, ext, thr) >= thr;
}

}  // namespace

double max_branching_diameter(const ContourTree& tree, const TreePoint& x, double t, const SpineForest* extension) {
    return branching_diameter(tree, x, t, extension, std::numeric_limits<double>::infinity());
}

bool detect_event_E(const ContourTree& tree, const TreePoint& x, int n, double alpha, const SpineForest* extension) {
    return detect(tree, x, 4.0 * std::pow(alpha, n), n, alpha, extension);
}

bool detect_event_E_tilde(const ContourTree& tree, const TreePoint& x, int n, double alpha,
                          const SpineForest* extension) {
    return detect(tree, x, 32.0 * std::pow(alpha, n), n, alpha, extension);
}

std::optional<SpineForest> spine_extension_for(const ContourTree& tree, const std::vector<TreePoint>& points,
                                               int n_max, double alpha, std::uint64_t seed) {
    check_alpha(alpha);
    if (tree.mode() == TreeMode::finite) return std::nullopt;
    double need = 0.0;
    double min_d = std::numeric_limits<double>::infinity();
    for (const auto& x : points) {
        const double seam = tree.busemann(x) + tree.anchor_height();
        for (int n = 1; n <= n_max; ++n) {
            const double len = 32.0 * std::pow(alpha, n);
            if (len <= tree.safe_ray_length(x)) break;
            need = std::max(need, len - seam);
            min_d = std::min(min_d, std::pow(alpha, n - 1) / 4.0);
        }
    }
    if (need <= 0.0) return std::nullopt;
    auto rng = make_rng(derive_seed(seed, 0x5b1e));
    const double A = tree.anchor_height();
    return sample_spine_forest(A, A + need, min_d, rng);
}

double default_eta(double alpha) {
    check_alpha(alpha);
    return std::pow(alpha, 100);
}

WeightTable weights_for(const ContourTree& tree, const std::vector<TreePoint>& points, int n_max, double alpha,
                        double eta, std::uint64_t seed) {
    check_alpha(alpha);
    if (n_max < 1) throw InvalidArgument("n_max must be >= 1");
    if (!(eta > 0.0 && eta < 0.5)) throw InvalidArgument("eta must lie in (0, 1/2)");

    WeightTable w;
    w.alpha = alpha;
    w.eta = eta;
    w.n_max = n_max;
    w.points = points;
    const std::size_t P = points.size();
    w.entries.resize(P * static_cast<std::size_t>(n_max));
    for (const auto& p : points) w.grid_times.push_back(tree.time(p));

    const auto ext = spine_extension_for(tree, points, n_max, alpha, seed);
    const SpineForest* ext_ptr = ext ? &*ext : nullptr;
    if (ext) w.extension_atoms = ext->atoms.size();

    auto entry = [&](std::size_t i, int n) -> WeightEntry& {
        return w.entries[i * static_cast<std::size_t>(n_max) + (n - 1)];
    };
    for (std::size_t i = 0; i < P; ++i) {
        double log_varpi = 0.0;
        for (int n = 1; n <= n_max; ++n) {
            auto& e = entry(i, n);
            e.E = detect_event_E(tree, points[i], n, alpha, ext_ptr);
            e.E_tilde = detect_event_E_tilde(tree, points[i], n, alpha, ext_ptr);
            if (e.E && !e.E_tilde) throw InvariantViolation("E holds without E_tilde");
            e.sigma = e.E ? 32.0 * alpha : 0.0;
            e.varsigma = eta + (e.E_tilde ? 64.0 * alpha : 0.0);
            log_varpi += std::log(e.varsigma);
            e.log_varpi = log_varpi;
        }
    }
    for (int n = 1; n <= n_max; ++n) {
        const double r = 26.0 * std::pow(alpha, n);
        std::vector<std::size_t> hot;
        for (std::size_t j = 0; j < P; ++j)
            if (entry(j, n).E) hot.push_back(j);
        for (std::size_t i = 0; i < P; ++i) {
            double sup = 0.0;
            for (auto j : hot)
                if (tree.dist(points[i], points[j]) <= r) {
                    sup = 32.0 * alpha;
                    break;
                }
            entry(i, n).varrho = eta + 2.0 * sup;
        }
    }
    return w;
}

void write_weight_table(std::ostream& out, const WeightTable& w) {
    out << "grid_time level E E_tilde sigma varrho varsigma log_varpi\n";
    out.precision(17);
    for (std::size_t i = 0; i < w.points.size(); ++i)
        for (int n = 1; n <= w.n_max; ++n) {
            const auto& e = w.at(i, n);
            out << w.grid_times[i] << ' ' << n << ' ' << int(e.E) << ' ' << int(e.E_tilde) << ' ' << e.sigma << ' '
                << e.varrho << ' ' << e.varsigma << ' ' << e.log_varpi << '\n';
        }
}

PairCheck check_varrho_varsigma(const ContourTree& tree, const WeightTable& w, int n) {
    if (n < 1 || n > w.n_max) throw InvalidArgument("level out of range");
    const double r = 2.0 * std::pow(w.alpha, n);
    PairCheck c;
    for (std::size_t i = 0; i < w.points.size(); ++i)
        for (std::size_t j = 0; j < w.points.size(); ++j) {
            if (tree.dist(w.points[i], w.points[j]) > r) continue;
            ++c.pairs;
            if (w.at(i, n).varrho > w.at(j, n).varsigma) ++c.violations;
        }
    return c;
}

PairCheck check_event_robustness(const ContourTree& tree, const WeightTable& w, int n) {
    if (n < 1 || n > w.n_max) throw InvalidArgument("level out of range");
    const double r = 28.0 * std::pow(w.alpha, n);
    PairCheck c;
    for (std::size_t j = 0; j < w.points.size(); ++j) {
        if (!w.at(j, n).E) continue;
        for (std::size_t i = 0; i < w.points.size(); ++i) {
            if (tree.dist(w.points[i], w.points[j]) >= r) continue;
            ++c.pairs;
            if (!w.at(i, n).E_tilde) ++c.violations;
        }
    }
    return c;
}

namespace {

// Point of [[a, b]] at distance s from a, up to one grid increment.
TreePoint geodesic_point(const ContourTree& tree, const TreePoint& a, const TreePoint& b, double s) {
    const double dab = tree.dist(a, b);
    const double up = std::clamp(0.5 * (dab + tree.busemann(a) - tree.busemann(b)), 0.0, dab);
    if (s <= up) return tree.ray_point(a, s);
    return tree.ray_point(b, std::max(0.0, dab - s));
}

}  // namespace

AdmissibilityReport admissibility_harness(const ContourTree& tree, double alpha, int n, std::size_t trials,
                                          std::uint64_t seed) {
    check_alpha(alpha);
    if (n < 1) throw InvalidArgument("level must be >= 1");
    const double r0 = std::pow(alpha, n - 1);
    const double link = 8.0 * std::pow(alpha, n);
    const double ball = 4.0 * std::pow(alpha, n);

    AdmissibilityReport rep;
    rep.requested = trials;
    rep.min_sum = std::numeric_limits<double>::quiet_NaN();
    const auto centers = ball_carrier(tree, 1.0);
    auto rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick_center(0, centers.size() - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto random_near = [&](const TreePoint& c, double lo, double hi) -> std::optional<TreePoint> {
        const auto [a, b] = tree.ball_scan_range(c, hi);
        std::uniform_int_distribution<Eigen::Index> pick(a, b);
        for (int k = 0; k < 64; ++k) {
            const auto u = tree.point(pick(rng));
            const double d = tree.dist(c, u);
            if (d >= lo && d < hi) return u;
        }
        return std::nullopt;
    };

    for (std::size_t trial = 0; trial < trials; ++trial) {
        try {
            const TreePoint y = centers[pick_center(rng)];
            const auto target = random_near(y, 2.0 * r0 + link, 2.0 * r0 + 4.0 * link);
            if (!target) {
                ++rep.rejected;
                continue;
            }
            std::vector<TreePoint> chain{geodesic_point(tree, y, *target, unif(rng) * r0)};
            while (tree.dist(y, chain.back()) < 2.0 * r0 && chain.size() < 4096) {
                std::optional<TreePoint> next;
                if (unif(rng) < 0.25) next = random_near(chain.back(), 0.0, link);
                if (!next) next = geodesic_point(tree, chain.back(), *target, (0.3 + 0.65 * unif(rng)) * link);
                chain.push_back(*next);
            }
            bool valid = tree.dist(y, chain.front()) < r0 + ball && tree.dist(y, chain.back()) >= 2.0 * r0;
            for (std::size_t j = 1; valid && j < chain.size(); ++j) valid = tree.dist(chain[j - 1], chain[j]) < link;
            if (!valid) {
                ++rep.rejected;
                continue;
            }
            double sum = 0.0;
            for (const auto& x : chain)
                if (detect_event_E(tree, x, n, alpha)) sum += 32.0 * alpha;
            ++rep.instances;
            if (sum < 1.0) ++rep.failures;
            rep.min_sum = rep.instances == 1 ? sum : std::min(rep.min_sum, sum);
        } catch (const OutOfSafeRange&) {
            ++rep.rejected;
        }
    }
    return rep;
}

FillingWeights filling_machinery(const ContourTree& tree, const FillingGraph& graph, const WeightTable& weights,
                                 double eta) {
    if (!(eta > 0.0 && eta < 0.5)) throw InvalidArgument("eta must lie in (0, 1/2)");
    std::unordered_map<Eigen::Index, std::size_t> row;
    for (std::size_t i = 0; i < weights.points.size(); ++i) row.emplace(weights.points[i].index, i);

    const std::size_t V = graph.vertices.size();
    std::vector<double> sigma(V, 0.0);
    for (std::size_t v = 0; v < V; ++v) {
        const auto& fv = graph.vertices[v];
        if (fv.level == 0) continue;
        if (fv.level > weights.n_max) throw InvalidArgument("weight table lacks level " + std::to_string(fv.level));
        const auto it = row.find(fv.point.index);
        if (it == row.end()) throw InvalidArgument("net point missing from weight table");
        sigma[v] = weights.at(it->second, fv.level).sigma;
    }

    FillingWeights fw;
    fw.eta = eta;
    fw.vertices.resize(V);
    for (std::size_t v = 1; v < V; ++v) {
        const auto& fv = graph.vertices[v];
        auto& out = fw.vertices[v];
        const std::size_t p0 = graph.level_offset[fv.level - 1], p1 = graph.level_offset[fv.level];
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t p = p0; p < p1; ++p) {
            const double d = tree.dist(fv.point, graph.vertices[p].point);
            if (d < best) {
                best = d;
                out.parent = p;
            }
        }
        if (!(best <= std::pow(graph.alpha, fv.level - 1) + tree.tol_eq()))
            throw InvariantViolation("no parent within alpha^{n-1}; net covering is broken");

        double sup = sigma[v];
        for (auto w1 : graph.same_level[v]) {
            sup = std::max(sup, sigma[w1]);
            for (auto w2 : graph.same_level[w1]) sup = std::max(sup, sigma[w2]);
        }
        out.nu = 2.0 * sup;
        out.mu = std::clamp(out.nu, eta, 1.0 - eta);
        out.rho_assign = out.mu;
        out.log_pi = std::log(out.rho_assign) + fw.vertices[out.parent].log_pi;
    }
    return fw;
}

}  // namespace crt
