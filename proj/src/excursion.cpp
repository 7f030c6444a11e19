#include "crt/excursion.hpp"

#include "crt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace crt {

Eigen::VectorXd sample_brownian_bridge(Eigen::Index m, Rng& rng) {
    if (m < 2) throw InvalidArgument("bridge grid size must be >= 2");
    std::normal_distribution<double> normal;
    const double dt = 1.0 / static_cast<double>(m);
    Eigen::VectorXd b(m + 1);
    b[0] = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double remaining = static_cast<double>(m - i);
        const double keep = (remaining - 1.0) / remaining;
        b[i + 1] = b[i] * keep + std::sqrt(dt * keep) * normal(rng);
    }
    b[m] = 0.0;
    return b;
}

VervaatShift vervaat_transform(const Eigen::VectorXd& bridge) {
    const Eigen::Index m = bridge.size() - 1;
    Eigen::Index k = 0;
    bridge.head(m).minCoeff(&k);
    Eigen::VectorXd e(m + 1);
    for (Eigen::Index i = 0; i < m; ++i) e[i] = bridge[(k + i) % m] - bridge[k];
    e[0] = 0.0;
    e[m] = 0.0;
    return {std::move(e), k};
}

Eigen::VectorXd normalized_excursion_values(Eigen::Index m, Rng& rng) {
    if (m < 2) throw InvalidArgument("excursion grid size must be >= 2");
    for (;;) {
        auto shifted = vervaat_transform(sample_brownian_bridge(m, rng));
        // a tied minimum would put a zero in the interior; redraw
        if ((shifted.values.segment(1, m - 1).array() > 0.0).all()) return std::move(shifted.values);
    }
}

PathGrid sample_normalized_excursion(Eigen::Index m, std::uint64_t seed) {
    if (m < 2) throw InvalidArgument("excursion grid size must be >= 2");
    auto rng = make_rng(seed);
    return PathGrid(PathKind::excursion, 0.0, 1.0 / static_cast<double>(m),
                    normalized_excursion_values(m, rng));
}

namespace {

Eigen::VectorXd bes3_values(Eigen::Index m, double step, Rng& rng) {
    std::normal_distribution<double> normal;
    const double sd = std::sqrt(step);
    Eigen::VectorXd r(m + 1);
    double x = 0.0, y = 0.0, z = 0.0;
    r[0] = 0.0;
    for (Eigen::Index i = 1; i <= m; ++i) {
        x += sd * normal(rng);
        y += sd * normal(rng);
        z += sd * normal(rng);
        r[i] = std::sqrt(x * x + y * y + z * z);
    }
    return r;
}

}  // namespace

std::pair<PathGrid, PathGrid> sample_bes3_pair(double horizon, Eigen::Index m, std::uint64_t seed) {
    if (!(horizon > 0.0)) throw InvalidArgument("BES(3) horizon must be positive");
    if (m < 2) throw InvalidArgument("BES(3) grid size must be >= 2");
    auto rng = make_rng(seed);
    const double step = horizon / static_cast<double>(m);
    auto forward = bes3_values(m, step, rng);
    auto backward = bes3_values(m, step, rng);
    return {PathGrid(PathKind::bes3_pair_half, 0.0, step, std::move(forward)),
            PathGrid(PathKind::bes3_pair_half, 0.0, step, std::move(backward))};
}

RerootedPair reroot_transform(const std::pair<PathGrid, PathGrid>& pair, double t,
                              std::pair<double, double> beyond) {
    const auto& R = pair.first.values();
    const auto& Rt = pair.second.values();
    const double step = pair.first.step();
    if (pair.second.step() != step) throw InvalidArgument("reroot: mismatched grid steps");
    const Eigen::Index M = R.size() - 1;
    const auto k = static_cast<Eigen::Index>(std::llround(t / step));
    if (!(t > 0.0) || k <= 0 || k >= M) throw InvalidArgument("reroot: t must lie strictly inside the horizon");

    Eigen::VectorXd fwd(M - k + 1);
    double run = R[k];
    for (Eigen::Index i = 0; i <= M - k; ++i) {
        run = std::min(run, R[k + i]);
        fwd[i] = R[k] + R[k + i] - 2.0 * run;
    }
    fwd[0] = 0.0;

    // suffix minima for the s > t branch
    Eigen::VectorXd tail_r(M + 1), tail_rt(Rt.size());
    tail_r[M] = std::min(R[M], beyond.first);
    for (Eigen::Index i = M; i-- > 0;) tail_r[i] = std::min(R[i], tail_r[i + 1]);
    tail_rt[Rt.size() - 1] = std::min(Rt[Rt.size() - 1], beyond.second);
    for (Eigen::Index i = Rt.size() - 1; i-- > 0;) tail_rt[i] = std::min(Rt[i], tail_rt[i + 1]);

    const Eigen::Index back_len = k + Rt.size();
    Eigen::VectorXd bwd(back_len);
    run = R[k];
    for (Eigen::Index i = 0; i <= k; ++i) {
        run = std::min(run, R[k - i]);
        bwd[i] = R[k] + R[k - i] - 2.0 * run;
    }
    for (Eigen::Index i = k + 1; i < back_len; ++i) {
        const Eigen::Index j = i - k;
        bwd[i] = R[k] + Rt[j] - 2.0 * std::min(tail_r[k], tail_rt[j]);
    }
    bwd[0] = 0.0;
    return {PathGrid(PathKind::bes3_pair_half, 0.0, step, std::move(fwd)),
            PathGrid(PathKind::bes3_pair_half, 0.0, step, std::move(bwd)), static_cast<double>(k) * step};
}

double bes3_future_infimum(double value, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return value * unif(rng);
}

double ito_duration_tail(double a) {
    return 1.0 / std::sqrt(2.0 * std::numbers::pi * a);
}

double ito_discarded_mass(const ItoOptions& opts) {
    return 1.0 / std::sqrt(opts.a_max_factor);
}

namespace {

// Inverse CDF of the a^{-3/2} law truncated to [a_min, a_max].
double draw_duration(double a_min, const ItoOptions& opts, Rng& rng) {
    const double lo = std::sqrt(1.0 / opts.a_max_factor);
    std::uniform_real_distribution<double> unif(lo, 1.0);
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    return a_min / (u * u);
}

void check_ito(double a_min, const ItoOptions& opts) {
    if (!(a_min > 0.0)) throw InvalidArgument("a_min must be positive");
    if (!(opts.a_max_factor > 1.0)) throw InvalidArgument("a_max_factor must exceed 1");
    if (opts.grid < 2) throw InvalidArgument("excursion grid size must be >= 2");
    if (opts.max_grid < opts.grid) throw InvalidArgument("max_grid must be >= grid");
}

}  // namespace

ItoExcursion sample_ito_excursion(double a_min, Rng& rng, const ItoOptions& opts) {
    check_ito(a_min, opts);
    const double a = draw_duration(a_min, opts, rng);
    Eigen::Index grid = opts.grid;
    if (opts.max_step > 0.0) {
        const double want = std::ceil(a / opts.max_step);
        grid = std::max(grid, static_cast<Eigen::Index>(std::min(want, static_cast<double>(opts.max_grid))));
    }
    Eigen::VectorXd e = normalized_excursion_values(grid, rng) * std::sqrt(a);
    return {PathGrid(PathKind::excursion, 0.0, a / static_cast<double>(grid), std::move(e)), a};
}

PathGrid sample_ito_excursion(double a_min, std::uint64_t seed, const ItoOptions& opts) {
    auto rng = make_rng(seed);
    return sample_ito_excursion(a_min, rng, opts).path;
}

std::vector<ForestAtom> spine_ppp_forest(double length, double a_min, Rng& rng, const ItoOptions& opts) {
    if (!(length > 0.0)) throw InvalidArgument("spine length must be positive");
    check_ito(a_min, opts);
    const double rate = 2.0 * length * (ito_duration_tail(a_min) - ito_duration_tail(a_min * opts.a_max_factor));
    std::poisson_distribution<long long> count_dist(rate);
    std::uniform_real_distribution<double> attach(0.0, length);
    const long long count = count_dist(rng);
    std::vector<ForestAtom> atoms;
    atoms.reserve(static_cast<std::size_t>(count));
    for (long long j = 0; j < count; ++j) {
        const double t = attach(rng);
        auto exc = sample_ito_excursion(a_min, rng, opts);
        atoms.push_back({t, PathGrid(PathKind::spine_forest, t, exc.path.step(), exc.path.values())});
    }
    return atoms;
}

std::vector<ForestAtom> spine_ppp_forest(double length, double a_min, std::uint64_t seed, const ItoOptions& opts) {
    auto rng = make_rng(seed);
    return spine_ppp_forest(length, a_min, rng, opts);
}

double excursion_tree_diameter(const Eigen::VectorXd& e) {
    double best_u = -std::numeric_limits<double>::infinity();
    double best_uw = -std::numeric_limits<double>::infinity();
    double diameter = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        best_u = std::max(best_u, e[i]);
        best_uw = std::max(best_uw, best_u - 2.0 * e[i]);
        diameter = std::max(diameter, best_uw + e[i]);
    }
    return std::max(diameter, e.size() > 0 ? e.maxCoeff() : 0.0);
}

double SpineForest::max_diameter(double lo, double hi) const {
    auto first = std::upper_bound(atoms.begin(), atoms.end(), lo,
                                  [](double v, const SpineAtom& a) { return v < a.attach; });
    double best = 0.0;
    for (auto it = first; it != atoms.end() && it->attach <= hi; ++it) best = std::max(best, it->diameter);
    return best;
}

SpineForest sample_spine_forest(double start, double end, double min_diameter, Rng& rng, double resolution) {
    if (!(end >= start)) throw InvalidArgument("spine forest: end must be >= start");
    if (!(min_diameter > 0.0)) throw InvalidArgument("spine forest: min_diameter must be positive");
    if (!(resolution > 0.0)) throw InvalidArgument("spine forest: resolution must be positive");
    SpineForest forest{start, end, min_diameter, {}};
    if (end == start) return forest;

    ItoOptions opts;
    opts.grid = 32;
    opts.a_max_factor = 1e16;
    opts.max_step = std::pow(resolution * min_diameter, 2);
    const double a_min = std::pow(min_diameter / 16.0, 2);
    const double length = end - start;
    const double rate = 2.0 * length * (ito_duration_tail(a_min) - ito_duration_tail(a_min * opts.a_max_factor));
    std::poisson_distribution<long long> count_dist(rate);
    std::uniform_real_distribution<double> attach(start, end);
    const long long count = count_dist(rng);
    for (long long j = 0; j < count; ++j) {
        const double t = attach(rng);
        const auto exc = sample_ito_excursion(a_min, rng, opts);
        const double diam = excursion_tree_diameter(exc.path.values());
        if (diam >= 0.5 * min_diameter) forest.atoms.push_back({t, exc.path.values().maxCoeff(), diam});
    }
    std::sort(forest.atoms.begin(), forest.atoms.end(),
              [](const SpineAtom& a, const SpineAtom& b) { return a.attach < b.attach; });
    return forest;
}

}  // namespace crt
