#include "doctest.h"

#include "crt/errors.hpp"
#include "crt/excursion.hpp"
#include "crt/weights.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace crt;

namespace {

PathGrid ramp(Eigen::Index steps, double step) {
    Eigen::VectorXd v(steps + 1);
    for (Eigen::Index i = 0; i <= steps; ++i) v[i] = step * static_cast<double>(i);
    return PathGrid(PathKind::bes3_pair_half, 0.0, step, v);
}

// Spine with a single tent of height 0.3 hanging at spine height 0.1.
ContourTree bump_tree() {
    const double h = 0.001;
    Eigen::VectorXd v(3601);
    Eigen::Index i = 0;
    for (int k = 0; k <= 100; ++k) v[i++] = 0.1 * k / 100.0;
    for (int k = 1; k <= 300; ++k) v[i++] = 0.1 + h * k;
    for (int k = 1; k <= 300; ++k) v[i++] = 0.4 - h * k;
    while (i <= 3600) {
        v[i] = v[i - 1] + h;
        ++i;
    }
    return ContourTree(PathGrid(PathKind::bes3_pair_half, 0.0, h, v), ramp(3600, h));
}

ContourTree infinite_tree(Eigen::Index m, std::uint64_t seed, double horizon) {
    const auto pair = sample_bes3_pair(horizon, m, seed);
    return ContourTree(pair.first, pair.second);
}

}  // namespace

TEST_CASE("Events on hand-built contours") {
    const ContourTree flat(ramp(1000, 0.001), ramp(1000, 0.001));
    for (int n = 1; n <= 4; ++n) CHECK_FALSE(detect_event_E(flat, flat.root(), n, 0.1));

    const ContourTree t = bump_tree();
    for (int n = 2; n <= 5; ++n) CHECK(detect_event_E(t, t.root(), n, 0.5));
    for (int n = 4; n <= 5; ++n) CHECK(detect_event_E_tilde(t, t.root(), n, 0.5));
    CHECK_THROWS_AS(detect_event_E_tilde(t, t.root(), 2, 0.5), OutOfSafeRange);
    CHECK_FALSE(detect_event_E(t, t.root(), 6, 0.5));  // 4 alpha^6 < 0.1: the tent is not reached
    CHECK(detect_event_E_tilde(t, t.root(), 6, 0.5));
    CHECK(max_branching_diameter(t, t.root(), 0.2) == doctest::Approx(0.3));
    // From the tent apex the only branch is the spine stub below height 0.1.
    const auto apex = t.point(t.zero_index() + 400);
    CHECK(max_branching_diameter(t, apex, 0.35) == doctest::Approx(0.1));
}

TEST_CASE("Branching diameters agree with the exhaustive component oracle") {
    int compared = 0;
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        const ContourTree t = infinite_tree(128, 300 + seed, 2.0);
        const auto d = oracle::metric_of(t);
        std::mt19937_64 g(seed);
        std::uniform_int_distribution<Eigen::Index> pick(96, 160);
        for (int k = 0; k < 3; ++k) {
            const auto x = t.point(pick(g));
            const double safe = t.safe_ray_length(x);
            if (safe <= 0.0) continue;
            const auto y = t.ray_point(x, 0.5 * safe);
            const double len = t.dist(x, y);
            if (len > safe) continue;
            double ref = 0.0;
            for (const auto& c : oracle::components_off_segment(d, x.index, y.index, true))
                ref = std::max(ref, c.diameter);
            CHECK(max_branching_diameter(t, x, len) == doctest::Approx(ref).epsilon(1e-9));
            for (double thr : {0.5 * ref, ref * (1 - 1e-9), 1.5 * ref + 1e-3})
                CHECK((t.max_branching_diameter(x, len, thr) >= thr) == (ref >= thr));
            ++compared;
        }
    }
    CHECK(compared >= 25);
}

TEST_CASE("Spine extension serves rays past the anchor") {
    const ContourTree t = infinite_tree(1 << 12, 9, 1.0);
    const auto o = t.root();
    const double safe = t.safe_ray_length(o);
    CHECK_THROWS_AS(detect_event_E_tilde(t, o, 1, 0.25), OutOfSafeRange);
    const auto ext = spine_extension_for(t, {o}, 3, 0.25, 1);
    REQUIRE(ext.has_value());
    CHECK(ext->start == t.anchor_height());
    CHECK(ext->end >= t.anchor_height() + 8.0 - safe - 1e-12);
    CHECK(detect_event_E_tilde(t, o, 1, 0.25, &*ext));
    CHECK(max_branching_diameter(t, o, 8.0, &*ext) >= max_branching_diameter(t, o, safe));
    CHECK_FALSE(spine_extension_for(t, {o}, 3, 0.001, 1).has_value());
}

TEST_CASE("Spine forest height counts follow the excursion measure") {
    Rng rng = make_rng(12);
    const double L = 2.0, h = 0.25;
    std::vector<double> counts;
    for (int r = 0; r < 1000; ++r) {
        const auto f = sample_spine_forest(0.0, L, 0.1, rng);
        int c = 0;
        for (const auto& a : f.atoms) {
            CHECK(a.diameter >= a.height);
            CHECK(a.diameter <= 2 * a.height + 1e-12);
            c += a.height > h;
        }
        counts.push_back(c);
    }
    double mean = 0.0, var = 0.0;
    for (double c : counts) mean += c;
    mean /= counts.size();
    for (double c : counts) var += (c - mean) * (c - mean);
    const double se = std::sqrt(var / (counts.size() - 1) / counts.size());
    // 2 L N(sup > h) = L / h; grid maxima undershoot by about 1%.
    CHECK(std::abs(mean - L / h) < 3 * se + 0.02 * L / h);
}

TEST_CASE("Excursion tree diameter") {
    Eigen::VectorXd tent(5);
    tent << 0, 1, 2, 1, 0;
    CHECK(excursion_tree_diameter(tent) == doctest::Approx(2.0));
    Eigen::VectorXd two(7);
    two << 0, 1, 0.5, 1.5, 0.2, 0.6, 0;
    // leaves at 1.5 and 0.6 meet at 0.2
    CHECK(excursion_tree_diameter(two) == doctest::Approx(1.7));
}

TEST_CASE("Weight table values and invariants") {
    const ContourTree t = infinite_tree(1 << 16, 21, 4.0);
    // Below a few grid increments of height every grid time carries a hair of
    // size ~sqrt(h), so the lemma checks only run at resolved thresholds.
    const double resolution = 2.0 * std::sqrt(t.step());
    const auto pts = ball_carrier(t, 1.0, 250, 21);
    for (double alpha : {0.1, 0.25, 0.5}) {
        const double eta = default_eta(alpha);
        const auto w = weights_for(t, pts, 4, alpha, eta, 3);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CHECK(w.log_varpi(i, 0) == 0.0);
            for (int n = 1; n <= 4; ++n) {
                const auto& e = w.at(i, n);
                CHECK((e.sigma == 0.0 || e.sigma == 32 * alpha));
                CHECK((e.varsigma == eta || e.varsigma == eta + 64 * alpha));
                CHECK((!e.E || e.E_tilde));
                CHECK(e.varrho >= eta);
                CHECK(e.log_varpi <= n * std::log(eta + 64 * alpha) + 1e-9);
                CHECK(e.log_varpi == doctest::Approx(w.log_varpi(i, n - 1) + std::log(e.varsigma)));
            }
        }
        if (alpha == 0.1) {
            CHECK(eta == doctest::Approx(1e-100));
            CHECK(32 * alpha == doctest::Approx(3.2));
        }
        for (int n = 1; n <= 4; ++n) {
            const auto rho = check_varrho_varsigma(t, w, n);
            const auto rob = check_event_robustness(t, w, n);
            if (std::pow(alpha, n - 1) / 4.0 < resolution) {
                MESSAGE("unresolved alpha " << alpha << " n " << n << ": " << rho.violations << " + "
                                            << rob.violations << " violations");
                continue;
            }
            CHECK(rho.pairs > 0);
            CHECK(rho.violations == 0);
            CHECK(rob.violations == 0);
        }
    }
}

TEST_CASE("Weight table export") {
    const ContourTree t = infinite_tree(1 << 12, 2, 4.0);
    const auto pts = ball_carrier(t, 1.0, 20, 2);
    const auto w = weights_for(t, pts, 3, 0.25, std::pow(0.25, 3));
    std::ostringstream out;
    write_weight_table(out, w);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "grid_time level E E_tilde sigma varrho varsigma log_varpi");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == static_cast<int>(pts.size()) * 3);
}

TEST_CASE("Admissibility holds on generated ball chains") {
    const ContourTree t = infinite_tree(1 << 15, 31, 4.0);
    for (auto [alpha, n] : {std::pair{0.25, 2}, std::pair{0.2, 2}}) {
        const auto rep = admissibility_harness(t, alpha, n, 100, 5);
        CHECK(rep.instances > 25);
        CHECK(rep.failures == 0);
        CHECK(rep.min_sum >= 1.0);
        MESSAGE("alpha " << alpha << " n " << n << ": " << rep.instances << " instances, " << rep.rejected << " rejected, min sum " << rep.min_sum);
    }
}

TEST_CASE("Filling machinery clamps and telescopes") {
    const ContourTree t = infinite_tree(1 << 14, 41, 8.0);
    const auto carrier = ball_carrier(t, 1.0, 300, 41);
    const double alpha = 0.1, eta = 1e-100;
    const auto nets = build_nested_nets(t, carrier, alpha, 2, 41);
    const auto g = build_filling_graph(t, nets);
    auto w = weights_for(t, carrier, 2, alpha, eta, 41);
    const auto fw = filling_machinery(t, g, w, eta);
    REQUIRE(fw.vertices.size() == g.vertices.size());
    for (std::size_t v = 1; v < g.vertices.size(); ++v) {
        const auto& x = fw.vertices[v];
        CHECK(g.vertices[x.parent].level == g.vertices[v].level - 1);
        CHECK(x.mu == std::clamp(x.nu, eta, 1 - eta));
        CHECK(x.rho_assign == x.mu);
        CHECK(x.log_pi == doctest::Approx(fw.vertices[x.parent].log_pi + std::log(x.rho_assign)));
        for (std::size_t p = g.level_offset[g.vertices[v].level - 1]; p < x.parent; ++p)
            CHECK(t.dist(g.vertices[v].point, g.vertices[p].point) > t.dist(g.vertices[v].point, g.vertices[x.parent].point));
    }

    for (auto& e : w.entries) e.sigma = 0.0;
    const auto zero = filling_machinery(t, g, w, eta);
    for (std::size_t v = 1; v < g.vertices.size(); ++v) {
        CHECK(zero.vertices[v].nu == 0.0);
        CHECK(zero.vertices[v].mu == eta);
    }
    w.entries[0].sigma = 32 * alpha;  // first carrier point at level 1
    const auto one = filling_machinery(t, g, w, eta);
    for (std::size_t v = g.level_offset[1]; v < g.level_offset[2]; ++v)
        if (g.vertices[v].point == w.points[0]) {
            CHECK(one.vertices[v].nu == doctest::Approx(6.4));
            CHECK(one.vertices[v].mu == 1 - eta);
        }
}
