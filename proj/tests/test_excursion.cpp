#include "doctest.h"

#include "crt/errors.hpp"
#include "crt/excursion.hpp"
#include "stats.hpp"

#include <cmath>
#include <numbers>

using namespace crt;

namespace {

double sup_of(const PathGrid& p) { return p.values().maxCoeff(); }

double sup_mean_excursion(Eigen::Index m, int samples, std::uint64_t seed, double* se) {
    Rng rng = make_rng(seed);
    std::vector<double> s(samples);
    for (auto& x : s) x = normalized_excursion_values(m, rng).maxCoeff();
    *se = stats::std_error(s);
    return stats::mean(s);
}

// Discrete maximum of Brownian motion with mesh h undershoots the continuous one
// by about -zeta(1/2)/sqrt(2 pi) * sqrt(h). The Vervaat excursion sup is a
// discrete max minus a discrete min, so it pays this twice.
constexpr double kMaxGridOffset = 2 * 0.5825971579390106;

}  // namespace

TEST_CASE("Vervaat transform yields a positive excursion") {
    Rng rng = make_rng(11);
    for (int r = 0; r < 50; ++r) {
        const auto bridge = sample_brownian_bridge(257, rng);
        CHECK(bridge[0] == 0.0);
        CHECK(bridge[257] == 0.0);
        const auto v = vervaat_transform(bridge);
        CHECK(v.values[0] == 0.0);
        CHECK(v.values[257] == 0.0);
        CHECK(v.values.segment(1, 256).minCoeff() > 0.0);
        CHECK(v.argmin >= 0);
        CHECK(v.argmin <= 257);
    }
    const auto e = sample_normalized_excursion(1024, 3);
    CHECK(e.kind() == PathKind::excursion);
    CHECK(e.size() == 1025);
    CHECK(e.step() == doctest::Approx(1.0 / 1024));
    CHECK(e == sample_normalized_excursion(1024, 3));
    CHECK_FALSE(e == sample_normalized_excursion(1024, 4));
    CHECK_THROWS_AS(sample_normalized_excursion(0, 1), InvalidArgument);
}

TEST_CASE("Excursion sup mean is consistent across grid refinements") {
    double se_coarse = 0.0, se_fine = 0.0;
    const double coarse = sup_mean_excursion(1 << 10, 100000, 21, &se_coarse);
    const double fine = sup_mean_excursion(1 << 16, 4000, 22, &se_fine);
    const double c_coarse = coarse + kMaxGridOffset / std::sqrt(1024.0);
    const double c_fine = fine + kMaxGridOffset / std::sqrt(65536.0);
    const double se = std::hypot(se_coarse, se_fine);
    CHECK(std::abs(c_coarse - c_fine) < 3.0 * se);
    // E sup of the normalized excursion is sqrt(pi / 2).
    CHECK(std::abs(c_coarse - std::sqrt(std::numbers::pi / 2)) < 3.0 * se_coarse + 2e-3);
}

TEST_CASE("BES(3) endpoint mean matches the chi-3 mean") {
    // E|Z| for Z standard 3-d Gaussian, by trapezoidal integration of r * chi3(r).
    double ref = 0.0;
    const double h = 1e-4;
    for (int k = 0; k <= 200000; ++k) {
        const double r = k * h;
        const double f = r * std::sqrt(2.0 / std::numbers::pi) * r * r * std::exp(-r * r / 2);
        ref += (k == 0 || k == 200000) ? f / 2 : f;
    }
    ref *= h;
    CHECK(ref == doctest::Approx(2.0 * std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-8));

    const double T = 2.0;
    std::vector<double> end(20000);
    for (std::size_t r = 0; r < end.size(); ++r) {
        const auto pair = sample_bes3_pair(T, 4, 1000 + r);
        CHECK(pair.first.kind() == PathKind::bes3_pair_half);
        end[r] = pair.first[4];
    }
    const double mean = stats::mean(end);
    CHECK(std::abs(mean - ref * std::sqrt(T)) < 3.0 * stats::std_error(end));
}

TEST_CASE("Re-rooting a monotone contour subtracts the pivot value") {
    Eigen::VectorXd up = Eigen::VectorXd::LinSpaced(9, 0.0, 2.0);
    Eigen::VectorXd down = Eigen::VectorXd::LinSpaced(9, 0.0, 1.0);
    const std::pair<PathGrid, PathGrid> pair{PathGrid(PathKind::bes3_pair_half, 0.0, 0.25, up),
                                             PathGrid(PathKind::bes3_pair_half, 0.0, 0.25, down)};
    const auto rr = reroot_transform(pair, 1.0);
    CHECK(rr.pivot == doctest::Approx(1.0));
    REQUIRE(rr.forward.size() == 5);
    for (Eigen::Index s = 0; s < rr.forward.size(); ++s)
        CHECK(rr.forward[s] == doctest::Approx(up[4 + s] - up[4]));
    // s <= t: R_{t-s} - 2 inf_{[t-s,t]} R + R_t = R_t - R_{t-s} for increasing R.
    for (Eigen::Index s = 0; s <= 4; ++s)
        CHECK(rr.backward[s] == doctest::Approx(up[4] - up[4 - s]));
    CHECK(rr.backward.size() == 4 + 9);
    CHECK_THROWS_AS(reroot_transform(pair, 0.0), InvalidArgument);
    CHECK_THROWS_AS(reroot_transform(pair, 2.0), InvalidArgument);
}

TEST_CASE("Re-rooted pair has the law of the original pair") {
    // Windows of length w after re-rooting at t need R on [0, t + w] and the
    // backward half on [0, w - t]; infima past the horizon are drawn exactly.
    const double t = 0.5, w = 0.75, T = t + w;
    const Eigen::Index m = 4096;
    const double step = T / m;
    const auto wi = static_cast<Eigen::Index>(std::llround(w / step));
    const int n = 10000;
    Rng rng = make_rng(404);
    std::vector<double> orig_f, orig_b, re_f, re_b;
    for (int r = 0; r < n; ++r) {
        const auto a = sample_bes3_pair(wi * step, wi, 5000 + 2 * r);
        orig_f.push_back(a.first.values().maxCoeff());
        orig_b.push_back(a.second.values().maxCoeff());
        const auto b = sample_bes3_pair(T, m, 5001 + 2 * r);
        const std::pair<double, double> beyond{bes3_future_infimum(b.first[m], rng),
                                               bes3_future_infimum(b.second[m], rng)};
        const auto rr = reroot_transform(b, t, beyond);
        re_f.push_back(rr.forward.values().head(wi + 1).maxCoeff());
        re_b.push_back(rr.backward.values().head(wi + 1).maxCoeff());
    }
    const double pf = stats::ks_pvalue(stats::ks_statistic(orig_f, re_f), n, n);
    const double pb = stats::ks_pvalue(stats::ks_statistic(orig_b, re_b), n, n);
    CHECK(pf > 1e-3);
    CHECK(pb > 1e-3);
}

TEST_CASE("Ito excursion durations follow the 1/sqrt(2 pi a) tail") {
    ItoOptions opts;
    opts.grid = 16;
    opts.a_max_factor = 1e12;
    const double a_min = 0.01;
    Rng rng = make_rng(77);
    int above = 0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        const auto e = sample_ito_excursion(a_min, rng, opts);
        CHECK(e.duration >= a_min);
        CHECK(e.path.horizon() == doctest::Approx(e.duration));
        if (e.duration > 4 * a_min) ++above;
    }
    const double p = static_cast<double>(above) / n;
    CHECK(std::abs(p - 0.5) < 3.0 * std::sqrt(0.25 / n));
    CHECK(ito_duration_tail(1.0) == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)));
    CHECK(ito_discarded_mass(ItoOptions{}) == doctest::Approx(1e-2));
}

TEST_CASE("Ito excursions are Brownian-scaled normalized excursions") {
    ItoOptions opts;
    opts.grid = 512;
    Rng rng = make_rng(91);
    std::vector<double> scaled, unit;
    for (int k = 0; k < 4000; ++k) {
        const auto e = sample_ito_excursion(0.05, rng, opts);
        scaled.push_back(sup_of(e.path) / std::sqrt(e.duration));
        unit.push_back(normalized_excursion_values(512, rng).maxCoeff());
    }
    CHECK(stats::ks_pvalue(stats::ks_statistic(scaled, unit), 4000, 4000) > 1e-3);
}

TEST_CASE("Spine forest counts and attach times") {
    ItoOptions opts;
    opts.grid = 1024;
    opts.a_max_factor = 1e10;  // tall trees need long durations
    const double h = 0.5, L = 1.0;
    Rng rng = make_rng(5);
    std::vector<double> counts;
    std::vector<double> attach;
    for (int r = 0; r < 2000; ++r) {
        const auto forest = spine_ppp_forest(L, 1e-4, rng, opts);
        int c = 0;
        for (const auto& atom : forest) {
            CHECK(atom.path.kind() == PathKind::spine_forest);
            CHECK(atom.path.origin_time() == atom.attach_time);
            if (sup_of(atom.path) > h) ++c;
            if (attach.size() < 10000) attach.push_back(atom.attach_time);
        }
        counts.push_back(c);
    }
    // Expected count of trees higher than h is L / h; grid maxima bias it slightly low.
    CHECK(std::abs(stats::mean(counts) - L / h) < 3.0 * stats::std_error(counts) + 0.03);

    REQUIRE(attach.size() == 10000);
    std::vector<int> bins(10, 0);
    for (double a : attach) {
        REQUIRE(a >= 0.0);
        REQUIRE(a <= L);
        ++bins[std::min(9, static_cast<int>(a * 10))];
    }
    double chi2 = 0.0;
    for (int b : bins) chi2 += (b - 1000.0) * (b - 1000.0) / 1000.0;
    CHECK(chi2 < 27.88);  // chi-square, 9 dof, level 1e-3

    double total = 0.0;
    for (int r = 0; r < 1000; ++r) total += spine_ppp_forest(L, 1e6, rng, opts).size();
    CHECK(total / 1000 < 0.01);
}
