#include "crt/analysis.hpp"

#include "crt/errors.hpp"
#include "crt/excursion.hpp"
#include "crt/filling_net.hpp"
#include "crt/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace crt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Experiment tags for replica_seed.
enum : std::uint64_t { kBallVolume = 1, kTail = 2, kSubtree = 3, kEvent = 4, kMoment = 5, kDimension = 6 };

double log_add(double a, double b) {
    if (a < b) std::swap(a, b);
    return b == -kInf ? a : a + std::log1p(std::exp(b - a));
}

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace

double RunConfig::eta() const { return std::pow(alpha, eta_exponent); }

void RunConfig::validate() const {
    auto fail = [](const std::string& what) { throw InvalidArgument("config: " + what); };
    if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0, 1)");
    if (!(eta_exponent > 0.0) || !(eta() < 0.5) || !(eta() > 0.0)) fail("eta_exponent must give eta in (0, 1/2)");
    if (!(p > 1.0 && p < 2.0)) fail("p must lie in (1, 2)");
    if (!(zeta > 0.0)) fail("zeta must be positive");
    if (grid_size < 16) fail("grid_size must be >= 16");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) fail("horizon must be positive");
    if (n_max < 1) fail("n_max must be >= 1");
    if (carrier_cap < 1) fail("carrier_cap must be >= 1");
    if (replicas < 1) fail("replicas must be >= 1");
    if (output_dir.empty()) fail("output_dir must be set");
}

std::uint64_t replica_seed(std::uint64_t master, std::uint64_t experiment, std::uint64_t r) {
    return derive_seed(derive_seed(master, experiment), r);
}

void finalize(StatReport& r) {
    const auto n = static_cast<double>(r.values.size());
    r.mean = n > 0 ? std::accumulate(r.values.begin(), r.values.end(), 0.0) / n : 0.0;
    double ss = 0.0;
    for (double v : r.values) ss += (v - r.mean) * (v - r.mean);
    r.se = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
    r.pass = passes(r);
}

bool passes(const StatReport& r) {
    return r.comparison == Comparison::le ? r.statistic <= r.threshold : r.statistic >= r.threshold;
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw InvalidArgument("slope fit needs >= 2 paired values");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0) throw InvalidArgument("slope fit: degenerate abscissae");
    return sxy / sxx;
}

void check_scales(const std::vector<double>& scales) {
    if (scales.size() < 3) throw InvalidArgument("box counting needs at least three scales");
    for (double e : scales)
        if (!(e > 0.0) || !std::isfinite(e)) throw InvalidArgument("scales must be positive and finite");
    auto sorted = scales;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InvalidArgument("scales must be distinct");
    if (sorted.back() < 4.0 * sorted.front()) throw InvalidArgument("scales must span at least two octaves");
}

namespace {

BoxCount finish(const std::vector<double>& scales, std::vector<std::size_t> counts) {
    BoxCount b{scales, std::move(counts), 0.0};
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < scales.size(); ++k) {
        xs.push_back(-std::log(scales[k]));
        ys.push_back(std::log(static_cast<double>(b.counts[k])));
    }
    b.slope = fit_slope(xs, ys);
    return b;
}

}  // namespace

BoxCount box_dimension(std::size_t n, const std::function<double(std::size_t, std::size_t)>& dist,
                       const std::vector<double>& scales) {
    check_scales(scales);
    if (n == 0) throw InvalidArgument("box counting needs points");
    std::vector<std::size_t> counts;
    std::vector<std::size_t> chosen;
    for (double eps : scales) {
        chosen.clear();
        for (std::size_t i = 0; i < n; ++i) {
            bool covered = false;
            for (auto c : chosen)
                if (dist(i, c) < eps) {
                    covered = true;
                    break;
                }
            if (!covered) chosen.push_back(i);
        }
        counts.push_back(chosen.size());
    }
    return finish(scales, std::move(counts));
}

BoxCount box_dimension(const ContourTree& tree, const std::vector<double>& scales) {
    check_scales(scales);
    std::vector<std::size_t> counts;
    std::vector<char> covered(static_cast<std::size_t>(tree.size()));
    for (double eps : scales) {
        std::fill(covered.begin(), covered.end(), 0);
        std::size_t count = 0;
        for (Eigen::Index i = 0; i < tree.size(); ++i) {
            if (covered[i]) continue;
            ++count;
            const auto [lo, hi] = tree.ball_scan_range(tree.point(i), eps);
            for (Eigen::Index u = lo; u <= hi; ++u)
                if (!covered[u] && tree.dist_idx(u, i) < eps) covered[u] = 1;
        }
        counts.push_back(count);
    }
    return finish(scales, std::move(counts));
}

BoxCount box_dimension(const ChainMetricTable& table, const std::vector<double>& scales) {
    check_scales(scales);
    const Eigen::Index n = table.log_D.rows();
    if (n == 0) throw InvalidArgument("box counting needs points");
    std::vector<std::size_t> counts;
    std::vector<Eigen::Index> chosen;
    for (double eps : scales) {
        const double le = std::log(eps);
        chosen.clear();
        for (Eigen::Index i = 0; i < n; ++i) {
            bool covered = false;
            for (auto c : chosen)
                if (table.log_D(i, c) < le) {
                    covered = true;
                    break;
                }
            if (!covered) chosen.push_back(i);
        }
        counts.push_back(chosen.size());
    }
    return finish(scales, std::move(counts));
}

ContourTree finite_tree(std::int64_t steps, std::uint64_t seed) {
    return ContourTree(sample_normalized_excursion(steps, seed));
}

ContourTree infinite_tree(std::int64_t steps, double horizon, std::uint64_t seed) {
    const auto pair = sample_bes3_pair(horizon, steps, seed);
    return ContourTree(pair.first, pair.second);
}

ContourTree infinite_tree_covering(std::int64_t steps, double horizon, double radius, std::uint64_t seed,
                                   std::size_t* redrawn) {
    for (std::uint64_t k = 0; k < 100; ++k) {
        auto tree = infinite_tree(steps, horizon, k == 0 ? seed : derive_seed(seed, k));
        if (tree.anchor_height() > radius) return tree;
        if (redrawn) ++*redrawn;
    }
    throw InvalidState("no draw covers the ball; horizon too short");
}

StatReport verify_ball_volume(const RunConfig& cfg, double zeta, const std::vector<double>& eps_list) {
    if (!(zeta > 0.0)) throw InvalidArgument("zeta must be positive");
    if (eps_list.empty()) throw InvalidArgument("empty eps list");
    StatReport rep;
    rep.name = "ball_volume";
    rep.statistic_rule = "fraction of (replica, eps) cells with min ratio >= 1";
    rep.comparison = Comparison::ge;
    rep.threshold = 0.95;
    rep.provenance = "KNOB";
    double worst = kInf, redrawn = 0.0;
    for (std::int64_t r = 0; r < cfg.replicas; ++r) {
        const auto seed = replica_seed(cfg.master_seed, kBallVolume, r);
        std::size_t redraws = 0;
        const auto tree = infinite_tree_covering(cfg.grid_size, cfg.horizon, 1.0, seed, &redraws);
        redrawn += static_cast<double>(redraws);
        const auto carrier = ball_carrier(tree, 1.0, cfg.carrier_cap, seed);
        for (double eps : eps_list) {
            double m = kInf;
            for (const auto& z : carrier) m = std::min(m, tree.ball_mass(z, eps) / std::pow(eps, 2.0 + zeta));
            worst = std::min(worst, m);
            rep.values.push_back(m >= 1.0 ? 1.0 : 0.0);
        }
    }
    finalize(rep);
    rep.statistic = rep.mean;
    rep.extras = {{"min_ratio", worst}, {"zeta", zeta}, {"redrawn", redrawn}};
    rep.pass = passes(rep);
    return rep;
}

std::vector<double> sample_ito_sups(std::size_t n, double a_min, std::uint64_t seed) {
    ItoOptions opts;
    opts.a_max_factor = 1e8;
    auto rng = make_rng(seed);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_ito_excursion(a_min, rng, opts).path.values().maxCoeff());
    return out;
}

StatReport verify_tail_law(const std::vector<double>& sups, const std::vector<double>& r_list, double a_min) {
    if (!(a_min > 0.0)) throw InvalidArgument("a_min must be positive");
    StatReport rep;
    rep.name = "ito_tail";
    rep.statistic_rule = "max(max |ratio - 2| / (3 SE), |profile slope + 1| / 0.1)";
    rep.comparison = Comparison::le;
    rep.threshold = 1.0;
    rep.provenance = "PAPER";
    auto sorted = sups;
    std::sort(sorted.begin(), sorted.end());
    auto tail = [&](double r) {
        return static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), r));
    };
    const double floor = 8.0 * std::sqrt(a_min);
    std::vector<double> usable, xs, ys;
    double flagged = 0.0;
    for (double r : r_list) {
        if (r < floor) {
            ++flagged;
            continue;
        }
        usable.push_back(r);
        if (tail(r) > 0) {
            xs.push_back(std::log(r));
            ys.push_back(std::log(tail(r)));
        }
    }
    double worst = 0.0;
    for (double r : usable) {
        const bool paired = std::any_of(usable.begin(), usable.end(),
                                        [&](double u) { return std::abs(u - 2.0 * r) <= 1e-12 * r; });
        if (!paired) continue;
        const double c1 = tail(r), c2 = tail(2.0 * r);
        if (c2 == 0.0) throw InvalidArgument("tail law: no samples above 2r = " + std::to_string(2.0 * r));
        const double ratio = c1 / c2;
        const double q = c2 / c1;
        const double se = ratio * std::sqrt((1.0 - q) / (c1 * q));
        rep.values.push_back(ratio);
        worst = std::max(worst, std::abs(ratio - 2.0) / (3.0 * se));
    }
    if (rep.values.empty()) throw InvalidArgument("tail law: no usable (r, 2r) pair");
    const double slope = xs.size() >= 2 ? fit_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();
    finalize(rep);
    rep.statistic = std::max(worst, std::abs(slope + 1.0) / 0.1);
    if (std::isnan(slope)) rep.statistic = kInf;
    rep.extras = {{"profile_slope", slope}, {"flagged_scales", flagged}, {"samples", double(sups.size())}};
    rep.pass = passes(rep);
    return rep;
}

StatReport verify_subtree_probability(const RunConfig& cfg, double s, double t, double r, std::size_t replicas) {
    if (!(s >= 0.0 && t > s && r > 0.0)) throw InvalidArgument("need 0 <= s < t and r > 0");
    StatReport rep;
    rep.name = "subtree_probability";
    rep.statistic_rule = "mean - 3 SE";
    rep.comparison = Comparison::le;
    rep.threshold = 1.0 - std::exp(-2.0 * (t - s) / r);
    rep.provenance = "PAPER";
    std::size_t redrawn = 0;
    for (std::size_t i = 0; i < replicas; ++i) {
        const auto tree = stage("simulate", [&] {
            return infinite_tree_covering(cfg.grid_size, cfg.horizon, t, replica_seed(cfg.master_seed, kSubtree, i),
                                          &redrawn);
        });
        const auto o = tree.root();
        const auto x = s > 0.0 ? tree.ray_point(o, s) : o;
        const double len = t - tree.dist(o, x);
        rep.values.push_back(tree.max_branching_diameter(x, len, r) >= r ? 1.0 : 0.0);
    }
    finalize(rep);
    rep.statistic = rep.mean - 3.0 * rep.se;
    rep.extras = {{"bound", rep.threshold}, {"redrawn", double(redrawn)}, {"t_minus_s", t - s}, {"r", r}};
    rep.pass = passes(rep);
    return rep;
}

std::vector<char> sample_event_tilde_levels(double alpha, int n_max, Rng& rng) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (n_max < 1) throw InvalidArgument("n_max must be >= 1");
    // Region j covers attach heights [32 alpha^(j+1), 32 alpha^j) and only
    // serves levels <= j; region n_max + 1 is [0, 32 alpha^(n_max+1)).
    std::vector<double> region_max(static_cast<std::size_t>(n_max) + 2, 0.0);
    for (int j = 1; j <= n_max + 1; ++j) {
        const int level = std::min(j, n_max);
        const double hi = 32.0 * std::pow(alpha, j);
        const double lo = j <= n_max ? 32.0 * std::pow(alpha, j + 1) : 0.0;
        const auto f = sample_spine_forest(lo, hi, std::pow(alpha, level - 1) / 4.0, rng);
        for (const auto& a : f.atoms) region_max[j] = std::max(region_max[j], a.diameter);
    }
    std::vector<char> out(static_cast<std::size_t>(n_max));
    double suffix = region_max[n_max + 1];
    for (int n = n_max; n >= 1; --n) {
        suffix = std::max(suffix, region_max[n]);
        out[n - 1] = suffix >= std::pow(alpha, n - 1) / 4.0;
    }
    return out;
}

std::vector<StatReport> verify_event_probability(double alpha, const std::vector<int>& levels, std::size_t replicas,
                                                 std::uint64_t seed) {
    if (levels.empty()) throw InvalidArgument("no levels given");
    if (*std::min_element(levels.begin(), levels.end()) < 1) throw InvalidArgument("levels must be >= 1");
    const int top = *std::max_element(levels.begin(), levels.end());
    std::vector<StatReport> reps(levels.size());
    for (std::size_t r = 0; r < replicas; ++r) {
        auto rng = make_rng(replica_seed(seed, kEvent, r));
        const auto flags = sample_event_tilde_levels(alpha, top, rng);
        for (std::size_t k = 0; k < levels.size(); ++k) reps[k].values.push_back(flags[levels[k] - 1] ? 1.0 : 0.0);
    }
    for (std::size_t k = 0; k < levels.size(); ++k) {
        auto& rep = reps[k];
        rep.name = "event_probability_n" + std::to_string(levels[k]);
        rep.statistic_rule = "mean - 3 SE";
        rep.comparison = Comparison::le;
        rep.threshold = 256.0 * alpha;
        rep.provenance = "PAPER";
        finalize(rep);
        rep.statistic = rep.mean - 3.0 * rep.se;
        rep.extras = {{"alpha", alpha}, {"n", double(levels[k])}};
        rep.pass = passes(rep);
    }
    return reps;
}

MomentReport verify_expectation_bound(double alpha, double eta, double p, const std::vector<int>& levels,
                                      std::size_t replicas, std::uint64_t seed) {
    if (levels.size() < 2) throw InvalidArgument("moment fit needs at least two levels");
    if (!(eta > 0.0 && eta < 0.5)) throw InvalidArgument("eta must lie in (0, 1/2)");
    if (replicas == 0) throw InvalidArgument("need replicas");
    const int top = *std::max_element(levels.begin(), levels.end());
    if (*std::min_element(levels.begin(), levels.end()) < 0) throw InvalidArgument("levels must be >= 0");
    std::vector<double> acc(static_cast<std::size_t>(top) + 1, -kInf);
    for (std::size_t r = 0; r < replicas; ++r) {
        auto rng = make_rng(replica_seed(seed, kMoment, r));
        const auto flags = top > 0 ? sample_event_tilde_levels(alpha, top, rng) : std::vector<char>{};
        double log_varpi = 0.0;
        for (int n = 1; n <= top; ++n) {
            log_varpi += std::log(eta + (flags[n - 1] ? 64.0 * alpha : 0.0));
            acc[n] = log_add(acc[n], p * log_varpi);
        }
    }
    MomentReport rep;
    rep.levels = levels;
    std::vector<double> xs;
    for (int n : levels) {
        // varpi(o, 0) = 1 exactly
        rep.log_mean.push_back(n == 0 ? 0.0 : acc[n] - std::log(static_cast<double>(replicas)));
        xs.push_back(n);
    }
    rep.slope = fit_slope(xs, rep.log_mean);
    rep.log_c_fit = rep.slope - (p + 1.0) * std::log(alpha);
    auto& s = rep.stat;
    s.name = "moment_slope";
    s.values = rep.log_mean;
    s.statistic_rule = "least-squares slope of log mean varpi^p against n";
    s.comparison = Comparison::le;
    s.threshold = -1.0;
    s.provenance = "DERIVED";
    finalize(s);
    s.statistic = rep.slope;
    s.extras = {{"alpha", alpha}, {"eta", eta}, {"p", p}, {"log_c_fit", rep.log_c_fit}};
    s.pass = passes(s);
    return rep;
}

DimensionReport dimension_experiment(const RunConfig& cfg, const std::vector<double>& scales, bool null_weights) {
    cfg.validate();
    check_scales(scales);
    DimensionReport rep;
    rep.scales = scales;
    const double eta = cfg.eta();
    rep.snowflake = std::log(eta) / std::log(cfg.alpha);
    std::vector<double> d_scales;
    for (double e : scales) d_scales.push_back(std::pow(e, rep.snowflake));
    const int n_max = static_cast<int>(cfg.n_max);

    std::vector<double> orig, def;
    for (std::int64_t r = 0; r < cfg.replicas; ++r) {
        DimensionReplica out;
        out.seed = replica_seed(cfg.master_seed, kDimension, r);
        const auto tree = stage("simulate", [&] {
            return infinite_tree_covering(cfg.grid_size, cfg.horizon, 1.0, out.seed, &out.redrawn);
        });
        const auto carrier = stage("nets", [&] { return ball_carrier(tree, 1.0, cfg.carrier_cap, out.seed); });
        out.carrier = carrier.size();
        const auto graph = stage("nets", [&] {
            return build_filling_graph(tree, build_nested_nets(tree, carrier, cfg.alpha, n_max, out.seed));
        });
        auto weights = stage("weights", [&] { return weights_for(tree, carrier, n_max, cfg.alpha, eta, out.seed); });
        if (null_weights)
            for (auto& e : weights.entries) {
                e.sigma = 0.0;
                e.varrho = eta;
            }
        const auto table = stage("deform", [&] {
            const auto fw = filling_machinery(tree, graph, weights, eta);
            return chain_metrize(carrier, quasimetric_table(tree, graph, fw, carrier));
        });
        stage("dimension", [&] {
            out.dim_original =
                box_dimension(carrier.size(), [&](std::size_t a, std::size_t b) { return tree.dist(carrier[a], carrier[b]); },
                              scales)
                    .slope;
            out.dim_deformed = box_dimension(table, d_scales).slope * rep.snowflake;
            for (int n = 0; n <= n_max; ++n) out.main_sum_log.push_back(main_sum_log(graph, weights, n, cfg.p));
            return 0;
        });
        orig.push_back(out.dim_original);
        def.push_back(out.dim_deformed);
        rep.replicas.push_back(std::move(out));
    }
    StatReport a, b;
    a.values = orig;
    b.values = def;
    finalize(a);
    finalize(b);
    rep.mean_original = a.mean;
    rep.se_original = a.se;
    rep.mean_deformed = b.mean;
    rep.se_deformed = b.se;
    return rep;
}

}  // namespace crt
