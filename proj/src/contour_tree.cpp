#include "crt/contour_tree.hpp"

#include "crt/errors.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>

namespace crt {

namespace {

std::atomic<std::uint64_t> next_tree_id{1};

// absolute slack for exact-identity tests (on-segment, tree-equal roots)
constexpr double kIdentityEps = 1e-10;

}  // namespace

ContourTree::ContourTree(const PathGrid& excursion)
    : mode_(TreeMode::finite), id_(next_tree_id++), step_(excursion.step()), values_(excursion.values()) {
    if (excursion.kind() == PathKind::bes3_pair_half)
        throw InvalidArgument("finite ContourTree needs an excursion contour");
    zero_ = 0;
    anchor_height_ = std::numeric_limits<double>::infinity();
    build();
}

ContourTree::ContourTree(const PathGrid& forward, const PathGrid& backward, double safety_fraction)
    : mode_(TreeMode::two_sided), id_(next_tree_id++), step_(forward.step()) {
    if (forward.step() != backward.step() || forward.size() != backward.size())
        throw InvalidArgument("two-sided ContourTree needs matching halves");
    if (!(safety_fraction > 0.0 && safety_fraction < 1.0))
        throw InvalidArgument("safety fraction must lie in (0, 1)");
    const Eigen::Index m = forward.size() - 1;
    zero_ = m;
    values_.resize(2 * m + 1);
    values_.head(m + 1) = backward.values().reverse();
    values_.tail(m + 1) = forward.values();
    build();

    const Eigen::Index n = values_.size();
    const Eigen::Index w = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(safety_fraction * m));
    anchor_height_ = std::min(values_.tail(w).minCoeff(), values_.head(w).minCoeff());
    const double* first = suffix_min_.data() + zero_;
    const double* last = suffix_min_.data() + n;
    const auto u = static_cast<Eigen::Index>(std::lower_bound(first, last, anchor_height_) - suffix_min_.data());
    anchor_index_ = range_argmin(std::min(u, n - 1), n - 1);
}

void ContourTree::build() {
    const Eigen::Index n = values_.size();
    prefix_min_.resize(n);
    suffix_min_.resize(n);
    prefix_min_[0] = values_[0];
    for (Eigen::Index i = 1; i < n; ++i) prefix_min_[i] = std::min(prefix_min_[i - 1], values_[i]);
    suffix_min_[n - 1] = values_[n - 1];
    for (Eigen::Index i = n - 1; i-- > 0;) suffix_min_[i] = std::min(suffix_min_[i + 1], values_[i]);

    if (n > 1) {
        const auto d = values_.tail(n - 1) - values_.head(n - 1);
        tol_eq_ = 2.0 * d.cwiseAbs().maxCoeff();
    }

    // doubling table of argmins, ties to the lower index
    const int levels = std::bit_width(static_cast<std::uint64_t>(n));
    sparse_.assign(static_cast<std::size_t>(levels), {});
    sparse_[0].resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) sparse_[0][static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i);
    for (int k = 1; k < levels; ++k) {
        const Eigen::Index half = Eigen::Index{1} << (k - 1);
        const Eigen::Index count = n - (Eigen::Index{1} << k) + 1;
        auto& row = sparse_[static_cast<std::size_t>(k)];
        const auto& prev = sparse_[static_cast<std::size_t>(k - 1)];
        row.resize(static_cast<std::size_t>(std::max<Eigen::Index>(count, 0)));
        for (Eigen::Index i = 0; i < count; ++i) {
            const auto a = prev[static_cast<std::size_t>(i)];
            const auto b = prev[static_cast<std::size_t>(i + half)];
            row[static_cast<std::size_t>(i)] = values_[b] < values_[a] ? b : a;
        }
    }
}

Eigen::Index ContourTree::range_argmin(Eigen::Index i, Eigen::Index j) const {
    if (i > j) std::swap(i, j);
    const int k = std::bit_width(static_cast<std::uint64_t>(j - i + 1)) - 1;
    const auto& row = sparse_[static_cast<std::size_t>(k)];
    const auto a = row[static_cast<std::size_t>(i)];
    const auto b = row[static_cast<std::size_t>(j - (Eigen::Index{1} << k) + 1)];
    return values_[b] < values_[a] ? b : a;
}

TreePoint ContourTree::point(Eigen::Index index) const {
    if (index < 0 || index >= size()) throw InvalidArgument("grid index outside the contour");
    return {index, id_};
}

void ContourTree::check(const TreePoint& p) const {
    if (p.tree_id != id_ || p.index < 0 || p.index >= size())
        throw InvalidArgument("TreePoint does not belong to this ContourTree");
}

double ContourTree::time(const TreePoint& p) const {
    check(p);
    return static_cast<double>(p.index - zero_) * step_;
}

double ContourTree::dist_idx(Eigen::Index i, Eigen::Index j) const {
    if (i > j) std::swap(i, j);
    if (i == j) return 0.0;
    if (mode_ == TreeMode::two_sided && i <= zero_ && zero_ <= j)
        return values_[i] + values_[j] - 2.0 * std::min(prefix_min_[i], suffix_min_[j]);
    return values_[i] + values_[j] - 2.0 * range_min(i, j);
}

double ContourTree::dist(const TreePoint& a, const TreePoint& b) const {
    check(a);
    check(b);
    return dist_idx(a.index, b.index);
}

int ContourTree::direction(Eigen::Index i) const {
    return (mode_ == TreeMode::finite || i >= zero_) ? 1 : -1;
}

double ContourTree::tail_min(Eigen::Index i) const {
    if (mode_ == TreeMode::finite) return 0.0;
    return i >= zero_ ? suffix_min_[i] : prefix_min_[i];
}

bool ContourTree::on_spine(Eigen::Index i) const {
    return mode_ == TreeMode::two_sided && values_[i] <= tail_min(i);
}

double ContourTree::busemann_idx(Eigen::Index i) const {
    return values_[i] - 2.0 * tail_min(i);
}

double ContourTree::busemann(const TreePoint& p) const {
    check(p);
    return busemann_idx(p.index);
}

Eigen::Index ContourTree::seek_below(Eigen::Index from, int dir, double thr, bool strict) const {
    auto hit = [&](double v) { return strict ? v < thr : v <= thr; };
    const Eigen::Index n = size();
    if (dir > 0) {
        if (!hit(range_min(from, n - 1))) return -1;
        Eigen::Index lo = from, hi = n - 1;
        while (lo < hi) {
            const Eigen::Index mid = lo + (hi - lo) / 2;
            if (hit(range_min(from, mid))) hi = mid; else lo = mid + 1;
        }
        return lo;
    }
    if (!hit(range_min(0, from))) return -1;
    Eigen::Index lo = 0, hi = from;
    while (lo < hi) {
        const Eigen::Index mid = lo + (hi - lo + 1) / 2;
        if (hit(range_min(mid, from))) lo = mid; else hi = mid - 1;
    }
    return lo;
}

double ContourTree::safe_ray_length(const TreePoint& x) const {
    check(x);
    const Eigen::Index i = x.index;
    if (mode_ == TreeMode::finite) return values_[i];
    return std::max(values_[i] - tail_min(i), busemann_idx(i) + anchor_height_);
}

TreePoint ContourTree::far_anchor() const {
    if (mode_ == TreeMode::finite) return root();
    return point(anchor_index_);
}

Eigen::Index ContourTree::ray_index(Eigen::Index i, double t) const {
    if (t <= 0.0) return i;
    const double x = values_[i];
    const int dir = direction(i);
    const double base = tail_min(i);
    if (t <= x - base) {
        const auto j = seek_below(i, dir, std::max(x - t, base), false);
        return j < 0 ? i : j;
    }
    const double h = t - busemann_idx(i);
    const Eigen::Index n = size();
    if (dir > 0) {
        const double* first = suffix_min_.data() + i;
        const double* last = suffix_min_.data() + n;
        auto u = static_cast<Eigen::Index>(std::lower_bound(first, last, h) - suffix_min_.data());
        u = std::min(u, n - 1);
        return range_argmin(u, n - 1);
    }
    // prefix minima are nonincreasing in the index: last u <= i with prefix_min >= h
    Eigen::Index lo = 0, hi = i;
    if (prefix_min_[0] < h) return range_argmin(0, 0);
    while (lo < hi) {
        const Eigen::Index mid = lo + (hi - lo + 1) / 2;
        if (prefix_min_[mid] >= h) lo = mid; else hi = mid - 1;
    }
    return range_argmin(0, lo);
}

TreePoint ContourTree::ray_point(const TreePoint& x, double t) const {
    check(x);
    if (!(t >= 0.0)) throw InvalidArgument("ray length must be nonnegative");
    const double safe = safe_ray_length(x);
    if (t > safe + kIdentityEps) throw OutOfSafeRange("ray length exceeds the truncation-safe range", safe);
    return point(ray_index(x.index, t));
}

TreePoint ContourTree::meet(const TreePoint& a, const TreePoint& b) const {
    check(a);
    check(b);
    if (mode_ == TreeMode::finite) return point(range_argmin(a.index, b.index));
    const double d = dist_idx(a.index, b.index);
    const double ell = std::clamp(0.5 * (d + busemann_idx(a.index) - busemann_idx(b.index)), 0.0, d);
    return ray_point(a, ell);
}

std::vector<TreePoint> ContourTree::segment_points(const TreePoint& a, const TreePoint& b) const {
    check(a);
    check(b);
    const double d = dist_idx(a.index, b.index);
    if (d <= kIdentityEps) return {a};
    // every point of the geodesic lies in the subtree of the meet
    const auto [lo, hi] = descendant_interval(meet(a, b).index);
    std::vector<std::pair<double, Eigen::Index>> pts;
    for (Eigen::Index u = lo; u <= hi; ++u) {
        if (u == a.index || u == b.index) continue;
        const double da = dist_idx(a.index, u);
        if (da + dist_idx(u, b.index) - d <= kIdentityEps) pts.emplace_back(da, u);
    }
    std::sort(pts.begin(), pts.end());
    std::vector<TreePoint> out;
    out.reserve(pts.size() + 2);
    out.push_back(a);
    for (const auto& pt : pts) out.push_back(point(pt.second));
    out.push_back(b);
    return out;
}

std::pair<Eigen::Index, Eigen::Index> ContourTree::descendant_interval(Eigen::Index i) const {
    const Eigen::Index n = size();
    const double h = values_[i];
    if (mode_ == TreeMode::finite || !on_spine(i)) {
        const auto left = seek_below(i, -1, h, true);
        const auto right = seek_below(i, 1, h, true);
        return {left < 0 ? 0 : left + 1, right < 0 ? n - 1 : right - 1};
    }
    if (i >= zero_) {
        // everything down the spine, including negative times whose prefix minimum is <= h
        Eigen::Index lo = 0, hi = zero_;
        while (lo < hi) {
            const Eigen::Index mid = lo + (hi - lo) / 2;
            if (prefix_min_[mid] <= h) hi = mid; else lo = mid + 1;
        }
        return {lo, i};
    }
    Eigen::Index lo = zero_, hi = n - 1;
    while (lo < hi) {
        const Eigen::Index mid = lo + (hi - lo + 1) / 2;
        if (suffix_min_[mid] <= h) lo = mid; else hi = mid - 1;
    }
    return {i, lo};
}

double ContourTree::closure_diameter(Eigen::Index first, Eigen::Index last, double root_busemann) const {
    // Double sweep: the farthest point from the root ends a diameter of any
    // finite subset of a tree metric.
    Eigen::Index far = first;
    double height = -1.0;
    for (Eigen::Index u = first; u <= last; ++u) {
        const double h = busemann_idx(u) - root_busemann;
        if (h > height) { height = h; far = u; }
    }
    double diameter = std::max(height, 0.0);
    for (Eigen::Index v = first; v <= last; ++v) diameter = std::max(diameter, dist_idx(far, v));
    return diameter;
}

double ContourTree::scan_branching(const TreePoint& x, double t, double stop_at,
                                   std::vector<SubtreeHandle>* out) const {
    const TreePoint tip = ray_point(x, t);
    const auto [lo, hi] = descendant_interval(tip.index);
    const double bx = busemann_idx(x.index);

    double best = 0.0;
    bool open = false;
    SubtreeHandle cur;
    double prev_p = 0.0;
    auto close = [&]() {
        if (!open) return;
        // a component running into the window edge may continue past the horizon
        if (mode_ == TreeMode::two_sided && (cur.first == 0 || cur.last == size() - 1))
            throw OutOfSafeRange("branching subtree reaches the sampled window edge", safe_ray_length(x));
        cur.diameter = closure_diameter(cur.first, cur.last, cur.root_busemann);
        best = std::max(best, cur.diameter);
        if (out) out->push_back(cur);
        open = false;
    };

    for (Eigen::Index u = lo; u <= hi; ++u) {
        const double dux = dist_idx(u, x.index);
        const double bu = busemann_idx(u);
        const double ell = std::clamp(0.5 * (dux + bx - bu), 0.0, dux);
        const bool bounded = ell <= t + kIdentityEps;
        const double p = bounded ? dux - ell : dux - t;
        if (!bounded || p <= kIdentityEps) {
            close();
            if (best >= stop_at) return best;
            continue;
        }
        if (open && dist_idx(u - 1, u) >= prev_p + p - kIdentityEps) {
            close();
            if (best >= stop_at) return best;
        }
        if (!open) {
            open = true;
            cur = SubtreeHandle{};
            cur.first = u;
            cur.attach_distance = ell;
            cur.root_busemann = bx - ell;
            cur.root = point(ray_index(x.index, ell));
        }
        cur.last = u;
        cur.height = std::max(cur.height, p);
        prev_p = p;
        // the closure diameter is at least the height
        if (!out && cur.height >= stop_at) return cur.height;
    }
    close();
    return best;
}

std::vector<SubtreeHandle> ContourTree::branching_subtrees(const TreePoint& x, double t) const {
    std::vector<SubtreeHandle> out;
    scan_branching(x, t, std::numeric_limits<double>::infinity(), &out);
    return out;
}

double ContourTree::max_branching_diameter(const TreePoint& x, double t, double stop_at) const {
    return scan_branching(x, t, stop_at, nullptr);
}

double ContourTree::subtree_diameter(const SubtreeHandle& h) const {
    check(h.root);
    if (h.first < 0 || h.last >= size() || h.first > h.last) throw InvalidArgument("bad subtree interval");
    return closure_diameter(h.first, h.last, h.root_busemann);
}

SubtreeHandle ContourTree::interval_subtree(Eigen::Index first, Eigen::Index last) const {
    if (first < 0 || last >= size() || first > last) throw InvalidArgument("bad subtree interval");
    Eigen::Index root = first;
    double height = 0.0;
    for (Eigen::Index u = first; u <= last; ++u)
        if (busemann_idx(u) < busemann_idx(root)) root = u;
    for (Eigen::Index u = first; u <= last; ++u) height = std::max(height, busemann_idx(u) - busemann_idx(root));
    SubtreeHandle h;
    h.root = point(root);
    h.first = first;
    h.last = last;
    h.root_busemann = busemann_idx(root);
    h.height = height;
    h.diameter = subtree_diameter(h);
    return h;
}

std::pair<Eigen::Index, Eigen::Index> ContourTree::ball_scan_range(const TreePoint& x, double eps) const {
    check(x);
    if (!(eps > 0.0)) throw InvalidArgument("ball radius must be positive");
    if (eps <= safe_ray_length(x)) return descendant_interval(ray_index(x.index, eps));
    return {0, size() - 1};
}

double ContourTree::ball_mass(const TreePoint& x, double eps) const {
    const auto [lo, hi] = ball_scan_range(x, eps);
    Eigen::Index count = 0;
    for (Eigen::Index u = lo; u <= hi; ++u)
        if (dist_idx(u, x.index) < eps) ++count;
    return step_ * static_cast<double>(count);
}

}  // namespace crt
