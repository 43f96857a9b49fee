#include "franklin/haar_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace franklin {

namespace {

// Step function from per-cell values of the shifted grid, cell i starting at
// shift + i 2^-level.
StepFunction cells_to_step(int level, Dyadic shift, const std::vector<double>& v) {
    if (level == 0) return StepFunction::constant(v[0]);
    const std::size_t count = std::size_t{1} << level;
    const double h = std::ldexp(1.0, -level);
    const double s = shift.mod1().to_double();
    const double cells_before_one = std::ldexp(1.0 - s, level);
    const auto i0 = static_cast<std::size_t>(std::ceil(cells_before_one));
    const bool aligned = static_cast<double>(i0) == cells_before_one;
    std::vector<double> knots;
    std::vector<double> vals;
    knots.reserve(count + 1);
    vals.reserve(count + 1);
    if (!aligned) {
        knots.push_back(0.0);
        vals.push_back(v[i0 - 1]);
    }
    for (std::size_t i = i0; i < count; ++i) {
        knots.push_back(s + static_cast<double>(i) * h - 1.0);
        vals.push_back(v[i]);
    }
    for (std::size_t i = 0; i < i0; ++i) {
        knots.push_back(s + static_cast<double>(i) * h);
        vals.push_back(v[i]);
    }
    return StepFunction(std::move(knots), std::move(vals));
}

std::vector<double> cell_averages(const Antiderivative& F, int level, Dyadic shift) {
    const std::size_t count = std::size_t{1} << level;
    const double h = std::ldexp(1.0, -level);
    const double s = shift.mod1().to_double();
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = F.over_arc(s + static_cast<double>(i) * h, h) / h;
    return out;
}

// averages[n] holds the 2^n cell averages for n = 0..top.
std::vector<std::vector<double>> average_tree(const Antiderivative& F, int top, Dyadic shift) {
    std::vector<std::vector<double>> tree(static_cast<std::size_t>(top) + 1);
    tree[static_cast<std::size_t>(top)] = cell_averages(F, top, shift);
    for (int n = top; n > 0; --n) {
        const auto& child = tree[static_cast<std::size_t>(n)];
        auto& parent = tree[static_cast<std::size_t>(n - 1)];
        parent.resize(child.size() / 2);
        for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = 0.5 * (child[2 * i] + child[2 * i + 1]);
    }
    return tree;
}

template <class F>
StepFunction partial_sum_impl(const F& f, int level, Dyadic shift) {
    if (level < 0) throw std::invalid_argument("level must be nonnegative");
    Antiderivative A(f);
    return cells_to_step(level, shift, cell_averages(A, level, shift));
}

template <class F>
StepFunction increment_impl(const F& f, int level, Dyadic shift) {
    if (level == 0) return partial_sum_impl(f, 0, shift);
    return combine(1.0, partial_sum_impl(f, level, shift), -1.0, partial_sum_impl(f, level - 1, shift));
}

template <class F>
HaarExpansion expansion_impl(const F& f, Dyadic shift, int max_level) {
    HaarExpansion e;
    e.shift = shift.mod1();
    e.max_level = max_level;
    Antiderivative A(f);
    auto tree = average_tree(A, max_level, shift);
    e.mean = StepFunction::constant(tree[0][0]);
    for (int n = 1; n <= max_level; ++n) {
        const auto& fine = tree[static_cast<std::size_t>(n)];
        const auto& coarse = tree[static_cast<std::size_t>(n - 1)];
        std::vector<double> d(fine.size());
        for (std::size_t i = 0; i < fine.size(); ++i) d[i] = fine[i] - coarse[i / 2];
        e.increments.push_back(cells_to_step(n, shift, d));
    }
    return e;
}

int resolution_or_throw(std::optional<int> r) {
    if (!r) throw std::invalid_argument("function has no finite dyadic resolution");
    return *r;
}

// Squared increments summed over levels 1..top, per level-top cell.
std::vector<double> squared_increment_sums(const std::vector<std::vector<double>>& tree, int top) {
    std::vector<double> s2(std::size_t{1} << top, 0.0);
    for (int n = 1; n <= top; ++n) {
        const auto& fine = tree[static_cast<std::size_t>(n)];
        const auto& coarse = tree[static_cast<std::size_t>(n - 1)];
        const int shift_bits = top - n;
        for (std::size_t c = 0; c < s2.size(); ++c) {
            std::size_t i = c >> shift_bits;
            double d = fine[i] - coarse[i / 2];
            s2[c] += d * d;
        }
    }
    return s2;
}

template <class F>
StepFunction dyadic_maximal_impl(const F& f, Dyadic shift, std::optional<int> max_level) {
    int top = std::max({resolved_level(f, shift), max_level.value_or(0), 1});
    Antiderivative A(abs(f));
    auto tree = average_tree(A, top, shift);
    std::vector<double> m(std::size_t{1} << top, 0.0);
    for (int n = 1; n <= top; ++n) {
        const auto& level = tree[static_cast<std::size_t>(n)];
        for (std::size_t c = 0; c < m.size(); ++c) m[c] = std::max(m[c], level[c >> (top - n)]);
    }
    return cells_to_step(top, shift, m);
}

}  // namespace

StepFunction haar_partial_sum(const PiecewiseLinear& f, int level, Dyadic shift) {
    return partial_sum_impl(f, level, shift);
}
StepFunction haar_partial_sum(const StepFunction& f, int level, Dyadic shift) {
    return partial_sum_impl(f, level, shift);
}
StepFunction haar_increment(const PiecewiseLinear& f, int level, Dyadic shift) {
    return increment_impl(f, level, shift);
}
StepFunction haar_increment(const StepFunction& f, int level, Dyadic shift) {
    return increment_impl(f, level, shift);
}
HaarExpansion haar_expansion(const PiecewiseLinear& f, Dyadic shift, int max_level) {
    return expansion_impl(f, shift, max_level);
}
HaarExpansion haar_expansion(const StepFunction& f, Dyadic shift, int max_level) {
    return expansion_impl(f, shift, max_level);
}

int resolved_level(const PiecewiseLinear& f, Dyadic shift) {
    return std::max(resolution_or_throw(f.dyadic_resolution()), shift.mod1().exp());
}

int resolved_level(const StepFunction& f, Dyadic shift) {
    return std::max(resolution_or_throw(f.dyadic_resolution()), shift.mod1().exp());
}

StepFunction square_function(const PiecewiseLinear& f, Dyadic shift) {
    const int top = resolved_level(f, shift);
    Antiderivative A(f);
    auto tree = average_tree(A, top, shift);
    auto s2 = squared_increment_sums(tree, top);
    const double h = std::ldexp(1.0, -top);
    const double s = shift.mod1().to_double();
    const double tail = std::ldexp(1.0, -2 * top - 2) / 3.0;
    for (std::size_t c = 0; c < s2.size(); ++c) {
        double a = wrap_unit(s + static_cast<double>(c) * h);
        double slope = (f.evaluate_left(a + h) - f(a)) / h;
        s2[c] += slope * slope * tail;
    }
    for (double& v : s2) v = std::sqrt(v);
    return cells_to_step(top, shift, s2).simplified();
}

StepFunction square_function(const StepFunction& f, Dyadic shift) {
    return square_function(f, shift, resolved_level(f, shift));
}

StepFunction square_function(const StepFunction& f, Dyadic shift, int max_level) {
    if (max_level <= 0) return StepFunction::constant(0.0);
    Antiderivative A(f);
    auto tree = average_tree(A, max_level, shift);
    auto s2 = squared_increment_sums(tree, max_level);
    for (double& v : s2) v = std::sqrt(v);
    return cells_to_step(max_level, shift, s2).simplified();
}

StepFunction dyadic_maximal(const PiecewiseLinear& f, Dyadic shift, std::optional<int> max_level) {
    return dyadic_maximal_impl(f, shift, max_level);
}

StepFunction dyadic_maximal(const StepFunction& f, Dyadic shift, std::optional<int> max_level) {
    return dyadic_maximal_impl(f, shift, max_level);
}

MaximalFunction build_maximal(std::vector<double> points, std::vector<double> left_abs,
                              std::vector<double> right_abs) {
    MaximalFunction m;
    const std::size_t P = points.size();
    std::vector<double> len(P), s(P);
    std::vector<long double> integral(P);
    for (std::size_t c = 0; c < P; ++c) {
        len[c] = (c + 1 < P ? points[c + 1] : 1.0) - points[c];
        s[c] = std::max(left_abs[c], right_abs[c]);
        integral[c] = static_cast<long double>(len[c]) *
                      (static_cast<long double>(left_abs[c]) + right_abs[c]) / 2.0L;
    }
    // Prefix sums over two turns so arcs never need wrap handling.
    std::vector<long double> PL(2 * P + 1, 0.0L), PI(2 * P + 1, 0.0L);
    for (std::size_t i = 0; i < 2 * P; ++i) {
        PL[i + 1] = PL[i] + len[i % P];
        PI[i + 1] = PI[i] + integral[i % P];
    }
    const double total = static_cast<double>(PI[P]);
    std::vector<double> lower(P, 0.0), upper(P, 0.0);
    for (std::size_t c = 0; c < P; ++c) lower[c] = std::min(left_abs[c], right_abs[c]);

    auto corners = [&](std::size_t a, std::size_t e) {
        std::size_t ca = a % P;
        std::size_t ce = e % P;
        if (e == a) return s[ca];
        if (e == a + 1) return std::max(s[ca], s[ce]);
        double Ic = static_cast<double>(PI[e] - PI[a + 1]);
        double Lc = static_cast<double>(PL[e] - PL[a + 1]);
        double la = len[ca], le = len[ce];
        double ia = s[ca] * la, ie = s[ce] * le;
        double q = Ic / Lc;
        q = std::max(q, (Ic + ia) / (Lc + la));
        q = std::max(q, (Ic + ie) / (Lc + le));
        q = std::max(q, (Ic + ia + ie) / (Lc + la + le));
        return q;
    };

    for (std::size_t a = 0; a < P; ++a) {
        double run_upper = P > 1 ? corners(a, a + P) : s[0];
        double run_lower = total;
        for (std::size_t e = a + P; e-- > a;) {
            run_upper = std::max(run_upper, corners(a, e));
            double avg = static_cast<double>((PI[e + 1] - PI[a]) / (PL[e + 1] - PL[a]));
            run_lower = std::max(run_lower, avg);
            std::size_t c = e % P;
            upper[c] = std::max(upper[c], run_upper);
            lower[c] = std::max(lower[c], run_lower);
        }
    }
    m.lower_point_.resize(P);
    m.upper_point_.resize(P);
    for (std::size_t c = 0; c < P; ++c) {
        std::size_t prev = (c + P - 1) % P;
        m.lower_point_[c] = std::max({lower[prev], lower[c], left_abs[c], right_abs[prev]});
        m.upper_point_[c] = std::max(upper[prev], upper[c]);
        upper[c] = std::max(upper[c], lower[c]);
    }
    m.points_ = std::move(points);
    m.lower_cell_ = std::move(lower);
    m.upper_cell_ = std::move(upper);
    return m;
}

namespace {

std::vector<double> candidate_points(const std::vector<double>& knots, int grid_level) {
    if (grid_level < 0 || grid_level > 24) throw std::invalid_argument("maximal grid level out of range");
    std::size_t count = std::size_t{1} << grid_level;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) grid[i] = std::ldexp(static_cast<double>(i), -grid_level);
    std::vector<double> pts;
    pts.reserve(grid.size() + knots.size());
    std::set_union(grid.begin(), grid.end(), knots.begin(), knots.end(), std::back_inserter(pts));
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace

MaximalFunction maximal_function(const PiecewiseLinear& f, int grid_level) {
    PiecewiseLinear g = abs(f);
    auto pts = candidate_points(g.breakpoints(), grid_level);
    std::vector<double> left(pts.size()), right(pts.size());
    for (std::size_t c = 0; c < pts.size(); ++c) {
        double next = c + 1 < pts.size() ? pts[c + 1] : 1.0;
        left[c] = g(pts[c]);
        right[c] = g.evaluate_left(next);
    }
    return build_maximal(std::move(pts), std::move(left), std::move(right));
}

MaximalFunction maximal_function(const StepFunction& f, int grid_level) {
    StepFunction g = abs(f);
    auto pts = candidate_points(g.breakpoints(), grid_level);
    std::vector<double> vals(pts.size());
    for (std::size_t c = 0; c < pts.size(); ++c) vals[c] = g(pts[c]);
    return build_maximal(std::move(pts), vals, vals);
}

namespace {

std::size_t cell_of(const std::vector<double>& pts, double x) {
    auto it = std::upper_bound(pts.begin(), pts.end(), x);
    return static_cast<std::size_t>(it - pts.begin()) - 1;
}

}  // namespace

double MaximalFunction::lower(double x) const {
    x = wrap_unit(x);
    std::size_t c = cell_of(points_, x);
    return points_[c] == x ? lower_point_[c] : lower_cell_[c];
}

double MaximalFunction::upper(double x) const {
    x = wrap_unit(x);
    std::size_t c = cell_of(points_, x);
    return points_[c] == x ? upper_point_[c] : upper_cell_[c];
}

double MaximalFunction::lower_min_over(double a, double b) const {
    a = wrap_unit(a);
    double len = wrap_unit(b - a);
    if (len == 0.0 && b != a) len = 1.0;
    std::size_t c = cell_of(points_, a);
    double best = lower_cell_[c];
    double covered = (c + 1 < points_.size() ? points_[c + 1] : 1.0) - a;
    while (covered <= len && covered < 1.0) {
        c = (c + 1) % points_.size();
        best = std::min(best, lower_cell_[c]);
        covered += (c + 1 < points_.size() ? points_[c + 1] : 1.0) - points_[c];
    }
    return best;
}

double MaximalFunction::upper_max_over(double a, double b) const {
    a = wrap_unit(a);
    double len = wrap_unit(b - a);
    if (len == 0.0 && b != a) len = 1.0;
    std::size_t c = cell_of(points_, a);
    double best = std::max(upper_cell_[c], upper(a));
    double covered = (c + 1 < points_.size() ? points_[c + 1] : 1.0) - a;
    while (covered <= len && covered < 1.0) {
        c = (c + 1) % points_.size();
        best = std::max({best, upper_cell_[c], upper_point_[c]});
        covered += (c + 1 < points_.size() ? points_[c + 1] : 1.0) - points_[c];
    }
    return best;
}

FourPointValue four_point_maximal(const MaximalFunction& m, double x, int level, Dyadic shift) {
    DyadicInterval iv = locate_dyadic(x, level, shift);
    double a = iv.left.to_double();
    double b = iv.right.to_double();
    FourPointValue out;
    for (double p : {a, wrap_unit(-a), b, wrap_unit(-b)}) {
        out.lower += m.lower(p);
        out.upper += m.upper(p);
    }
    return out;
}

FourPointValue four_point_maximal(const PiecewiseLinear& f, double x, int level, Dyadic shift, int grid_level) {
    return four_point_maximal(maximal_function(f, grid_level), x, level, shift);
}

int haar_level(int n) {
    if (n < 1) throw std::invalid_argument("Haar index starts at 1");
    if (n == 1) return 0;
    int k = 0;
    int j = 0;
    decompose_index(n, k, j);
    return k + 1;
}

StepFunction haar_function(int n) {
    if (n < 1) throw std::invalid_argument("Haar index starts at 1");
    if (n == 1) return StepFunction::constant(1.0);
    int k = 0;
    int j = 0;
    decompose_index(n, k, j);
    const double amp = std::ldexp(std::sqrt(std::ldexp(1.0, k % 2)), k / 2);
    const double a = std::ldexp(static_cast<double>(j - 1), -k);
    const double mid = std::ldexp(static_cast<double>(2 * j - 1), -k - 1);
    const double b = std::ldexp(static_cast<double>(j), -k);
    std::vector<double> knots;
    std::vector<double> vals;
    if (a > 0.0) {
        knots.push_back(0.0);
        vals.push_back(0.0);
    }
    knots.push_back(a);
    vals.push_back(amp);
    knots.push_back(mid);
    vals.push_back(-amp);
    if (b < 1.0) {
        knots.push_back(b);
        vals.push_back(0.0);
    }
    return StepFunction(std::move(knots), std::move(vals));
}

StepFunction haar_series(const std::vector<double>& coeffs) {
    if (coeffs.empty()) return StepFunction::constant(0.0);
    const int top = haar_level(static_cast<int>(coeffs.size()));
    const std::size_t count = std::size_t{1} << top;
    std::vector<double> cells(count, coeffs[0]);
    for (std::size_t n = 2; n <= coeffs.size(); ++n) {
        double c = coeffs[n - 1];
        if (c == 0.0) continue;
        int k = 0;
        int j = 0;
        decompose_index(static_cast<int>(n), k, j);
        const double amp = std::ldexp(std::sqrt(std::ldexp(1.0, k % 2)), k / 2);
        const std::size_t width = count >> k;
        const std::size_t start = static_cast<std::size_t>(j - 1) * width;
        for (std::size_t i = 0; i < width / 2; ++i) cells[start + i] += c * amp;
        for (std::size_t i = width / 2; i < width; ++i) cells[start + i] -= c * amp;
    }
    std::vector<double> knots(count);
    for (std::size_t i = 0; i < count; ++i) knots[i] = std::ldexp(static_cast<double>(i), -top);
    return StepFunction(std::move(knots), std::move(cells));
}

}  // namespace franklin
