#include "franklin/franklin_core.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "franklin/torus_mesh.hpp"

namespace franklin {

namespace {

// Solves a tridiagonal system; sub[i] couples row i to i-1, sup[i] to i+1.
std::vector<double> solve_tridiagonal(std::vector<double> sub, std::vector<double> diag,
                                      std::vector<double> sup, std::vector<double> rhs) {
    std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (diag[i - 1] == 0.0) throw std::runtime_error("singular Gram system");
        double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    if (diag[n - 1] == 0.0) throw std::runtime_error("singular Gram system");
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
    return x;
}

// Cyclic tridiagonal solve by Sherman-Morrison; corner couples rows 0 and n-1.
std::vector<double> solve_cyclic(const std::vector<double>& sub, const std::vector<double>& diag,
                                 const std::vector<double>& sup, double corner,
                                 const std::vector<double>& rhs) {
    std::size_t n = diag.size();
    double gamma = -diag[0];
    std::vector<double> d = diag;
    d[0] -= gamma;
    d[n - 1] -= corner * corner / gamma;
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = corner;
    auto y = solve_tridiagonal(sub, d, sup, rhs);
    auto z = solve_tridiagonal(sub, d, sup, u);
    double vy = y[0] + corner / gamma * y[n - 1];
    double vz = z[0] + corner / gamma * z[n - 1];
    double factor = vy / (1.0 + vz);
    for (std::size_t i = 0; i < n; ++i) y[i] -= factor * z[i];
    return y;
}

PiecewiseLinear classical_function(int n) {
    if (n == 0) return PiecewiseLinear::constant(1.0);
    const double s3 = std::sqrt(3.0);
    if (n == 1) return PiecewiseLinear({0.0}, {-s3}, s3);
    NodeSet ns = build_nodes(n);
    std::vector<double> x = ns.as_doubles();
    x.push_back(1.0);
    // Nodal unknowns c_0 = f(0+), c_i = f(t_i), c_n = f(1-).
    std::size_t m = static_cast<std::size_t>(n) + 1;
    std::vector<double> sub(m, 0.0), diag(m, 0.0), sup(m, 0.0), rhs(m, 0.0);
    for (std::size_t e = 0; e + 1 < m; ++e) {
        double h = x[e + 1] - x[e];
        diag[e] += h / 3.0;
        diag[e + 1] += h / 3.0;
        sup[e] = h / 6.0;
        sub[e + 1] = h / 6.0;
    }
    std::size_t tau = static_cast<std::size_t>(2 * ns.j - 1);
    double a = x[tau - 1];
    double b = x[tau + 1];
    rhs[tau] = 1.0;
    rhs[tau - 1] = -(b - x[tau]) / (b - a);
    rhs[tau + 1] = -(x[tau] - a) / (b - a);
    auto c = solve_tridiagonal(sub, diag, sup, rhs);
    double norm2 = 0.0;
    for (std::size_t e = 0; e + 1 < m; ++e) {
        double h = x[e + 1] - x[e];
        norm2 += h * (c[e] * c[e] + c[e] * c[e + 1] + c[e + 1] * c[e + 1]) / 3.0;
    }
    double scale = (c[tau] > 0.0 ? 1.0 : -1.0) / std::sqrt(norm2);
    for (double& v : c) v *= scale;
    double end = c.back();
    c.pop_back();
    x.pop_back();
    return PiecewiseLinear(std::move(x), std::move(c), end);
}

PiecewiseLinear periodic_function(int n) {
    if (n == 1) return PiecewiseLinear::constant(1.0);
    NodeSet ns = build_nodes(n);
    std::vector<double> x = ns.as_doubles();
    std::size_t m = static_cast<std::size_t>(n);
    auto h = [&](std::size_t e) { return (e + 1 < m ? x[e + 1] : 1.0) - x[e]; };
    std::size_t tau = static_cast<std::size_t>(2 * ns.j - 1);
    std::size_t ia = tau - 1;
    std::size_t ib = (tau + 1) % m;
    double a = x[ia];
    double b = tau + 1 < m ? x[tau + 1] : 1.0;
    std::vector<double> rhs(m, 0.0);
    rhs[tau] += 1.0;
    rhs[ia] += -(b - x[tau]) / (b - a);
    rhs[ib] += -(x[tau] - a) / (b - a);
    std::vector<double> c;
    if (m == 2) {
        // Both elements couple the same two nodes.
        double g00 = (h(0) + h(1)) / 3.0;
        double g01 = (h(0) + h(1)) / 6.0;
        double det = g00 * g00 - g01 * g01;
        c = {(g00 * rhs[0] - g01 * rhs[1]) / det, (g00 * rhs[1] - g01 * rhs[0]) / det};
    } else {
        std::vector<double> sub(m, 0.0), diag(m, 0.0), sup(m, 0.0);
        for (std::size_t e = 0; e < m; ++e) {
            std::size_t e1 = (e + 1) % m;
            diag[e] += h(e) / 3.0;
            diag[e1] += h(e) / 3.0;
            if (e + 1 < m) {
                sup[e] = h(e) / 6.0;
                sub[e + 1] = h(e) / 6.0;
            }
        }
        c = solve_cyclic(sub, diag, sup, h(m - 1) / 6.0, rhs);
    }
    double norm2 = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
        double p = c[e];
        double q = c[(e + 1) % m];
        norm2 += h(e) * (p * p + p * q + q * q) / 3.0;
    }
    double scale = (c[tau] > 0.0 ? 1.0 : -1.0) / std::sqrt(norm2);
    for (double& v : c) v *= scale;
    double end = c.front();
    return PiecewiseLinear(std::move(x), std::move(c), end);
}

}  // namespace

std::string to_string(Variant v) {
    switch (v) {
        case Variant::classical: return "classical";
        case Variant::periodic: return "periodic";
        case Variant::reconstructed: return "reconstructed";
    }
    return "unknown";
}

Variant parse_variant(const std::string& name) {
    if (name == "classical") return Variant::classical;
    if (name == "periodic") return Variant::periodic;
    if (name == "reconstructed") return Variant::reconstructed;
    throw std::invalid_argument("unknown basis variant: " + name);
}

int first_index(Variant v) { return v == Variant::periodic ? 1 : 0; }

PiecewiseLinear franklin_function(int n, Variant v) {
    if (n < first_index(v)) throw std::invalid_argument("Franklin index below the first valid index");
    switch (v) {
        case Variant::classical: return classical_function(n);
        case Variant::periodic: return periodic_function(n);
        case Variant::reconstructed: return fold_to_torus(classical_function(n));
    }
    throw std::invalid_argument("unknown variant");
}

PiecewiseLinear fold_to_torus(const PiecewiseLinear& f) {
    const auto& k = f.breakpoints();
    const auto& v = f.values();
    std::vector<double> knots;
    std::vector<double> values;
    knots.reserve(2 * k.size() + 1);
    values.reserve(2 * k.size() + 1);
    for (std::size_t i = 0; i < k.size(); ++i) {
        knots.push_back(k[i] / 2.0);
        values.push_back(v[i]);
    }
    knots.push_back(0.5);
    values.push_back(f.left_limit_at_zero());
    for (std::size_t i = k.size(); i-- > 1;) {
        knots.push_back(1.0 - k[i] / 2.0);
        values.push_back(v[i]);
    }
    return PiecewiseLinear(std::move(knots), std::move(values), v[0]);
}

PiecewiseLinear reconstruct_u(int n) { return franklin_function(n, Variant::reconstructed); }

int grid_level(Variant v, int n) {
    int base = 0;
    if (n >= 2) {
        int k = 0;
        int j = 0;
        decompose_index(n, k, j);
        base = k + 1;
    }
    if (v != Variant::reconstructed) return base;
    return n == 0 ? 0 : base + 1;
}

FranklinBasis::FranklinBasis(Variant v) : variant_(v) {}

const PiecewiseLinear& FranklinBasis::function(int n) {
    if (n < first()) throw std::invalid_argument("Franklin index below the first valid index");
    auto slot = static_cast<std::size_t>(n - first());
    {
        std::shared_lock lock(mutex_);
        if (slot < functions_.size()) return functions_[slot];
    }
    ensure(n);
    std::shared_lock lock(mutex_);
    return functions_[slot];
}

void FranklinBasis::ensure(int max_n) {
    std::unique_lock lock(mutex_);
    for (int n = first() + static_cast<int>(functions_.size()); n <= max_n; ++n)
        functions_.push_back(franklin_function(n, variant_));
}

int FranklinBasis::computed() const {
    std::shared_lock lock(mutex_);
    return first() + static_cast<int>(functions_.size()) - 1;
}

double FranklinBasis::gram_deviation(int max_n) {
    ensure(max_n);
    double worst = 0.0;
    for (int i = first(); i <= max_n; ++i)
        for (int j = i; j <= max_n; ++j) {
            double g = inner_product(function(i), function(j));
            worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
        }
    return worst;
}

IndexBlock block_range(int m) {
    if (m < 0) throw std::invalid_argument("block level must be nonnegative");
    if (m == 0) return {1, 1};
    return {(1 << (m - 1)) + 1, 1 << m};
}

int block_grid_level(Variant v, int m) { return grid_level(v, block_range(m).hi); }

namespace {

template <class F>
std::vector<double> coefficients_of(FranklinBasis& basis, const F& f, int m) {
    IndexBlock b = block_range(m);
    basis.ensure(b.hi);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(b.hi - b.lo + 1));
    for (int j = b.lo; j <= b.hi; ++j) out.push_back(inner_product(basis.function(j), f));
    return out;
}

}  // namespace

std::vector<double> block_coefficients(FranklinBasis& basis, const PiecewiseLinear& f, int m) {
    return coefficients_of(basis, f, m);
}

std::vector<double> block_coefficients(FranklinBasis& basis, const StepFunction& f, int m) {
    return coefficients_of(basis, f, m);
}

PiecewiseLinear expand(FranklinBasis& basis, int lo, const std::vector<double>& coeffs) {
    if (coeffs.empty()) return PiecewiseLinear::constant(0.0);
    int hi = lo + static_cast<int>(coeffs.size()) - 1;
    basis.ensure(hi);
    int level = 0;
    for (int j = lo; j <= hi; ++j) level = std::max(level, grid_level(basis.variant(), j));
    std::vector<double> grid((std::size_t{1} << level) + 1, 0.0);
    for (int j = lo; j <= hi; ++j) {
        double c = coeffs[static_cast<std::size_t>(j - lo)];
        if (c != 0.0) basis.function(j).accumulate_on_grid(c, level, grid);
    }
    double end = grid.back();
    grid.pop_back();
    return PiecewiseLinear::from_uniform_grid(level, std::move(grid), end);
}

PiecewiseLinear block_projection(FranklinBasis& basis, const PiecewiseLinear& f, int m) {
    return expand(basis, block_range(m).lo, block_coefficients(basis, f, m));
}

PiecewiseLinear block_projection(FranklinBasis& basis, const StepFunction& f, int m) {
    return expand(basis, block_range(m).lo, block_coefficients(basis, f, m));
}

double kernel(FranklinBasis& basis, int level, double x, double t) {
    int hi = 1 << level;
    basis.ensure(hi);
    double s = 0.0;
    for (int k = basis.first(); k <= hi; ++k) s += basis.function(k)(x) * basis.function(k)(t);
    return s;
}

PiecewiseLinear kernel_row(FranklinBasis& basis, int level, double x) {
    int hi = 1 << level;
    basis.ensure(hi);
    std::vector<double> coeffs;
    for (int k = basis.first(); k <= hi; ++k) coeffs.push_back(basis.function(k)(x));
    return expand(basis, basis.first(), coeffs);
}

namespace {

struct LogFit {
    double slope = 0.0;
    bool ok = false;
};

LogFit fit_log_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    LogFit out;
    std::size_t n = xs.size();
    if (n < 2) return out;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) return out;
    out.slope = sxy / sxx;
    out.ok = true;
    return out;
}

}  // namespace

DecayFit fit_decay(FranklinBasis& basis, int n) {
    if (n < 2) throw std::invalid_argument("fit_decay needs n >= 2");
    DecayFit fit;
    fit.n = n;
    Variant v = basis.variant() == Variant::periodic ? Variant::periodic : Variant::classical;
    PiecewiseLinear f = basis.variant() == v ? basis.function(n) : franklin_function(n, v);
    NodeSet ns = build_nodes(n);
    std::vector<double> pos = ns.as_doubles();
    std::vector<double> val = f.values();
    if (v == Variant::classical) {
        pos.push_back(1.0);
        val.push_back(f.left_limit_at_zero());
    }
    const std::size_t peak = static_cast<std::size_t>(2 * ns.j - 1);
    const double tn = pos[peak];
    double vmax = 0.0;
    for (double y : val) vmax = std::max(vmax, std::abs(y));
    const double floor = 1e-11 * vmax;

    auto walk = [&](int dir) {
        const auto count = static_cast<long>(pos.size());
        long steps = v == Variant::periodic ? count / 2 : (dir < 0 ? static_cast<long>(peak)
                                                                    : count - 1 - static_cast<long>(peak));
        for (long d = 0; d < steps; ++d) {
            long i0 = static_cast<long>(peak) + dir * d;
            long i1 = i0 + dir;
            double a = std::abs(val[static_cast<std::size_t>(((i0 % count) + count) % count)]);
            double b = std::abs(val[static_cast<std::size_t>(((i1 % count) + count) % count)]);
            if (a <= floor || b <= floor) break;
            double r = b / a;
            if (d < 2) {
                fit.near_ratio = std::max(fit.near_ratio, r);
            } else {
                fit.ratios.push_back(r);
                fit.max_ratio = std::max(fit.max_ratio, r);
            }
        }
    };
    walk(-1);
    walk(+1);
    fit.sufficient = !fit.ratios.empty();

    const double sn = std::sqrt(static_cast<double>(n));
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        if (std::abs(val[i]) <= floor) continue;
        xs.push_back(n * torus_distance(pos[i], tn));
        ys.push_back(std::log(std::abs(val[i]) / sn));
    }
    LogFit lf = fit_log_slope(xs, ys);
    if (lf.ok) {
        fit.q = std::exp(lf.slope);
        for (std::size_t i = 0; i < xs.size(); ++i)
            fit.C = std::max(fit.C, std::exp(ys[i] - lf.slope * xs[i]));
    }

    int level = 0;
    while ((2 << level) <= n) ++level;
    fit.kernel_level = level;
    PiecewiseLinear row = kernel_row(basis, level, tn);
    const double N = std::ldexp(1.0, level);
    std::vector<double> kpos = row.breakpoints();
    std::vector<double> kval = row.values();
    kpos.push_back(1.0);
    kval.push_back(row.left_limit_at_zero());
    double kmax = 0.0;
    for (double y : kval) kmax = std::max(kmax, std::abs(y));
    xs.clear();
    ys.clear();
    for (std::size_t i = 0; i < kpos.size(); ++i) {
        if (std::abs(kval[i]) <= 1e-11 * kmax) continue;
        xs.push_back(N * torus_distance(kpos[i], tn));
        ys.push_back(std::log(std::abs(kval[i]) / N));
    }
    LogFit kf = fit_log_slope(xs, ys);
    if (kf.ok) {
        fit.kernel_q = std::exp(kf.slope);
        for (std::size_t i = 0; i < xs.size(); ++i)
            fit.kernel_C = std::max(fit.kernel_C, std::exp(ys[i] - kf.slope * xs[i]));
    }
    return fit;
}

}  // namespace franklin
