// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <iterator>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "franklin/inequality_lab.hpp"

using namespace franklin;

namespace {

const double kS3 = std::sqrt(3.0);

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Simpson's rule on the common refinement of the breakpoints.
double simpson_inner(const PiecewiseLinear& f, const PiecewiseLinear& g) {
    std::vector<double> knots;
    std::set_union(f.breakpoints().begin(), f.breakpoints().end(), g.breakpoints().begin(), g.breakpoints().end(),
                   std::back_inserter(knots));
    double s = 0.0;
    for (std::size_t i = 0; i < knots.size(); ++i) {
        const double a = knots[i];
        const double b = i + 1 < knots.size() ? knots[i + 1] : 1.0;
        const double m = 0.5 * (a + b);
        s += (b - a) / 6.0 * (f(a) * g(a) + 4.0 * f(m) * g(m) + f.evaluate_left(b) * g.evaluate_left(b));
    }
    return s;
}

// Dense Gram-Schmidt over 1, x and the hats at the successively added nodes.
std::vector<PiecewiseLinear> gram_schmidt(int max_n) {
    std::vector<PiecewiseLinear> out;
    for (int n = 0; n <= max_n; ++n) {
        PiecewiseLinear g;
        if (n == 0) {
            g = PiecewiseLinear::constant(1.0);
        } else if (n == 1) {
            g = PiecewiseLinear({0.0}, {0.0}, 1.0);
        } else {
            const auto ns = build_nodes(n);
            const auto x = ns.as_doubles();
            std::vector<double> v(x.size(), 0.0);
            v[static_cast<std::size_t>(2 * ns.j - 1)] = 1.0;
            g = PiecewiseLinear(x, v, 0.0);
        }
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& e : out) g = combine(1.0, g, -simpson_inner(g, e), e);
        g = combine(1.0 / std::sqrt(simpson_inner(g, g)), g, 0.0, g);
        out.push_back(g);
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

Outcome basis_correctness() {
    const auto start = std::chrono::steady_clock::now();
    FranklinBasis b(Variant::classical);
    b.ensure(256);
    double dev = 0.0;
    for (int i = 0; i <= 256; ++i)
        for (int j = i; j <= 256; ++j)
            dev = std::max(dev, std::fabs(simpson_inner(b.function(i), b.function(j)) - (i == j ? 1.0 : 0.0)));
    double f0 = 0.0, f1 = 0.0;
    for (double x : b.function(0).breakpoints()) f0 = std::max(f0, std::fabs(b.function(0)(x) - 1.0));
    f0 = std::max(f0, std::fabs(b.function(0).left_limit_at_zero() - 1.0));
    for (double x : b.function(1).breakpoints()) f1 = std::max(f1, std::fabs(b.function(1)(x) - kS3 * (2 * x - 1)));
    f1 = std::max(f1, std::fabs(b.function(1).left_limit_at_zero() - kS3));
    const auto& f2 = b.function(2);
    const double f2err = std::max({std::fabs(f2(0.0) + kS3), std::fabs(f2(0.5) - kS3),
                                   std::fabs(f2.left_limit_at_zero() + kS3)});
    const auto oracle = gram_schmidt(32);
    double gs = 0.0;
    for (int n = 0; n <= 32; ++n) {
        const auto& f = b.function(n);
        const auto& g = oracle[static_cast<std::size_t>(n)];
        const double sign = simpson_inner(f, g) > 0 ? 1.0 : -1.0;
        for (double x : g.breakpoints()) gs = std::max(gs, std::fabs(f(x) - sign * g(x)));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Outcome o;
    o.pass = dev <= 1e-9 && f0 <= 1e-12 && f1 <= 1e-12 && f2err <= 1e-10 && gs <= 1e-10 && secs <= 60.0;
    o.detail = "gram " + fmt(dev) + ", f0 " + fmt(f0) + ", f1 " + fmt(f1) + ", f2 " + fmt(f2err) +
               ", vs Gram-Schmidt " + fmt(gs) + ", " + fmt(secs) + " s";
    return o;
}

Outcome exponential_decay() {
    FranklinBasis b(Variant::classical);
    double lo = 1.0, hi = 0.0, kq = 0.0;
    bool ok = true;
    for (int n : {64, 128, 256, 512}) {
        const auto d = fit_decay(b, n);
        ok = ok && d.sufficient && d.max_ratio <= 0.5;
        lo = std::min(lo, d.max_ratio);
        hi = std::max(hi, d.max_ratio);
        kq = std::max(kq, d.kernel_q);
    }
    const double mid = 0.5 * (lo + hi);
    Outcome o;
    o.pass = ok && hi - mid <= 0.05 && mid - lo <= 0.05 && kq < 1.0;
    o.detail = "per-node ratio in [" + fmt(lo) + ", " + fmt(hi) + "], kernel q' " + fmt(kq);
    return o;
}

Outcome block_bound() {
    FranklinBasis u(Variant::reconstructed);
    const auto r = verify_block_bound(u, {});
    Outcome o;
    o.pass = r.verdict == "pass";
    o.detail = "constant " + fmt(r.constant("constant")) + ", log slope " + fmt(r.constant("log_slope"));
    return o;
}

Outcome lemma_verifiers() {
    FranklinBasis u(Variant::reconstructed);
    std::vector<ExperimentReport> reports;
    reports.push_back(verify_increment_vs_maximal({}));
    reports.push_back(verify_majorant_lemma(u, {}));
    reports.push_back(verify_kernel_integral(u, {}));
    reports.push_back(verify_haar_of_deltaU(u, {}));
    reports.push_back(verify_monotone_majorant({}));
    Outcome o;
    o.pass = true;
    for (const auto& r : reports) {
        const bool ok = r.verdict == "pass" && r.has("trials") && r.constant("trials") >= 1000;
        o.pass = o.pass && ok;
        o.detail += (o.detail.empty() ? "" : "; ") + r.anchor + " C=" + fmt(r.constant("constant"));
        if (r.has("variation")) o.detail += " var=" + fmt(r.constant("variation"));
    }
    return o;
}

Outcome annihilation() {
    FranklinBasis u(Variant::reconstructed);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const int n = 1 + t % 6;
        std::vector<double> grid(std::size_t{1} << n);
        for (double& v : grid) v = normal(rng);
        const auto f = PiecewiseLinear::from_uniform_grid(n, grid, grid[0]);
        for (int m = n; m <= 8; ++m) worst = std::max(worst, l2_norm(block_projection(u, f, m)));
    }
    return {worst <= 1e-8, "max ||block_m f||_2 = " + fmt(worst) + " over 50 functions, m >= n up to 8"};
}

Outcome main_lemma() {
    FranklinBasis u(Variant::reconstructed);
    const auto r = verify_main_lemma(u, {});
    Outcome o;
    o.pass = r.verdict == "pass" && std::isfinite(r.constant("max_min_ratio")) &&
             r.constant("cv_min_ratio") <= 0.5 && r.constant("min_below_average") == 1.0;
    o.detail = "cv " + fmt(r.constant("cv_min_ratio")) + ", max of minima " + fmt(r.constant("max_min_ratio"));
    return o;
}

Outcome good_lambda() {
    const auto start = std::chrono::steady_clock::now();
    const auto r = verify_cww({});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Outcome o;
    const bool fitted = r.has("c") && r.has("r2");
    o.pass = r.verdict == "pass" && fitted && r.constant("c") > 0 && r.constant("r2") >= 0.8 &&
             secs <= 600.0;
    o.detail = fitted ? "c " + fmt(r.constant("c")) + ", R^2 " + fmt(r.constant("r2")) + ", " +
                            fmt(secs) + " s"
                      : "no fit";
    return o;
}

Outcome growth() {
    Outcome o;
    o.pass = true;
    auto add = [&](const GrowthConfig& cfg, const std::string& label, bool full_check) {
        const auto est = run_maximal_bound(cfg);
        const bool ok = est.band <= 4.0 && (!full_check || (est.monotone && est.max_upper_factor <= 3.0));
        o.pass = o.pass && ok;
        o.detail += (o.detail.empty() ? "" : "; ") + label + " band " + fmt(est.band) +
                    (full_check ? " upper/lower " + fmt(est.max_upper_factor) : "");
    };
    GrowthConfig g;
    for (FamilyMode m : {FamilyMode::mon, FamilyMode::sng}) {
        g.mode = m;
        add(g, "franklin " + to_string(m), true);
    }
    g.mode = FamilyMode::full;
    g.subsets = true;
    add(g, "franklin subsets", true);
    GrowthConfig h;
    h.system = SystemKind::haar;
    h.mode = FamilyMode::full;
    for (double p : {1.5, 3.0}) {
        h.p = p;
        add(h, "haar p=" + fmt(p), false);
    }
    return o;
}

Outcome convergence_demo() {
    FranklinBasis f(Variant::classical);
    const auto r = demo_convergence(f, {});
    Outcome o;
    o.pass = r.constant("increment_at_last_block") < 1e-3 && r.constant("bound_dominates") == 1.0;
    o.detail = "increment at k=10 " + fmt(r.constant("increment_at_last_block")) + " (limit 1e-3), bound dominates " +
               (r.constant("bound_dominates") == 1.0 ? "yes" : "no");
    return o;
}

Outcome multipliers() {
    const auto log = check_reciprocal_series(parse_power_log("log"), 1000000);
    const auto ll = check_reciprocal_series(parse_power_log("log*loglog^2"), 1000000);
    Outcome o;
    o.pass = log.verdict == SeriesVerdict::diverges && ll.verdict == SeriesVerdict::converges;
    o.detail = "log " + to_string(log.verdict) + ", log*loglog^2 " + to_string(ll.verdict) + " in [" + fmt(ll.lower) +
               ", " + fmt(ll.upper) + "]";
    return o;
}

// max_k |g_k| evaluated from haar_function on a fine midpoint grid.
double exhaustive_ratio(const DominatedFamily& fam, double p) {
    const std::size_t pool = fam.base.size();
    const std::size_t samples = 1 << 8;
    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double x = (static_cast<double>(s) + 0.5) / static_cast<double>(samples);
        std::vector<double> h(pool);
        for (std::size_t j = 0; j < pool; ++j) h[j] = haar_function(static_cast<int>(j) + 1)(x);
        double g = 0.0, e = 0.0;
        for (std::size_t j = 0; j < pool; ++j) g += fam.base[j] * h[j];
        for (std::size_t k = 0; k < fam.members(); ++k) {
            double v = 0.0;
            if (fam.mode == FamilyMode::full) {
                for (std::size_t j = 0; j < pool; ++j) v += fam.multipliers[k][j] * fam.base[j] * h[j];
            } else {
                for (int i = 0; i < fam.cuts[k]; ++i) {
                    const auto j = static_cast<std::size_t>(fam.order[static_cast<std::size_t>(i)]);
                    v += fam.base[j] * h[j];
                }
            }
            e = std::max(e, std::fabs(v));
        }
        num += std::pow(e, p);
        den += std::pow(std::fabs(g), p);
    }
    return std::pow(num / den, 1.0 / p);
}

Outcome brute_force_oracle() {
    double worst = 0.0;
    int checked = 0;
    for (FamilyMode m : {FamilyMode::sng, FamilyMode::mon, FamilyMode::full}) {
        for (double p : {1.5, 2.0, 3.0}) {
            GrowthConfig cfg;
            cfg.system = SystemKind::haar;
            cfg.mode = m;
            cfg.p = p;
            cfg.sizes = {2, 4, 8, 16};
            for (const auto& pt : run_maximal_bound(cfg).points) {
                if (!pt.family) return {false, "family not kept at n = " + std::to_string(pt.n)};
                worst = std::max(worst, std::fabs(pt.r_search - exhaustive_ratio(*pt.family, p)));
                ++checked;
            }
        }
    }
    return {worst <= 1e-10, "max deviation " + fmt(worst) + " over " + std::to_string(checked) + " families"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"basis correctness", basis_correctness},
        {"exponential decay", exponential_decay},
        {"block bound", block_bound},
        {"lemma verifiers", lemma_verifiers},
        {"annihilation", annihilation},
        {"damped square function", main_lemma},
        {"good-lambda decay", good_lambda},
        {"sqrt(log n) growth", growth},
        {"convergence demo", convergence_demo},
        {"multiplier conditions", multipliers},
        {"brute-force oracle", brute_force_oracle},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("criterion %2zu %-24s %s  %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria pass\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
