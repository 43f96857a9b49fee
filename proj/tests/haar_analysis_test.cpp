#include "franklin/haar_analysis.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace franklin {
namespace {

PiecewiseLinear random_pl(std::mt19937_64& rng, int level, bool continuous) {
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> grid(std::size_t{1} << level);
    for (double& v : grid) v = N(rng);
    return PiecewiseLinear::from_uniform_grid(level, grid, continuous ? grid[0] : N(rng));
}

StepFunction random_step(std::mt19937_64& rng, int level) {
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> knots(std::size_t{1} << level), vals(knots.size());
    for (std::size_t i = 0; i < knots.size(); ++i) {
        knots[i] = std::ldexp(static_cast<double>(i), -level);
        vals[i] = N(rng);
    }
    return StepFunction(knots, vals);
}

// Best average of |f| over closed arcs containing x whose endpoints lie in
// the 2^-level grid or among the breakpoints of |f|, by exhaustive enumeration.
template <class F>
double brute_maximal(const F& f, double x, int level) {
    auto g = abs(f);
    Antiderivative A(g);
    std::vector<double> pts;
    for (int i = 0; i < (1 << level); ++i) pts.push_back(std::ldexp(static_cast<double>(i), -level));
    for (double k : g.breakpoints()) pts.push_back(k);
    pts.push_back(x);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double best = std::abs(g(x));
    for (double a : pts)
        for (double b : pts) {
            double len = wrap_unit(b - a);
            if (len == 0.0) len = 1.0;
            if (wrap_unit(x - a) > len) continue;
            best = std::max(best, A.over_arc(a, len) / len);
        }
    return best;
}

TEST(HaarPartialSum, Examples) {
    PiecewiseLinear id({0.0}, {0.0}, 1.0);
    auto h = haar_partial_sum(id, 1, Dyadic());
    EXPECT_DOUBLE_EQ(h(0.1), 0.25);
    EXPECT_DOUBLE_EQ(h(0.6), 0.75);
    auto c = haar_partial_sum(PiecewiseLinear::constant(2.5), 3, Dyadic(1, 4));
    for (double x : {0.0, 0.3, 0.9}) EXPECT_DOUBLE_EQ(c(x), 2.5);
    auto q = haar_partial_sum(StepFunction::indicator(0.0, 0.5), 2, Dyadic(1, 2));
    EXPECT_DOUBLE_EQ(q(0.3), 1.0);
    EXPECT_DOUBLE_EQ(q(0.6), 0.0);
    EXPECT_DOUBLE_EQ(q(0.8), 0.0);
    EXPECT_DOUBLE_EQ(q(0.1), 1.0);
}

TEST(HaarPartialSum, PartitionExactness) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 30; ++t) {
        auto f = random_pl(rng, 5, t % 2 == 0);
        Dyadic xi(static_cast<std::int64_t>(rng() % 64), 6);
        for (int n = 0; n <= 7; ++n) EXPECT_NEAR(haar_partial_sum(f, n, xi).integral(), f.integral(), 1e-13);
    }
}

TEST(HaarIncrement, Examples) {
    for (int n = 1; n <= 5; ++n) {
        auto d = haar_increment(PiecewiseLinear::constant(3.0), n, Dyadic(3, 3));
        for (double v : d.values()) EXPECT_NEAR(v, 0.0, 1e-15);
    }
    StepFunction h({0.0, 0.5}, {1.0, -1.0});
    auto d1 = haar_increment(h, 1, Dyadic());
    EXPECT_DOUBLE_EQ(d1(0.2), 1.0);
    EXPECT_DOUBLE_EQ(d1(0.7), -1.0);
    for (int n = 2; n <= 5; ++n) {
        auto d = haar_increment(h, n, Dyadic());
        for (double v : d.values()) EXPECT_EQ(v, 0.0);
    }
    EXPECT_EQ(haar_increment(h, 0, Dyadic())(0.3), 0.0);
}

TEST(HaarExpansion, TelescopesAndIsOrthogonal) {
    std::mt19937_64 rng(4);
    auto f = random_step(rng, 6);
    auto g = random_pl(rng, 4, false);
    Dyadic xi(5, 6);
    auto ef = haar_expansion(f, xi, 6);
    auto eg = haar_expansion(g, xi, 6);
    StepFunction sum = ef.mean;
    for (const auto& d : ef.increments) sum = combine(1.0, sum, 1.0, d);
    auto finest = haar_partial_sum(f, 6, xi);
    for (double x : {0.01, 0.3, 0.55, 0.97}) EXPECT_NEAR(sum(x), finest(x), 1e-13);
    for (std::size_t m = 0; m < 6; ++m)
        for (std::size_t n = 0; n < 6; ++n)
            if (m != n) EXPECT_NEAR(inner_product(ef.increments[m], eg.increments[n]), 0.0, 1e-12);
    for (int n = 1; n <= 6; ++n) {
        auto direct = haar_increment(g, n, xi);
        for (double x : {0.02, 0.4, 0.81}) EXPECT_NEAR(direct(x), eg.increments[n - 1](x), 1e-13);
    }
}

TEST(HaarExpansion, StepFunctionsHaveFiniteExpansions) {
    std::mt19937_64 rng(8);
    auto f = random_step(rng, 4);
    Dyadic xi(3, 4);
    auto e = haar_expansion(f, xi, 8);
    for (int n = 5; n <= 8; ++n) {
        const auto& d = e.increments[static_cast<std::size_t>(n - 1)];
        for (double v : d.values()) EXPECT_NEAR(v, 0.0, 1e-13);
    }
}

TEST(SquareFunction, Examples) {
    auto s0 = square_function(StepFunction::constant(2.0), Dyadic());
    for (double v : s0.values()) EXPECT_EQ(v, 0.0);
    StepFunction h({0.0, 0.5}, {1.0, -1.0});
    auto s = square_function(h, Dyadic());
    for (double x : {0.1, 0.6, 0.9}) EXPECT_DOUBLE_EQ(s(x), 1.0);
}

TEST(SquareFunction, PythagorasForStepAndLinearInputs) {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 20; ++t) {
        Dyadic xi(static_cast<std::int64_t>(rng() % 32), 5);
        auto f = random_step(rng, 5);
        double var = std::pow(l2_norm(f), 2) - std::pow(f.integral(), 2);
        EXPECT_NEAR(std::pow(l2_norm(square_function(f, xi)), 2), var, 1e-12);
        auto g = random_pl(rng, 4, t % 2 == 0);
        double varg = std::pow(l2_norm(g), 2) - std::pow(g.integral(), 2);
        EXPECT_NEAR(std::pow(l2_norm(square_function(g, xi)), 2), varg, 1e-12);
    }
}

TEST(SquareFunction, LinearTailMatchesTruncatedSum) {
    PiecewiseLinear id({0.0}, {0.0}, 1.0);
    auto exact = square_function(id, Dyadic());
    double s2 = 0.0;
    for (int n = 1; n <= 16; ++n) {
        double d = haar_increment(id, n, Dyadic())(0.3);
        s2 += d * d;
    }
    EXPECT_NEAR(exact(0.3), std::sqrt(s2), 1e-9);
}

TEST(DyadicMaximal, ExamplesAndDominance) {
    auto one = dyadic_maximal(StepFunction::constant(1.0), Dyadic(1, 3));
    for (double v : one.values()) EXPECT_DOUBLE_EQ(v, 1.0);
    auto chi = dyadic_maximal(StepFunction::indicator(0.0, 0.5), Dyadic());
    for (double x : {0.0, 0.2, 0.49}) EXPECT_DOUBLE_EQ(chi(x), 1.0);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto f = random_pl(rng, 4, false);
    Dyadic xi(3, 5);
    auto md = dyadic_maximal(f, xi, 9);
    auto mf = maximal_function(f, 7);
    for (int s = 0; s < 300; ++s) {
        double x = U(rng);
        EXPECT_LE(md(x), mf.upper(x) + 1e-12);
    }
    auto g = random_step(rng, 5);
    auto mg = dyadic_maximal(g, xi);
    for (int s = 0; s < 300; ++s) {
        double x = U(rng);
        EXPECT_GE(mg(x) + 1e-12, std::abs(g(x)));
    }
}

TEST(MaximalFunction, Examples) {
    auto one = maximal_function(PiecewiseLinear::constant(1.0), 4);
    EXPECT_NEAR(one.lower(0.3), 1.0, 1e-14);
    EXPECT_NEAR(one.upper(0.3), 1.0, 1e-14);
    auto chi = maximal_function(StepFunction::indicator(0.0, 0.5), 4);
    EXPECT_DOUBLE_EQ(chi.lower(0.25), 1.0);
    EXPECT_NEAR(chi.lower(0.75), 2.0 / 3.0, 1e-14);
    EXPECT_GE(chi.upper(0.75), 2.0 / 3.0);
    auto fine = maximal_function(StepFunction::indicator(0.0, 0.5), 10);
    EXPECT_NEAR(fine.lower(0.75), 2.0 / 3.0, 1e-14);
    EXPECT_NEAR(fine.upper(0.75), 2.0 / 3.0, 2e-3);
    EXPECT_NEAR(brute_maximal(StepFunction::indicator(0.0, 0.5), 0.75, 8), 2.0 / 3.0, 1e-12);
}

TEST(MaximalFunction, BoundsBracketBruteForce) {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 6; ++t) {
        auto f = random_pl(rng, 3, t % 2 == 0);
        auto m = maximal_function(f, 4);
        for (int s = 0; s < 12; ++s) {
            double x = s < 4 ? std::ldexp(static_cast<double>(rng() % 16), -4) : U(rng);
            EXPECT_LE(m.lower(x), brute_maximal(f, x, 7) + 1e-12);
            if (s < 4) EXPECT_GE(m.lower(x) + 1e-12, brute_maximal(f, x, 4));
            EXPECT_GE(m.upper(x) + 1e-12, brute_maximal(f, x, 7));
        }
        auto g = random_step(rng, 3);
        auto mg = maximal_function(g, 3);
        for (int i = 0; i < 8; ++i) {
            double mid = (i + 0.5) / 8.0;
            EXPECT_LE(mg.lower(mid), brute_maximal(g, mid, 6) + 1e-12);
            EXPECT_GE(mg.upper(mid) + 1e-12, brute_maximal(g, mid, 6));
            double node = i / 8.0;
            EXPECT_NEAR(mg.lower(node), brute_maximal(g, node, 6), 1e-12);
        }
    }
}

TEST(MaximalFunction, ScalesLinearly) {
    std::mt19937_64 rng(15);
    auto f = random_pl(rng, 3, false);
    auto m1 = maximal_function(f, 5);
    auto m2 = maximal_function(combine(1e3, f, 0.0, f), 5);
    for (double x : {0.1, 0.5, 0.8}) EXPECT_NEAR(m2.lower(x), 1e3 * m1.lower(x), 1e-9);
}

TEST(FourPointMaximal, Examples) {
    auto one = PiecewiseLinear::constant(1.0);
    auto v = four_point_maximal(one, 0.3, 2, Dyadic(1, 3), 4);
    EXPECT_NEAR(v.lower, 4.0, 1e-13);
    EXPECT_NEAR(v.upper, 4.0, 1e-13);
    std::mt19937_64 rng(16);
    auto f = random_pl(rng, 3, false);
    auto m = maximal_function(f, 5);
    auto fp = four_point_maximal(m, 0.0, 1, Dyadic());
    double direct = m.lower(0.0) + m.lower(0.0) + m.lower(0.5) + m.lower(0.5);
    EXPECT_DOUBLE_EQ(fp.lower, direct);
}

TEST(HaarSystem, OrthonormalAndSeriesMatchesSum) {
    for (int i = 1; i <= 32; ++i)
        for (int j = i; j <= 32; ++j)
            EXPECT_NEAR(inner_product(haar_function(i), haar_function(j)), i == j ? 1.0 : 0.0, 1e-14);
    std::vector<double> c{0.3, -1.0, 2.0, 0.5, -0.25, 1.5, 0.0, 0.7};
    auto s = haar_series(c);
    for (double x : {0.05, 0.3, 0.62, 0.9}) {
        double direct = 0.0;
        for (std::size_t n = 1; n <= c.size(); ++n) direct += c[n - 1] * haar_function(static_cast<int>(n))(x);
        EXPECT_NEAR(s(x), direct, 1e-14);
    }
    EXPECT_TRUE(haar_function(6).in_S(6));
    EXPECT_FALSE(haar_function(6).in_S(5));
}

}  // namespace
}  // namespace franklin
