#include "franklin/pwl_algebra.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace franklin {
namespace {

const double kS3 = std::sqrt(3.0);

PiecewiseLinear f1() { return PiecewiseLinear({0.0}, {-kS3}, kS3); }
PiecewiseLinear identity() { return PiecewiseLinear({0.0}, {0.0}, 1.0); }

PiecewiseLinear random_pl(std::mt19937_64& rng, int level, bool continuous) {
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> grid(std::size_t{1} << level);
    for (double& v : grid) v = N(rng);
    double end = continuous ? grid[0] : N(rng);
    return PiecewiseLinear::from_uniform_grid(level, grid, end);
}

// Simpson's rule per piece of the common refinement; exact for products of
// two linear functions.
double simpson_inner(const PiecewiseLinear& f, const PiecewiseLinear& g) {
    std::vector<double> knots;
    std::set_union(f.breakpoints().begin(), f.breakpoints().end(), g.breakpoints().begin(),
                   g.breakpoints().end(), std::back_inserter(knots));
    double s = 0.0;
    for (std::size_t i = 0; i < knots.size(); ++i) {
        double a = knots[i];
        double b = i + 1 < knots.size() ? knots[i + 1] : 1.0;
        double m = 0.5 * (a + b);
        double fa = f(a), ga = g(a);
        double fb = f.evaluate_left(b), gb = g.evaluate_left(b);
        s += (b - a) / 6.0 * (fa * ga + 4.0 * f(m) * g(m) + fb * gb);
    }
    return s;
}

TEST(PiecewiseLinear, EvaluateExamples) {
    EXPECT_EQ(PiecewiseLinear::constant(1.0)(0.37), 1.0);
    EXPECT_NEAR(f1()(0.5), 0.0, 1e-15);
    EXPECT_EQ(f1()(0.0), -kS3);
    EXPECT_EQ(f1().evaluate_left(0.0), kS3);
    PiecewiseLinear hat({0.0, 0.25, 0.5}, {0.0, 0.0, 1.0}, 0.0);
    EXPECT_DOUBLE_EQ(hat(0.375), 0.5);
    EXPECT_TRUE(hat.is_continuous());
    EXPECT_FALSE(f1().is_continuous());
}

TEST(PiecewiseLinear, RejectsMalformedInput) {
    EXPECT_THROW(PiecewiseLinear({0.1}, {1.0}), std::invalid_argument);
    EXPECT_THROW(PiecewiseLinear({0.0, 0.5, 0.5}, {1.0, 1.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(PiecewiseLinear({0.0, 1.0}, {1.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(PiecewiseLinear({0.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST(PiecewiseLinear, MembershipInNodeSpaces) {
    PiecewiseLinear hat({0.0, 0.25, 0.5}, {0.0, 0.0, 1.0}, 0.0);
    EXPECT_TRUE(hat.in_L(3));
    EXPECT_TRUE(hat.in_L_bar(3));
    EXPECT_FALSE(hat.in_L(2));
    EXPECT_TRUE(f1().in_L(1));
    EXPECT_FALSE(f1().in_L_bar(1));
}

TEST(InnerProduct, Examples) {
    EXPECT_DOUBLE_EQ(inner_product(PiecewiseLinear::constant(1.0), PiecewiseLinear::constant(1.0)), 1.0);
    EXPECT_NEAR(inner_product(f1(), f1()), 1.0, 1e-15);
    EXPECT_NEAR(inner_product(identity(), identity()), 1.0 / 3.0, 1e-16);
}

TEST(InnerProduct, MatchesSimpsonOracleAndIsSymmetric) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        auto f = random_pl(rng, 3 + t % 4, t % 2 == 0);
        auto g = random_pl(rng, 2 + t % 5, t % 3 == 0);
        EXPECT_NEAR(inner_product(f, g), simpson_inner(f, g), 1e-13);
        EXPECT_DOUBLE_EQ(inner_product(f, g), inner_product(g, f));
        EXPECT_NEAR(l2_norm(f) * l2_norm(f), inner_product(f, f), 1e-13);
    }
}

TEST(InnerProduct, IsBilinear) {
    std::mt19937_64 rng(8);
    auto f = random_pl(rng, 4, false);
    auto g = random_pl(rng, 3, true);
    auto h = random_pl(rng, 5, false);
    double lhs = inner_product(combine(2.0, f, -3.0, g), h);
    double rhs = 2.0 * inner_product(f, h) - 3.0 * inner_product(g, h);
    EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(InnerProduct, StepFunctionsAgreeWithRiemannSum) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> knots(16), a(16), b(16);
    for (int i = 0; i < 16; ++i) {
        knots[i] = i / 16.0;
        a[i] = N(rng);
        b[i] = N(rng);
    }
    StepFunction f(knots, a), g(knots, b);
    double riemann = 0.0;
    for (int i = 0; i < 16; ++i) riemann += a[i] * b[i] / 16.0;
    EXPECT_NEAR(inner_product(f, g), riemann, 1e-15);
    auto p = random_pl(rng, 3, false);
    double mixed = 0.0;
    for (int i = 0; i < 16; ++i) mixed += a[i] * (p(i / 16.0) + p.evaluate_left((i + 1) / 16.0)) / 32.0;
    EXPECT_NEAR(inner_product(p, f), mixed, 1e-14);
}

TEST(Combine, Examples) {
    auto z = combine(1.0, f1(), -1.0, f1());
    for (double x : {0.0, 0.2, 0.7}) EXPECT_EQ(z(x), 0.0);
    EXPECT_EQ(z.left_limit_at_zero(), 0.0);
    auto one = combine(1.0, StepFunction::indicator(0.0, 0.5), 1.0, StepFunction::indicator(0.5, 1.0));
    for (double x : {0.0, 0.3, 0.5, 0.99}) EXPECT_EQ(one(x), 1.0);
}

TEST(Combine, MatchesPointwiseArithmetic) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        auto f = random_pl(rng, 2 + t % 4, false);
        auto g = random_pl(rng, 1 + t % 6, true);
        auto h = combine(0.7, f, -1.3, g);
        for (double x : h.breakpoints()) EXPECT_NEAR(h(x), 0.7 * f(x) - 1.3 * g(x), 1e-13);
        for (int s = 0; s < 64; ++s) {
            double x = U(rng);
            EXPECT_NEAR(h(x), 0.7 * f(x) - 1.3 * g(x), 1e-13);
        }
        EXPECT_NEAR(h.left_limit_at_zero(), 0.7 * f.left_limit_at_zero() - 1.3 * g.left_limit_at_zero(), 1e-14);
    }
}

TEST(Abs, InsertsZeroCrossings) {
    auto a = abs(f1());
    EXPECT_NEAR(a(0.5), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(a(0.0), kS3);
    EXPECT_EQ(a.breakpoints().size(), 2u);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto f = random_pl(rng, 4, false);
    auto af = abs(f);
    for (int s = 0; s < 200; ++s) {
        double x = U(rng);
        EXPECT_NEAR(af(x), std::abs(f(x)), 1e-12);
    }
}

TEST(Norms, Examples) {
    EXPECT_NEAR(lp_norm(PiecewiseLinear::constant(-2.5), 3.0), 2.5, 1e-14);
    EXPECT_NEAR(lp_norm(StepFunction::indicator(0.0, 0.5), 1.5), std::pow(0.5, 1.0 / 1.5), 1e-15);
    EXPECT_THROW((void)lp_norm(f1(), 1.0), std::invalid_argument);
    EXPECT_THROW((void)lp_norm(f1(), INFINITY), std::invalid_argument);
    EXPECT_NEAR(lp_norm(f1(), 2.0), 1.0, 1e-14);
}

TEST(Norms, LinearPieceClosedFormMatchesQuadrature) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> N(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        double a = N(rng), b = N(rng), p = 1.1 + (t % 7) * 0.5;
        if (t % 10 == 0) b = a * (1.0 + 1e-12);
        const int M = 20000;
        double q = 0.0;
        for (int i = 0; i < M; ++i) {
            double x = (i + 0.5) / M;
            q += std::pow(std::abs(a + (b - a) * x), p) / M;
        }
        EXPECT_NEAR(linear_piece_abs_power(a, b, 1.0, p), q, 1e-6 * (1.0 + q));
    }
}

TEST(Antiderivative, ArcIntegrals) {
    Antiderivative A(identity());
    EXPECT_NEAR(A.over_arc(0.25, 0.5), 0.25, 1e-16);
    EXPECT_NEAR(A.over_arc(0.75, 0.5), (0.25 * 0.875) + (0.25 * 0.125), 1e-16);
    EXPECT_NEAR(A.total(), 0.5, 1e-16);
}

TEST(Serialization, RoundTripsExactly) {
    std::mt19937_64 rng(1);
    auto f = random_pl(rng, 5, false);
    auto j = to_json(f);
    EXPECT_EQ(j["breakpoints"][3], nlohmann::json::array({3, 5}));
    auto g = piecewise_linear_from_json(j);
    EXPECT_EQ(g.breakpoints(), f.breakpoints());
    EXPECT_EQ(g.values(), f.values());
    EXPECT_EQ(g.left_limit_at_zero(), f.left_limit_at_zero());
    auto s = StepFunction::indicator(0.25, 0.75);
    auto s2 = step_function_from_json(to_json(s));
    EXPECT_EQ(s2.breakpoints(), s.breakpoints());
}

}  // namespace
}  // namespace franklin
