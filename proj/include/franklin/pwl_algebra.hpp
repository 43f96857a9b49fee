#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace franklin {

/// Function on the torus [0,1), linear between breakpoints, with at most one
/// jump, located at 0. values[i] is the right limit at breakpoints[i]; the
/// last piece runs from the last breakpoint up to 1 and ends at the left
/// limit f(0-).
class PiecewiseLinear {
public:
    PiecewiseLinear();
    PiecewiseLinear(std::vector<double> breakpoints, std::vector<double> values,
                    std::optional<double> left_limit_at_zero = std::nullopt);

    static PiecewiseLinear constant(double c);
    /// Samples on the uniform grid i / 2^level; `grid` holds 2^level values and
    /// `end` is f(0-).
    static PiecewiseLinear from_uniform_grid(int level, std::vector<double> grid, double end);

    [[nodiscard]] const std::vector<double>& breakpoints() const { return knots_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] double left_limit_at_zero() const { return end_; }
    [[nodiscard]] bool is_continuous() const { return values_.front() == end_; }
    [[nodiscard]] std::size_t pieces() const { return knots_.size(); }

    [[nodiscard]] double piece_start(std::size_t i) const { return knots_[i]; }
    [[nodiscard]] double piece_length(std::size_t i) const;
    [[nodiscard]] double piece_end_value(std::size_t i) const;

    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] double evaluate_left(double x) const;

    /// Index of the piece containing x in [0,1).
    [[nodiscard]] std::size_t piece_index(double x) const;
    [[nodiscard]] double integral() const;

    /// Breakpoints contained in the node set Pi_n.
    [[nodiscard]] bool in_L(int n) const;
    /// In L_n and continuous at 0.
    [[nodiscard]] bool in_L_bar(int n) const;

    /// Values at the 2^level + 1 points i / 2^level, the last one being f(0-).
    /// Exact when every breakpoint lies on that grid.
    [[nodiscard]] std::vector<double> grid_values(int level) const;
    /// Adds coeff * f at the grid points (size 2^level + 1, as grid_values).
    void accumulate_on_grid(double coeff, int level, std::span<double> out) const;

    /// Finest level L with all breakpoints on the 2^-L grid; nullopt if none <= 52.
    [[nodiscard]] std::optional<int> dyadic_resolution() const;

    /// Drops breakpoints where the function is linear across (except 0).
    [[nodiscard]] PiecewiseLinear simplified(double tol = 0.0) const;

private:
    std::vector<double> knots_;
    std::vector<double> values_;
    double end_ = 0.0;
};

/// Right-continuous step function on the torus; values[i] holds on
/// [breakpoints[i], breakpoints[i+1]).
class StepFunction {
public:
    StepFunction();
    StepFunction(std::vector<double> breakpoints, std::vector<double> values);

    static StepFunction constant(double c);
    /// Indicator of [a, b) on the torus (wraps when b < a).
    static StepFunction indicator(double a, double b);

    [[nodiscard]] const std::vector<double>& breakpoints() const { return knots_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] std::size_t pieces() const { return knots_.size(); }
    [[nodiscard]] double piece_start(std::size_t i) const { return knots_[i]; }
    [[nodiscard]] double piece_length(std::size_t i) const;

    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] std::size_t piece_index(double x) const;
    [[nodiscard]] double integral() const;
    [[nodiscard]] bool in_S(int n) const;
    [[nodiscard]] std::optional<int> dyadic_resolution() const;
    /// Merges neighbouring pieces with equal values.
    [[nodiscard]] StepFunction simplified() const;

private:
    std::vector<double> knots_;
    std::vector<double> values_;
};

[[nodiscard]] double evaluate(const PiecewiseLinear& f, double x);
[[nodiscard]] double evaluate(const StepFunction& f, double x);
[[nodiscard]] double evaluate_left(const PiecewiseLinear& f, double x);
[[nodiscard]] double evaluate_left(const StepFunction& f, double x);

[[nodiscard]] double inner_product(const PiecewiseLinear& f, const PiecewiseLinear& g);
[[nodiscard]] double inner_product(const PiecewiseLinear& f, const StepFunction& g);
[[nodiscard]] double inner_product(const StepFunction& f, const PiecewiseLinear& g);
[[nodiscard]] double inner_product(const StepFunction& f, const StepFunction& g);

[[nodiscard]] PiecewiseLinear combine(double alpha, const PiecewiseLinear& f, double beta,
                                      const PiecewiseLinear& g);
[[nodiscard]] StepFunction combine(double alpha, const StepFunction& f, double beta,
                                   const StepFunction& g);
/// Sum of coeffs[i] * fs[i] on the common refinement.
[[nodiscard]] PiecewiseLinear linear_combination(std::span<const PiecewiseLinear* const> fs,
                                                 std::span<const double> coeffs);
/// |f|, with a breakpoint inserted at each sign change inside a piece.
[[nodiscard]] PiecewiseLinear abs(const PiecewiseLinear& f);
[[nodiscard]] StepFunction abs(const StepFunction& f);

[[nodiscard]] double l2_norm(const PiecewiseLinear& f);
[[nodiscard]] double l2_norm(const StepFunction& f);
[[nodiscard]] double lp_norm(const PiecewiseLinear& f, double p);
[[nodiscard]] double lp_norm(const StepFunction& f, double p);
/// Integral of |f|^p over one linear piece running from a to b over length len.
[[nodiscard]] double linear_piece_abs_power(double a, double b, double len, double p);

/// Prefix integrals for repeated integration over intervals of the torus.
class Antiderivative {
public:
    explicit Antiderivative(const PiecewiseLinear& f);
    explicit Antiderivative(const StepFunction& f);

    /// Integral over [0, x] for x in [0,1].
    [[nodiscard]] double at(double x) const;
    /// Integral over the torus arc starting at a with length len in [0,1].
    [[nodiscard]] double over_arc(double a, double len) const;
    [[nodiscard]] double total() const { return prefix_.back(); }

private:
    std::vector<double> knots_;
    std::vector<double> start_;
    std::vector<double> slope_;
    std::vector<double> prefix_;
};

nlohmann::json to_json(const PiecewiseLinear& f);
nlohmann::json to_json(const StepFunction& f);
PiecewiseLinear piecewise_linear_from_json(const nlohmann::json& j);
StepFunction step_function_from_json(const nlohmann::json& j);

}  // namespace franklin
