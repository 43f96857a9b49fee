#pragma once

#include <optional>
#include <vector>

#include "franklin/pwl_algebra.hpp"
#include "franklin/torus_mesh.hpp"

namespace franklin {

/// Averages of f over the 2^level intervals of the shifted dyadic grid.
[[nodiscard]] StepFunction haar_partial_sum(const PiecewiseLinear& f, int level, Dyadic shift);
[[nodiscard]] StepFunction haar_partial_sum(const StepFunction& f, int level, Dyadic shift);

/// H_level - H_{level-1}; H_0 for level 0.
[[nodiscard]] StepFunction haar_increment(const PiecewiseLinear& f, int level, Dyadic shift);
[[nodiscard]] StepFunction haar_increment(const StepFunction& f, int level, Dyadic shift);

struct HaarExpansion {
    Dyadic shift;
    int max_level = 0;
    StepFunction mean;                       // H_0
    std::vector<StepFunction> increments;    // increments[n-1] = level-n increment
};

[[nodiscard]] HaarExpansion haar_expansion(const PiecewiseLinear& f, Dyadic shift, int max_level);
[[nodiscard]] HaarExpansion haar_expansion(const StepFunction& f, Dyadic shift, int max_level);

/// Level from which the shifted partial sums of f stop changing (step f), or
/// from which f is linear on every cell (piecewise-linear f).
[[nodiscard]] int resolved_level(const PiecewiseLinear& f, Dyadic shift);
[[nodiscard]] int resolved_level(const StepFunction& f, Dyadic shift);

/// Square function (sum over n >= 1 of |increment_n|^2)^{1/2}, exact. For
/// piecewise-linear f the increments never vanish; beyond the resolved level N
/// they sum to slope^2 4^{-N-1} / 3 on each level-N cell.
[[nodiscard]] StepFunction square_function(const PiecewiseLinear& f, Dyadic shift);
[[nodiscard]] StepFunction square_function(const StepFunction& f, Dyadic shift);
/// Square function truncated to levels 1..max_level.
[[nodiscard]] StepFunction square_function(const StepFunction& f, Dyadic shift, int max_level);

/// sup over levels n >= 1 of the average of |f| over the level-n shifted
/// interval containing x. Exact for step functions; for piecewise-linear f the
/// sup runs over levels up to the resolved level (or max_level if larger).
[[nodiscard]] StepFunction dyadic_maximal(const PiecewiseLinear& f, Dyadic shift,
                                          std::optional<int> max_level = std::nullopt);
[[nodiscard]] StepFunction dyadic_maximal(const StepFunction& f, Dyadic shift,
                                          std::optional<int> max_level = std::nullopt);

/// Hardy-Littlewood maximal function of |f| on candidate points: the uniform
/// grid of the chosen level plus every breakpoint of |f|. Cell c is
/// [points[c], points[c+1]) (the last one wraps to 1). Lower values are
/// attained averages; upper values are certified bounds over all intervals.
class MaximalFunction {
public:
    [[nodiscard]] const std::vector<double>& points() const { return points_; }
    [[nodiscard]] double lower(double x) const;
    [[nodiscard]] double upper(double x) const;
    /// Bounds valid for every point of the closed arc from a to b (length <= 1).
    [[nodiscard]] double lower_min_over(double a, double b) const;
    [[nodiscard]] double upper_max_over(double a, double b) const;
    [[nodiscard]] const std::vector<double>& lower_on_cells() const { return lower_cell_; }
    [[nodiscard]] const std::vector<double>& upper_on_cells() const { return upper_cell_; }
    [[nodiscard]] const std::vector<double>& lower_at_points() const { return lower_point_; }
    [[nodiscard]] const std::vector<double>& upper_at_points() const { return upper_point_; }

private:
    friend MaximalFunction build_maximal(std::vector<double> points, std::vector<double> left_abs,
                                         std::vector<double> right_abs);
    std::vector<double> points_;
    std::vector<double> lower_cell_, upper_cell_;
    std::vector<double> lower_point_, upper_point_;
};

[[nodiscard]] MaximalFunction maximal_function(const PiecewiseLinear& f, int grid_level);
[[nodiscard]] MaximalFunction maximal_function(const StepFunction& f, int grid_level);

struct FourPointValue {
    double lower = 0.0;
    double upper = 0.0;
};

/// M(a) + M(-a) + M(b) + M(-b) for the endpoints a, b of the level-n shifted
/// interval containing x.
[[nodiscard]] FourPointValue four_point_maximal(const MaximalFunction& m, double x, int level, Dyadic shift);
[[nodiscard]] FourPointValue four_point_maximal(const PiecewiseLinear& f, double x, int level, Dyadic shift,
                                                int grid_level);

/// L2-normalized Haar function on the Franklin node hierarchy: h_1 = 1 and,
/// for n = 2^k + j, +2^{k/2} on the left half and -2^{k/2} on the right half of
/// [(j-1)/2^k, j/2^k).
[[nodiscard]] StepFunction haar_function(int n);
/// Finest level of h_n.
[[nodiscard]] int haar_level(int n);
/// sum_{n=1}^{count} coeffs[n-1] h_n as a step function on the uniform grid.
[[nodiscard]] StepFunction haar_series(const std::vector<double>& coeffs);

}  // namespace franklin
