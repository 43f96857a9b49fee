#pragma once

#include <deque>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "franklin/pwl_algebra.hpp"

namespace franklin {

enum class Variant { classical, periodic, reconstructed };

[[nodiscard]] std::string to_string(Variant v);
[[nodiscard]] Variant parse_variant(const std::string& name);

/// First valid index: 0 for classical and reconstructed, 1 for periodic.
[[nodiscard]] int first_index(Variant v);

/// Normalized element of L_n orthogonal to L_{n-1} (classical), of the
/// continuous subspace (periodic), or its even folding u_n (reconstructed).
/// Sign convention: positive at the newly added node for n >= 2.
[[nodiscard]] PiecewiseLinear franklin_function(int n, Variant v);

/// u(x) = f(2x) on [0,1/2), f(2 - 2x) on [1/2,1), u(1/2) = f(0-).
[[nodiscard]] PiecewiseLinear fold_to_torus(const PiecewiseLinear& f);
[[nodiscard]] PiecewiseLinear reconstruct_u(int n);

/// Finest dyadic level carrying the breakpoints of function n of a variant.
[[nodiscard]] int grid_level(Variant v, int n);

/// Append-only, thread-safe cache of one Franklin variant.
class FranklinBasis {
public:
    explicit FranklinBasis(Variant v);
    FranklinBasis(const FranklinBasis&) = delete;
    FranklinBasis& operator=(const FranklinBasis&) = delete;

    [[nodiscard]] Variant variant() const { return variant_; }
    [[nodiscard]] int first() const { return first_index(variant_); }

    /// Function with index n; builds and memoizes all indices up to n.
    const PiecewiseLinear& function(int n);
    const PiecewiseLinear& operator[](int n) { return function(n); }
    void ensure(int max_n);
    [[nodiscard]] int computed() const;

    /// max |<f_i, f_j> - delta_ij| over first() <= i, j <= max_n.
    double gram_deviation(int max_n);

private:
    Variant variant_;
    mutable std::shared_mutex mutex_;
    std::deque<PiecewiseLinear> functions_;
};

/// Inclusive index range [lo, hi] of block m: lo = 2^{m-1} + 1, hi = 2^m for m >= 1, {1} for m = 0.
struct IndexBlock {
    int lo = 1;
    int hi = 1;
};
[[nodiscard]] IndexBlock block_range(int m);
/// Dyadic level carrying every function of blocks 0..m.
[[nodiscard]] int block_grid_level(Variant v, int m);

/// Coefficients <f, phi_j> for j in block m.
[[nodiscard]] std::vector<double> block_coefficients(FranklinBasis& basis, const PiecewiseLinear& f, int m);
[[nodiscard]] std::vector<double> block_coefficients(FranklinBasis& basis, const StepFunction& f, int m);

/// sum_j coeffs[j - lo] phi_j for consecutive indices starting at lo, assembled on the
/// uniform grid of the highest index.
[[nodiscard]] PiecewiseLinear expand(FranklinBasis& basis, int lo, const std::vector<double>& coeffs);

/// Block projection: sum over block m of <f, phi_j> phi_j.
[[nodiscard]] PiecewiseLinear block_projection(FranklinBasis& basis, const PiecewiseLinear& f, int m);
[[nodiscard]] PiecewiseLinear block_projection(FranklinBasis& basis, const StepFunction& f, int m);

/// Kernel sum_{k} phi_k(x) phi_k(t) over k <= 2^level (k >= 1 for periodic).
[[nodiscard]] double kernel(FranklinBasis& basis, int level, double x, double t);
[[nodiscard]] PiecewiseLinear kernel_row(FranklinBasis& basis, int level, double x);

struct DecayFit {
    int n = 0;
    bool sufficient = false;
    /// Largest node-to-node ratio |f(next)| / |f(current)| walking away from
    /// the peak node, over steps that start at node distance >= 2.
    double max_ratio = 0.0;
    /// Largest ratio over the first step on either side.
    double near_ratio = 0.0;
    std::vector<double> ratios;
    /// |f_n(x)| <= C sqrt(n) q^{n d(x, t_n)}.
    double C = 0.0;
    double q = 0.0;
    /// |K(x,t)| <= C' N q'^{N d(x,t)} for the kernel with N = 2^level terms.
    int kernel_level = 0;
    double kernel_C = 0.0;
    double kernel_q = 0.0;
};

[[nodiscard]] DecayFit fit_decay(FranklinBasis& basis, int n);

}  // namespace franklin
