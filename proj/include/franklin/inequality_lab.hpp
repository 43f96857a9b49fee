#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "franklin/franklin_core.hpp"
#include "franklin/haar_analysis.hpp"
#include "franklin/pwl_algebra.hpp"
#include "franklin/torus_mesh.hpp"

namespace franklin {

// ---------------------------------------------------------------------------
// Experiment plumbing

/// Seed of work item `index` under run seed `base` (splitmix64 of both).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Worker count used by parallel_map: hardware concurrency, at least 1.
[[nodiscard]] unsigned worker_count();

/// fn(i) for i in [0, count), run on worker threads; results keep index order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t count, F&& fn) {
    std::vector<T> out(count);
    const unsigned workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) out[i] = fn(i);
        });
    }
    pool.clear();
    return out;
}

/// Plot-ready numeric table, written as CSV by the command-line runner.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct ExperimentReport {
    std::string id;
    std::string anchor;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> constants;
    /// "pass" or "fail" for verifiers; a classification for the multiplier check.
    std::string verdict = "pass";
    double runtime_ms = 0.0;
    std::vector<std::string> attachments;
    std::vector<Table> tables;
    std::vector<std::string> notes;

    void set(const std::string& name, double value);
    [[nodiscard]] double constant(const std::string& name) const;
    [[nodiscard]] bool has(const std::string& name) const;
    [[nodiscard]] bool failed() const { return verdict == "fail"; }
};

[[nodiscard]] nlohmann::ordered_json to_json(const ExperimentReport& r);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
/// Ordinary least squares y = slope x + intercept.
[[nodiscard]] LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Standard normal vector of the given size, scaled to unit Euclidean norm.
[[nodiscard]] std::vector<double> random_unit_vector(std::size_t size, std::uint64_t seed);

struct AnchorInfo {
    std::string id;
    std::string name;
    std::string summary;
};
/// The anchor identifiers accepted by `verify`, with descriptive names.
[[nodiscard]] const std::vector<AnchorInfo>& anchors();

// ---------------------------------------------------------------------------
// Randomized inequality checks with calibration.
//
// Every sweep verifier draws `calibration_trials` trials, takes the largest
// measured ratio as the calibrated constant, then runs `trials` validation
// trials. A validation trial whose ratio exceeds `threshold_factor` times the
// calibrated constant is a counterexample. The reported constant is the
// maximum over all trials; `variation` is the largest over smallest of the
// per-parameter maxima.

struct SweepConfig {
    int calibration_trials = 200;
    int trials = 1000;
    double threshold_factor = 2.0;
    double max_variation = 3.0;
    std::uint64_t seed = 1;
    /// Multiplies the random input; homogeneous inequalities are invariant.
    double scale = 1.0;
};

// ---------------------------------------------------------------------------
// Block bound for sums of absolute values

/// Gram matrix of |u_n| for n in (2^k, 2^{k+1}], exact.
[[nodiscard]] std::vector<std::vector<double>> block_abs_gram(FranklinBasis& u, int k);
/// ||sum |a_n u_n| ||_2 / ||a||_2 from the Gram matrix of block_abs_gram.
[[nodiscard]] double block_abs_ratio(const std::vector<std::vector<double>>& gram, std::span<const double> a);
/// The same ratio computed directly from the piecewise-linear sum.
[[nodiscard]] double block_abs_ratio_direct(FranklinBasis& u, int k, std::span<const double> a);

struct BlockBoundConfig {
    std::vector<int> levels = {1, 2, 3, 4, 5, 6, 7, 8};
    int trials = 100;
    std::uint64_t seed = 1;
    double max_slope = 0.05;
    double scale = 1.0;
};
[[nodiscard]] ExperimentReport verify_block_bound(FranklinBasis& u, const BlockBoundConfig& cfg);

// ---------------------------------------------------------------------------
// Majorant of block projections of functions supported on an interval

/// lambda(x) = 1 on 2J and min(1, c |J| N q^{N d(x, c_J)}) elsewhere, N = 2^level.
struct Majorant {
    double center = 0.0;
    double length = 0.0;
    double N = 1.0;
    double q = 0.5;
    double c = 1.0;

    [[nodiscard]] bool in_double(double x) const;
    [[nodiscard]] double outside(double x) const;
    [[nodiscard]] double operator()(double x) const;
    /// Lower bound of lambda over the closed arc [a, b] (b - a < 1/2 mod 1).
    [[nodiscard]] double min_over(double a, double b) const;
    [[nodiscard]] double l1_norm() const;
};

[[nodiscard]] Majorant make_majorant(double left, double length, int level, double q, double c);

/// sup_x |block_n(g)(x)| / (lambda(x) + lambda(-x)), with the numerator bounded
/// above and the denominator bounded below on every cell.
[[nodiscard]] double majorant_ratio(const PiecewiseLinear& block_part, const Majorant& lambda);

struct MajorantConfig {
    SweepConfig sweep;
    std::vector<int> levels = {2, 3, 4, 5, 6, 7, 8};
    std::vector<int> length_exponents = {2, 3, 4, 5, 6};
    /// Decay base of lambda; 0 selects sqrt of the fitted kernel decay.
    double q = 0.0;
    double c = 1.0;
};
[[nodiscard]] ExperimentReport verify_majorant_lemma(FranklinBasis& u, const MajorantConfig& cfg);

// ---------------------------------------------------------------------------
// Integrals against unimodal weights

struct MajorantBound {
    double lhs = 0.0;
    double rhs = 0.0;
};
/// |int f lambda| against ||lambda||_1 M(f)(a) for a grid point a of the
/// maximal-function candidate set; lhs is rounded up, rhs rounded down.
[[nodiscard]] MajorantBound monotone_majorant_bound(const PiecewiseLinear& f, const StepFunction& lambda, double a,
                                                    const MaximalFunction& m);

/// Unimodal positive step function on the 2^-level grid, peaking on the cell
/// starting at `peak`; values increase from cell `start` up to the peak.
[[nodiscard]] StepFunction random_unimodal_step(int level, std::uint64_t seed, double& peak);

struct MonotoneMajorantConfig {
    SweepConfig sweep;
    std::vector<int> levels = {2, 3, 4, 5, 6};
};
[[nodiscard]] ExperimentReport verify_monotone_majorant(const MonotoneMajorantConfig& cfg);

// ---------------------------------------------------------------------------
// Haar increments of coarse splines

/// Continuous piecewise-linear function on the 2^-m grid with given node values.
[[nodiscard]] PiecewiseLinear coarse_spline(int m, std::vector<double> nodes);

/// sup_x |H_{n+1,xi}(g) - H_{n,xi}(g)|(x) 2^{n-m} / M(g)(x).
[[nodiscard]] double increment_ratio(const PiecewiseLinear& g, int m, int n, Dyadic xi, const MaximalFunction& mg);

struct IncrementConfig {
    SweepConfig sweep;
    std::vector<int> coarse_levels = {1, 2, 3};
    std::vector<int> gaps = {0, 1, 2, 3, 4, 5, 6};
    int xi_level = 3;
};
[[nodiscard]] ExperimentReport verify_increment_vs_maximal(const IncrementConfig& cfg);

// ---------------------------------------------------------------------------
// Integrals against block projections of indicators

/// |int f block_m(chi_[p,q))| / (2^-m (M f(p) + M f(-p) + M f(q) + M f(-q))).
[[nodiscard]] double kernel_integral_ratio(const StepFunction& f, const PiecewiseLinear& block_indicator, int m,
                                           double p, double q, const MaximalFunction& mf);

struct KernelIntegralConfig {
    SweepConfig sweep;
    std::vector<int> levels = {3, 4, 5, 6, 7};
    /// f is a random step function on the 2^-(m + refine) grid.
    int refine = 2;
};
[[nodiscard]] ExperimentReport verify_kernel_integral(FranklinBasis& u, const KernelIntegralConfig& cfg);

// ---------------------------------------------------------------------------
// Haar averages of block projections

/// sup over level-n cells of |H_{n,xi}(block_part)| / (2^{n-m} M_n f(x, xi)).
[[nodiscard]] double haar_block_ratio(const PiecewiseLinear& block_part, int n, int m, Dyadic xi,
                                      const MaximalFunction& mf);

struct HaarBlockConfig {
    SweepConfig sweep;
    std::vector<int> coarse_levels = {1, 2};
    std::vector<int> gaps = {1, 2, 3, 4, 5};
    int xi_level = 3;
};
[[nodiscard]] ExperimentReport verify_haar_of_deltaU(FranklinBasis& u, const HaarBlockConfig& cfg);

// ---------------------------------------------------------------------------
// Square functions of damped expansions

/// ||sup over patterns of S_xi(sum_k lambda_k b_k u_k)||_2 for each shift;
/// b[k] multiplies u_k, patterns[p][k] multiplies b[k].
[[nodiscard]] std::vector<double> damped_square_norms(FranklinBasis& u, std::span<const double> b,
                                                      const std::vector<std::vector<double>>& patterns,
                                                      std::span<const Dyadic> shifts);

/// All-ones, single-block, partial-sum, alternating-block and random sign patterns.
[[nodiscard]] std::vector<std::vector<double>> multiplier_patterns(std::size_t size, int random_count,
                                                                   std::uint64_t seed);

struct MainLemmaConfig {
    int functions = 50;
    int max_index = 256;
    int xi_level = 3;
    int random_patterns = 8;
    double max_cv = 0.5;
    std::uint64_t seed = 1;
};
[[nodiscard]] ExperimentReport verify_main_lemma(FranklinBasis& u, const MainLemmaConfig& cfg);

// ---------------------------------------------------------------------------
// Good-lambda inequality

struct GoodLambdaMeasure {
    /// |{M > lambda, S < eps lambda}|
    double mu1 = 0.0;
    /// |{M > lambda / 2}|
    double mu2 = 0.0;
};
[[nodiscard]] GoodLambdaMeasure good_lambda_measure(const StepFunction& maximal, const StepFunction& square,
                                                    double lambda, double eps);
/// Smallest t with |{v <= t}| >= fraction.
[[nodiscard]] double measure_quantile(const StepFunction& v, double fraction);

struct CwwConfig {
    int trials = 200;
    int resolution = 8;
    std::vector<double> eps = {0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
    std::vector<double> quantiles = {0.5, 0.7, 0.9};
    int xi_level = 0;
    double min_r2 = 0.8;
    std::uint64_t seed = 1;
    double scale = 1.0;
};
[[nodiscard]] ExperimentReport verify_cww(const CwwConfig& cfg);

// ---------------------------------------------------------------------------
// Maximal functions of dominated families

enum class FamilyMode { sng, mon, full };
[[nodiscard]] std::string to_string(FamilyMode m);
[[nodiscard]] FamilyMode parse_family_mode(const std::string& name);

enum class SystemKind { franklin, haar };
[[nodiscard]] std::string to_string(SystemKind s);
[[nodiscard]] SystemKind parse_system(const std::string& name);

/// Basis functions sampled at the midpoints of a uniform grid. Each row is
/// stored on the window of samples where it exceeds a relative cutoff.
class SampledBasis {
public:
    /// Rows phi_0..phi_{size-1} (Franklin) or h_1..h_size (Haar); the grid is the
    /// finest level of the rows refined by `refine` samples per cell.
    SampledBasis(SystemKind system, int size, int refine, FranklinBasis* cache = nullptr);

    [[nodiscard]] SystemKind system() const { return system_; }
    [[nodiscard]] int size() const { return static_cast<int>(rows_.size()); }
    [[nodiscard]] std::size_t samples() const { return samples_; }
    /// Scale level of row j: k + 1 for Franklin index 2^k + i, k for Haar index 2^k + i.
    [[nodiscard]] int level(int j) const { return levels_[static_cast<std::size_t>(j)]; }
    /// Basis index of row j: 1 + j for Haar, j for Franklin.
    [[nodiscard]] int index(int j) const;
    [[nodiscard]] double x(std::size_t s) const;
    /// value of row j at sample s (zero outside its window).
    [[nodiscard]] double value(int j, std::size_t s) const;
    [[nodiscard]] std::size_t window_begin(int j) const { return begin_[static_cast<std::size_t>(j)]; }
    [[nodiscard]] const std::vector<double>& window(int j) const { return rows_[static_cast<std::size_t>(j)]; }

private:
    SystemKind system_;
    std::size_t samples_ = 0;
    std::vector<int> levels_;
    std::vector<std::size_t> begin_;
    std::vector<std::vector<double>> rows_;
};

/// g = sum_j b_j phi_j and members g_k = sum_j lambda_{k,j} b_j phi_j with
/// |lambda| <= 1. Nested families store an order and cut counts (member k
/// sums the rows order[0..cuts[k])); full families store the multipliers.
struct DominatedFamily {
    FamilyMode mode = FamilyMode::mon;
    std::vector<double> base;
    std::vector<int> order;
    std::vector<int> cuts;
    std::vector<std::vector<double>> multipliers;

    [[nodiscard]] std::size_t members() const;
    /// Coefficients of member k on the basis rows.
    [[nodiscard]] std::vector<double> member(std::size_t k) const;
};

/// ||max_k |g_k| ||_p / ||g||_p over the sample grid.
[[nodiscard]] double evaluate_family(const SampledBasis& basis, const DominatedFamily& family, double p);

struct GrowthConfig {
    SystemKind system = SystemKind::franklin;
    FamilyMode mode = FamilyMode::mon;
    double p = 2.0;
    std::vector<int> sizes = {4, 8, 16, 32, 64, 128, 256, 512, 1024};
    /// Pool of basis rows is pool_factor * n in mon mode, n otherwise.
    int pool_factor = 2;
    int restarts = 3;
    int window = 8;
    int candidates = 3;
    int random_samples = 20;
    /// Sample points per finest grid cell (Franklin); Haar uses one.
    int refine = 4;
    /// Full mode: multipliers in {0, 1} instead of {-1, 1}.
    bool subsets = false;
    /// Square-function split of the best family for n up to this size.
    int diagnostics_max_n = 0;
    /// Constant in eps_n = (c / ln n)^{1/2}.
    double eps_c = 0.25;
    double max_band = 4.0;
    double max_upper_factor = 3.0;
    /// Keep the best family for n up to this size.
    int keep_family_max_n = 16;
    std::uint64_t seed = 1;
};

struct GrowthPoint {
    int n = 0;
    /// Best-so-far over all sizes up to n.
    double r = 0.0;
    /// Best found by the search at this n.
    double r_search = 0.0;
    double r2_over_log = 0.0;
    double upper = 0.0;
    int restarts = 0;
    long long evaluations = 0;
    /// Square-function split: integral of (p*^2 - P^2/eps^2)_+ and ||P||^2/eps^2.
    double a_term = 0.0;
    double b_term = 0.0;
    double p_star_sq = 0.0;
    std::optional<DominatedFamily> family;
};

struct GrowthEstimate {
    GrowthConfig config;
    std::vector<GrowthPoint> points;
    bool monotone = true;
    bool search_monotone = true;
    double band = 0.0;
    double max_upper_factor = 0.0;
    LineFit slope;
};

/// Greedy lower-bound search and random upper-bound sampling for each n.
[[nodiscard]] GrowthEstimate run_maximal_bound(const GrowthConfig& cfg);
[[nodiscard]] ExperimentReport growth_report(const GrowthEstimate& est, const std::string& anchor);

/// Split of ||max_k |g_k| ||_2^2 along P = sup_k S_0(g_k), from the exact member functions.
struct SquareSplit {
    double a_term = 0.0;
    double b_term = 0.0;
    double p_star_sq = 0.0;
};
[[nodiscard]] SquareSplit square_function_split(const SampledBasis& basis, const DominatedFamily& family, double eps);

// ---------------------------------------------------------------------------
// Multiplier sequences w(n) = C n^a (log n)^b (log log n)^c, log base 2

struct PowerLogRule {
    double scale = 1.0;
    double power = 0.0;
    double log_power = 0.0;
    double loglog_power = 0.0;

    [[nodiscard]] double operator()(double n) const;
    [[nodiscard]] std::string to_string() const;
};
/// Parses products of factors such as "log", "log*loglog^2", "n^0.5", "2*log^1.5".
[[nodiscard]] PowerLogRule parse_power_log(const std::string& text);

enum class SeriesVerdict { converges, diverges, inconclusive };
[[nodiscard]] std::string to_string(SeriesVerdict v);

struct SeriesCheck {
    SeriesVerdict verdict = SeriesVerdict::inconclusive;
    long long first = 1;
    long long cutoff = 0;
    double partial_sum = 0.0;
    /// Integral-test bracket for the full sum.
    double lower = 0.0;
    double upper = 0.0;
};

/// sum_{n >= first} 1 / (n rule(n)) up to the cutoff, with integral-test
/// brackets for the tail and the classification of the series.
[[nodiscard]] SeriesCheck check_reciprocal_series(const PowerLogRule& rule, long long cutoff);

[[nodiscard]] ExperimentReport check_multiplier_condition(const PowerLogRule& w, long long cutoff);

// ---------------------------------------------------------------------------
// Maxima of partial sums over dyadic blocks

/// a_k = C k^{-alpha} (log2(k + 1))^{-beta}, or a single nonzero coefficient.
struct CoefficientRule {
    double scale = 1.0;
    double alpha = 0.5;
    double beta = 1.1;
    int single = 0;

    [[nodiscard]] double operator()(int k) const;
};
/// "power:alpha,beta", "zero", "single:j" or "scale*power:alpha,beta".
[[nodiscard]] CoefficientRule parse_coefficient_rule(const std::string& text);

struct ConvergenceConfig {
    CoefficientRule coefficients;
    PowerLogRule multiplier = parse_power_log("log");
    int blocks = 10;
    /// 0 keeps the natural order; otherwise a seeded rearrangement of indices.
    std::uint64_t rearrangement_seed = 0;
    /// Indices grouped into polynomials of this many basis functions.
    int group = 1;
    double max_increment = 1e-3;
    long long tail_cutoff = 1 << 20;
};

/// ||max_{2^k < n <= 2^{k+1}} |S_n - S_{2^k}| ||_2^2 for one block, exact.
/// `terms[i]` is the i-th series term on the uniform grid of `level`.
[[nodiscard]] double block_maximum_energy(const std::vector<std::vector<double>>& terms, int level);

[[nodiscard]] ExperimentReport demo_convergence(FranklinBasis& f, const ConvergenceConfig& cfg);

}  // namespace franklin
