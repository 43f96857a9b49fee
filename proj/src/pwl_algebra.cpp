#include "franklin/pwl_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "franklin/torus_mesh.hpp"

namespace franklin {

namespace {

void check_knots(const std::vector<double>& knots, std::size_t nvalues) {
    if (knots.empty()) throw std::invalid_argument("a function needs at least one breakpoint");
    if (knots.size() != nvalues)
        throw std::invalid_argument("breakpoints and values differ in length");
    if (knots.front() != 0.0) throw std::invalid_argument("first breakpoint must be 0");
    for (std::size_t i = 1; i < knots.size(); ++i)
        if (!(knots[i] > knots[i - 1])) throw std::invalid_argument("breakpoints must increase");
    if (!(knots.back() < 1.0)) throw std::invalid_argument("breakpoints must lie in [0,1)");
}

void check_values(const std::vector<double>& values) {
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite function value");
}

std::size_t locate(const std::vector<double>& knots, double x) {
    auto it = std::upper_bound(knots.begin(), knots.end(), x);
    return static_cast<std::size_t>(it - knots.begin()) - 1;
}

double next_knot(const std::vector<double>& knots, std::size_t i) {
    return i + 1 < knots.size() ? knots[i + 1] : 1.0;
}

// Value of piece i of f at x in [knot_i, knot_{i+1}].
double value_in_piece(const PiecewiseLinear& f, std::size_t i, double x) {
    double a = f.piece_start(i);
    double len = f.piece_length(i);
    double v0 = f.values()[i];
    double v1 = f.piece_end_value(i);
    if (x == a) return v0;
    if (x == a + len) return v1;
    return v0 + (v1 - v0) * ((x - a) / len);
}

double value_in_piece(const StepFunction& f, std::size_t i, double) { return f.values()[i]; }

// Calls visit(len, f0, f1, g0, g1) for every piece of the common refinement.
template <class F, class G, class Visit>
void for_each_common_piece(const F& f, const G& g, Visit&& visit) {
    const auto& kf = f.breakpoints();
    const auto& kg = g.breakpoints();
    std::size_t i = 0;
    std::size_t j = 0;
    double cur = 0.0;
    while (cur < 1.0) {
        double nf = next_knot(kf, i);
        double ng = next_knot(kg, j);
        double nxt = std::min(nf, ng);
        visit(nxt - cur, value_in_piece(f, i, cur), value_in_piece(f, i, nxt),
              value_in_piece(g, j, cur), value_in_piece(g, j, nxt));
        if (nf == nxt) ++i;
        if (ng == nxt) ++j;
        cur = nxt;
    }
}

bool knots_in_nodes(const std::vector<double>& knots, int n) {
    auto nodes = build_nodes(n).as_doubles();
    return std::all_of(knots.begin(), knots.end(), [&](double x) {
        return std::binary_search(nodes.begin(), nodes.end(), x);
    });
}

std::optional<int> resolution_of(const std::vector<double>& knots) {
    int level = 0;
    for (double x : knots) {
        if (x == 0.0) continue;
        int e = 0;
        double m = std::frexp(x, &e);
        auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
        int exp = 53 - e;
        while (exp > 0 && mant % 2 == 0) {
            mant /= 2;
            --exp;
        }
        if (exp > 52) return std::nullopt;
        level = std::max(level, exp);
    }
    return level;
}

nlohmann::json knot_to_json(double x) {
    try {
        Dyadic d = Dyadic::from_double(x);
        return nlohmann::json::array({d.num(), d.exp()});
    } catch (const std::exception&) {
        return x;
    }
}

double knot_from_json(const nlohmann::json& j) {
    if (j.is_array()) return Dyadic(j.at(0).get<std::int64_t>(), j.at(1).get<int>()).to_double();
    return j.get<double>();
}

}  // namespace

PiecewiseLinear::PiecewiseLinear() : knots_{0.0}, values_{0.0}, end_(0.0) {}

PiecewiseLinear::PiecewiseLinear(std::vector<double> breakpoints, std::vector<double> values,
                                 std::optional<double> left_limit_at_zero)
    : knots_(std::move(breakpoints)), values_(std::move(values)) {
    check_knots(knots_, values_.size());
    check_values(values_);
    end_ = left_limit_at_zero.value_or(values_.front());
    if (!std::isfinite(end_)) throw std::invalid_argument("non-finite left limit at 0");
}

PiecewiseLinear PiecewiseLinear::constant(double c) { return PiecewiseLinear({0.0}, {c}, c); }

PiecewiseLinear PiecewiseLinear::from_uniform_grid(int level, std::vector<double> grid, double end) {
    std::size_t count = std::size_t{1} << level;
    if (grid.size() != count) throw std::invalid_argument("grid size must be 2^level");
    std::vector<double> knots(count);
    for (std::size_t i = 0; i < count; ++i) knots[i] = std::ldexp(static_cast<double>(i), -level);
    return PiecewiseLinear(std::move(knots), std::move(grid), end);
}

double PiecewiseLinear::piece_length(std::size_t i) const { return next_knot(knots_, i) - knots_[i]; }

double PiecewiseLinear::piece_end_value(std::size_t i) const {
    return i + 1 < values_.size() ? values_[i + 1] : end_;
}

std::size_t PiecewiseLinear::piece_index(double x) const { return locate(knots_, x); }

double PiecewiseLinear::operator()(double x) const {
    x = wrap_unit(x);
    return value_in_piece(*this, piece_index(x), x);
}

double PiecewiseLinear::evaluate_left(double x) const {
    x = wrap_unit(x);
    if (x == 0.0) return end_;
    std::size_t i = piece_index(x);
    if (knots_[i] == x) return value_in_piece(*this, i - 1, x);
    return value_in_piece(*this, i, x);
}

double PiecewiseLinear::integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < knots_.size(); ++i)
        s += piece_length(i) * (values_[i] + piece_end_value(i)) / 2.0;
    return s;
}

bool PiecewiseLinear::in_L(int n) const { return knots_in_nodes(knots_, n); }

bool PiecewiseLinear::in_L_bar(int n) const { return is_continuous() && in_L(n); }

std::vector<double> PiecewiseLinear::grid_values(int level) const {
    std::vector<double> out((std::size_t{1} << level) + 1, 0.0);
    accumulate_on_grid(1.0, level, out);
    return out;
}

void PiecewiseLinear::accumulate_on_grid(double coeff, int level, std::span<double> out) const {
    std::size_t count = std::size_t{1} << level;
    if (out.size() != count + 1) throw std::invalid_argument("grid buffer must hold 2^level + 1 values");
    std::size_t piece = 0;
    for (std::size_t i = 0; i < count; ++i) {
        double x = std::ldexp(static_cast<double>(i), -level);
        while (piece + 1 < knots_.size() && knots_[piece + 1] <= x) ++piece;
        out[i] += coeff * value_in_piece(*this, piece, x);
    }
    out[count] += coeff * end_;
}

std::optional<int> PiecewiseLinear::dyadic_resolution() const { return resolution_of(knots_); }

PiecewiseLinear PiecewiseLinear::simplified(double tol) const {
    std::vector<double> k{knots_[0]};
    std::vector<double> v{values_[0]};
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        double a = k.back();
        double b = next_knot(knots_, i);
        double va = v.back();
        double vb = piece_end_value(i);
        double interp = va + (vb - va) * ((knots_[i] - a) / (b - a));
        if (std::abs(interp - values_[i]) > tol) {
            k.push_back(knots_[i]);
            v.push_back(values_[i]);
        }
    }
    return PiecewiseLinear(std::move(k), std::move(v), end_);
}

StepFunction::StepFunction() : knots_{0.0}, values_{0.0} {}

StepFunction::StepFunction(std::vector<double> breakpoints, std::vector<double> values)
    : knots_(std::move(breakpoints)), values_(std::move(values)) {
    check_knots(knots_, values_.size());
    check_values(values_);
}

StepFunction StepFunction::constant(double c) { return StepFunction({0.0}, {c}); }

StepFunction StepFunction::indicator(double a, double b) {
    a = wrap_unit(a);
    b = wrap_unit(b);
    if (a == b) return constant(0.0);
    if (a < b) {
        if (a == 0.0) return StepFunction({0.0, b}, {1.0, 0.0});
        return StepFunction({0.0, a, b}, {0.0, 1.0, 0.0});
    }
    if (b == 0.0) return StepFunction({0.0, a}, {0.0, 1.0});
    return StepFunction({0.0, b, a}, {1.0, 0.0, 1.0});
}

double StepFunction::piece_length(std::size_t i) const { return next_knot(knots_, i) - knots_[i]; }

std::size_t StepFunction::piece_index(double x) const { return locate(knots_, x); }

double StepFunction::operator()(double x) const { return values_[piece_index(wrap_unit(x))]; }

double StepFunction::integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < knots_.size(); ++i) s += piece_length(i) * values_[i];
    return s;
}

bool StepFunction::in_S(int n) const { return knots_in_nodes(knots_, n); }

std::optional<int> StepFunction::dyadic_resolution() const { return resolution_of(knots_); }

StepFunction StepFunction::simplified() const {
    std::vector<double> k{knots_[0]};
    std::vector<double> v{values_[0]};
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (values_[i] == v.back()) continue;
        k.push_back(knots_[i]);
        v.push_back(values_[i]);
    }
    return StepFunction(std::move(k), std::move(v));
}

double evaluate(const PiecewiseLinear& f, double x) { return f(x); }
double evaluate(const StepFunction& f, double x) { return f(x); }
double evaluate_left(const PiecewiseLinear& f, double x) { return f.evaluate_left(x); }

double evaluate_left(const StepFunction& f, double x) {
    x = wrap_unit(x);
    if (x == 0.0) return f.values().back();
    std::size_t i = f.piece_index(x);
    if (f.breakpoints()[i] == x) return f.values()[i - 1];
    return f.values()[i];
}

double inner_product(const PiecewiseLinear& f, const PiecewiseLinear& g) {
    double s = 0.0;
    for_each_common_piece(f, g, [&](double len, double p1, double q1, double p2, double q2) {
        s += len * (2.0 * (p1 * p2 + q1 * q2) + (p1 * q2 + q1 * p2)) / 6.0;
    });
    return s;
}

double inner_product(const PiecewiseLinear& f, const StepFunction& g) {
    double s = 0.0;
    for_each_common_piece(f, g, [&](double len, double p, double q, double c, double) {
        s += len * c * (p + q) / 2.0;
    });
    return s;
}

double inner_product(const StepFunction& f, const PiecewiseLinear& g) { return inner_product(g, f); }

double inner_product(const StepFunction& f, const StepFunction& g) {
    double s = 0.0;
    for_each_common_piece(f, g, [&](double len, double a, double, double b, double) { s += len * a * b; });
    return s;
}

PiecewiseLinear combine(double alpha, const PiecewiseLinear& f, double beta, const PiecewiseLinear& g) {
    std::vector<double> values;
    for_each_common_piece(f, g, [&](double, double p1, double, double p2, double) {
        values.push_back(alpha * p1 + beta * p2);
    });
    std::vector<double> merged;
    merged.reserve(values.size());
    std::set_union(f.breakpoints().begin(), f.breakpoints().end(), g.breakpoints().begin(),
                   g.breakpoints().end(), std::back_inserter(merged));
    return PiecewiseLinear(std::move(merged), std::move(values),
                           alpha * f.left_limit_at_zero() + beta * g.left_limit_at_zero());
}

StepFunction combine(double alpha, const StepFunction& f, double beta, const StepFunction& g) {
    std::vector<double> values;
    for_each_common_piece(f, g, [&](double, double a, double, double b, double) {
        values.push_back(alpha * a + beta * b);
    });
    std::vector<double> merged;
    merged.reserve(values.size());
    std::set_union(f.breakpoints().begin(), f.breakpoints().end(), g.breakpoints().begin(),
                   g.breakpoints().end(), std::back_inserter(merged));
    return StepFunction(std::move(merged), std::move(values));
}

PiecewiseLinear linear_combination(std::span<const PiecewiseLinear* const> fs,
                                   std::span<const double> coeffs) {
    if (fs.size() != coeffs.size()) throw std::invalid_argument("functions and coefficients differ in length");
    std::vector<double> merged{0.0};
    for (const auto* f : fs) {
        std::vector<double> next;
        next.reserve(merged.size() + f->breakpoints().size());
        std::set_union(merged.begin(), merged.end(), f->breakpoints().begin(), f->breakpoints().end(),
                       std::back_inserter(next));
        merged.swap(next);
    }
    std::vector<double> values(merged.size(), 0.0);
    double end = 0.0;
    for (std::size_t t = 0; t < fs.size(); ++t) {
        const auto& f = *fs[t];
        double c = coeffs[t];
        if (c == 0.0) continue;
        std::size_t piece = 0;
        for (std::size_t i = 0; i < merged.size(); ++i) {
            while (piece + 1 < f.breakpoints().size() && f.breakpoints()[piece + 1] <= merged[i]) ++piece;
            values[i] += c * value_in_piece(f, piece, merged[i]);
        }
        end += c * f.left_limit_at_zero();
    }
    return PiecewiseLinear(std::move(merged), std::move(values), end);
}

PiecewiseLinear abs(const PiecewiseLinear& f) {
    std::vector<double> knots;
    std::vector<double> values;
    for (std::size_t i = 0; i < f.pieces(); ++i) {
        double a = f.piece_start(i);
        double len = f.piece_length(i);
        double p = f.values()[i];
        double q = f.piece_end_value(i);
        knots.push_back(a);
        values.push_back(std::abs(p));
        if ((p < 0.0 && q > 0.0) || (p > 0.0 && q < 0.0)) {
            double x = a + len * (std::abs(p) / (std::abs(p) + std::abs(q)));
            if (x > a && x < a + len) {
                knots.push_back(x);
                values.push_back(0.0);
            }
        }
    }
    return PiecewiseLinear(std::move(knots), std::move(values), std::abs(f.left_limit_at_zero()));
}

StepFunction abs(const StepFunction& f) {
    std::vector<double> values = f.values();
    for (double& v : values) v = std::abs(v);
    return StepFunction(f.breakpoints(), std::move(values));
}

double l2_norm(const PiecewiseLinear& f) { return std::sqrt(std::max(0.0, inner_product(f, f))); }
double l2_norm(const StepFunction& f) { return std::sqrt(std::max(0.0, inner_product(f, f))); }

double linear_piece_abs_power(double a, double b, double len, double p) {
    double s = p + 1.0;
    if ((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)) {
        double x = std::abs(a);
        double y = std::abs(b);
        return len * (std::pow(x, s) + std::pow(y, s)) / (s * (x + y));
    }
    double lo = std::min(std::abs(a), std::abs(b));
    double hi = std::max(std::abs(a), std::abs(b));
    if (hi == 0.0) return 0.0;
    if (lo == 0.0) return len * std::pow(hi, p) / s;
    double rm1 = (hi - lo) / lo;
    if (rm1 == 0.0) return len * std::pow(lo, p);
    return len * std::pow(lo, p) * std::expm1(s * std::log1p(rm1)) / (s * rm1);
}

double lp_norm(const PiecewiseLinear& f, double p) {
    if (!std::isfinite(p) || p <= 1.0) throw std::invalid_argument("lp_norm requires finite p > 1");
    double s = 0.0;
    for (std::size_t i = 0; i < f.pieces(); ++i)
        s += linear_piece_abs_power(f.values()[i], f.piece_end_value(i), f.piece_length(i), p);
    return std::pow(s, 1.0 / p);
}

double lp_norm(const StepFunction& f, double p) {
    if (!std::isfinite(p) || p <= 1.0) throw std::invalid_argument("lp_norm requires finite p > 1");
    double s = 0.0;
    for (std::size_t i = 0; i < f.pieces(); ++i) s += f.piece_length(i) * std::pow(std::abs(f.values()[i]), p);
    return std::pow(s, 1.0 / p);
}

Antiderivative::Antiderivative(const PiecewiseLinear& f) : knots_(f.breakpoints()) {
    std::size_t m = knots_.size();
    start_.resize(m);
    slope_.resize(m);
    prefix_.resize(m + 1);
    prefix_[0] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double len = f.piece_length(i);
        start_[i] = f.values()[i];
        slope_[i] = (f.piece_end_value(i) - f.values()[i]) / len;
        prefix_[i + 1] = prefix_[i] + len * (f.values()[i] + f.piece_end_value(i)) / 2.0;
    }
}

Antiderivative::Antiderivative(const StepFunction& f) : knots_(f.breakpoints()) {
    std::size_t m = knots_.size();
    start_ = f.values();
    slope_.assign(m, 0.0);
    prefix_.resize(m + 1);
    prefix_[0] = 0.0;
    for (std::size_t i = 0; i < m; ++i) prefix_[i + 1] = prefix_[i] + f.piece_length(i) * start_[i];
}

double Antiderivative::at(double x) const {
    if (x >= 1.0) return prefix_.back();
    if (x <= 0.0) return 0.0;
    std::size_t i = locate(knots_, x);
    double d = x - knots_[i];
    return prefix_[i] + d * (start_[i] + 0.5 * slope_[i] * d);
}

double Antiderivative::over_arc(double a, double len) const {
    if (len >= 1.0) return prefix_.back();
    a = wrap_unit(a);
    double b = a + len;
    if (b <= 1.0) return at(b) - at(a);
    return (prefix_.back() - at(a)) + at(b - 1.0);
}

nlohmann::json to_json(const PiecewiseLinear& f) {
    nlohmann::json knots = nlohmann::json::array();
    for (double x : f.breakpoints()) knots.push_back(knot_to_json(x));
    return {{"breakpoints", knots}, {"values", f.values()}, {"left_limit_at_zero", f.left_limit_at_zero()}};
}

nlohmann::json to_json(const StepFunction& f) {
    nlohmann::json knots = nlohmann::json::array();
    for (double x : f.breakpoints()) knots.push_back(knot_to_json(x));
    return {{"breakpoints", knots}, {"values", f.values()}};
}

PiecewiseLinear piecewise_linear_from_json(const nlohmann::json& j) {
    std::vector<double> knots;
    for (const auto& k : j.at("breakpoints")) knots.push_back(knot_from_json(k));
    auto values = j.at("values").get<std::vector<double>>();
    std::optional<double> left;
    if (j.contains("left_limit_at_zero")) left = j.at("left_limit_at_zero").get<double>();
    return PiecewiseLinear(std::move(knots), std::move(values), left);
}

StepFunction step_function_from_json(const nlohmann::json& j) {
    std::vector<double> knots;
    for (const auto& k : j.at("breakpoints")) knots.push_back(knot_from_json(k));
    return StepFunction(std::move(knots), j.at("values").get<std::vector<double>>());
}

}  // namespace franklin
