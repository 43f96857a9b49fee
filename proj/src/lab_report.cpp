#include <cmath>
#include <random>
#include <stdexcept>

#include "franklin/inequality_lab.hpp"

namespace franklin {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(splitmix64(base) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

unsigned worker_count() {
    return std::max(1u, std::thread::hardware_concurrency());
}

void ExperimentReport::set(const std::string& name, double value) {
    for (auto& [k, v] : constants) {
        if (k == name) {
            v = value;
            return;
        }
    }
    constants.emplace_back(name, value);
}

double ExperimentReport::constant(const std::string& name) const {
    for (const auto& [k, v] : constants)
        if (k == name) return v;
    throw std::out_of_range("no constant named " + name);
}

bool ExperimentReport::has(const std::string& name) const {
    for (const auto& [k, v] : constants)
        if (k == name) return true;
    return false;
}

nlohmann::ordered_json to_json(const ExperimentReport& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["anchor"] = r.anchor;
    j["config"] = r.config;
    j["seed"] = r.seed;
    auto constants = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.constants) {
        if (std::isfinite(v))
            constants[k] = v;
        else
            constants[k] = std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    }
    j["constants"] = constants;
    j["verdict"] = r.verdict;
    j["runtime_ms"] = r.runtime_ms;
    j["attachments"] = r.attachments;
    if (!r.notes.empty()) j["notes"] = r.notes;
    return j;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs two or more points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - (fit.slope * x[i] + fit.intercept);
        sse += e * e;
    }
    fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return fit;
}

std::vector<double> random_unit_vector(std::size_t size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> v(size);
    double s = 0.0;
    for (auto& x : v) {
        x = normal(rng);
        s += x * x;
    }
    s = std::sqrt(s);
    if (s > 0.0)
        for (auto& x : v) x /= s;
    return v;
}

const std::vector<AnchorInfo>& anchors() {
    static const std::vector<AnchorInfo> list = {
        {"x5", "block-abs-sum-bound", "L2 norm of sums of |a_n u_n| over one dyadic block against ||a||_2"},
        {"x21", "interval-majorant", "block projections of bounded functions on J dominated by a unimodal majorant"},
        {"L7", "unimodal-weight-integral", "integrals against unimodal weights bounded by ||lambda||_1 M f(peak)"},
        {"x1", "coarse-spline-haar-increment", "Haar increments of coarse splines against the maximal function"},
        {"x22", "indicator-block-integral", "integrals against block projections of indicators, four-point maximal bound"},
        {"x2", "haar-average-of-block", "shifted Haar averages of block projections against the four-point maximal"},
        {"x10", "damped-square-function", "L2 norm of the sup of square functions over damped expansions"},
        {"cww", "good-lambda", "good-lambda decay of |{M > l, S < e l}| / |{M > l/2}| in 1/e^2"},
        {"b4", "nested-family-growth", "Franklin maxima of nested and single-step families, sqrt(log n) growth"},
        {"u30", "subset-family-growth", "Franklin maxima of arbitrary index-subset families, sqrt(log n) growth"},
        {"u35", "haar-lp-family-growth", "Haar maxima of dominated families in L^p, sqrt(log n) growth"},
        {"d2", "block-maxima-convergence", "energies of partial-sum maxima over dyadic blocks of a Franklin series"},
        {"omega", "multiplier-series", "convergence of sum 1/(n w(n)) and sum 1/(delta(k) k log k)"},
    };
    return list;
}

}  // namespace franklin
