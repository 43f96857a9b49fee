#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "franklin/inequality_lab.hpp"
#include "lab_internal.hpp"

namespace franklin {

std::string to_string(FamilyMode m) {
    switch (m) {
    case FamilyMode::sng: return "sng";
    case FamilyMode::mon: return "mon";
    case FamilyMode::full: return "full";
    }
    return "?";
}

FamilyMode parse_family_mode(const std::string& name) {
    if (name == "sng") return FamilyMode::sng;
    if (name == "mon") return FamilyMode::mon;
    if (name == "full") return FamilyMode::full;
    throw std::invalid_argument("unknown family mode: " + name);
}

std::string to_string(SystemKind s) {
    return s == SystemKind::franklin ? "franklin" : "haar";
}

SystemKind parse_system(const std::string& name) {
    if (name == "franklin") return SystemKind::franklin;
    if (name == "haar") return SystemKind::haar;
    throw std::invalid_argument("unknown basis: " + name);
}

// ---------------------------------------------------------------------------

SampledBasis::SampledBasis(SystemKind system, int size, int refine, FranklinBasis* cache) : system_(system) {
    if (size < 1) throw std::invalid_argument("basis size must be >= 1");
    if (refine < 1) throw std::invalid_argument("refine must be >= 1");
    std::optional<FranklinBasis> local;
    if (system == SystemKind::franklin && cache == nullptr) cache = &local.emplace(Variant::classical);
    if (cache != nullptr && cache->variant() != Variant::classical)
        throw std::invalid_argument("sampled Franklin rows use the classical system");
    int top = 0;
    for (int j = 0; j < size; ++j) {
        const int idx = index(j);
        top = std::max(top, system == SystemKind::haar ? haar_level(idx) : grid_level(Variant::classical, idx));
        if (idx < 2) {
            levels_.push_back(0);
        } else if (system == SystemKind::haar) {
            levels_.push_back(haar_level(idx) - 1);
        } else {
            levels_.push_back(std::bit_width(static_cast<unsigned>(idx - 1)));
        }
    }
    samples_ = (std::size_t{1} << top) * static_cast<std::size_t>(refine);
    std::vector<double> row(samples_);
    for (int j = 0; j < size; ++j) {
        const int idx = index(j);
        if (system == SystemKind::haar) {
            const StepFunction h = haar_function(idx);
            for (std::size_t s = 0; s < samples_; ++s) row[s] = h(x(s));
        } else {
            const PiecewiseLinear& f = cache->function(idx);
            for (std::size_t s = 0; s < samples_; ++s) row[s] = f(x(s));
        }
        double peak = 0.0;
        for (double v : row) peak = std::max(peak, std::fabs(v));
        const double cutoff = 1e-15 * peak;
        std::size_t lo = 0, hi = samples_;
        while (lo < hi && std::fabs(row[lo]) <= cutoff) ++lo;
        while (hi > lo && std::fabs(row[hi - 1]) <= cutoff) --hi;
        begin_.push_back(lo);
        rows_.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(lo), row.begin() + static_cast<std::ptrdiff_t>(hi));
    }
}

int SampledBasis::index(int j) const {
    return system_ == SystemKind::haar ? j + 1 : j;
}

double SampledBasis::x(std::size_t s) const {
    return (static_cast<double>(s) + 0.5) / static_cast<double>(samples_);
}

double SampledBasis::value(int j, std::size_t s) const {
    const std::size_t b = begin_[static_cast<std::size_t>(j)];
    const auto& w = rows_[static_cast<std::size_t>(j)];
    return (s >= b && s < b + w.size()) ? w[s - b] : 0.0;
}

std::size_t DominatedFamily::members() const {
    return mode == FamilyMode::full ? multipliers.size() : cuts.size();
}

std::vector<double> DominatedFamily::member(std::size_t k) const {
    std::vector<double> c(base.size(), 0.0);
    if (mode == FamilyMode::full) {
        for (std::size_t j = 0; j < base.size(); ++j) c[j] = multipliers[k][j] * base[j];
    } else {
        for (int i = 0; i < cuts[k]; ++i) {
            const auto j = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
            c[j] = base[j];
        }
    }
    return c;
}

namespace {

void add_row(const SampledBasis& basis, int j, double coeff, std::vector<double>& acc) {
    const auto& w = basis.window(j);
    const std::size_t b = basis.window_begin(j);
    for (std::size_t i = 0; i < w.size(); ++i) acc[b + i] += coeff * w[i];
}

double mean_power(const std::vector<double>& v, double p) {
    double s = 0.0;
    if (p == 2.0)
        for (double x : v) s += x * x;
    else
        for (double x : v) s += std::pow(std::fabs(x), p);
    return s / static_cast<double>(v.size());
}

double power(double x, double p) {
    return p == 2.0 ? x * x : std::pow(std::fabs(x), p);
}

// max_k |g_k| on the sample grid.
std::vector<double> family_envelope(const SampledBasis& basis, const DominatedFamily& fam) {
    std::vector<double> E(basis.samples(), 0.0), P(basis.samples(), 0.0);
    if (fam.mode == FamilyMode::full) {
        for (const auto& lam : fam.multipliers) {
            std::fill(P.begin(), P.end(), 0.0);
            for (std::size_t j = 0; j < fam.base.size(); ++j)
                if (lam[j] != 0.0 && fam.base[j] != 0.0) add_row(basis, static_cast<int>(j), lam[j] * fam.base[j], P);
            for (std::size_t s = 0; s < E.size(); ++s) E[s] = std::max(E[s], std::fabs(P[s]));
        }
        return E;
    }
    int used = 0;
    for (int cut : fam.cuts) {
        for (; used < cut; ++used) {
            const int j = fam.order[static_cast<std::size_t>(used)];
            add_row(basis, j, fam.base[static_cast<std::size_t>(j)], P);
        }
        for (std::size_t s = 0; s < E.size(); ++s) E[s] = std::max(E[s], std::fabs(P[s]));
    }
    return E;
}

std::vector<double> base_samples(const SampledBasis& basis, const std::vector<double>& b) {
    std::vector<double> g(basis.samples(), 0.0);
    for (std::size_t j = 0; j < b.size(); ++j)
        if (b[j] != 0.0) add_row(basis, static_cast<int>(j), b[j], g);
    return g;
}

// Sample position where the positive lobe around the peak of b_j phi_j ends.
double lobe_key(const SampledBasis& basis, int j, double coeff) {
    const auto& w = basis.window(j);
    std::size_t i = 0;
    for (std::size_t s = 1; s < w.size(); ++s)
        if (coeff * w[s] > coeff * w[i]) i = s;
    while (i + 1 < w.size() && coeff * w[i + 1] > 0.0) ++i;
    return basis.x(basis.window_begin(j) + i);
}

std::vector<int> nested_cuts(FamilyMode mode, int n, int pool) {
    std::vector<int> cuts;
    for (int k = 0; k < n; ++k) {
        if (mode == FamilyMode::sng)
            cuts.push_back(pool - n + k + 1);
        else
            cuts.push_back(static_cast<int>(std::lround(static_cast<double>(k + 1) * pool / n)));
    }
    return cuts;
}

struct SearchResult {
    DominatedFamily family;
    double ratio = 0.0;
    long long evaluations = 0;
};

// Grows the order one row at a time. `window` = 1 follows the key order;
// `rcl` = 1 takes the best marginal gain (smallest key rank on ties).
SearchResult nested_search(const SampledBasis& basis, const std::vector<double>& b, FamilyMode mode, int n, double p,
                           int window, int rcl, std::uint64_t seed, const std::vector<double>& norm_g) {
    const int pool = static_cast<int>(b.size());
    std::vector<int> remaining(static_cast<std::size_t>(pool));
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<double> keys(static_cast<std::size_t>(pool));
    for (int j = 0; j < pool; ++j) keys[static_cast<std::size_t>(j)] = lobe_key(basis, j, b[static_cast<std::size_t>(j)]);
    std::stable_sort(remaining.begin(), remaining.end(),
                     [&](int x, int y) { return keys[static_cast<std::size_t>(x)] > keys[static_cast<std::size_t>(y)]; });
    const auto cuts = nested_cuts(mode, n, pool);
    std::vector<char> is_cut(static_cast<std::size_t>(pool) + 1, 0);
    for (int c : cuts) is_cut[static_cast<std::size_t>(c)] = 1;

    std::mt19937_64 rng(seed);
    std::vector<double> P(basis.samples(), 0.0), E(basis.samples(), 0.0);
    std::vector<int> order, dirty;
    SearchResult res;
    for (int step = 0; step < pool; ++step) {
        std::size_t pick = 0;
        const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(window), remaining.size());
        if (w > 1) {
            std::vector<std::pair<double, std::size_t>> gains;
            for (std::size_t c = 0; c < w; ++c) {
                const int j = remaining[c];
                const auto& row = basis.window(j);
                const std::size_t b0 = basis.window_begin(j);
                const double coeff = b[static_cast<std::size_t>(j)];
                double gain = 0.0;
                for (std::size_t i = 0; i < row.size(); ++i) {
                    const std::size_t s = b0 + i;
                    const double base = std::max(E[s], std::fabs(P[s]));
                    gain += power(std::max(E[s], std::fabs(P[s] + coeff * row[i])), p) - power(base, p);
                }
                gains.emplace_back(gain, c);
                ++res.evaluations;
            }
            std::stable_sort(gains.begin(), gains.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
            if (rcl <= 1) {
                const double best = gains.front().first;
                std::size_t first = gains.front().second;
                for (const auto& [g, c] : gains)
                    if (g >= best - 1e-12 * std::max(1.0, std::fabs(best))) first = std::min(first, c);
                pick = first;
            } else {
                const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(rcl), gains.size());
                pick = gains[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)].second;
            }
        }
        const int j = remaining[pick];
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
        order.push_back(j);
        dirty.push_back(j);
        add_row(basis, j, b[static_cast<std::size_t>(j)], P);
        if (is_cut[static_cast<std::size_t>(step + 1)]) {
            for (int d : dirty) {
                const std::size_t b0 = basis.window_begin(d);
                for (std::size_t i = 0; i < basis.window(d).size(); ++i)
                    E[b0 + i] = std::max(E[b0 + i], std::fabs(P[b0 + i]));
            }
            dirty.clear();
        }
    }
    res.family.mode = mode;
    res.family.base = b;
    res.family.order = std::move(order);
    res.family.cuts = cuts;
    res.ratio = std::pow(mean_power(E, p), 1.0 / p) / std::pow(mean_power(norm_g, p), 1.0 / p);
    return res;
}

// Each member aligns its multipliers with the signs of the rows at the point
// where the current envelope is smallest.
SearchResult full_search(const SampledBasis& basis, const std::vector<double>& b, int n, double p, bool subsets,
                         bool random_ties, std::uint64_t seed, const std::vector<double>& norm_g) {
    std::mt19937_64 rng(seed);
    std::vector<double> E(basis.samples(), 0.0), P(basis.samples());
    SearchResult res;
    res.family.mode = FamilyMode::full;
    res.family.base = b;
    for (int k = 0; k < n; ++k) {
        const double lo = *std::min_element(E.begin(), E.end());
        std::vector<std::size_t> ties;
        for (std::size_t s = 0; s < E.size(); ++s)
            if (E[s] <= lo + 1e-12 * std::max(1.0, lo)) ties.push_back(s);
        const std::size_t at = random_ties ? ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)]
                                           : ties.front();
        std::vector<double> lam(b.size(), 0.0);
        std::fill(P.begin(), P.end(), 0.0);
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double v = b[j] * basis.value(static_cast<int>(j), at);
            lam[j] = subsets ? (v > 0.0 ? 1.0 : 0.0) : (v < 0.0 ? -1.0 : 1.0);
            if (lam[j] != 0.0) add_row(basis, static_cast<int>(j), lam[j] * b[j], P);
        }
        for (std::size_t s = 0; s < E.size(); ++s) E[s] = std::max(E[s], std::fabs(P[s]));
        res.family.multipliers.push_back(std::move(lam));
        ++res.evaluations;
    }
    res.ratio = std::pow(mean_power(E, p), 1.0 / p) / std::pow(mean_power(norm_g, p), 1.0 / p);
    return res;
}

DominatedFamily random_family(FamilyMode mode, int n, int pool, bool subsets, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    DominatedFamily fam;
    fam.mode = mode;
    fam.base.resize(static_cast<std::size_t>(pool));
    for (auto& x : fam.base) x = normal(rng);
    if (mode == FamilyMode::full) {
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        std::bernoulli_distribution coin(0.5);
        for (int k = 0; k < n; ++k) {
            std::vector<double> lam(static_cast<std::size_t>(pool));
            for (auto& x : lam) x = subsets ? (coin(rng) ? 1.0 : 0.0) : unif(rng);
            fam.multipliers.push_back(std::move(lam));
        }
        return fam;
    }
    fam.order.resize(static_cast<std::size_t>(pool));
    std::iota(fam.order.begin(), fam.order.end(), 0);
    std::shuffle(fam.order.begin(), fam.order.end(), rng);
    if (mode == FamilyMode::sng || pool == n) {
        fam.cuts = nested_cuts(FamilyMode::sng, n, pool);
    } else {
        std::vector<int> counts(static_cast<std::size_t>(pool - 1));
        std::iota(counts.begin(), counts.end(), 1);
        std::shuffle(counts.begin(), counts.end(), rng);
        counts.resize(static_cast<std::size_t>(n - 1));
        std::sort(counts.begin(), counts.end());
        counts.push_back(pool);
        fam.cuts = std::move(counts);
    }
    return fam;
}

}  // namespace

double evaluate_family(const SampledBasis& basis, const DominatedFamily& family, double p) {
    if (family.base.size() > static_cast<std::size_t>(basis.size())) throw std::invalid_argument("family exceeds the basis");
    const auto E = family_envelope(basis, family);
    const auto g = base_samples(basis, family.base);
    const double den = mean_power(g, p);
    if (den == 0.0) return 0.0;
    return std::pow(mean_power(E, p), 1.0 / p) / std::pow(den, 1.0 / p);
}

SquareSplit square_function_split(const SampledBasis& basis, const DominatedFamily& family, double eps) {
    SquareSplit out;
    std::optional<FranklinBasis> franklin;
    if (basis.system() == SystemKind::franklin) franklin.emplace(Variant::classical);
    std::optional<StepFunction> sup;
    for (std::size_t k = 0; k < family.members(); ++k) {
        const auto c = family.member(k);
        StepFunction s;
        if (basis.system() == SystemKind::haar) {
            s = square_function(haar_series(c), Dyadic());
        } else {
            s = square_function(expand(*franklin, 0, c), Dyadic());
        }
        sup = sup ? pointwise_max(*sup, s) : std::move(s);
    }
    const auto E = family_envelope(basis, family);
    double a = 0.0, pstar = 0.0;
    for (std::size_t s = 0; s < E.size(); ++s) {
        const double P = (*sup)(basis.x(s));
        a += std::max(E[s] * E[s] - P * P / (eps * eps), 0.0);
        pstar += E[s] * E[s];
    }
    const double count = static_cast<double>(E.size());
    out.a_term = a / count;
    out.p_star_sq = pstar / count;
    const double norm = l2_norm(*sup);
    out.b_term = norm * norm / (eps * eps);
    return out;
}

GrowthEstimate run_maximal_bound(const GrowthConfig& cfg) {
    if (!(cfg.p > 1.0) || !std::isfinite(cfg.p)) throw std::invalid_argument("p must lie in (1, inf)");
    if (cfg.p != 2.0 && cfg.system != SystemKind::haar)
        throw std::invalid_argument("L^p exponents other than 2 require the Haar system");
    GrowthEstimate est;
    est.config = cfg;
    std::optional<FranklinBasis> cache;
    if (cfg.system == SystemKind::franklin) cache.emplace(Variant::classical);
    double best_so_far = 0.0, prev_search = 0.0;
    for (int n : cfg.sizes) {
        if (n < 1) throw std::invalid_argument("family size must be >= 1");
        const int pool = cfg.mode == FamilyMode::mon ? n * std::max(cfg.pool_factor, 1) : n;
        const SampledBasis basis(cfg.system, pool, cfg.system == SystemKind::haar ? 1 : cfg.refine,
                                 cache ? &*cache : nullptr);
        std::vector<double> b(static_cast<std::size_t>(pool));
        for (int j = 0; j < pool; ++j) b[static_cast<std::size_t>(j)] = std::pow(2.0, -0.5 * basis.level(j));
        const auto g = base_samples(basis, b);
        const int restarts = std::max(cfg.restarts, 1);
        auto results = parallel_map<SearchResult>(static_cast<std::size_t>(restarts), [&](std::size_t r) {
            const std::uint64_t seed = derive_seed(cfg.seed, (static_cast<std::uint64_t>(n) << 16) + r);
            if (cfg.mode == FamilyMode::full) return full_search(basis, b, n, cfg.p, cfg.subsets, r > 0, seed, g);
            if (r == 0) return nested_search(basis, b, cfg.mode, n, cfg.p, 1, 1, seed, g);
            if (r == 1) return nested_search(basis, b, cfg.mode, n, cfg.p, cfg.window, 1, seed, g);
            return nested_search(basis, b, cfg.mode, n, cfg.p, cfg.window, cfg.candidates, seed, g);
        });
        std::size_t best = 0;
        GrowthPoint pt;
        pt.n = n;
        pt.restarts = restarts;
        for (std::size_t r = 0; r < results.size(); ++r) {
            pt.evaluations += results[r].evaluations;
            if (results[r].ratio > results[best].ratio) best = r;
        }
        pt.r_search = results[best].ratio;
        if (pt.r_search < prev_search) est.search_monotone = false;
        prev_search = pt.r_search;
        best_so_far = std::max(best_so_far, pt.r_search);
        pt.r = best_so_far;
        pt.r2_over_log = n > 1 ? pt.r * pt.r / std::log2(static_cast<double>(n)) : 0.0;

        auto uppers = parallel_map<double>(static_cast<std::size_t>(cfg.random_samples), [&](std::size_t i) {
            std::mt19937_64 rng(derive_seed(cfg.seed ^ 0x5bd1e995ULL, (static_cast<std::uint64_t>(n) << 20) + i));
            return evaluate_family(basis, random_family(cfg.mode, n, pool, cfg.subsets, rng), cfg.p);
        });
        for (double u : uppers) pt.upper = std::max(pt.upper, u);

        if (n <= cfg.diagnostics_max_n && n > 1 && cfg.p == 2.0) {
            const double eps = std::sqrt(cfg.eps_c / std::log(static_cast<double>(n)));
            const auto split = square_function_split(basis, results[best].family, eps);
            pt.a_term = split.a_term;
            pt.b_term = split.b_term;
            pt.p_star_sq = split.p_star_sq;
        }
        if (n <= cfg.keep_family_max_n) pt.family = std::move(results[best].family);
        est.points.push_back(std::move(pt));
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < est.points.size(); ++i) {
        const auto& pt = est.points[i];
        if (i > 0 && pt.r < est.points[i - 1].r) est.monotone = false;
        if (pt.n > 1) {
            lo = std::min(lo, pt.r2_over_log);
            hi = std::max(hi, pt.r2_over_log);
            xs.push_back(std::log2(static_cast<double>(pt.n)));
            ys.push_back(pt.r * pt.r);
        }
        if (pt.r > 0.0) est.max_upper_factor = std::max(est.max_upper_factor, pt.upper / pt.r);
    }
    est.band = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (xs.size() >= 2) est.slope = fit_line(xs, ys);
    return est;
}

ExperimentReport growth_report(const GrowthEstimate& est, const std::string& anchor) {
    const auto& cfg = est.config;
    ExperimentReport r;
    r.id = to_string(cfg.system) + "-" + to_string(cfg.mode) + "-growth";
    r.anchor = anchor;
    r.seed = cfg.seed;
    Table t;
    t.name = "growth";
    t.columns = {"n", "r_n", "r_n_sq_over_log_n", "r_search", "upper", "evaluations", "a_term", "b_term", "p_star_sq"};
    for (const auto& pt : est.points)
        t.rows.push_back({static_cast<double>(pt.n), pt.r, pt.r2_over_log, pt.r_search, pt.upper,
                          static_cast<double>(pt.evaluations), pt.a_term, pt.b_term, pt.p_star_sq});
    r.tables.push_back(std::move(t));
    r.set("band", est.band);
    r.set("monotone", est.monotone ? 1.0 : 0.0);
    r.set("search_monotone", est.search_monotone ? 1.0 : 0.0);
    r.set("max_upper_over_lower", est.max_upper_factor);
    r.set("slope_r_sq_vs_log_n", est.slope.slope);
    r.set("r2_r_sq_vs_log_n", est.slope.r2);
    if (!est.points.empty()) r.set("r_at_max_n", est.points.back().r);
    const bool ok = est.monotone && est.band <= cfg.max_band && est.max_upper_factor <= cfg.max_upper_factor;
    r.verdict = ok ? "pass" : "fail";
    r.config["basis"] = to_string(cfg.system);
    r.config["mode"] = to_string(cfg.mode);
    r.config["p"] = cfg.p;
    r.config["sizes"] = cfg.sizes;
    r.config["pool_factor"] = cfg.pool_factor;
    r.config["restarts"] = cfg.restarts;
    r.config["window"] = cfg.window;
    r.config["candidates"] = cfg.candidates;
    r.config["random_samples"] = cfg.random_samples;
    r.config["refine"] = cfg.refine;
    r.config["subsets"] = cfg.subsets;
    r.config["eps_c"] = cfg.eps_c;
    r.config["max_band"] = cfg.max_band;
    r.config["max_upper_factor"] = cfg.max_upper_factor;
    r.config["search_coefficients"] = "b_j = 2^(-level/2)";
    r.config["random_coefficients"] = "standard normal";
    r.notes.push_back("lower bound: greedy and randomized-greedy search; upper evidence: random dominated families");
    return r;
}

}  // namespace franklin
