#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "franklin/inequality_lab.hpp"
#include "lab_internal.hpp"

namespace franklin {

namespace {

const double kLn2 = std::log(2.0);
const double kLnLn2 = std::log(std::log(2.0));

double parse_number(const std::string& s, const std::string& context) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw std::invalid_argument("cannot parse '" + s + "' in " + context);
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

// Integral of 1/(x w(x)) over [X, inf) for w = C x^a (log2 x)^b (log2 log2 x)^c,
// after the substitution x = exp(exp(v)).
double reciprocal_tail_integral(const PowerLogRule& w, double X) {
    const double a = w.power, b = w.log_power, c = w.loglog_power, C = w.scale;
    const double v0 = std::log(std::log(X));
    if (a < 0.0 || (a == 0.0 && (b < 1.0 || (b == 1.0 && c <= 1.0)))) return std::numeric_limits<double>::infinity();
    if (a == 0.0 && b == 1.0) {
        return kLn2 / C * std::pow(kLn2, c) * std::pow(v0 - kLnLn2, 1.0 - c) / (c - 1.0);
    }
    if (a == 0.0 && c == 0.0) {
        return std::pow(kLn2, b) * std::pow(std::log(X), 1.0 - b) / (C * (b - 1.0));
    }
    auto h = [&](double v) {
        const double L = std::exp(v);
        double lg = -a * L - b * std::log(L / kLn2) + std::log(L) - std::log(C);
        if (c != 0.0) lg -= c * std::log((v - kLnLn2) / kLn2);
        return std::exp(lg);
    };
    auto simpson = [&](double lo, double hi) {
        const int steps = 2048;
        const double dv = (hi - lo) / steps;
        double s = h(lo) + h(hi);
        for (int i = 1; i < steps; ++i) s += (i % 2 ? 4.0 : 2.0) * h(lo + i * dv);
        return s * dv / 3.0;
    };
    double total = 0.0;
    double lo = v0, span = 1.0;
    while (lo < 700.0) {
        const double piece = simpson(lo, lo + span);
        total += piece;
        if (piece <= 1e-16 * total) break;
        lo += span;
        span *= 2.0;
    }
    return total;
}

SeriesVerdict classify(const PowerLogRule& w) {
    const double a = w.power, b = w.log_power, c = w.loglog_power;
    if (a > 0.0) return SeriesVerdict::converges;
    if (a < 0.0) return SeriesVerdict::diverges;
    if (b > 1.0) return SeriesVerdict::converges;
    if (b < 1.0) return SeriesVerdict::diverges;
    return c > 1.0 ? SeriesVerdict::converges : SeriesVerdict::diverges;
}

}  // namespace

double PowerLogRule::operator()(double n) const {
    double v = scale * std::pow(n, power);
    if (log_power != 0.0) v *= std::pow(std::log2(n), log_power);
    if (loglog_power != 0.0) v *= std::pow(std::log2(std::log2(n)), loglog_power);
    return v;
}

std::string PowerLogRule::to_string() const {
    std::ostringstream os;
    os << scale;
    if (power != 0.0) os << "*n^" << power;
    if (log_power != 0.0) os << "*log^" << log_power;
    if (loglog_power != 0.0) os << "*loglog^" << loglog_power;
    return os.str();
}

PowerLogRule parse_power_log(const std::string& text) {
    PowerLogRule r;
    for (const auto& tok : split(text, '*')) {
        if (tok.empty()) throw std::invalid_argument("empty factor in '" + text + "'");
        const auto caret = tok.find('^');
        const std::string base = tok.substr(0, caret);
        const double e = caret == std::string::npos ? 1.0 : parse_number(tok.substr(caret + 1), text);
        if (base == "n")
            r.power += e;
        else if (base == "log")
            r.log_power += e;
        else if (base == "loglog")
            r.loglog_power += e;
        else if (caret == std::string::npos)
            r.scale *= parse_number(base, text);
        else
            throw std::invalid_argument("unknown factor '" + tok + "' in '" + text + "'");
    }
    if (!(r.scale > 0.0)) throw std::invalid_argument("multiplier must be positive");
    return r;
}

std::string to_string(SeriesVerdict v) {
    switch (v) {
    case SeriesVerdict::converges: return "converges";
    case SeriesVerdict::diverges: return "diverges";
    case SeriesVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

SeriesCheck check_reciprocal_series(const PowerLogRule& w, long long cutoff) {
    if (!(w.scale > 0.0)) throw std::invalid_argument("multiplier must be positive");
    SeriesCheck out;
    out.first = w.loglog_power != 0.0 ? 3 : (w.log_power != 0.0 ? 2 : 1);
    out.cutoff = std::max(cutoff, out.first + 1);
    long double s = 0.0L;
    for (long long n = out.first; n <= out.cutoff; ++n) {
        const double wn = w(static_cast<double>(n));
        if (!(wn > 0.0)) throw std::invalid_argument("multiplier is not positive at n = " + std::to_string(n));
        s += 1.0L / (static_cast<long double>(n) * wn);
    }
    out.partial_sum = static_cast<double>(s);
    const double N = static_cast<double>(out.cutoff);
    out.lower = out.partial_sum + reciprocal_tail_integral(w, N + 1.0);
    out.upper = out.partial_sum + reciprocal_tail_integral(w, N);
    const SeriesVerdict analytic = classify(w);
    // The integral test needs 1/(n w(n)) decreasing beyond the cutoff.
    const bool decreasing = N * w(N) < (N + 1.0) * w(N + 1.0);
    if (!decreasing)
        out.verdict = SeriesVerdict::inconclusive;
    else if (analytic == SeriesVerdict::converges)
        out.verdict = std::isfinite(out.upper) ? SeriesVerdict::converges : SeriesVerdict::inconclusive;
    else
        out.verdict = std::isfinite(out.lower) ? SeriesVerdict::inconclusive : SeriesVerdict::diverges;
    return out;
}

ExperimentReport check_multiplier_condition(const PowerLogRule& w, long long cutoff) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport r;
    r.id = "multiplier-series";
    r.anchor = "omega";
    const SeriesCheck omega = check_reciprocal_series(w, cutoff);
    // 1/(delta(k) k log k) with delta = w / log is the same term written differently.
    // It needs log k > 0, so both sums start at k = 2 for the comparison.
    long double d3 = 0.0L, same_range = 0.0L;
    for (long long k = std::max<long long>(omega.first, 2); k <= omega.cutoff; ++k) {
        const double kk = static_cast<double>(k);
        const double delta = w(kk) / std::log2(kk);
        d3 += 1.0L / (static_cast<long double>(delta) * kk * std::log2(kk));
        same_range += 1.0L / (static_cast<long double>(kk) * w(kk));
    }
    // Index from which w is nondecreasing, and from which w(n)/log n is nondecreasing.
    auto nondecreasing_from = [&](auto&& fn) {
        long long from = omega.cutoff;
        double next = fn(static_cast<double>(omega.cutoff));
        for (long long n = omega.cutoff - 1; n >= std::max<long long>(omega.first, 2); --n) {
            const double cur = fn(static_cast<double>(n));
            if (cur > next) break;
            from = n;
            next = cur;
        }
        return from;
    };
    const long long w_from = nondecreasing_from([&](double n) { return w(n); });
    const long long ratio_from = nondecreasing_from([&](double n) { return w(n) / std::log2(n); });
    r.set("first_index", static_cast<double>(omega.first));
    r.set("cutoff", static_cast<double>(omega.cutoff));
    r.set("partial_sum", omega.partial_sum);
    r.set("bracket_lower", omega.lower);
    r.set("bracket_upper", omega.upper);
    r.set("d3_partial_sum", static_cast<double>(d3));
    r.set("w_nondecreasing_from", static_cast<double>(w_from));
    r.set("w_over_log_nondecreasing_from", static_cast<double>(ratio_from));
    const double rel = static_cast<double>(std::fabs(d3 - same_range) / std::max(same_range, 1e-300L));
    r.verdict = rel <= 1e-9 ? to_string(omega.verdict) : "inconclusive";
    r.config["w"] = w.to_string();
    r.config["cutoff"] = cutoff;
    r.config["log_base"] = 2;
    r.runtime_ms = elapsed_ms(start);
    return r;
}

// ---------------------------------------------------------------------------

double CoefficientRule::operator()(int k) const {
    if (k < 1) return 0.0;
    if (single > 0) return k == single ? scale : 0.0;
    if (scale == 0.0) return 0.0;
    return scale * std::pow(static_cast<double>(k), -alpha) * std::pow(std::log2(static_cast<double>(k) + 1.0), -beta);
}

CoefficientRule parse_coefficient_rule(const std::string& text) {
    CoefficientRule r;
    std::string body = text;
    const auto star = body.find('*');
    if (star != std::string::npos) {
        r.scale = parse_number(body.substr(0, star), text);
        body = body.substr(star + 1);
    }
    if (body == "zero") {
        r.scale = 0.0;
        return r;
    }
    const auto colon = body.find(':');
    const std::string kind = body.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : body.substr(colon + 1);
    if (kind == "single") {
        r.single = static_cast<int>(parse_number(args, text));
        if (r.single < 1) throw std::invalid_argument("single coefficient index must be >= 1");
        return r;
    }
    if (kind == "power") {
        const auto parts = split(args, ',');
        if (parts.size() != 2) throw std::invalid_argument("power rule needs alpha,beta");
        r.alpha = parse_number(parts[0], text);
        r.beta = parse_number(parts[1], text);
        return r;
    }
    throw std::invalid_argument("unknown coefficient rule '" + text + "'");
}

namespace {

// Integral over t in [0,1] of (max_i (a_i + b_i t))^2 where the maximum is nonnegative.
double envelope_square_integral(std::vector<std::pair<double, double>>& lines) {
    // Sort by slope, keep the largest intercept per slope, then build the upper hull.
    std::sort(lines.begin(), lines.end(), [](const auto& x, const auto& y) {
        return x.second < y.second || (x.second == y.second && x.first < y.first);
    });
    std::vector<std::pair<double, double>> hull;
    auto bad = [](const auto& l1, const auto& l2, const auto& l3) {
        // l2 is never strictly above both neighbours.
        return (l3.first - l1.first) * (l2.second - l1.second) >= (l2.first - l1.first) * (l3.second - l1.second);
    };
    for (const auto& l : lines) {
        if (!hull.empty() && hull.back().second == l.second) hull.pop_back();
        while (hull.size() >= 2 && bad(hull[hull.size() - 2], hull.back(), l)) hull.pop_back();
        hull.push_back(l);
    }
    // Walk the hull from t = 0 to t = 1; slopes increase along t.
    double total = 0.0, t = 0.0;
    std::size_t i = 0;
    auto value = [](const auto& l, double x) { return l.first + l.second * x; };
    while (i + 1 < hull.size() &&
           value(hull[i + 1], 0.0) >= value(hull[i], 0.0))
        ++i;
    while (t < 1.0) {
        double next = 1.0;
        if (i + 1 < hull.size()) {
            const auto& a = hull[i];
            const auto& b = hull[i + 1];
            const double cross = (a.first - b.first) / (b.second - a.second);
            next = std::clamp(cross, t, 1.0);
        }
        const double y0 = value(hull[i], t), y1 = value(hull[i], next);
        total += (next - t) * (y0 * y0 + y0 * y1 + y1 * y1) / 3.0;
        t = next;
        if (i + 1 < hull.size()) ++i;
        else break;
    }
    return total;
}

}  // namespace

double block_maximum_energy(const std::vector<std::vector<double>>& terms, int level) {
    if (terms.empty()) return 0.0;
    const std::size_t cells = std::size_t{1} << level;
    if (terms.front().size() != cells + 1) throw std::invalid_argument("terms must hold 2^level + 1 grid values");
    std::vector<std::vector<double>> partial(terms.size(), std::vector<double>(cells + 1));
    for (std::size_t i = 0; i < terms.size(); ++i)
        for (std::size_t s = 0; s <= cells; ++s) partial[i][s] = (i ? partial[i - 1][s] : 0.0) + terms[i][s];
    const double h = std::ldexp(1.0, -level);
    double total = 0.0;
    std::vector<std::pair<double, double>> lines;
    for (std::size_t s = 0; s < cells; ++s) {
        lines.clear();
        for (const auto& d : partial) {
            const double y0 = d[s], y1 = d[s + 1];
            lines.emplace_back(y0, y1 - y0);
            lines.emplace_back(-y0, y0 - y1);
        }
        total += h * envelope_square_integral(lines);
    }
    return total;
}

ExperimentReport demo_convergence(FranklinBasis& f, const ConvergenceConfig& cfg) {
    if (f.variant() != Variant::classical) throw std::invalid_argument("convergence demo runs on the classical system");
    if (cfg.blocks < 1) throw std::invalid_argument("block count must be >= 1");
    if (cfg.group < 1) throw std::invalid_argument("group size must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    const int terms_count = 1 << (cfg.blocks + 1);
    const int raw = terms_count * cfg.group;
    f.ensure(raw);
    std::vector<int> perm(static_cast<std::size_t>(raw));
    std::iota(perm.begin(), perm.end(), 1);
    std::mt19937_64 rng(cfg.rearrangement_seed);
    if (cfg.rearrangement_seed != 0) std::shuffle(perm.begin(), perm.end(), rng);
    int level = 0;
    for (int j = 1; j <= raw; ++j) level = std::max(level, grid_level(Variant::classical, j));
    const std::size_t cells = std::size_t{1} << level;
    std::normal_distribution<double> normal;

    // Series term k (1-based) on the uniform grid.
    auto term = [&](int k) {
        std::vector<double> v(cells + 1, 0.0);
        const double a = cfg.coefficients(k);
        if (a == 0.0) return v;
        std::vector<double> c(static_cast<std::size_t>(cfg.group), 1.0);
        if (cfg.group > 1) {
            std::mt19937_64 local(derive_seed(cfg.rearrangement_seed, static_cast<std::uint64_t>(k)));
            double s = 0.0;
            for (auto& x : c) {
                x = normal(local);
                s += x * x;
            }
            for (auto& x : c) x /= std::sqrt(s);
        }
        for (int i = 0; i < cfg.group; ++i) {
            const int j = perm[static_cast<std::size_t>((k - 1) * cfg.group + i)];
            f.function(j).accumulate_on_grid(a * c[static_cast<std::size_t>(i)], level, v);
        }
        return v;
    };

    ExperimentReport r;
    r.id = "block-maxima-convergence";
    r.anchor = "d2";
    r.seed = cfg.rearrangement_seed;
    Table t;
    t.name = "block_maxima";
    t.columns = {"k", "delta_energy", "delta_cumulative", "bound_cumulative", "block_coefficient_energy"};
    auto energies = parallel_map<double>(static_cast<std::size_t>(cfg.blocks), [&](std::size_t i) {
        const int k = static_cast<int>(i) + 1;
        std::vector<std::vector<double>> block;
        for (int n = (1 << k) + 1; n <= (1 << (k + 1)); ++n) block.push_back(term(n));
        return block_maximum_energy(block, level);
    });
    double cumulative = 0.0;
    bool dominated = true;
    int nonzero_blocks = 0;
    for (int k = 1; k <= cfg.blocks; ++k) {
        const double e = energies[static_cast<std::size_t>(k - 1)];
        cumulative += e;
        double bound = 0.0;
        for (int j = 2; j <= (1 << (k + 1)); ++j) bound += cfg.coefficients(j) * cfg.coefficients(j) * std::log2(j);
        double block_energy = 0.0;
        for (int j = (1 << k) + 1; j <= (1 << (k + 1)); ++j) block_energy += cfg.coefficients(j) * cfg.coefficients(j);
        if (cumulative > bound * (1.0 + 1e-12)) dominated = false;
        if (e > 0.0) ++nonzero_blocks;
        t.rows.push_back({static_cast<double>(k), e, cumulative, bound, block_energy});
    }
    r.tables.push_back(std::move(t));
    const double increment = energies.back();
    r.set("increment_at_last_block", increment);
    r.set("delta_energy_sum", cumulative);
    r.set("bound_dominates", dominated ? 1.0 : 0.0);
    r.set("nonzero_blocks", nonzero_blocks);

    // sum a_k^2 w(k) ~ sum 1/(k w'(k)) with w'(k) = k^{2 alpha - a - 1} log^{2 beta - b} loglog^{-c} / (C^2 scale).
    if (cfg.coefficients.single == 0 && cfg.coefficients.scale != 0.0) {
        PowerLogRule tail;
        tail.scale = 1.0 / (cfg.coefficients.scale * cfg.coefficients.scale * cfg.multiplier.scale);
        tail.power = 2.0 * cfg.coefficients.alpha - cfg.multiplier.power - 1.0;
        tail.log_power = 2.0 * cfg.coefficients.beta - cfg.multiplier.log_power;
        tail.loglog_power = -cfg.multiplier.loglog_power;
        const auto check = check_reciprocal_series(tail, cfg.tail_cutoff);
        r.set("weighted_sum_partial", check.partial_sum);
        r.set("weighted_sum_upper", check.upper);
        r.config["tail_test"] = to_string(check.verdict);
        if (check.verdict != SeriesVerdict::converges)
            r.notes.push_back("tail test for sum a_k^2 w(k) is " + to_string(check.verdict) + " at the cutoff");
    } else {
        r.config["tail_test"] = "converges";
    }
    r.verdict = (increment < cfg.max_increment && dominated) ? "pass" : "fail";
    r.config["coefficients"] = cfg.coefficients.single > 0
                                   ? "single:" + std::to_string(cfg.coefficients.single)
                                   : std::to_string(cfg.coefficients.scale) + "*power:" +
                                         std::to_string(cfg.coefficients.alpha) + "," +
                                         std::to_string(cfg.coefficients.beta);
    r.config["multiplier"] = cfg.multiplier.to_string();
    r.config["blocks"] = cfg.blocks;
    r.config["rearrangement_seed"] = cfg.rearrangement_seed;
    r.config["group"] = cfg.group;
    r.config["max_increment"] = cfg.max_increment;
    r.config["log_base"] = 2;
    r.runtime_ms = elapsed_ms(start);
    return r;
}

}  // namespace franklin
