#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include "franklin/inequality_lab.hpp"
#include "lab_internal.hpp"

namespace franklin {

GoodLambdaMeasure good_lambda_measure(const StepFunction& maximal, const StepFunction& square, double lambda,
                                      double eps) {
    std::vector<double> knots;
    std::set_union(maximal.breakpoints().begin(), maximal.breakpoints().end(), square.breakpoints().begin(),
                   square.breakpoints().end(), std::back_inserter(knots));
    GoodLambdaMeasure out;
    std::size_t i = 0, j = 0;
    for (std::size_t k = 0; k < knots.size(); ++k) {
        const double x = knots[k];
        const double len = (k + 1 < knots.size() ? knots[k + 1] : 1.0) - x;
        while (i + 1 < maximal.pieces() && maximal.breakpoints()[i + 1] <= x) ++i;
        while (j + 1 < square.pieces() && square.breakpoints()[j + 1] <= x) ++j;
        const double M = maximal.values()[i];
        const double S = square.values()[j];
        if (M > lambda && S < eps * lambda) out.mu1 += len;
        if (M > 0.5 * lambda) out.mu2 += len;
    }
    return out;
}

double measure_quantile(const StepFunction& v, double fraction) {
    std::vector<std::pair<double, double>> pieces;
    for (std::size_t i = 0; i < v.pieces(); ++i) pieces.emplace_back(v.values()[i], v.piece_length(i));
    std::sort(pieces.begin(), pieces.end());
    double acc = 0.0;
    for (const auto& [value, len] : pieces) {
        acc += len;
        if (acc >= fraction) return value;
    }
    return pieces.back().first;
}

ExperimentReport verify_cww(const CwwConfig& cfg) {
    if (cfg.resolution < 1) throw std::invalid_argument("resolution must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    const std::size_t E = cfg.eps.size();
    const std::size_t Q = cfg.quantiles.size();
    struct Trial {
        std::vector<double> mu1;
        double mu2 = 0.0;
        int skipped = 0;
    };
    const int count = 1 << cfg.resolution;
    auto trials = parallel_map<Trial>(static_cast<std::size_t>(cfg.trials), [&](std::size_t t) {
        const std::uint64_t seed = derive_seed(cfg.seed, t);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal;
        std::vector<double> coeffs(static_cast<std::size_t>(count), 0.0);
        for (std::size_t k = 1; k < coeffs.size(); ++k) coeffs[k] = cfg.scale * normal(rng);
        const StepFunction f = haar_series(coeffs);
        const int shift_index = cfg.xi_level > 0 ? std::uniform_int_distribution<int>(0, (1 << cfg.xi_level) - 1)(rng) : 0;
        const Dyadic xi(shift_index, cfg.xi_level);
        const StepFunction M = dyadic_maximal(f, xi);
        const StepFunction S = square_function(f, xi);
        Trial out;
        out.mu1.assign(E, 0.0);
        for (std::size_t q = 0; q < Q; ++q) {
            const double lambda = measure_quantile(M, cfg.quantiles[q]);
            for (std::size_t e = 0; e < E; ++e) {
                const auto m = good_lambda_measure(M, S, lambda, cfg.eps[e]);
                if (m.mu2 == 0.0) {
                    ++out.skipped;
                    continue;
                }
                out.mu1[e] += m.mu1;
                if (e == 0) out.mu2 += m.mu2;
            }
        }
        return out;
    });
    std::vector<double> mu1(E, 0.0);
    double mu2 = 0.0;
    int skipped = 0;
    for (const auto& t : trials) {
        for (std::size_t e = 0; e < E; ++e) mu1[e] += t.mu1[e];
        mu2 += t.mu2;
        skipped += t.skipped;
    }
    ExperimentReport r;
    r.id = "good-lambda";
    r.anchor = "cww";
    r.seed = cfg.seed;
    Table tab;
    tab.name = "good_lambda";
    tab.columns = {"eps", "inv_eps_sq", "mu1", "mu2", "log_ratio"};
    std::vector<double> xs, ys;
    for (std::size_t e = 0; e < E; ++e) {
        const double x = 1.0 / (cfg.eps[e] * cfg.eps[e]);
        const double y = (mu1[e] > 0.0 && mu2 > 0.0) ? std::log(mu1[e] / mu2) : -std::numeric_limits<double>::infinity();
        tab.rows.push_back({cfg.eps[e], x, mu1[e], mu2, y});
        if (std::isfinite(y)) {
            xs.push_back(x);
            ys.push_back(y);
        }
    }
    r.tables.push_back(std::move(tab));
    r.set("skipped_cells", skipped);
    r.set("fitted_points", static_cast<double>(xs.size()));
    bool ok = false;
    if (xs.size() >= 2) {
        const auto fit = fit_line(xs, ys);
        r.set("c", -fit.slope);
        r.set("r2", fit.r2);
        r.set("intercept", fit.intercept);
        ok = -fit.slope > 0.0 && fit.r2 >= cfg.min_r2;
    }
    r.verdict = ok ? "pass" : "fail";
    r.config["trials"] = cfg.trials;
    r.config["resolution"] = cfg.resolution;
    r.config["eps"] = cfg.eps;
    r.config["quantiles"] = cfg.quantiles;
    r.config["xi_level"] = cfg.xi_level;
    r.config["min_r2"] = cfg.min_r2;
    r.config["scale"] = cfg.scale;
    r.config["input_law"] = "Haar polynomial with standard normal coefficients on h_2..h_{2^K}, zero mean";
    r.notes.push_back("measures pooled over trials and lambda quantiles before the fit");
    r.runtime_ms = elapsed_ms(start);
    return r;
}

}  // namespace franklin
