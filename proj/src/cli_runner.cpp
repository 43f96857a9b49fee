#include "franklin/cli_runner.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace franklin {

namespace {

namespace fs = std::filesystem;

/// Bad flag values or combinations; reported with exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OptionSpec {
    std::string name;
    std::string fallback;
    std::string help;
    bool flag = false;
};

std::vector<OptionSpec> common_options(const std::string& out_default) {
    return {
        {"seed", "1", "run seed (u64)"},
        {"resolution", "", "resolution K; meaning depends on the command"},
        {"xi-grid", "", "shift grid 2^-K, given as 2^-K or K"},
        {"out", out_default, "output directory (output file for gen-basis and haar)"},
        {"json", "false", "write the JSON report", true},
        {"csv", "false", "write the CSV tables", true},
    };
}

std::vector<OptionSpec> command_options(const std::string& command) {
    if (command == "gen-basis") {
        auto o = common_options("basis.json");
        o.insert(o.end(), {{"variant", "classical", "classical, periodic or reconstructed"},
                           {"max-n", "256", "largest basis index"}});
        return o;
    }
    if (command == "haar") {
        auto o = common_options("");
        o.insert(o.end(), {{"op", "partial", "partial, increment, square, maximal or dyadic-maximal"},
                           {"xi", "0", "grid shift p/2^K"},
                           {"level", "3", "level of partial sums and increments"},
                           {"haar-coeffs", "", "input: comma-separated Haar coefficients for h_1, h_2, ..."},
                           {"franklin", "", "input: Franklin function of this index"},
                           {"variant", "classical", "variant of the Franklin input"},
                           {"input", "", "input: JSON file with breakpoints and values"},
                           {"x-grid", "", "sampling grid level; default max(K + 2, level + 2)"}});
        return o;
    }
    if (command == "verify") {
        auto o = common_options("franklin-out");
        o.insert(o.end(), {{"trials", "", "validation trials (functions for x10)"},
                           {"calibration-trials", "", "calibration trials of sweep verifiers"},
                           {"scale", "1", "multiplier of the random inputs"},
                           {"k", "", "single block level for x5; default the sweep 1..8"},
                           {"n-max", "1024", "largest family size for b4, u30, u35"},
                           {"restarts", "3", "search restarts for b4, u30, u35"},
                           {"threshold-factor", "2", "counterexample threshold over the calibrated constant"},
                           {"max-variation", "3", "allowed ratio of per-parameter constants"},
                           {"cutoff", "1000000", "partial-sum cutoff for omega"}});
        return o;
    }
    if (command == "estimate-an") {
        auto o = common_options("franklin-out");
        o.insert(o.end(), {{"mode", "mon", "sng, mon or full"},
                           {"basis", "franklin", "franklin or haar"},
                           {"n-min", "4", "smallest family size"},
                           {"n-max", "1024", "largest family size (sizes double)"},
                           {"p", "2", "exponent of the norms (Haar only for p != 2)"},
                           {"restarts", "3", "search restarts"},
                           {"window", "8", "greedy look-ahead window"},
                           {"candidates", "3", "restricted candidate list of randomized restarts"},
                           {"random-samples", "20", "random families for the upper evidence"},
                           {"refine", "4", "samples per finest cell (Franklin)"},
                           {"pool-factor", "2", "rows per member in mon mode"},
                           {"subsets", "false", "full mode with multipliers in {0, 1}", true},
                           {"diagnostics-max-n", "0", "square-function split up to this size"},
                           {"eps-c", "0.25", "constant c in eps = (c / ln n)^(1/2)"}});
        return o;
    }
    if (command == "demo-convergence") {
        auto o = common_options("franklin-out");
        o.insert(o.end(), {{"coefficients", "power:0.5,1.1", "power:alpha,beta, zero, single:j, with optional scale*"},
                           {"w", "log", "multiplier such as log or log*loglog^2"},
                           {"blocks", "", "dyadic blocks k = 1..K; default the resolution, else 10"},
                           {"rearrange-seed", "0", "0 keeps the natural order"},
                           {"group", "1", "basis functions per series term"},
                           {"max-increment", "0.001", "allowed increment at the last block"},
                           {"cutoff", "1048576", "partial-sum cutoff of the tail test"}});
        return o;
    }
    if (command == "check-multiplier") {
        auto o = common_options("franklin-out");
        o.insert(o.end(), {{"w", "log", "multiplier such as log or log*loglog^2"},
                           {"cutoff", "1000000", "partial-sum cutoff"}});
        return o;
    }
    return {};
}

const std::vector<std::string> kCommands = {"gen-basis", "haar", "verify", "estimate-an",
                                            "demo-convergence", "check-multiplier", "report"};

std::string anchor_list() {
    std::string s;
    for (const auto& a : anchors()) s += (s.empty() ? "" : ", ") + a.id;
    return s;
}

bool is_anchor(const std::string& id) {
    for (const auto& a : anchors())
        if (a.id == id) return true;
    return false;
}

const AnchorInfo& anchor_info(const std::string& id) {
    for (const auto& a : anchors())
        if (a.id == id) return a;
    throw UsageError("unknown anchor '" + id + "'");
}

std::string env_name(const std::string& key) {
    std::string s = "FRANKLIN_";
    for (char c : key) s.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return s;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) return false;
    throw UsageError("--" + key + " expects true or false, got '" + v + "'");
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
    T v{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || text.empty())
        throw UsageError("--" + key + ": cannot parse '" + text + "'");
    return v;
}

int get_int(const RunConfig& c, const std::string& key) { return parse_value<int>(key, c.get(key)); }
double get_double(const RunConfig& c, const std::string& key) { return parse_value<double>(key, c.get(key)); }
std::uint64_t get_u64(const RunConfig& c, const std::string& key) {
    return parse_value<std::uint64_t>(key, c.get(key));
}
std::optional<int> get_opt_int(const RunConfig& c, const std::string& key) {
    if (c.get(key).empty()) return std::nullopt;
    return get_int(c, key);
}

/// "2^-K" or "K".
std::optional<int> xi_level(const RunConfig& c) {
    std::string s = c.get("xi-grid");
    if (s.empty()) return std::nullopt;
    if (s.rfind("2^-", 0) == 0) s = s.substr(3);
    const int k = parse_value<int>("xi-grid", s);
    if (k < 0 || k > 30) throw UsageError("--xi-grid level must lie in 0..30");
    return k;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(' '));
        item.erase(item.find_last_not_of(' ') + 1);
        out.push_back(parse_value<double>(key, item));
    }
    return out;
}

std::vector<int> doubling_sizes(int lo, int hi) {
    if (lo < 1 || hi < lo) throw UsageError("family sizes need 1 <= n-min <= n-max");
    std::vector<int> sizes;
    for (long long n = lo; n <= hi; n *= 2) sizes.push_back(static_cast<int>(n));
    return sizes;
}

SweepConfig sweep_config(const RunConfig& c) {
    SweepConfig s;
    if (auto t = get_opt_int(c, "trials")) s.trials = *t;
    if (auto t = get_opt_int(c, "calibration-trials")) s.calibration_trials = *t;
    if (s.trials < 1 || s.calibration_trials < 1) throw UsageError("trial counts must be >= 1");
    s.seed = get_u64(c, "seed");
    s.scale = get_double(c, "scale");
    s.threshold_factor = get_double(c, "threshold-factor");
    s.max_variation = get_double(c, "max-variation");
    if (!(s.scale > 0.0)) throw UsageError("--scale must be positive");
    return s;
}

// ---------------------------------------------------------------------------

ExperimentReport growth_run(GrowthConfig g, const std::string& anchor) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport r = growth_report(run_maximal_bound(g), anchor);
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

GrowthConfig growth_base(const RunConfig& c) {
    GrowthConfig g;
    g.seed = get_u64(c, "seed");
    g.restarts = get_int(c, "restarts");
    g.sizes = doubling_sizes(4, get_int(c, "n-max"));
    return g;
}

ExperimentReport verify_anchor(const RunConfig& c) {
    const std::string& a = c.anchor;
    const std::uint64_t seed = get_u64(c, "seed");
    if (a == "x5") {
        FranklinBasis u(Variant::reconstructed);
        BlockBoundConfig b;
        if (auto k = get_opt_int(c, "k")) {
            if (*k < 1 || *k > 12) throw UsageError("--k must lie in 1..12");
            b.levels = {*k};
        }
        if (auto t = get_opt_int(c, "trials")) b.trials = *t;
        b.seed = seed;
        b.scale = get_double(c, "scale");
        return verify_block_bound(u, b);
    }
    if (a == "x21") {
        FranklinBasis u(Variant::reconstructed);
        MajorantConfig m;
        m.sweep = sweep_config(c);
        return verify_majorant_lemma(u, m);
    }
    if (a == "L7") {
        MonotoneMajorantConfig m;
        m.sweep = sweep_config(c);
        return verify_monotone_majorant(m);
    }
    if (a == "x1") {
        IncrementConfig m;
        m.sweep = sweep_config(c);
        if (auto k = xi_level(c)) m.xi_level = *k;
        return verify_increment_vs_maximal(m);
    }
    if (a == "x22") {
        FranklinBasis u(Variant::reconstructed);
        KernelIntegralConfig m;
        m.sweep = sweep_config(c);
        return verify_kernel_integral(u, m);
    }
    if (a == "x2") {
        FranklinBasis u(Variant::reconstructed);
        HaarBlockConfig m;
        m.sweep = sweep_config(c);
        if (auto k = xi_level(c)) m.xi_level = *k;
        return verify_haar_of_deltaU(u, m);
    }
    if (a == "x10") {
        FranklinBasis u(Variant::reconstructed);
        MainLemmaConfig m;
        m.seed = seed;
        if (auto t = get_opt_int(c, "trials")) m.functions = *t;
        if (auto k = get_opt_int(c, "resolution")) m.max_index = 1 << std::clamp(*k, 1, 14);
        if (auto k = xi_level(c)) m.xi_level = *k;
        return verify_main_lemma(u, m);
    }
    if (a == "cww") {
        CwwConfig m;
        m.seed = seed;
        m.scale = get_double(c, "scale");
        if (auto t = get_opt_int(c, "trials")) m.trials = *t;
        if (auto k = get_opt_int(c, "resolution")) m.resolution = *k;
        if (auto k = xi_level(c)) m.xi_level = *k;
        return verify_cww(m);
    }
    if (a == "b4") {
        GrowthConfig g = growth_base(c);
        std::vector<std::pair<std::string, ExperimentReport>> parts;
        for (FamilyMode mode : {FamilyMode::mon, FamilyMode::sng}) {
            g.mode = mode;
            parts.emplace_back(to_string(mode), growth_run(g, a));
        }
        return merge_reports(anchor_info(a).name, a, parts);
    }
    if (a == "u30") {
        GrowthConfig g = growth_base(c);
        g.mode = FamilyMode::full;
        g.subsets = true;
        return growth_run(g, a);
    }
    if (a == "u35") {
        GrowthConfig g = growth_base(c);
        g.system = SystemKind::haar;
        g.mode = FamilyMode::full;
        std::vector<std::pair<std::string, ExperimentReport>> parts;
        for (double p : {1.5, 3.0}) {
            g.p = p;
            parts.emplace_back("p" + format_number(p), growth_run(g, a));
        }
        return merge_reports(anchor_info(a).name, a, parts);
    }
    if (a == "d2") {
        FranklinBasis f(Variant::classical);
        ConvergenceConfig d;
        if (auto k = get_opt_int(c, "resolution")) d.blocks = *k;
        return demo_convergence(f, d);
    }
    if (a == "omega") {
        const long long cutoff = parse_value<long long>("cutoff", c.get("cutoff"));
        std::vector<std::pair<std::string, ExperimentReport>> parts;
        parts.emplace_back("log", check_multiplier_condition(parse_power_log("log"), cutoff));
        parts.emplace_back("log_loglog2", check_multiplier_condition(parse_power_log("log*loglog^2"), cutoff));
        const bool ok = parts[0].second.verdict == "diverges" && parts[1].second.verdict == "converges";
        for (auto& [label, part] : parts) part.verdict = "pass";
        ExperimentReport r = merge_reports(anchor_info(a).name, a, parts);
        r.verdict = ok ? "pass" : "fail";
        r.notes.push_back("reference multipliers: log must diverge, log*loglog^2 must converge");
        return r;
    }
    throw UsageError("unknown anchor '" + a + "'");
}

ExperimentReport estimate_an(const RunConfig& c) {
    GrowthConfig g;
    g.system = parse_system(c.get("basis"));
    g.mode = parse_family_mode(c.get("mode"));
    g.p = get_double(c, "p");
    g.sizes = doubling_sizes(get_int(c, "n-min"), get_int(c, "n-max"));
    g.restarts = get_int(c, "restarts");
    g.window = get_int(c, "window");
    g.candidates = get_int(c, "candidates");
    g.random_samples = get_int(c, "random-samples");
    g.refine = get_int(c, "refine");
    g.pool_factor = get_int(c, "pool-factor");
    g.subsets = c.flag("subsets");
    g.diagnostics_max_n = get_int(c, "diagnostics-max-n");
    g.eps_c = get_double(c, "eps-c");
    g.seed = get_u64(c, "seed");
    const std::string anchor = g.system == SystemKind::haar ? "u35" : (g.mode == FamilyMode::full ? "u30" : "b4");
    return growth_run(g, anchor);
}

ExperimentReport demo(const RunConfig& c) {
    FranklinBasis f(Variant::classical);
    ConvergenceConfig d;
    d.coefficients = parse_coefficient_rule(c.get("coefficients"));
    d.multiplier = parse_power_log(c.get("w"));
    if (auto k = get_opt_int(c, "blocks"))
        d.blocks = *k;
    else if (auto r = get_opt_int(c, "resolution"))
        d.blocks = *r;
    if (d.blocks > 16) throw UsageError("--blocks must be <= 16");
    d.rearrangement_seed = get_u64(c, "rearrange-seed");
    d.group = get_int(c, "group");
    d.max_increment = get_double(c, "max-increment");
    d.tail_cutoff = parse_value<long long>("cutoff", c.get("cutoff"));
    return demo_convergence(f, d);
}

// ---------------------------------------------------------------------------

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

std::string summary_line(const ExperimentReport& r, const std::string& where) {
    std::ostringstream os;
    os << r.anchor;
    if (is_anchor(r.anchor)) os << " (" << anchor_info(r.anchor).name << ")";
    os << ": " << r.verdict;
    if (r.has("constant"))
        os << " constant=" << format_number(r.constant("constant"));
    else if (!r.constants.empty())
        os << " " << r.constants.front().first << "=" << format_number(r.constants.front().second);
    os << " runtime_ms=" << std::llround(r.runtime_ms);
    if (!where.empty()) os << " -> " << where;
    return os.str();
}

/// Writes the report, its tables and the replayable config; returns the exit code.
int persist(ExperimentReport r, const RunConfig& c, const std::string& stem, std::ostream& out) {
    const fs::path dir = c.get("out");
    const bool any = c.flag("json") || c.flag("csv");
    const bool json = !any || c.flag("json");
    const bool csv = !any || c.flag("csv");
    fs::create_directories(dir);
    if (csv) {
        for (const auto& t : r.tables) {
            const std::string name = stem + "_" + t.name + ".csv";
            write_file(dir / name, table_to_csv(t));
            r.attachments.push_back(name);
        }
    }
    if (json) write_file(dir / (stem + ".json"), to_json(r).dump(2) + "\n");
    write_file(dir / (stem + ".config"), format_config(c));
    out << summary_line(r, (dir / (stem + (json ? ".json" : ".config"))).string()) << "\n";
    return r.failed() ? 1 : 0;
}

int gen_basis(const RunConfig& c, std::ostream& out) {
    const Variant v = parse_variant(c.get("variant"));
    const int max_n = get_int(c, "max-n");
    if (max_n < 1 || max_n > (1 << 16)) throw UsageError("--max-n must lie in 1..65536");
    FranklinBasis basis(v);
    basis.ensure(max_n);
    nlohmann::ordered_json j;
    j["variant"] = to_string(v);
    j["max_n"] = max_n;
    const double dev = basis.gram_deviation(max_n);
    j["gram_deviation"] = dev;
    auto fns = nlohmann::ordered_json::array();
    for (int n = basis.first(); n <= max_n; ++n) {
        nlohmann::ordered_json f;
        f["n"] = n;
        const auto body = to_json(basis.function(n));
        for (auto it = body.begin(); it != body.end(); ++it) f[it.key()] = it.value();
        fns.push_back(std::move(f));
    }
    j["functions"] = std::move(fns);
    write_file(c.get("out"), j.dump() + "\n");
    const bool ok = dev <= 1e-9;
    out << "gen-basis " << to_string(v) << " max_n=" << max_n << ": " << (ok ? "pass" : "fail")
        << " gram_deviation=" << format_number(dev) << " -> " << c.get("out") << "\n";
    return ok ? 0 : 1;
}

int haar_command(const RunConfig& c, std::ostream& out) {
    using Input = std::variant<PiecewiseLinear, StepFunction>;
    std::optional<Input> f;
    int inputs = 0;
    if (!c.get("input").empty()) {
        ++inputs;
        std::ifstream in(c.get("input"));
        if (!in) throw UsageError("cannot read " + c.get("input"));
        const auto j = nlohmann::json::parse(in);
        if (j.contains("left_limit_at_zero"))
            f = piecewise_linear_from_json(j);
        else
            f = step_function_from_json(j);
    }
    if (!c.get("franklin").empty()) {
        ++inputs;
        FranklinBasis basis(parse_variant(c.get("variant")));
        f = basis.function(get_int(c, "franklin"));
    }
    if (!c.get("haar-coeffs").empty()) {
        ++inputs;
        f = haar_series(parse_list("haar-coeffs", c.get("haar-coeffs")));
    }
    if (inputs != 1) throw UsageError("haar needs exactly one of --input, --franklin, --haar-coeffs");
    const Dyadic xi = Dyadic::parse(c.get("xi")).mod1();
    const int level = get_int(c, "level");
    if (level < 0 || level > 24) throw UsageError("--level must lie in 0..24");
    int grid = std::max(xi.exp() + 2, level + 2);
    if (auto g = get_opt_int(c, "x-grid")) grid = *g;
    if (grid < 0 || grid > 24) throw UsageError("--x-grid must lie in 0..24");
    const std::string op = c.get("op");

    std::function<double(double)> sample;
    std::visit(
        [&](const auto& fn) {
            if (op == "partial") {
                auto s = haar_partial_sum(fn, level, xi);
                sample = [s](double x) { return s(x); };
            } else if (op == "increment") {
                auto s = haar_increment(fn, level, xi);
                sample = [s](double x) { return s(x); };
            } else if (op == "square") {
                auto s = square_function(fn, xi);
                sample = [s](double x) { return s(x); };
            } else if (op == "dyadic-maximal") {
                auto s = dyadic_maximal(fn, xi);
                sample = [s](double x) { return s(x); };
            } else if (op == "maximal") {
                auto m = maximal_function(fn, grid);
                sample = [m](double x) { return m.lower(x); };
            } else {
                throw UsageError("--op must be partial, increment, square, maximal or dyadic-maximal");
            }
        },
        *f);
    std::string csv = "x,value\n";
    const std::size_t count = std::size_t{1} << grid;
    for (std::size_t i = 0; i < count; ++i) {
        const double x = std::ldexp(static_cast<double>(i), -grid);
        csv += format_number(x) + "," + format_number(sample(x)) + "\n";
    }
    if (c.get("out").empty())
        out << csv;
    else
        write_file(c.get("out"), csv);
    return 0;
}

int report_command(bool list, const std::string& dir, std::ostream& out) {
    if (list) {
        for (const auto& a : anchors()) out << a.id << "\t" << a.name << "\t" << a.summary << "\n";
        return 0;
    }
    if (dir.empty()) throw UsageError("report needs --list or a directory of reports");
    if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    int code = 0;
    for (const auto& p : files) {
        std::ifstream in(p);
        const auto j = nlohmann::ordered_json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.contains("verdict") || !j.contains("anchor")) continue;
        ExperimentReport r;
        r.anchor = j["anchor"].get<std::string>();
        r.verdict = j["verdict"].get<std::string>();
        r.runtime_ms = j.value("runtime_ms", 0.0);
        for (auto it = j["constants"].begin(); it != j["constants"].end(); ++it)
            if (it.value().is_number()) r.set(it.key(), it.value().get<double>());
        out << summary_line(r, p.string()) << "\n";
        if (r.failed()) code = 1;
    }
    return code;
}

/// Moves `--config file` (if first) behind the command and anchor stored in it.
std::vector<std::string> expand_replay(const std::vector<std::string>& args) {
    if (args.empty()) return args;
    std::string path;
    std::size_t used = 0;
    if (args[0] == "--config" && args.size() >= 2) {
        path = args[1];
        used = 2;
    } else if (args[0].rfind("--config=", 0) == 0) {
        path = args[0].substr(9);
        used = 1;
    } else {
        return args;
    }
    const auto file = read_config_file(path);
    auto cmd = file.find("command");
    if (cmd == file.end()) throw UsageError("config file " + path + " names no command");
    std::vector<std::string> out = {cmd->second};
    if (auto a = file.find("anchor"); a != file.end() && !a->second.empty()) out.push_back(a->second);
    out.push_back("--config");
    out.push_back(path);
    out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(used), args.end());
    return out;
}

void usage_hint(std::ostream& err) {
    err << "commands: gen-basis, haar, verify <anchor>, estimate-an, demo-convergence, check-multiplier, report\n"
        << "anchors: " << anchor_list() << "\n";
}

}  // namespace

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw UsageError("option --" + key + " does not apply to " + command);
    return it->second;
}

bool RunConfig::flag(const std::string& key) const { return parse_bool(key, get(key)); }

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::map<std::string, std::string> out;
    std::string line;
    int number = 0;
    auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
    };
    while (std::getline(in, line)) {
        ++number;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(number) + ": expected key = value");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

std::string format_config(const RunConfig& cfg) {
    std::string s = "command = " + cfg.command + "\n";
    if (!cfg.anchor.empty()) s += "anchor = " + cfg.anchor + "\n";
    for (const auto& [k, v] : cfg.values) s += k + " = " + v + "\n";
    return s;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string table_to_csv(const Table& t) {
    std::string s;
    for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
    s += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + format_number(row[i]);
        s += "\n";
    }
    return s;
}

ExperimentReport merge_reports(const std::string& id, const std::string& anchor,
                               const std::vector<std::pair<std::string, ExperimentReport>>& parts) {
    ExperimentReport r;
    r.id = id;
    r.anchor = anchor;
    r.verdict = "pass";
    for (const auto& [label, part] : parts) {
        if (r.seed == 0) r.seed = part.seed;
        for (const auto& [k, v] : part.constants) r.set(label + "." + k, v);
        for (auto t : part.tables) {
            t.name = label + "_" + t.name;
            r.tables.push_back(std::move(t));
        }
        r.config[label] = part.config;
        for (const auto& n : part.notes) r.notes.push_back(label + ": " + n);
        r.runtime_ms += part.runtime_ms;
        if (part.failed()) r.verdict = "fail";
    }
    return r;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    try {
        const std::vector<std::string> args = expand_replay(raw_args);
        if (!args.empty() && args[0].rfind("-", 0) != 0 &&
            std::find(kCommands.begin(), kCommands.end(), args[0]) == kCommands.end())
            throw UsageError("unknown command '" + args[0] + "'");
        CLI::App app{"Franklin system experiments", "franklin"};
        app.require_subcommand(1);
        app.footer("anchors: " + anchor_list());

        std::map<std::string, std::map<std::string, std::string>> given;
        std::map<std::string, std::map<std::string, bool>> given_flags;
        std::map<std::string, std::string> config_path;
        std::string anchor, report_dir;
        bool list = false;
        for (const auto& name : kCommands) {
            auto* sub = app.add_subcommand(name);
            if (name == "report") {
                sub->description("list the anchors, or summarize stored reports in a directory");
                sub->add_flag("--list", list, "list anchor ids and names");
                sub->add_option("dir", report_dir, "directory of JSON reports");
                continue;
            }
            sub->add_option("--config", config_path[name], "flat key = value file");
            if (name == "verify") sub->add_option("anchor", anchor, "one of: " + anchor_list())->required();
            for (const auto& spec : command_options(name)) {
                if (spec.flag)
                    sub->add_flag("--" + spec.name, given_flags[name][spec.name], spec.help);
                else
                    sub->add_option("--" + spec.name, given[name][spec.name], spec.help);
            }
        }
        try {
            std::vector<std::string> reversed(args.rbegin(), args.rend());
            app.parse(reversed);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) {
                app.exit(e, out, err);
                return 0;
            }
            err << "error: " << e.what() << "\n";
            usage_hint(err);
            return 2;
        }
        CLI::App* sub = app.get_subcommands().front();
        const std::string command = sub->get_name();
        if (command == "report") return report_command(list, report_dir, out);

        RunConfig cfg;
        cfg.command = command;
        std::map<std::string, std::string> file;
        if (!config_path[command].empty()) file = read_config_file(config_path[command]);
        const auto specs = command_options(command);
        for (const auto& [k, v] : file) {
            if (k == "command" || k == "anchor") continue;
            bool known = false;
            for (const auto& s : specs) known = known || s.name == k;
            if (!known) throw UsageError("config key '" + k + "' does not apply to " + command);
        }
        if (command == "verify") {
            if (!is_anchor(anchor)) throw UsageError("unknown anchor '" + anchor + "'");
            cfg.anchor = anchor;
        }
        for (const auto& s : specs) {
            std::string value = s.fallback;
            if (auto it = file.find(s.name); it != file.end()) value = it->second;
            if (const char* env = std::getenv(env_name(s.name).c_str())) value = env;
            if (sub->get_option("--" + s.name)->count() > 0)
                value = s.flag ? "true" : given[command][s.name];
            if (s.flag) value = parse_bool(s.name, value) ? "true" : "false";
            cfg.values[s.name] = value;
        }

        if (command == "gen-basis") return gen_basis(cfg, out);
        if (command == "haar") return haar_command(cfg, out);
        if (command == "verify") return persist(verify_anchor(cfg), cfg, cfg.anchor, out);
        if (command == "estimate-an") {
            ExperimentReport r = estimate_an(cfg);
            return persist(r, cfg, "estimate-" + cfg.get("basis") + "-" + cfg.get("mode"), out);
        }
        if (command == "demo-convergence") return persist(demo(cfg), cfg, "demo-convergence", out);
        if (command == "check-multiplier") {
            ExperimentReport r = check_multiplier_condition(parse_power_log(cfg.get("w")),
                                                            parse_value<long long>("cutoff", cfg.get("cutoff")));
            return persist(r, cfg, "check-multiplier", out);
        }
        throw UsageError("unknown command " + command);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        usage_hint(err);
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        usage_hint(err);
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace franklin
