#include "franklin/cli_runner.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

namespace franklin {
namespace {

namespace fs = std::filesystem;

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Result r;
    r.code = run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("franklin_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

TEST(CliNumbers, ShortestRoundTrip) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(2.0), "2");
    EXPECT_EQ(format_number(-1e-300), "-1e-300");
    EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_number(std::nan("")), "nan");
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 1000; ++i) {
        const double v = normal(rng) * std::pow(10.0, normal(rng) * 10);
        EXPECT_EQ(std::stod(format_number(v)), v);
    }
}

TEST(CliNumbers, TableCsvLayout) {
    Table t;
    t.name = "demo";
    t.columns = {"n", "value"};
    t.rows = {{1, 0.5}, {2, 0.25}};
    EXPECT_EQ(table_to_csv(t), "n,value\n1,0.5\n2,0.25\n");
}

TEST(CliReports, MergePrefixesAndPropagatesFailure) {
    ExperimentReport a, b;
    a.set("band", 2.0);
    a.tables.push_back({"growth", {"n"}, {{4}}});
    b.set("band", 5.0);
    b.verdict = "fail";
    const auto m = merge_reports("merged", "b4", {{"mon", a}, {"sng", b}});
    EXPECT_EQ(m.anchor, "b4");
    EXPECT_EQ(m.constant("mon.band"), 2.0);
    EXPECT_EQ(m.constant("sng.band"), 5.0);
    EXPECT_EQ(m.tables.at(0).name, "mon_growth");
    EXPECT_EQ(m.verdict, "fail");
}

TEST(CliUsage, UnknownAnchorListsAnchors) {
    const auto r = run_cli({"verify", "x99"});
    EXPECT_EQ(r.code, 2);
    for (const char* id : {"x5", "x21", "L7", "x1", "x22", "x2", "x10", "cww", "b4", "u30", "u35", "d2", "omega"})
        EXPECT_NE(r.err.find(id), std::string::npos) << id;
}

TEST(CliUsage, MissingOrUnknownCommandIsUsageError) {
    EXPECT_EQ(run_cli({}).code, 2);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
    EXPECT_EQ(run_cli({"verify"}).code, 2);
    EXPECT_EQ(run_cli({"verify", "x5", "--seed", "abc"}).code, 2);
    EXPECT_EQ(run_cli({"estimate-an", "--mode", "zigzag"}).code, 2);
    EXPECT_EQ(run_cli({"haar", "--op", "partial"}).code, 2);
}

TEST(CliUsage, HelpExitsCleanly) {
    const auto r = run_cli({"verify", "--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("--seed"), std::string::npos);
}

TEST(CliReport, ListEnumeratesExactlyTheAnchors) {
    const auto r = run_cli({"report", "--list"});
    EXPECT_EQ(r.code, 0);
    std::istringstream lines(r.out);
    std::vector<std::string> ids;
    for (std::string line; std::getline(lines, line);) ids.push_back(line.substr(0, line.find('\t')));
    const std::vector<std::string> expected = {"x5", "x21", "L7", "x1",  "x22", "x2",   "x10",
                                               "cww", "b4", "u30", "u35", "d2",  "omega"};
    EXPECT_EQ(ids, expected);
}

TEST(CliVerify, BlockBoundWritesReportAndCsv) {
    const auto dir = scratch("x5");
    const auto r = run_cli({"verify", "x5", "--k", "4", "--trials", "100", "--seed", "7", "--out", dir.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("pass"), std::string::npos);
    const auto j = nlohmann::json::parse(slurp(dir / "x5.json"));
    EXPECT_EQ(j["anchor"], "x5");
    EXPECT_EQ(j["verdict"], "pass");
    EXPECT_EQ(j["seed"], 7);
    EXPECT_TRUE(j["constants"]["constant"].is_number());
    ASSERT_EQ(j["attachments"].size(), 1u);
    EXPECT_TRUE(fs::exists(dir / j["attachments"][0].get<std::string>()));
}

TEST(CliVerify, JsonFlagAloneSkipsCsv) {
    const auto dir = scratch("json_only");
    EXPECT_EQ(run_cli({"verify", "x5", "--k", "2", "--trials", "5", "--json", "--out", dir.string()}).code, 0);
    EXPECT_TRUE(fs::exists(dir / "x5.json"));
    EXPECT_FALSE(fs::exists(dir / "x5_block_bound.csv"));
}

TEST(CliVerify, FailingVerdictExitsOne) {
    // The demo's increment threshold is not met at ten blocks.
    const auto dir = scratch("d2");
    const auto r = run_cli({"demo-convergence", "--blocks", "6", "--max-increment", "1e-9", "--out", dir.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("fail"), std::string::npos);
}

TEST(CliEstimate, GrowthCsvColumns) {
    const auto dir = scratch("estimate");
    const auto r = run_cli({"estimate-an", "--mode", "mon", "--basis", "franklin", "--n-max", "64", "--seed", "1",
                            "--out", dir.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    const std::string csv = slurp(dir / "estimate-franklin-mon_growth.csv");
    EXPECT_EQ(csv.rfind("n,r_n,r_n_sq_over_log_n,", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5);
}

TEST(CliMultiplier, LogDiverges) {
    const auto dir = scratch("omega");
    const auto r = run_cli({"check-multiplier", "--w", "log", "--cutoff", "100000", "--out", dir.string()});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("diverges"), std::string::npos);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "check-multiplier.json"))["verdict"], "diverges");
}

TEST(CliConfig, ReplayReproducesCsvBytes) {
    const auto a = scratch("replay_a");
    const auto b = scratch("replay_b");
    ASSERT_EQ(run_cli({"estimate-an", "--mode", "full", "--n-max", "32", "--seed", "4", "--out", a.string()}).code, 0);
    ASSERT_EQ(run_cli({"--config", (a / "estimate-franklin-full.config").string(), "--out", b.string()}).code, 0);
    EXPECT_EQ(slurp(a / "estimate-franklin-full_growth.csv"), slurp(b / "estimate-franklin-full_growth.csv"));
    EXPECT_FALSE(slurp(b / "estimate-franklin-full_growth.csv").empty());
}

TEST(CliConfig, FlagsOverrideEnvironmentOverrideFile) {
    const auto dir = scratch("precedence");
    {
        std::ofstream f(dir / "run.cfg");
        f << "# comment\nseed = 5\ntrials = 3\nk = 2\n";
    }
    auto seed_of = [&](std::vector<std::string> extra) {
        std::vector<std::string> args = {"verify", "x5", "--config", (dir / "run.cfg").string(), "--out",
                                         (dir / "o").string()};
        args.insert(args.end(), extra.begin(), extra.end());
        EXPECT_EQ(run_cli(args).code, 0);
        return read_config_file((dir / "o" / "x5.config").string()).at("seed");
    };
    ::unsetenv("FRANKLIN_SEED");
    EXPECT_EQ(seed_of({}), "5");
    ::setenv("FRANKLIN_SEED", "9", 1);
    EXPECT_EQ(seed_of({}), "9");
    EXPECT_EQ(seed_of({"--seed", "11"}), "11");
    ::unsetenv("FRANKLIN_SEED");
}

TEST(CliConfig, UnknownFileKeyIsUsageError) {
    const auto dir = scratch("badkey");
    {
        std::ofstream f(dir / "run.cfg");
        f << "colour = blue\n";
    }
    EXPECT_EQ(run_cli({"verify", "x5", "--config", (dir / "run.cfg").string()}).code, 2);
}

TEST(CliBasis, GenBasisWritesOrthonormalFunctions) {
    const auto dir = scratch("basis");
    const auto r = run_cli({"gen-basis", "--variant", "reconstructed", "--max-n", "32", "--out",
                            (dir / "basis.json").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "basis.json"));
    EXPECT_LE(j["gram_deviation"].get<double>(), 1e-9);
    EXPECT_EQ(j["functions"].size(), 33u);
    const auto f = piecewise_linear_from_json(j["functions"][5]);
    FranklinBasis basis(Variant::reconstructed);
    EXPECT_NEAR(f(0.3), basis.function(5)(0.3), 1e-15);
}

TEST(CliHaar, SamplesPartialSumsOnGrid) {
    // h_1 + h_2 is 2 on [0, 1/2) and 0 on [1/2, 1); level-1 averages reproduce it.
    const auto r = run_cli({"haar", "--op", "partial", "--level", "1", "--haar-coeffs", "1,1", "--x-grid", "2"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "x,value\n0,2\n0.25,2\n0.5,0\n0.75,0\n");
}

TEST(CliHaar, ShiftedGridAveragesAcrossTheJump) {
    // Shifted by 1/4 the level-1 cells straddle the jumps at 0 and 1/2.
    const auto r = run_cli({"haar", "--op", "partial", "--level", "1", "--haar-coeffs", "1,1", "--xi", "1/4",
                            "--x-grid", "2"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "x,value\n0,1\n0.25,1\n0.5,1\n0.75,1\n");
}

}  // namespace
}  // namespace franklin
