#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "siftroth/config.hpp"
#include "siftroth/pipeline.hpp"
#include "siftroth/report.hpp"
#include "siftroth/scan.hpp"
#include "siftroth/verify.hpp"

using namespace siftroth;

namespace {

ExperimentConfig parse(const std::string& text) { return config_from_json(Json::parse(text)); }

Errc code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return Errc::invalid_argument;
}

std::vector<std::int64_t> ints(const StageRecord& st, const std::string& name)
{
    return std::get<std::vector<std::int64_t>>(*st.find(name));
}

} // namespace

TEST(Config, Defaults)
{
    const auto c = parse("{}");
    EXPECT_EQ(c.poly, FactoredPolynomial::from_pairs({{1, 0}}));
    EXPECT_EQ(c.equation.coeffs(), (std::vector<std::int64_t>{1, 1, -2}));
    EXPECT_EQ(c.n_max, 100000);
    EXPECT_FALSE(c.wtrick_z.has_value());
    EXPECT_EQ(c.sift_rule.kind, ZRule::Kind::brun);
    EXPECT_EQ(c.subset.kind, SubsetRule::Kind::full);
    EXPECT_EQ(c.l, 2u);
    EXPECT_DOUBLE_EQ(c.constants.c1, 1.0);
    EXPECT_DOUBLE_EQ(c.constants.c2, 1.0);
    EXPECT_DOUBLE_EQ(c.constants.cFL, 1.0);
    EXPECT_DOUBLE_EQ(c.constants.cF, 1.0);
    EXPECT_NEAR(c.resolved_wtrick_z(), std::log(1e5) / 3, 1e-12);
    EXPECT_NEAR(c.resolved_sift_z(), std::pow(1e5, 0.2), 1e-9);
}

TEST(Config, Keys)
{
    const auto c = parse(R"j({"F": [[1, 0], [1, 2]], "L": [2, 1, -3], "N": 5000, "z": 2.5, "sift_z": 7,
        "subset": {"rule": "random", "delta": 0.25}, "l": 3, "restriction_l": 5,
        "constants": {"c1": 0.5, "c2": 2, "cFL": 3, "cF": 4, "tableMax": 20, "primeCutoff": 50},
        "h_variant": "varnavides", "h_c": 0.7, "seed": 99, "threads": 3,
        "grid": {"N": [100, 200], "delta": [0.5], "c": 0.2}})j");
    EXPECT_EQ(c.poly, FactoredPolynomial::from_pairs({{1, 0}, {1, 2}}));
    EXPECT_EQ(c.equation.coeffs(), (std::vector<std::int64_t>{2, 1, -3}));
    EXPECT_EQ(c.n_max, 5000);
    EXPECT_DOUBLE_EQ(*c.wtrick_z, 2.5);
    EXPECT_DOUBLE_EQ(c.resolved_sift_z(), 7.0);
    EXPECT_EQ(c.subset.kind, SubsetRule::Kind::random);
    EXPECT_DOUBLE_EQ(c.subset.delta, 0.25);
    EXPECT_EQ(c.l, 3u);
    EXPECT_EQ(c.restriction_l, 5u);
    EXPECT_DOUBLE_EQ(c.constants.c1, 0.5);
    EXPECT_DOUBLE_EQ(c.constants.c2, 2.0);
    EXPECT_DOUBLE_EQ(c.constants.cFL, 3.0);
    EXPECT_DOUBLE_EQ(c.constants.cF, 4.0);
    EXPECT_EQ(c.constants.table_max, 20u);
    EXPECT_EQ(c.constants.prime_cutoff, 50u);
    EXPECT_EQ(c.h_variant, HVariant::varnavides);
    EXPECT_DOUBLE_EQ(c.h_c, 0.7);
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.threads, 3u);
    EXPECT_EQ(c.grid.n_values, (std::vector<std::int64_t>{100, 200}));
    EXPECT_EQ(c.grid.deltas, (std::vector<double>{0.5}));
    EXPECT_DOUBLE_EQ(c.grid.upper_c, 0.2);
    EXPECT_EQ(parse(R"j({"F": "X(X+2)"})j").poly, FactoredPolynomial::from_pairs({{1, 0}, {1, 2}}));
}

TEST(Config, Errors)
{
    EXPECT_EQ(code_of([] { parse(R"j({"F": "X(X+1)"})j"); }), Errc::invalid_argument);
    EXPECT_EQ(code_of([] { parse(R"j({"F": [[1, 0], [1, 0]]})j"); }), Errc::degenerate_polynomial);
    EXPECT_EQ(code_of([] { parse(R"j({"L": [1, 1, -1]})j"); }), Errc::invalid_argument);
    EXPECT_EQ(code_of([] { parse(R"j({"N": 1})j"); }), Errc::invalid_argument);
    EXPECT_EQ(code_of([] { parse(R"j({"subset": {"rule": "random", "delta": 0}})j"); }), Errc::invalid_argument);
    EXPECT_EQ(code_of([] { parse(R"j({"subset": {"rule": "magic"}})j"); }), Errc::parse);
    EXPECT_EQ(code_of([] { parse(R"j({"l": 1})j"); }), Errc::invalid_argument);
    EXPECT_EQ(code_of([] { parse(R"j({"z": "sqrt"})j"); }), Errc::parse);
    EXPECT_EQ(code_of([] { parse(R"j({"N": "many"})j"); }), Errc::parse);
    EXPECT_EQ(code_of([] { parse(R"j({"h_variant": "other"})j"); }), Errc::parse);
    EXPECT_EQ(code_of([] { parse("[1, 2]"); }), Errc::parse);
    EXPECT_EQ(code_of([] { load_config("/nonexistent/sift-roth.json"); }), Errc::io);
}

TEST(Config, JsonRoundTrip)
{
    const auto c = parse(R"j({"F": "X(X+2)", "N": 777, "z": 3, "sift_z": 5,
        "subset": {"rule": "list", "elements": [3, 5]}, "seed": 4, "threads": 6})j");
    const auto j = config_to_json(c);
    EXPECT_FALSE(j.contains("threads"));
    const auto back = config_from_json(j);
    EXPECT_EQ(config_to_json(back), j);
    EXPECT_EQ(back.subset, c.subset);
}

TEST(Config, LoadFileWithComments)
{
    const auto path = std::filesystem::temp_directory_path() / "siftroth_cfg_test.json";
    {
        std::ofstream out(path);
        out << "{\n  // commented\n  \"N\": 1234,\n  \"F\": \"X\"\n}\n";
    }
    EXPECT_EQ(load_config(path.string()).n_max, 1234);
    std::filesystem::remove(path);
}

TEST(IntegerSet, Parse)
{
    std::istringstream ok("3 1\n 4\t1 5");
    EXPECT_EQ(read_integer_set(ok), (std::vector<std::int64_t>{3, 1, 4, 1, 5}));
    std::istringstream bad("3 x");
    EXPECT_EQ(code_of([&] { read_integer_set(bad); }), Errc::parse);
}

TEST(Report, JsonRoundTripIsEqual)
{
    Report r;
    r.config = config_to_json(ExperimentConfig{});
    r.stage("a").set("flag", true).set("count", 7).set("ratio", 0.125).set("name", "x,\"y\"").set("tuple",
        std::vector<std::int64_t>{1, -2, 3});
    r.stage("b").set("undefined", std::monostate{}).set("inf", std::numeric_limits<double>::infinity());
    const auto back = report_from_json(Json::parse(to_json_text(r)));
    EXPECT_EQ(back, r);
    EXPECT_EQ(to_json_text(back), to_json_text(r));
    EXPECT_EQ(to_json(r)["schema"], "sift-roth-report/1");
    EXPECT_EQ(code_of([] { report_from_json(Json::parse(R"j({"schema": "other", "config": {}, "stages": {}})j")); }),
              Errc::parse);
}

TEST(Report, CsvOneRowPerQuantity)
{
    Report r;
    r.stage("a").set("x", 1).set("y", "q\"uote");
    r.stage("b").set("z", 0.5);
    const auto csv = to_csv(r);
    EXPECT_EQ(csv, "stage,quantity,value\na,x,1\na,y,\"q\"\"uote\"\nb,z,0.5\n");
    EXPECT_EQ(parse_report_format("json"), ReportFormat::json);
    EXPECT_EQ(parse_report_format("csv"), ReportFormat::csv);
    EXPECT_THROW(parse_report_format("xml"), Error);
}

TEST(Pipeline, FullSiftedSetFindsValidSolution)
{
    for (const char* f : {"X", "X(X+2)"}) {
        auto cfg = parse(std::string(R"j({"N": 20000, "F": ")j") + f + "\"}");
        const auto rep = run_pipeline(cfg);
        ASSERT_TRUE(pipeline_succeeded(rep)) << f;
        const auto& sol = *rep.find_stage("solution");
        const auto lift = ints(sol, "lift");
        const auto sifted = oracle::sift(f == std::string("X") ? std::vector<std::pair<std::int64_t, std::int64_t>>{{1, 0}}
                                                               : std::vector<std::pair<std::int64_t, std::int64_t>>{{1, 0}, {1, 2}},
                                         cfg.n_max, cfg.resolved_sift_z());
        std::int64_t acc = 0;
        for (std::size_t i = 0; i < lift.size(); ++i) {
            acc += cfg.equation.coeffs()[i] * lift[i];
            EXPECT_TRUE(std::binary_search(sifted.begin(), sifted.end(), lift[i]));
        }
        EXPECT_EQ(acc, 0);
        EXPECT_NE(*std::max_element(lift.begin(), lift.end()), *std::min_element(lift.begin(), lift.end()));
    }
}

TEST(Pipeline, StageOrder)
{
    const auto rep = run_pipeline(parse(R"j({"N": 5000})j"));
    std::vector<std::string> names;
    for (const auto& s : rep.stages)
        names.push_back(s.stage);
    EXPECT_EQ(names, (std::vector<std::string>{"sift", "wtrick", "project", "epsilons", "spectrum", "bohr", "counting",
                                                "solution"}));
}

TEST(Pipeline, SolutionFreeWitnessReportsAbsence)
{
    const auto rep = run_pipeline(parse(R"j({"N": 20, "subset": {"rule": "list", "elements": [1, 2, 4, 5, 10, 11, 13, 14]}})j"));
    EXPECT_FALSE(pipeline_succeeded(rep));
    EXPECT_EQ(std::get<bool>(*rep.find_stage("solution")->find("found")), false);
}

TEST(Pipeline, DeterministicAcrossRunsAndThreads)
{
    auto cfg = parse(R"j({"N": 30000, "subset": {"rule": "random", "delta": 0.6}, "seed": 7})j");
    const auto a = to_json_text(run_pipeline(cfg));
    EXPECT_EQ(to_json_text(run_pipeline(cfg)), a);
    cfg.threads = 4;
    EXPECT_EQ(to_json_text(run_pipeline(cfg)), a);
    cfg.seed = 8;
    EXPECT_NE(to_json_text(run_pipeline(cfg)), a);
}

TEST(Pipeline, ContainmentViolationIsStageError)
{
    try {
        run_pipeline(parse(R"j({"N": 100, "sift_z": 10, "subset": {"rule": "list", "elements": [4, 6]}})j"));
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "sift");
        EXPECT_EQ(e.code(), Errc::containment_violation);
    }
}

TEST(Scan, EmptyGridIsHeaderOnly)
{
    EXPECT_EQ(grid_scan(parse("{}")), "quantity,parameter,parameter_value,value\n");
}

TEST(Scan, BrunRatioRows)
{
    const auto cfg = parse(R"j({"grid": {"N": [1000, 10000, 100000, 1000000]}})j");
    const auto rows = grid_scan_rows(cfg);
    std::vector<double> brun;
    for (const auto& r : rows)
        if (r.quantity == "brunRatio") {
            ASSERT_TRUE(r.value.has_value());
            EXPECT_GT(*r.value, 0);
            EXPECT_NEAR(*r.value, brun_ratio(cfg.poly, static_cast<std::int64_t>(r.parameter_value)), 1e-12);
            brun.push_back(*r.value);
        }
    EXPECT_EQ(brun.size(), 4u);
    auto threaded = cfg;
    threaded.threads = 4;
    EXPECT_EQ(grid_scan(threaded), grid_scan(cfg));
}

TEST(Scan, DeltaRows)
{
    const auto rows = grid_scan_rows(parse(R"j({"N": 20000, "grid": {"delta": [0.3, 1.0]}})j"));
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.quantity, "spectralMomentScaled");
        ASSERT_TRUE(r.value.has_value());
        EXPECT_GT(*r.value, 0);
    }
}

TEST(Verify, DefaultSuitePasses)
{
    const auto res = run_verification_suite(ExperimentConfig{});
    EXPECT_EQ(res.checks.size(), 9u);
    for (const auto& c : res.checks)
        EXPECT_TRUE(c.pass) << c.name << " " << c.measured.dump();
    EXPECT_TRUE(res.all_pass());
}

TEST(Verify, CorruptedDftFailsLambdaIdentity)
{
    SuiteOptions opt;
    opt.corrupt_dft_normalization = true;
    const auto res = run_verification_suite(ExperimentConfig{}, opt);
    EXPECT_FALSE(res.all_pass());
    for (const auto& c : res.checks)
        if (c.name == "Lambda identity") {
            EXPECT_FALSE(c.pass);
        }
}
