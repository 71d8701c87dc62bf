#include "welsch/csv_io.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"

#include "welsch/errors.hpp"
#include "welsch/experiment_config.hpp"
#include "welsch_cli.hpp"
#include "test_support.hpp"

namespace welsch {
namespace {

std::string temp_path(const std::string& name) { return ::testing::TempDir() + name; }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"welsch"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

TEST(LoadCsv, SmallFileShapes) {
    const std::string path = temp_path("tiny.csv");
    write_text(path, "x1,x2,y\n1,2,3\n4,5,6\n7,8,10\n");
    TabularFile file;
    file.path = path;
    const auto [plain, rec0] = load_csv(file, false, false);
    EXPECT_EQ(plain.n(), 3);
    EXPECT_EQ(plain.p(), 2);
    EXPECT_DOUBLE_EQ(plain.y[2], 10.0);
    EXPECT_DOUBLE_EQ(plain.X(1, 0), 4.0);

    const auto [with_intercept, rec1] = load_csv(file, false, true);
    EXPECT_EQ(with_intercept.p(), 3);
    EXPECT_DOUBLE_EQ(with_intercept.X(2, 0), 1.0);
    EXPECT_EQ(rec1.feature_names[0], "(intercept)");
}

TEST(LoadCsv, StandardizationMoments) {
    const std::string path = temp_path("std.csv");
    write_text(path, "a,b,y\n1,5,0\n2,5,0\n3,5,1\n4,5,1\n");
    TabularFile file;
    file.path = path;
    const auto [data, record] = load_csv(file, true, false);
    // column a standardized; column b constant, flagged and untouched
    const double mean = data.X.col(0).mean();
    const double sd = std::sqrt((data.X.col(0).array() - mean).square().sum() / 3.0);
    EXPECT_LE(std::abs(mean), 1e-12);
    EXPECT_NEAR(sd, 1.0, 1e-12);
    EXPECT_TRUE(record.constant_column[1]);
    EXPECT_FALSE(record.constant_column[0]);
    EXPECT_TRUE((data.X.col(1).array() == 5.0).all());
}

TEST(LoadCsv, OriginalUnitsRoundTrip) {
    const std::string path = temp_path("units.csv");
    write_text(path, "a,b,y\n1,10,3\n2,20,5\n3,25,7\n4,41,9\n5,52,11\n");
    TabularFile file;
    file.path = path;
    const auto [data, record] = load_csv(file, true, true);
    const Eigen::VectorXd beta = fit_ols(data);
    const auto [orig, offset] = record.to_original_units(beta);
    EXPECT_EQ(offset, 0.0);  // folded into the intercept
    // predictions must agree in both parameterizations
    const auto [raw, raw_record] = load_csv(file, false, true);
    const Eigen::VectorXd pred_std = data.X * beta;
    const Eigen::VectorXd pred_orig = raw.X * orig;
    EXPECT_LT((pred_std - pred_orig).norm(), 1e-9);
}

TEST(LoadCsv, NonNumericHandling) {
    const std::string path = temp_path("mixed.csv");
    write_text(path, "sex,len,y\nM,1.0,2\nF,2.0,3\nI,3.0,4\n");
    TabularFile file;
    file.path = path;
    EXPECT_THROW((void)load_csv(file, false, false), IoError);
    file.drop_non_numeric = true;
    const auto [data, record] = load_csv(file, false, false);
    EXPECT_EQ(data.p(), 1);
    ASSERT_EQ(record.dropped_columns.size(), 1u);
    EXPECT_EQ(record.dropped_columns[0], "sex");
}

TEST(LoadCsv, ErrorsNameTheProblem) {
    TabularFile missing;
    missing.path = temp_path("does_not_exist.csv");
    EXPECT_THROW((void)load_csv(missing, false, false), IoError);

    const std::string empty = temp_path("empty.csv");
    write_text(empty, "");
    TabularFile empty_file;
    empty_file.path = empty;
    EXPECT_THROW((void)load_csv(empty_file, false, false), IoError);

    const std::string no_target = temp_path("no_target.csv");
    write_text(no_target, "a,b\n1,2\n");
    TabularFile nt;
    nt.path = no_target;
    EXPECT_THROW((void)load_csv(nt, false, false), ConfigError);

    const std::string bad_cell = temp_path("bad_cell.csv");
    write_text(bad_cell, "a,y\n1,2\noops,3\n");
    TabularFile bc;
    bc.path = bad_cell;
    try {
        (void)load_csv(bc, false, false);
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("row 3"), std::string::npos);
        EXPECT_NE(what.find("'a'"), std::string::npos);
    }
}

TEST(LoadCsv, AbaloneSchemaFixture) {
    const std::string path = temp_path("abalone_like.csv");
    test::write_abalone_like_csv(path, 4177, 11);
    TabularFile file;
    file.path = path;
    file.target = "rings";
    file.drop_non_numeric = true;
    const auto [data, record] = load_csv(file, false, false);
    EXPECT_EQ(data.n(), 4177);
    EXPECT_EQ(data.p(), 7);  // sex dropped
    ASSERT_EQ(record.dropped_columns.size(), 1u);
    EXPECT_EQ(record.dropped_columns[0], "sex");
}

TEST(FormatDouble, SeventeenDigitRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 12345.6789012345678, 1e-300, -2.2250738585072014e-308}) {
        const std::string text = format_double(v);
        EXPECT_EQ(std::strtod(text.c_str(), nullptr), v) << text;
    }
}

TEST(WriteCsv, RoundTripThroughLoad) {
    const std::string path = temp_path("roundtrip.csv");
    const double v1 = 1.0 / 3.0;
    const double v2 = -7.25e-12;
    write_csv(path, {"x1", "y"},
              {{format_double(v1), format_double(2.0)}, {format_double(v2), format_double(4.0)}});
    TabularFile file;
    file.path = path;
    const auto [data, record] = load_csv(file, false, false);
    EXPECT_EQ(data.X(0, 0), v1);
    EXPECT_EQ(data.X(1, 0), v2);
}

TEST(Provenance, RecordsResolvedSeedEvenWhenDefaulted) {
    const std::string out = temp_path("prov_report.csv");
    ASSERT_EQ(run_cli({"mse", "--preset", "fig5-desk", "--replicates", "2", "--n", "150",
                       "--out", out}),
              0);
    const std::string prov = read_text(out + ".provenance.json");
    ASSERT_FALSE(prov.empty());
    const auto parsed = nlohmann::json::parse(prov);
    EXPECT_EQ(parsed.at("config").at("base_seed").get<std::uint64_t>(), 1u);  // documented default
    EXPECT_EQ(parsed.at("config").at("replicates").get<long>(), 2);
    EXPECT_EQ(parsed.at("tool").get<std::string>(), "welsch");
}

TEST(Cli, FlagOverridesBeatConfigFileValues) {
    const std::string cfg = temp_path("override.json");
    write_text(cfg, R"({"replicates": 3, "ns": [130]})");
    const std::string out = temp_path("override_report.csv");
    ASSERT_EQ(run_cli({"mse", "--preset", "fig5-desk", "--config", cfg, "--replicates", "2",
                       "--out", out}),
              0);
    const auto parsed = nlohmann::json::parse(read_text(out + ".provenance.json"));
    EXPECT_EQ(parsed.at("config").at("replicates").get<long>(), 2);   // flag wins
    EXPECT_EQ(parsed.at("config").at("ns")[0].get<long>(), 130);      // file beats preset
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run_cli({"no-such-subcommand"}), 2);
    EXPECT_EQ(run_cli({"mse", "--no-such-flag"}), 2);
    EXPECT_EQ(run_cli({"fit"}), 2);  // missing required --data
    EXPECT_EQ(run_cli({"fit", "--data", temp_path("missing.csv"), "--loss", "welsch", "--tau",
                       "0.1"}),
              1);  // runtime failure: file absent
    EXPECT_EQ(run_cli({"mse", "--preset", "fig5-desk", "--proportion", "0.7", "--out",
                       temp_path("x.csv")}),
              2);  // invalid proportion
    EXPECT_EQ(run_cli({"--version"}), 0);
}

TEST(Cli, FitWritesCoefficientsAndResiduals) {
    const std::string data_path = temp_path("fit_data.csv");
    test::write_abalone_like_csv(data_path, 400, 12);
    const std::string prefix = temp_path("fit_out");
    ASSERT_EQ(run_cli({"fit", "--data", data_path, "--target", "rings", "--loss", "welsch",
                       "--tau", "0.5", "--drop-non-numeric", "--holdout", "0.2", "--split-seed",
                       "3", "--out-prefix", prefix}),
              0);
    const std::string coef = read_text(prefix + "_coefficients.csv");
    EXPECT_NE(coef.find("(intercept)"), std::string::npos);
    const std::string resid = read_text(prefix + "_residuals.csv");
    EXPECT_NE(resid.find("test"), std::string::npos);
    EXPECT_NE(resid.find("train"), std::string::npos);
    // 400 rows + header
    EXPECT_EQ(std::count(resid.begin(), resid.end(), '\n'), 401);
    EXPECT_FALSE(read_text(prefix + "_coefficients.csv.provenance.json").empty());
}

TEST(Cli, CvSubcommandWritesTheTable) {
    const std::string data_path = temp_path("cv_data.csv");
    test::write_abalone_like_csv(data_path, 300, 13);
    const std::string out = temp_path("cv_table.csv");
    ASSERT_EQ(run_cli({"cv", "--data", data_path, "--target", "rings", "--drop-non-numeric",
                       "--loss", "welsch", "--grid", "0.01,0.1,1.0", "--out", out}),
              0);
    const std::string table = read_text(out);
    EXPECT_NE(table.find("candidate"), std::string::npos);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);  // header + 3 candidates
}

TEST(Cli, DiagnoseOnSimulatedData) {
    const std::string out = temp_path("diag.csv");
    ASSERT_EQ(run_cli({"diagnose", "--sim", "--preset", "fig5-desk", "--seed", "4", "--out",
                       out}),
              0);
    const std::string table = read_text(out);
    EXPECT_NE(table.find("basin_fraction"), std::string::npos);
    EXPECT_NE(table.find("o_prime"), std::string::npos);
    EXPECT_NE(table.find("hessian_min_eigenvalue"), std::string::npos);
    EXPECT_NE(table.find("d_condition_min"), std::string::npos);
}

TEST(Cli, OutputDirEnvironmentVariable) {
    const std::string dir = temp_path("envdir");
    std::filesystem::create_directories(dir);
    setenv("WELSCH_OUT_DIR", dir.c_str(), 1);
    ASSERT_EQ(run_cli({"mse", "--preset", "fig5-desk", "--replicates", "2", "--n", "150",
                       "--out", "env_report.csv"}),
              0);
    unsetenv("WELSCH_OUT_DIR");
    EXPECT_FALSE(read_text(dir + "/env_report.csv").empty());
}

TEST(Cli, ByteIdenticalReruns) {
    const std::string out_a = temp_path("det_a.csv");
    const std::string out_b = temp_path("det_b.csv");
    const std::vector<std::string> base = {"mse",  "--preset", "fig5-desk", "--replicates", "3",
                                           "--n",  "150",      "--seed",    "9"};
    std::vector<std::string> run_a = base;
    run_a.insert(run_a.end(), {"--out", out_a});
    std::vector<std::string> run_b = base;
    run_b.insert(run_b.end(), {"--out", out_b});
    ASSERT_EQ(run_cli(run_a), 0);
    ASSERT_EQ(run_cli(run_b), 0);
    EXPECT_EQ(read_text(out_a), read_text(out_b));
}

TEST(ExperimentConfig, JsonRoundTripAndErrors) {
    const ExperimentSpec spec = preset_experiment("fig1a-desk");
    const ExperimentSpec back = experiment_from_json_text(experiment_to_json_text(spec));
    EXPECT_EQ(back.kind, spec.kind);
    EXPECT_EQ(back.replicates, spec.replicates);
    EXPECT_EQ(back.estimators.size(), spec.estimators.size());
    EXPECT_EQ(back.proportion_sweep, spec.proportion_sweep);

    EXPECT_THROW((void)experiment_from_json_text("{not json"), ConfigError);
    try {
        (void)experiment_from_json_text(R"({"kind":"mse_distribution","replicates":"many"})");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("replicates"), std::string::npos);
    }
    EXPECT_THROW((void)preset_experiment("fig9000"), ConfigError);
}

}  // namespace
}  // namespace welsch
