#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "mdre/harness.hpp"

using namespace mdre;

namespace {

ExperimentConfig small_gap3() {
    auto c = *find_preset("kl1d_gap3");
    c.samples_per_class = 1000;
    c.optimizer.epochs = 30;
    c.runs = 2;
    return c;
}

// Drops the runtime column so lines from separate runs compare equal.
std::string without_runtime(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string part;
    while (std::getline(ss, part, ',')) f.push_back(part);
    f.at(7).clear();
    std::string out;
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
    return out;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(MDRE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("mdre_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(Config, ValidationRejectsBadValues) {
    auto c = small_gap3();
    EXPECT_NO_THROW(c.validate());
    auto bad = c;
    bad.samples_per_class = 10;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = c;
    bad.runs = 0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = c;
    bad.q = standard_gaussian(2);
    EXPECT_THROW(bad.validate(), DimensionMismatch);
    bad = c;
    bad.optimizer.learning_rate = -1.0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    EXPECT_THROW(config_from_json(Json{{"preset", "no_such_preset"}}), InvalidArgument);
}

TEST(Config, JsonRoundTripForEveryPreset) {
    for (const auto& c : all_presets()) {
        SCOPED_TRACE(c.name);
        const Json j = to_json(c);
        const auto back = config_from_json(j);
        EXPECT_EQ(to_json(back), j);
        EXPECT_EQ(config_hash_hex(back), config_hash_hex(c));
    }
}

TEST(Config, PresetOverrides) {
    const auto c = config_from_json(Json{{"preset", "kl1d_gap3"}, {"seed", 17}, {"samples_per_class", 500}});
    EXPECT_EQ(c.seed, 17u);
    EXPECT_EQ(c.samples_per_class, 500);
    EXPECT_EQ(c.name, "kl1d_gap3");
    EXPECT_NE(config_hash_hex(c), config_hash_hex(*find_preset("kl1d_gap3")));
}

TEST(Config, HashIgnoresKeyOrder) {
    const Json a = Json::parse(R"({"seed": 3, "preset": "kl1d_gap3", "runs": 2})");
    const Json b = Json::parse(R"({"runs": 2, "preset": "kl1d_gap3", "seed": 3})");
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash_hex(config_from_json(a)), config_hash_hex(config_from_json(b)));
}

TEST(Config, HashIsFnv1aOfCanonicalText) {
    const Json j = Json::parse(R"({"b": [2, 3], "a": 1})");
    EXPECT_EQ(j.dump(), R"({"a":1,"b":[2,3]})");
    EXPECT_EQ(config_hash(j), 0x55bed68470220de4ULL);
    EXPECT_EQ(hex_hash(0x1ULL), "0000000000000001");
    EXPECT_EQ(config_hash_hex(*find_preset("kl1d_gap3")).size(), 16u);
}

TEST(Csv, HeaderAndNumberFormat) {
    EXPECT_STREQ(kCsvHeader, "config_hash,seed,method,task,true_value,estimate,stderr,runtime_s,notes");
    EXPECT_EQ(format_number(200.27), "200.27");
    EXPECT_EQ(format_number(1234567.0), "1.23457e+06");
    EXPECT_EQ(format_number(0.000123456789), "0.000123457");
    EXPECT_EQ(format_number(50.79294), "50.7929");
    EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Csv, QuotesFieldsThatNeedIt) {
    EXPECT_EQ(csv_field("plain;text"), "plain;text");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    ResultRecord r;
    r.config_hash = "00ff";
    r.seed = 4;
    r.method = "mdre";
    r.task = "kl_1d";
    r.true_value = 200.2734;
    r.estimate = 1.0 / 3.0;
    r.standard_error = 0.5;
    r.runtime_s = 2.0;
    r.notes = "x,y";
    EXPECT_EQ(csv_line(r), "00ff,4,mdre,kl_1d,200.273,0.333333,0.5,2,\"x,y\"");
}

TEST(OrderedAppender, WritesInSubmissionOrder) {
    std::ostringstream os;
    OrderedAppender app(os, OutputFormat::csv);
    auto rec = [](int i) {
        ResultRecord r;
        r.config_hash = "h" + std::to_string(i);
        return r;
    };
    app.put(2, rec(2));
    app.skip(1);
    EXPECT_EQ(os.str(), std::string(kCsvHeader) + "\n");
    app.put(0, rec(0));
    app.put(3, rec(3));
    app.finish();
    std::vector<std::string> lines;
    std::stringstream ss(os.str());
    for (std::string l; std::getline(ss, l);) lines.push_back(l.substr(0, 2));
    EXPECT_EQ(lines, (std::vector<std::string>{"co", "h0", "h2", "h3"}));
}

TEST(OrderedAppender, JsonArray) {
    std::ostringstream os;
    OrderedAppender app(os, OutputFormat::json);
    ResultRecord r;
    r.estimate = 1.23456789;
    app.put(0, r);
    app.finish();
    const Json j = Json::parse(os.str());
    ASSERT_EQ(j.size(), 1u);
    EXPECT_DOUBLE_EQ(j[0]["estimate"].get<double>(), 1.23457);
    EXPECT_THROW(parse_format("xml"), InvalidArgument);
}

TEST(Pipeline, ReproducibleModuloRuntime) {
    const auto c = small_gap3();
    const auto a = run_all({c}, 1);
    const auto b = run_all({c}, 2);
    ASSERT_EQ(a.size(), 2u);
    ASSERT_EQ(b.size(), 2u);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(without_runtime(csv_line(a[i])), without_runtime(csv_line(b[i])));
    EXPECT_NE(a[0].seed, a[1].seed);
    EXPECT_NE(a[0].estimate, a[1].estimate);
}

TEST(Pipeline, ErrorsNameTheStage) {
    auto c = small_gap3();
    c.optimizer.learning_rate = 1e308;
    c.runs = 1;
    try {
        run(c);
        FAIL() << "expected a fitting failure";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("fitting failed"), std::string::npos) << e.what();
    }
    std::vector<RunFailure> failures;
    const auto recs = run_all({c}, 1, nullptr, &failures);
    EXPECT_TRUE(recs.empty());
    ASSERT_EQ(failures.size(), 1u);
    EXPECT_EQ(failures[0].name, c.name);
}

TEST(Pipeline, BoundChecks) {
    auto c = small_gap3();
    c.lower_bound = 1.0;
    c.upper_bound = 2.0;
    ResultRecord r1;
    r1.name = c.name;
    r1.estimate = 1.2;
    ResultRecord r2 = r1;
    r2.estimate = 2.4;
    EXPECT_TRUE(check_bounds({c}, {r1}).front().within);
    EXPECT_FALSE(check_bounds({c}, {r2}).front().within);
    const auto mixed = check_bounds({c}, {r1, r2}).front();  // the mean, 1.8, is what counts
    EXPECT_TRUE(mixed.within);
    EXPECT_DOUBLE_EQ(mixed.mean_estimate, 1.8);
    EXPECT_EQ(mixed.bound_text, "[1, 2]");
    EXPECT_FALSE(check_bounds({c}, {}).front().within);
}

TEST(AccuracyBand, Verdicts) {
    EXPECT_EQ(band_verdict((Vector(2) << 0.97, 0.99).finished()), BandVerdict::too_easy);
    EXPECT_EQ(band_verdict((Vector(2) << 0.4, 0.3).finished()), BandVerdict::too_hard);
    EXPECT_EQ(band_verdict((Vector(2) << 0.97, 0.8).finished()), BandVerdict::in_band);
    EXPECT_EQ(band_verdict((Vector(2) << 0.4, 0.6).finished()), BandVerdict::in_band);
    EXPECT_THROW(band_verdict(Vector()), InvalidArgument);
}

TEST(RndDiagnostic, ViolationsAndControl) {
    const auto bad = rnd_diagnostic(*find_preset("rnd_truncated_mixture"));
    EXPECT_GT(bad.violations, 0);
    const auto good = rnd_diagnostic(*find_preset("rnd_nested_control"));
    EXPECT_EQ(good.violations, 0);
    // m = q gives ln(m/q) = 0 everywhere.
    const DistributionSpec q = TruncatedNormal{0.0, 1.0, -1.0, 1.0};
    const auto same = rnd_diagnostic(q, q, q, 1000, 1);
    EXPECT_EQ(same.violations, 0);
    EXPECT_EQ(same.over_threshold, 0);
    EXPECT_NEAR(same.max_finite, 0.0, 1e-12);
}

TEST(ShiftDiagnostic, Properties) {
    const auto c = *find_preset("shift_tre_vs_mdre");
    const auto r = shift_diagnostic(c);
    const std::vector<std::string> denominators{"m1", "m2", "m3", "q"};
    for (std::size_t k = 0; k < denominators.size(); ++k)
        EXPECT_LT(r.find("tre", "link_" + std::to_string(k + 1), denominators[k]).mean_abs_error, 0.5);
    const double chain_p = r.find("tre", "chain", "p").mean_abs_error;
    EXPECT_GE(chain_p, 2.0 * r.find("mdre_aux", "p/q", "p").mean_abs_error);
    EXPECT_TRUE(chain_p >= 1.0 || r.find("tre", "chain", "q").mean_abs_error >= 1.0);
    for (const char* from : {"p", "m1", "m2", "m3", "q"})
        EXPECT_LT(r.find("mdre_waymarks", "p/q", from).mean_abs_error, r.find("tre", "chain", from).mean_abs_error) << from;
    for (const char* from : {"p", "m", "q"}) EXPECT_LT(r.find("mdre_aux", "p/q", from).mean_abs_error, 1.0) << from;
    EXPECT_THROW(r.find("tre", "nope", "p"), InvalidArgument);
    for (const auto& s : r.summary) EXPECT_GT(s.n, 0);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(cli(""), 1);
    EXPECT_EQ(cli("--help"), 0);
    EXPECT_EQ(cli("presets"), 0);
    EXPECT_EQ(cli("bench no_such_preset"), 1);
    EXPECT_EQ(cli("kl --config /nonexistent/file.json"), 1);
    EXPECT_EQ(cli("sample --preset kl1d_gap3 -n 5"), 0);
    EXPECT_EQ(cli("diagnose rnd --preset rnd_nested_control"), 0);

    // A bound no estimate can meet forces exit code 2.
    const auto cfg = temp_file("bench.json");
    {
        std::ofstream out(cfg);
        out << R"({"preset": "kl1d_gap3", "samples_per_class": 200, "runs": 1,
                   "optimizer": {"epochs": 5}, "bounds": {"lower": 1e9, "upper": 2e9}})";
    }
    EXPECT_EQ(cli("bench --config " + cfg.string()), 2);
    {
        std::ofstream out(cfg);
        out << R"({"preset": "kl1d_gap3", "samples_per_class": 200, "runs": 1,
                   "optimizer": {"epochs": 5}, "bounds": {"lower": -1e9, "upper": 1e9}})";
    }
    EXPECT_EQ(cli("bench --config " + cfg.string()), 0);
    std::filesystem::remove(cfg);
}

TEST(Cli, CsvOutputFile) {
    const auto out = temp_file("kl.csv");
    ASSERT_EQ(cli("kl --preset kl1d_gap3 --seed 3 --format csv --out " + out.string() +
                  " --config /dev/null"), 1);  // /dev/null is not a JSON document
    const auto cfg = temp_file("kl.json");
    {
        std::ofstream o(cfg);
        o << R"({"preset": "kl1d_gap3", "samples_per_class": 300, "runs": 1, "optimizer": {"epochs": 5}})";
    }
    ASSERT_EQ(cli("kl --config " + cfg.string() + " --seed 3 --out " + out.string()), 0);
    std::ifstream in(out);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    EXPECT_EQ(header, kCsvHeader);
    EXPECT_EQ(line.rfind(config_hash_hex(config_from_json(Json{{"preset", "kl1d_gap3"},
                                                              {"samples_per_class", 300},
                                                              {"runs", 1},
                                                              {"seed", 3},
                                                              {"optimizer", Json{{"epochs", 5}}}})) + ",3,mdre,kl_1d,",
                        0),
              0u);
    std::filesystem::remove(out);
    std::filesystem::remove(cfg);
}
