#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "support/cli_runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("diagscreen-clitest-" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("eval prints the worked example") {
    const auto result = cli::run("eval --population 601220 --infected 8 --test hutchison");
    REQUIRE(result.exit_code == 0);
    CHECK(result.out.find("fp = 60121.2\n") != std::string::npos);
    CHECK(result.out.find("fn = 3.2\n") != std::string::npos);
}

TEST_CASE("eval machine output carries full precision and a stable schema") {
    const auto result =
        cli::run("--json eval --population 601220 --infected 8 --test hutchison");
    REQUIRE(result.exit_code == 0);
    const auto parsed = json::parse(result.out);
    CHECK(parsed.at("command") == "eval");
    CHECK(parsed.at("test").at("label") == "hutchison");
    CHECK(parsed.at("test").at("sensitivity").get<double>() == 0.6);
    CHECK(parsed.at("state").at("healthy").get<double>() == 601212.0);
    CHECK(parsed.at("false_positives").get<double>() ==
          doctest::Approx(60121.2).epsilon(1e-9));
    CHECK(parsed.at("false_negatives").get<double>() == doctest::Approx(3.2).epsilon(1e-9));

    // key order is part of the schema; pin it
    const auto keys_at = result.out.find("\"command\"");
    CHECK(keys_at != std::string::npos);
    CHECK(result.out.find("\"command\"") < result.out.find("\"test\""));
    CHECK(result.out.find("\"test\"") < result.out.find("\"state\""));
    CHECK(result.out.find("\"state\"") < result.out.find("\"false_positives\""));
}

TEST_CASE("eval accepts a prevalence instead of a count") {
    const auto result =
        cli::run("--json eval --population 18 --prevalence 0.055555555555555555 --test hutchison");
    REQUIRE(result.exit_code == 0);
    const auto parsed = json::parse(result.out);
    CHECK(parsed.at("false_positives").get<double>() == doctest::Approx(1.70).epsilon(1e-9));
    CHECK(parsed.at("false_negatives").get<double>() == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("repeat reproduces the single-test posterior") {
    const auto result =
        cli::run("repeat --test biomedomics --prevalence 0.5 --k 1 --kind first-positive");
    REQUIRE(result.exit_code == 0);
    CHECK(result.out.find("posterior = 0.904417\n") != std::string::npos);
}

TEST_CASE("discharge prints the k column") {
    const auto result =
        cli::run("--json discharge --test hutchison --prevalence 0.2,0.5,0.7,0.8 --tolerance 0.05");
    REQUIRE(result.exit_code == 0);
    const auto parsed = json::parse(result.out);
    const auto& rows = parsed.at("rows");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].at("required_negatives") == 2);
    CHECK(rows[1].at("required_negatives") == 4);
    CHECK(rows[2].at("required_negatives") == 5);
    CHECK(rows[3].at("required_negatives") == 6);
    for (const auto& row : rows) {
        CHECK(row.at("achieved_miss_probability").get<double>() <= 0.05);
    }
}

TEST_CASE("discharge boundaries document the k = 3 crossover") {
    const auto result =
        cli::run("--json discharge --test hutchison --prevalence 0.4 --boundaries 3");
    REQUIRE(result.exit_code == 0);
    const auto parsed = json::parse(result.out);
    CHECK(parsed.at("rows")[0].at("required_negatives") == 4);
    const auto& boundaries = parsed.at("boundaries");
    REQUIRE(boundaries.size() == 3);
    CHECK(boundaries[2].at("max_prevalence").get<double>() ==
          doctest::Approx(0.3748071979).epsilon(1e-9));
}

TEST_CASE("simulate echoes the seed and matches the closed form loosely") {
    const auto result = cli::run(
        "--json simulate --kind all-negative --test hutchison --prevalence 0.2 --k 2 "
        "--trials 200000 --seed 42");
    REQUIRE(result.exit_code == 0);
    const auto parsed = json::parse(result.out);
    CHECK(parsed.at("seed") == 42);
    CHECK(parsed.at("analytic").get<double>() ==
          doctest::Approx(4.0 / 85.0).epsilon(1e-12));
    const double estimate = parsed.at("estimate").get<double>();
    CHECK(std::fabs(estimate - 4.0 / 85.0) < 0.01);
}

TEST_CASE("simulate screen kind tallies the population") {
    const auto result = cli::run(
        "--json simulate --kind screen --test biomedomics --prevalence 0.3 "
        "--population 10000 --seed 7");
    REQUIRE(result.exit_code == 0);
    const auto parsed = json::parse(result.out);
    const long long total = parsed.at("true_positives").get<long long>() +
                            parsed.at("false_positives").get<long long>() +
                            parsed.at("true_negatives").get<long long>() +
                            parsed.at("false_negatives").get<long long>();
    CHECK(total == 10000);
}

TEST_CASE("curves emits the requested grid") {
    const auto result = cli::run(
        "curves --family all-negative --test biomedomics --k 1,2,3 --grid-points 11");
    REQUIRE(result.exit_code == 0);
    CHECK(result.out.rfind("k,prevalence,probability\n", 0) == 0);
    int lines = 0;
    for (char c : result.out) lines += c == '\n';
    CHECK(lines == 1 + 3 * 11);
}

TEST_CASE("curves count families sweep the test parameter") {
    const auto result = cli::run(
        "curves --family fn-vs-sensitivity --population 10000 --prevalence 0.25 "
        "--grid-points 5");
    REQUIRE(result.exit_code == 0);
    CHECK(result.out.rfind("prevalence,sensitivity,false_negatives\n", 0) == 0);
    // sensitivity 0 misses every carrier: 2500 expected false negatives
    CHECK(result.out.find("0.25,0,2500\n") != std::string::npos);
    CHECK(result.out.find("0.25,1,0\n") != std::string::npos);
}

TEST_CASE("cohort pipeline writes the series files") {
    TempDir dir("pipeline");
    const auto result = cli::run(
        "--json cohort --builtin diamond-princess --test hutchison --start-day 17 --report "
        "--out \"" + dir.path.string() + "\"");
    REQUIRE(result.exit_code == 0);
    const auto parsed = json::parse(result.out);
    CHECK(parsed.at("row_count") == 28);
    CHECK(parsed.at("total_confirmed") == 705);
    CHECK(parsed.at("missed_carriers").at("reference_figure").get<double>() == 300.0);
    REQUIRE(parsed.at("files").size() == 4);
    for (const auto& file : parsed.at("files")) {
        CHECK(fs::exists(file.get<std::string>()));
    }
}

TEST_CASE("cohort export round-trips byte-identically through load") {
    TempDir dir("roundtrip");
    const auto exported = dir.path / "dp.series";
    const auto reexported = dir.path / "dp2.series";

    auto result = cli::run("cohort --builtin diamond-princess --test hutchison --out \"" +
                           dir.path.string() + "\" --export-series \"" + exported.string() +
                           "\"");
    REQUIRE(result.exit_code == 0);
    result = cli::run("cohort --input \"" + exported.string() + "\" --test hutchison --out \"" +
                      dir.path.string() + "\" --export-series \"" + reexported.string() + "\"");
    REQUIRE(result.exit_code == 0);
    CHECK(cli::read_file(exported) == cli::read_file(reexported));
    CHECK(!cli::read_file(exported).empty());
}

TEST_CASE("machine output is byte-identical across runs") {
    TempDir dir("determinism");
    const std::string recipes[] = {
        "--json eval --population 601220 --infected 8 --test hutchison",
        "--json repeat --test biomedomics --prevalence 0.5 --k 4 --kind first-positive",
        "--json discharge --test hutchison --prevalence 0.2,0.5,0.7,0.8",
        "--json simulate --kind all-negative --test hutchison --prevalence 0.2 --k 2 "
        "--trials 100000 --seed 42",
        "--json curves --family all-negative --test biomedomics --k 1,2 --grid-points 5",
        "--json cohort --builtin diamond-princess --test hutchison --start-day 17 --report "
        "--out \"" + dir.path.string() + "\"",
    };
    for (const auto& recipe : recipes) {
        const auto first = cli::run(recipe);
        const auto second = cli::run(recipe);
        REQUIRE(first.exit_code == 0);
        CHECK(first.out == second.out);
        CHECK(!first.out.empty());
    }
}

TEST_CASE("validation errors exit 1 with a one-line message") {
    auto result = cli::run("eval --population 100 --infected 5 --test nope");
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("unknown preset 'nope'") != std::string::npos);
    CHECK(result.err.find("hutchison") != std::string::npos);

    result = cli::run("repeat --test hutchison --prevalence 1.5 --k 2");
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("prevalence") != std::string::npos);

    result = cli::run("eval --population 100 --test hutchison");
    CHECK(result.exit_code == 1);

    result = cli::run("repeat --test hutchison --prevalence 0.5 --k 2 --kind sideways");
    CHECK(result.exit_code == 1);

    result = cli::run("eval --population 100 --infected 5 --sensitivity 0.6");
    CHECK(result.exit_code == 1);

    result = cli::run("nonsense");
    CHECK(result.exit_code == 1);
}

TEST_CASE("I/O errors exit 2") {
    const auto result =
        cli::run("cohort --input /nonexistent/series.csv --test hutchison");
    CHECK(result.exit_code == 2);
    CHECK(result.err.find("cannot open") != std::string::npos);
}

TEST_CASE("help exits 0") {
    CHECK(cli::run("--help").exit_code == 0);
    CHECK(cli::run("discharge --help").exit_code == 0);
}
