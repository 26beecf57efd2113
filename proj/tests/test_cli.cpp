#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "impflow/cli.hpp"

namespace fs = std::filesystem;
using impflow::cli::json;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "impflow");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = impflow::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("impflow_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const auto p = dir / "config.json";
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST_CASE("simulate writes the impulse at 3pi/2") {
    const auto dir = scratch("sim");
    const auto r = run({"simulate", "--example", "annulus", "--start", "0,1.5", "--T", "6", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto csv = slurp(dir / "orbit.csv");
    CHECK_THAT(csv, Catch::Matchers::ContainsSubstring("4.71238898038,1.5,"));
    CHECK_THAT(csv, Catch::Matchers::ContainsSubstring("4.71238898038,-1.25,0,impulse"));
    CHECK(csv.rfind("# impflow 0.1.0 config=", 0) == 0);
}

TEST_CASE("check on the annulus") {
    const auto dir = scratch("check");
    const auto r = run({"check", "--example", "annulus", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = json::parse(slurp(dir / "check_report.json"));
    CHECK(j["all_passed"] == true);
    CHECK(j["a"].get<double>() == Catch::Approx(2.0).margin(1e-6));
    CHECK(j["lipschitz"].get<double>() == Catch::Approx(0.5).margin(1e-9));
    CHECK(j["version"] == impflow::kVersion);
    CHECK(j.contains("config_hash"));
}

TEST_CASE("tau entropy on the annulus is stable and flat") {
    const auto dir = scratch("entropy");
    const auto r = run({"entropy", "--example", "annulus", "--mode", "tau", "--T", "5,10,15,20", "--eps", "0.05",
                        "--delta", "0.2", "--seed", "7", "--samples", "2000", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = json::parse(slurp(dir / "entropy_summary.json"));
    CHECK(std::abs(j["h_estimate"].get<double>()) <= 0.05);
    CHECK(j["flag"] == "stable");
    CHECK(j["seed"] == 7);
    const auto csv = slurp(dir / "entropy_sweep.csv");
    CHECK_THAT(csv, Catch::Matchers::ContainsSubstring("seed=7"));
}

TEST_CASE("quotient table") {
    const auto dir = scratch("quotient");
    const auto r = run({"quotient", "--example", "annulus", "--pairs", "12", "--pool", "40", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto csv = slurp(dir / "quotient_distances.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 14);
    CHECK_THAT(csv, Catch::Matchers::ContainsSubstring("pair,p0,p1,q0,q1,d,d_tilde,chain_d_tilde"));
}

TEST_CASE("example subcommand") {
    auto r = run({"example", "list"});
    CHECK(r.code == 0);
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("doubling"));
    r = run({"example", "describe", "annulus"});
    CHECK(r.code == 0);
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("tau_star_at_3pi_2,1.57079632679"));
    r = run({"example", "describe", "nope"});
    CHECK(r.code == 2);
}

TEST_CASE("identical config and seed give identical bytes") {
    const auto a = scratch("bytes_a"), b = scratch("bytes_b");
    for (const auto& d : {a, b}) {
        REQUIRE(run({"entropy", "--example", "doubling", "--T", "1,2,3,4", "--eps", "0.2,0.1", "--samples", "256",
                     "--seed", "3", "--out", d.string()}).code == 0);
        REQUIRE(run({"quotient", "--example", "annulus", "--pairs", "6", "--pool", "20", "--seed", "3", "--out", d.string()}).code == 0);
    }
    for (const char* f : {"entropy_sweep.csv", "entropy_summary.json", "quotient_distances.csv"}) {
        INFO(f);
        CHECK(slurp(a / f) == slurp(b / f));
    }
}

TEST_CASE("configuration errors are line anchored") {
    const auto dir = scratch("config");
    SECTION("bad grid") {
        const auto p = write_config(dir, "{\n  \"command\": \"entropy\",\n  \"example\": \"annulus\",\n"
                                         "  \"T\": [5, 10, 15, 20],\n  \"eps\": [0.1, 0.2]\n}\n");
        const auto r = run({"--config", p.string()});
        CHECK(r.code == 2);
        CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("line 5"));
    }
    SECTION("unknown key") {
        const auto p = write_config(dir, "{\n  \"command\": \"check\",\n  \"colour\": 1\n}\n");
        const auto r = run({"--config", p.string()});
        CHECK(r.code == 2);
        CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("line 3"));
    }
    SECTION("broken JSON") {
        const auto p = write_config(dir, "{\n  \"command\": \"check\",\n  \"T\": [1, 2,\n}\n");
        const auto r = run({"--config", p.string()});
        CHECK(r.code == 2);
        CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("line 4"));
    }
    SECTION("flag errors") {
        CHECK(run({"entropy", "--example", "annulus", "--T", "1,2,x,4"}).code == 2);
        CHECK(run({"simulate", "--example", "annulus", "--start", "0,0.5", "--T", "3"}).code == 2);
        CHECK(run({"simulate", "--example", "annulus", "--T", "3"}).code == 2);
        CHECK(run({"entropy", "--example", "annulus", "--T", "1,2,3"}).code == 2);
        CHECK(run({"entropy", "--example", "annulus", "--mode", "bowen", "--T", "1,2,3,4"}).code == 2);
        CHECK(run({"check"}).code == 2);
        CHECK(run({}).code == 2);
        CHECK(run({"frobnicate"}).code == 2);
    }
    SECTION("inline system outside the family") {
        const auto p = write_config(dir, "{\n  \"command\": \"check\",\n  \"system\": {\"family\": \"annulus\", \"offset\": 0.9, \"slope\": 0.8}\n}\n");
        const auto r = run({"--config", p.string()});
        CHECK(r.code == 2);
        CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("line 3"));
    }
}

TEST_CASE("config file and flags combine") {
    const auto dir = scratch("combine");
    const auto p = write_config(dir, "{\n  \"command\": \"check\",\n  \"system\": {\"family\": \"annulus\", \"offset\": 0.25, \"slope\": 0.75}\n}\n");
    const auto r = run({"--config", p.string(), "--out", (dir / "o").string()});
    REQUIRE(r.code == 0);
    const auto j = json::parse(slurp(dir / "o" / "check_report.json"));
    CHECK(j["lipschitz"].get<double>() == Catch::Approx(0.75).margin(1e-9));
    CHECK(j["a"].get<double>() == Catch::Approx(2.0).margin(1e-6));
}

TEST_CASE("the output directory comes from the environment") {
    const char* exe = std::getenv("IMPFLOW_CLI");
    if (!exe) SKIP("IMPFLOW_CLI not set");
    const auto dir = scratch("env");
    const std::string cmd = "IMPFLOW_OUTPUT_DIR='" + dir.string() + "' '" + exe + "' check --example annulus > /dev/null";
    const int status = std::system(cmd.c_str());
    CHECK(status == 0);
    CHECK(fs::exists(dir / "check_report.json"));

    const std::string bad = "'" + std::string(exe) + "' entropy --example nowhere --T 1,2,3,4 2> /dev/null";
    const int st = std::system(bad.c_str());
    CHECK(WEXITSTATUS(st) == 2);
}
