#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef MULTICOAL_CLI_PATH
#define MULTICOAL_CLI_PATH "multicoal"
#endif

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args, const std::string& env = "") {
    const std::string out_path = "cli_test_output.tmp";
    const std::string cmd =
        env + " " + std::string(MULTICOAL_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(out_path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::remove(out_path.c_str());
    return {WEXITSTATUS(status), ss.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("examples subcommand materializes parseable configs") {
    REQUIRE(run_cli("examples").exit_code == 0);
    for (const std::string name : {"multitype-kingman.json", "seed-bank.json", "limic-sturm.json",
                                   "csbp-local.json"}) {
        const std::string text = slurp(name);
        REQUIRE_FALSE(text.empty());
        const auto parsed = nlohmann::json::parse(text);
        CHECK(parsed.at("schema_version") == 1);
        CHECK(parsed.at("d").get<int>() >= 1);
    }
}

TEST_CASE("rates subcommand prints the requested value") {
    run_cli("examples");
    const RunResult r = run_cli("rates --config multitype-kingman.json --b 5,0 --k 2,0 --target 1");
    CHECK(r.exit_code == 0);
    CHECK(std::stod(r.output) == 1.0);

    const RunResult table = run_cli("rates --config seed-bank.json --table --n 2,2");
    CHECK(table.exit_code == 0);
    CHECK(table.output.find("k_1,k_2,target,multiplicity,per_set_rate,class_rate") == 0);
}

TEST_CASE("simulate emits the trajectory schema and respects the seed") {
    run_cli("examples");
    const std::string args =
        "simulate --config seed-bank.json --n0 3,2 --t-max 1 --replicas 3 --seed 5 --engine jump";
    const RunResult a = run_cli(args);
    CHECK(a.exit_code == 0);
    CHECK(a.output.find("replica,time,event_kind,target_type,k_1,k_2,n_1,n_2") == 0);
    const RunResult b = run_cli(args);
    CHECK(a.output == b.output);
    const RunResult c = run_cli("simulate --config seed-bank.json --n0 3,2 --t-max 1 "
                                "--replicas 3 --seed 6 --engine jump");
    CHECK(a.output != c.output);
    // the environment variable wins over the flag
    const RunResult d = run_cli(args, "MULTICOAL_SEED=6");
    CHECK(d.output == c.output);
    const RunResult atomic =
        run_cli("simulate --config seed-bank.json --n0 3,2 --t-max 1 --replicas 2 --engine atomic");
    CHECK(atomic.exit_code == 0);
    CHECK(atomic.output.find("replica,time,event_kind") == 0);
}

TEST_CASE("cdi subcommand emits the verdict report") {
    run_cli("examples");
    const RunResult sb = run_cli("cdi --config seed-bank.json");
    CHECK(sb.exit_code == 0);
    const auto report = nlohmann::json::parse(sb.output);
    CHECK(report.at("overall") == "StaysInfinite");
    const RunResult mk = run_cli("cdi --config multitype-kingman.json");
    CHECK(nlohmann::json::parse(mk.output).at("overall") == "ComesDown");
    const RunResult numeric = run_cli("cdi --config multitype-kingman.json --numeric");
    const auto nrep = nlohmann::json::parse(numeric.output);
    CHECK(nrep.at("per_type")[0].at("evidence").contains("tail_exponent"));
}

TEST_CASE("flow subcommand covers both profiles") {
    run_cli("examples");
    const RunResult descent = run_cli("flow --config multitype-kingman.json --t-grid 0.5,1 --x0 inf");
    CHECK(descent.exit_code == 0);
    CHECK(descent.output.find("t,w") == 0);
    const RunResult flow = run_cli("flow --config seed-bank.json --t-grid 0.5,1 --x0 3,2");
    CHECK(flow.exit_code == 0);
    CHECK(flow.output.find("t,v_1,v_2") == 0);
    // a process that stays infinite refuses the infinite start
    const RunResult refused = run_cli("flow --config seed-bank.json --t-grid 1 --x0 inf");
    CHECK(refused.exit_code == 2);
}

TEST_CASE("arrays subcommand emits the recovery report") {
    {
        std::ofstream rep("cli_rep.json");
        rep << R"({"d":1,"ell":[1],"b_max":16,"rho":[[[2],1.0]],"atoms":[[1.0,[0.5]]]})";
    }
    const RunResult r = run_cli("arrays --rep cli_rep.json --moment-order 4");
    CHECK(r.exit_code == 0);
    const auto report = nlohmann::json::parse(r.output);
    CHECK(report.at("max_recursion_residual").get<double>() <= 1e-12);
    CHECK(report.at("rho")[0].at("value").get<double>() == doctest::Approx(1.0).epsilon(1e-4));
    std::remove("cli_rep.json");
}

TEST_CASE("verify subcommand exit codes") {
    run_cli("examples");
    const RunResult rec = run_cli("verify recursion --instances 5");
    CHECK(rec.exit_code == 0);
    const auto reports = nlohmann::json::parse(rec.output);
    REQUIRE(reports.is_array());
    CHECK(reports[0].at("pass") == true);

    const RunResult fixed = run_cli("verify recursion --config seed-bank.json");
    CHECK(fixed.exit_code == 0);

    const RunResult unknown_suite = run_cli("verify nonsense");
    CHECK(unknown_suite.exit_code == 2);
}

TEST_CASE("invalid usage exits with code 2") {
    CHECK(run_cli("nonsense").exit_code == 2);
    {
        std::ofstream bad("cli_bad.json");
        bad << R"({"d":2,"surprise":1})";
    }
    CHECK(run_cli("cdi --config cli_bad.json").exit_code == 2);
    CHECK(run_cli("rates --config does_not_exist.json --b 2 --k 2 --target 1").exit_code == 2);
    std::remove("cli_bad.json");
}
