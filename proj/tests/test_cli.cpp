#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "tvss/cli.hpp"

using namespace tvss;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream o, e;
    int c = dispatch(args, o, e);
    return {c, o.str(), e.str()};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
    CHECK(run({}).code == 1);
    CHECK(run({"fly"}).code == 1);
    CHECK(run({"sim"}).code == 1);
    auto missing = run({"sim", "--config", "/nonexistent/x.json", "--out", "/tmp/tvss_cli_out"});
    CHECK(missing.code == 2);
    auto j = nlohmann::json::parse(missing.err);
    CHECK(j["command"] == "sim");
    CHECK(j["error"].get<std::string>().find("x.json") != std::string::npos);
    auto v = run({"vectors", "--check", "--dir", TVSS_VECTORS_DIR});
    CHECK(v.code == 0);
    CHECK(nlohmann::json::parse(v.out)["ok"] == true);
    CHECK(run({"vectors", "--check", "--dir", "/nonexistent"}).code != 0);
}

TEST_CASE("bad config keys fail with exit code 2") {
    auto dir = std::filesystem::temp_directory_path() / "tvss_cli_test";
    std::filesystem::create_directories(dir);
    auto cfg = dir / "bad.json";
    std::ofstream(cfg) << R"({"pases": 3})";
    auto r = run({"sim", "--config", cfg.string(), "--out", (dir / "out").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("pases") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("game output is reproducible") {
    auto a = run({"game", "--trials", "20", "--seed", "4", "--branch", "all"});
    auto b = run({"game", "--trials", "20", "--seed", "4", "--branch", "all"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    auto j = nlohmann::json::parse(a.out);
    REQUIRE(j.is_array());
    CHECK(j.size() == 3);
    CHECK(j[0]["branch"] == "forgery");
    CHECK(j[0]["wins"] == 0);
    auto one = nlohmann::json::parse(run({"game", "--trials", "5", "--branch", "anonymity"}).out);
    CHECK(one["trials"] == 5);
    CHECK(run({"game", "--branch", "luck"}).code != 0);
}

TEST_CASE("sim writes its outputs") {
    auto dir = std::filesystem::temp_directory_path() / "tvss_cli_sim";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto cfg = dir / "c.json";
    std::ofstream(cfg) << R"({
        // comments are allowed
        "passes": 500, "calibration_passes": 500, "linkability_passes": 1000,
        "speeds_mph": [55, 85], "full_stack": false
    })";
    auto r = run({"sim", "--config", cfg.string(), "--seed", "2", "--out", (dir / "out").string()});
    REQUIRE(r.code == 0);
    for (auto f : {"metrics.json", "success_ratio.csv", "pcrl_sizes.csv", "linkability.csv"})
        CHECK(std::filesystem::exists(dir / "out" / f));
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["seed"] == 2);
    std::filesystem::remove_all(dir);
}

}
