#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "tvss/sim.hpp"

using namespace tvss;

namespace {

ScenarioConfig small_cfg() {
    ScenarioConfig c;
    c.passes = 2000;
    c.calibration_passes = 2000;
    c.linkability_passes = 5000;
    c.full_stack = false;
    return c;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("coverage rows reproduce within ten percent") {
    for (const auto& row : default_coverage_table()) {
        CoverageModel m = CoverageModel::fit(row);
        std::mt19937_64 rng(uint64_t(row.speed_mph));
        std::vector<double> xs(100000);
        for (auto& x : xs) x = m.sample(rng);
        std::sort(xs.begin(), xs.end());
        double mean = 0;
        for (double x : xs) mean += x;
        mean /= double(xs.size());
        INFO("speed " << row.speed_mph);
        CHECK(xs.front() >= row.min_s);
        CHECK(xs.back() <= row.max_s);
        // both halves have zero density at the joint, so count mass instead of reading xs[n/2]
        const double below = double(std::upper_bound(xs.begin(), xs.end(), row.median_s) - xs.begin()) / double(xs.size());
        CHECK(below == doctest::Approx(0.5).epsilon(0.02));
        CHECK(std::abs(mean - row.mean_s) <= 0.1 * row.mean_s);
        CHECK(std::abs(m.mean() - mean) <= 0.02 * row.mean_s);
        CHECK(m.theta() >= 0);
        CHECK(m.theta() <= 1);
    }
}

TEST_CASE("coverage edge cases") {
    CoverageModel d = CoverageModel::fit({10, 2, 2, 2, 2});
    CHECK(d.degenerate());
    std::mt19937_64 rng(1);
    CHECK(d.sample(rng) == 2);
    CHECK_THROWS_AS(CoverageModel::fit({10, 3, 2, 2, 4}), std::invalid_argument);
    CHECK_THROWS_AS(CoverageModel::fit({10, 1, 2, 2, 1.5}), std::invalid_argument);
    CHECK(triangular(0, 0.5, 1, 0.5) == doctest::Approx(0.5));
    CHECK(triangular(0, 0, 1, 0) == doctest::Approx(0));
    CHECK(triangular(0, 1, 1, 0.9999999) <= 1);
}

TEST_CASE("latency extremes") {
    ScenarioConfig cfg = small_cfg();
    CoverageModel cov = CoverageModel::fit(cfg.coverage_for(85));
    SchemeProfile instant{"instant", {{Hop::edge, 0, 0}}, 0, std::nullopt};
    CHECK(success_ratio(instant, cov, cfg, 5000, 1) == 1.0);
    SchemeProfile slow{"slow", {}, 6000, std::nullopt};
    CHECK(success_ratio(slow, cov, cfg, 5000, 1) == 0.0);
    SchemeProfile timeout{"timeout", {{Hop::edge, 31, 0}}, 0, std::nullopt};
    CHECK(success_ratio(timeout, cov, cfg, 5000, 1) == 0.0);
    CHECK(success_ratio(tvss_profile(), cov, cfg, 5000, 1) == 1.0);
}

TEST_CASE("calibration hits its target") {
    ScenarioConfig cfg = small_cfg();
    SchemeProfile p = scms_profile();
    double m = calibrate_cloud_median(p, cfg, 0.13, 7);
    CHECK(m > 100);
    CHECK(p.legs[0].median_ms == m);
    CoverageModel cov = CoverageModel::fit(cfg.coverage_for(55));
    double r = success_ratio(p, cov, cfg, cfg.calibration_passes, derive_seed(7, "calibrate/" + p.name));
    CHECK(std::abs(r - 0.13) < 0.005);
}

TEST_CASE("pcrl sizes") {
    ScenarioConfig cfg;
    auto rows = pcrl_sizes(cfg);
    auto find = [&](const std::string& s, double r) {
        for (const auto& x : rows)
            if (x.scope == s && x.ratio == r) return x.bytes;
        FAIL("missing row " << s);
        return 0.0;
    };
    CHECK(find("EntireUS", 0.0129) / 1e6 == doctest::Approx(176.4).epsilon(0.001));
    CHECK(find("delta-daily", 0.0129) / 1e6 == doctest::Approx(0.483).epsilon(0.002));
    CHECK(find("EntireUS", 0.05) / find("EntireUS", 0.0129) == doctest::Approx(3.876).epsilon(0.001));
    CHECK(rows.size() == cfg.pcrl_scopes.size() * 2);
}

TEST_CASE("pcrl download") {
    ScenarioConfig cfg = small_cfg();
    auto d = run_pcrl_download(cfg, 3);
    CHECK(d.efficiency > 0);
    CHECK(d.efficiency < 1);
    CHECK(d.success("delta-daily", 0.0129, 55) == doctest::Approx(0.42).epsilon(0.05));
    CHECK(d.success("local", 0.0129, 25) == 1.0);
    for (double s : cfg.speeds()) CHECK(d.success("EntireUS", 0.0129, s) == 0.0);
    // bigger lists never download more often
    for (double s : cfg.speeds()) {
        CHECK(d.success("delta-daily", 0.05, s) <= d.success("delta-daily", 0.0129, s));
        CHECK(d.success("delta-weekly", 0.0129, s) <= d.success("delta-daily", 0.0129, s));
    }
    CHECK_THROWS_AS(d.success("nowhere", 0.0129, 55), std::out_of_range);
}

TEST_CASE("linkability window") {
    ScenarioConfig cfg = small_cfg();
    cfg.speeds_mph = {65};
    SchemeProfile p = scms_profile();
    for (auto& l : p.legs) l.median_ms = 2712;
    auto cells = linkability_window(cfg, {tvss_profile(), p}, 1);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].inter_rsu_min == doctest::Approx(18.46).epsilon(0.001));
    CHECK(cells[0].pass_success == 1.0);
    CHECK(cells[0].empirical_mean_min == doctest::Approx(18.46).epsilon(0.001));
    CHECK(cells[1].geometric_min > 10 * cells[0].geometric_min);
    CHECK(cells[1].empirical_mean_min == doctest::Approx(cells[1].geometric_min).epsilon(0.05));
}

TEST_CASE("runs are deterministic per seed") {
    ScenarioConfig cfg = small_cfg();
    cfg.speeds_mph = {55, 85};
    auto a = metrics_json(run_sim(cfg, 9)).dump();
    auto b = metrics_json(run_sim(cfg, 9)).dump();
    CHECK(a == b);
    CHECK(a != metrics_json(run_sim(cfg, 10)).dump());
}

TEST_CASE("config parsing") {
    using nlohmann::json;
    auto c = config_from_json(json{{"passes", 50}, {"speeds_mph", {55}}, {"clone", {{"attackers", 2}}}});
    CHECK(c.passes == 50);
    CHECK(c.speeds() == std::vector<double>{55});
    CHECK(c.clone.attackers == 2);
    CHECK_THROWS_AS(config_from_json(json{{"pases", 50}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(json{{"clone", {{"atackers", 1}}}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(json{{"passes", "many"}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(json{{"speeds_mph", {50}}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(json{{"schemes", {{{"name", "x"}, {"legs", {{{"hop", "air"}}}}}}}}),
                    std::invalid_argument);
    CHECK_THROWS(load_config("/nonexistent/tvss.json"));
}

TEST_CASE("event queue order") {
    EventQueue q;
    std::vector<int> seen;
    q.at(10, [&] { seen.push_back(2); });
    q.at(5, [&] { seen.push_back(1); });
    q.at(10, [&] {
        seen.push_back(3);
        q.after(0, [&] { seen.push_back(4); });
    });
    q.at(20, [&] { seen.push_back(5); });
    CHECK(q.run_until(10) == 4);
    CHECK(seen == std::vector<int>{1, 2, 3, 4});
    CHECK(q.now() == 10);
    q.run_until(100);
    CHECK(seen.back() == 5);
}

TEST_CASE("clone scenario is clean") {
    for (uint64_t seed : {1, 2, 3}) {
        auto r = run_clone_scenario(CloneScenarioConfig{}, seed);
        INFO("seed " << seed);
        CHECK(r.clean());
        CHECK(r.detected == r.attackers);
        CHECK(r.escapes == 0);
        CHECK(r.max_latency_ms <= r.bound_ms);
        CHECK(r.honest_failures == 0);
    }
    CloneScenarioConfig two;
    two.attackers = 2;
    auto r = run_clone_scenario(two, 5);
    CHECK(r.clean());
    for (size_t n : r.tbl_sizes) CHECK(n == 2);
}

}
