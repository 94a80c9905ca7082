#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "tvss/coverage.hpp"
#include "tvss/scenario.hpp"

namespace tvss {

enum class Hop : uint8_t { edge, cloud };

struct Leg {
    Hop hop = Hop::edge;
    double median_ms = 0;
    double sigma = 0;  // lognormal shape; 0 is a fixed latency
};

struct SchemeProfile {
    std::string name;
    std::vector<Leg> legs;
    double rsu_compute_ms = 0;
    // Target success at the calibration speed. Cloud-leg medians are solved for it.
    std::optional<double> calibrate_to;
};

SchemeProfile tvss_profile();
SchemeProfile secmace_profile();
SchemeProfile scms_profile();

// One row of the PCRL size table. vehicles == 0 means the whole fleet.
struct PcrlScope {
    std::string name;
    double vehicles = 0;
    double divisor = 1;  // 52 for weekly deltas, 365 for daily
};
std::vector<PcrlScope> default_pcrl_scopes();

struct PcrlCalibration {
    std::string scope = "delta-daily";
    double ratio = 0.0129;
    double speed_mph = 55;
    double target = 0.42;
};

struct ScenarioConfig {
    int t_minutes = 15;
    double rsu_spacing_miles = 20;
    std::vector<CoverageRow> coverage = default_coverage_table();
    std::vector<double> speeds_mph;  // empty: every coverage row
    std::vector<SchemeProfile> schemes{tvss_profile(), secmace_profile(), scms_profile()};
    double dsrc_bps = 6'000'000;
    double retry_ms = 500;
    double edge_timeout_ms = 30;
    double cloud_timeout_ms = 2000;
    double fleet_size = 350e6;
    std::vector<double> revocation_ratios{0.0129, 0.05};
    double pcrl_entry_bytes = 39.07;
    std::vector<PcrlScope> pcrl_scopes = default_pcrl_scopes();
    double calibration_speed_mph = 55;
    uint64_t passes = 10'000;
    uint64_t calibration_passes = 10'000;
    uint64_t linkability_passes = 100'000;
    double pcrl_efficiency = 0;  // 0: calibrate
    PcrlCalibration pcrl_calibration;
    bool full_stack = true;
    CloneScenarioConfig clone;

    std::vector<double> speeds() const;
    const CoverageRow& coverage_for(double speed_mph) const;
    void validate() const;
};

// Unknown keys are rejected so typos do not silently fall back to defaults.
ScenarioConfig config_from_json(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);

// One vehicle passing one RSU: attempts start every retry_ms while inside
// coverage; success if any attempt finishes all legs in time.
bool simulate_pass(const SchemeProfile& p, const CoverageModel& cov, const ScenarioConfig& cfg, std::mt19937_64& rng);
double success_ratio(const SchemeProfile& p, const CoverageModel& cov, const ScenarioConfig& cfg, uint64_t passes,
                     uint64_t seed);
// Solves the common cloud-leg median so success at the calibration speed hits target.
double calibrate_cloud_median(SchemeProfile& p, const ScenarioConfig& cfg, double target, uint64_t seed);

struct RatioCell {
    std::string scheme;
    double speed_mph = 0;
    double ratio = 0;
};

struct RefreshResults {
    std::vector<SchemeProfile> profiles;  // after calibration
    std::vector<RatioCell> cells;
    double ratio(const std::string& scheme, double speed) const;
};
RefreshResults run_refresh_experiment(const ScenarioConfig& cfg, uint64_t seed);

struct PcrlSizeRow {
    std::string scope;
    double ratio = 0;
    double bytes = 0;
};
std::vector<PcrlSizeRow> pcrl_sizes(const ScenarioConfig& cfg);

struct DownloadCell {
    std::string scope;
    double ratio = 0;
    double speed_mph = 0;
    double success = 0;
};
struct DownloadResults {
    double efficiency = 0;
    std::vector<DownloadCell> cells;
    double success(const std::string& scope, double ratio, double speed) const;
};
// A download completes iff coverage * dsrc_bps * efficiency / 8 >= size.
DownloadResults run_pcrl_download(const ScenarioConfig& cfg, uint64_t seed);

struct LinkCell {
    std::string scheme;
    double speed_mph = 0;
    double inter_rsu_min = 0;
    double pass_success = 0;     // observed in this run
    double empirical_mean_min = 0;
    double empirical_p95_min = 0;
    double geometric_min = 0;    // inter_rsu / pass_success
    uint64_t gaps = 0;
};
std::vector<LinkCell> linkability_window(const ScenarioConfig& cfg, const std::vector<SchemeProfile>& profiles,
                                         uint64_t seed);

struct RunMetrics {
    uint64_t seed = 0;
    std::vector<CoverageModel> coverage;
    RefreshResults refresh;
    std::vector<PcrlSizeRow> sizes;
    DownloadResults download;
    std::vector<LinkCell> linkability;
    std::optional<CloneScenarioResult> clone;
};

RunMetrics run_sim(const ScenarioConfig& cfg, uint64_t seed);
nlohmann::json metrics_json(const RunMetrics& m);
// metrics.json, success_ratio.csv, pcrl_sizes.csv, linkability.csv
void write_outputs(const RunMetrics& m, const std::string& dir);

}  // namespace tvss
