#include "tvss/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace tvss {

using nlohmann::json;

SchemeProfile tvss_profile() { return {"tvss", {{Hop::edge, 3.1, 0.3}}, 1.08, std::nullopt}; }

SchemeProfile secmace_profile() {
    return {"secmace-like", {{Hop::cloud, 1000, 0.5}, {Hop::edge, 3.1, 0.3}}, 6.95, 0.46};
}

SchemeProfile scms_profile() { return {"scms-like", {{Hop::cloud, 1000, 0.5}, {Hop::cloud, 1000, 0.5}}, 0, 0.13}; }

std::vector<PcrlScope> default_pcrl_scopes() {
    // State and local fleets back-solved from the regular-revocation column.
    return {
        {"EntireUS", 0, 1},        {"CA", 39.5e6, 1},         {"TX", 29.2e6, 1},        {"FL", 22.6e6, 1},
        {"NY", 14.5e6, 1},         {"delta-weekly", 0, 52},   {"delta-daily", 0, 365},  {"local", 80'000, 1},
    };
}

std::vector<double> ScenarioConfig::speeds() const {
    if (!speeds_mph.empty()) return speeds_mph;
    std::vector<double> out;
    for (const auto& r : coverage) out.push_back(r.speed_mph);
    return out;
}

const CoverageRow& ScenarioConfig::coverage_for(double speed_mph) const {
    for (const auto& r : coverage)
        if (r.speed_mph == speed_mph) return r;
    throw std::invalid_argument("no coverage row for " + std::to_string(speed_mph) + " mph");
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
    if (t_minutes < 1) fail("t_minutes must be >= 1");
    if (!(rsu_spacing_miles > 0) || !(dsrc_bps > 0) || !(retry_ms > 0) || !(edge_timeout_ms > 0) ||
        !(cloud_timeout_ms > 0) || !(fleet_size > 0) || !(pcrl_entry_bytes > 0))
        fail("rates, sizes and timeouts must be positive");
    if (passes == 0 || calibration_passes == 0 || linkability_passes == 0) fail("pass counts must be positive");
    if (coverage.empty()) fail("coverage table is empty");
    for (const auto& r : coverage) CoverageModel::fit(r);
    for (double s : speeds()) {
        if (!(s > 0)) fail("speeds must be positive");
        coverage_for(s);
    }
    coverage_for(calibration_speed_mph);
    std::set<std::string> names;
    for (const auto& p : schemes) {
        if (!names.insert(p.name).second) fail("duplicate scheme " + p.name);
        if (p.rsu_compute_ms < 0) fail("rsu_compute_ms must be >= 0");
        bool cloud = false;
        for (const auto& l : p.legs) {
            if (l.median_ms < 0 || l.sigma < 0) fail("leg latency parameters must be >= 0");
            cloud = cloud || l.hop == Hop::cloud;
        }
        if (p.calibrate_to) {
            if (!(*p.calibrate_to > 0 && *p.calibrate_to < 1)) fail("calibrate_to must be in (0,1)");
            if (!cloud) fail("scheme " + p.name + " has no cloud leg to calibrate");
        }
    }
    for (double r : revocation_ratios)
        if (!(r >= 0 && r <= 1)) fail("revocation ratios must be in [0,1]");
    if (pcrl_efficiency < 0 || pcrl_efficiency > 1) fail("pcrl_efficiency must be in [0,1]");
    for (const auto& s : pcrl_scopes)
        if (s.vehicles < 0 || !(s.divisor > 0)) fail("bad pcrl scope " + s.name);
    if (pcrl_efficiency == 0) {
        if (std::none_of(pcrl_scopes.begin(), pcrl_scopes.end(),
                         [&](const PcrlScope& s) { return s.name == pcrl_calibration.scope; }))
            fail("pcrl calibration scope not found");
        if (!(pcrl_calibration.target > 0 && pcrl_calibration.target < 1)) fail("pcrl calibration target in (0,1)");
        coverage_for(pcrl_calibration.speed_mph);
    }
}

// --- config parsing ---

namespace {

class Fields {
public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw std::invalid_argument("config: " + where_ + " must be an object");
    }
    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw std::invalid_argument("config: bad value for " + where_ + key);
        }
    }
    const json* sub(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    void done() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw std::invalid_argument("config: unknown key " + where_ + k);
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

Hop hop_from(const std::string& s) {
    if (s == "edge") return Hop::edge;
    if (s == "cloud") return Hop::cloud;
    throw std::invalid_argument("config: hop must be edge or cloud");
}

const char* hop_name(Hop h) { return h == Hop::edge ? "edge" : "cloud"; }

SchemeProfile scheme_from(const json& j) {
    SchemeProfile p;
    Fields f(j, "schemes[].");
    f.get("name", p.name);
    f.get("rsu_compute_ms", p.rsu_compute_ms);
    double target = -1;
    f.get("calibrate_to", target);
    if (target >= 0) p.calibrate_to = target;
    if (const json* legs = f.sub("legs")) {
        if (!legs->is_array()) throw std::invalid_argument("config: legs must be an array");
        for (const auto& lj : *legs) {
            Fields lf(lj, "legs[].");
            Leg l;
            std::string hop = "edge";
            lf.get("hop", hop);
            l.hop = hop_from(hop);
            lf.get("median_ms", l.median_ms);
            lf.get("sigma", l.sigma);
            lf.done();
            p.legs.push_back(l);
        }
    }
    f.done();
    if (p.name.empty()) throw std::invalid_argument("config: scheme needs a name");
    return p;
}

}  // namespace

ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig c;
    Fields f(j, "");
    f.get("t_minutes", c.t_minutes);
    f.get("rsu_spacing_miles", c.rsu_spacing_miles);
    f.get("speeds_mph", c.speeds_mph);
    f.get("dsrc_bps", c.dsrc_bps);
    f.get("retry_ms", c.retry_ms);
    f.get("edge_timeout_ms", c.edge_timeout_ms);
    f.get("cloud_timeout_ms", c.cloud_timeout_ms);
    f.get("fleet_size", c.fleet_size);
    f.get("revocation_ratios", c.revocation_ratios);
    f.get("pcrl_entry_bytes", c.pcrl_entry_bytes);
    f.get("calibration_speed_mph", c.calibration_speed_mph);
    f.get("passes", c.passes);
    f.get("calibration_passes", c.calibration_passes);
    f.get("linkability_passes", c.linkability_passes);
    f.get("pcrl_efficiency", c.pcrl_efficiency);
    f.get("full_stack", c.full_stack);
    if (const json* cov = f.sub("coverage")) {
        if (!cov->is_array()) throw std::invalid_argument("config: coverage must be an array");
        c.coverage.clear();
        for (const auto& rj : *cov) {
            Fields rf(rj, "coverage[].");
            CoverageRow r;
            rf.get("speed_mph", r.speed_mph);
            rf.get("min_s", r.min_s);
            rf.get("median_s", r.median_s);
            rf.get("mean_s", r.mean_s);
            rf.get("max_s", r.max_s);
            rf.done();
            c.coverage.push_back(r);
        }
    }
    if (const json* s = f.sub("schemes")) {
        if (!s->is_array()) throw std::invalid_argument("config: schemes must be an array");
        c.schemes.clear();
        for (const auto& sj : *s) c.schemes.push_back(scheme_from(sj));
    }
    if (const json* s = f.sub("pcrl_scopes")) {
        if (!s->is_array()) throw std::invalid_argument("config: pcrl_scopes must be an array");
        c.pcrl_scopes.clear();
        for (const auto& sj : *s) {
            Fields sf(sj, "pcrl_scopes[].");
            PcrlScope p;
            sf.get("name", p.name);
            sf.get("vehicles", p.vehicles);
            sf.get("divisor", p.divisor);
            sf.done();
            c.pcrl_scopes.push_back(p);
        }
    }
    if (const json* pc = f.sub("pcrl_calibration")) {
        Fields pf(*pc, "pcrl_calibration.");
        pf.get("scope", c.pcrl_calibration.scope);
        pf.get("ratio", c.pcrl_calibration.ratio);
        pf.get("speed_mph", c.pcrl_calibration.speed_mph);
        pf.get("target", c.pcrl_calibration.target);
        pf.done();
    }
    if (const json* cl = f.sub("clone")) {
        Fields cf(*cl, "clone.");
        cf.get("regions", c.clone.regions);
        cf.get("rsus_per_region", c.clone.rsus_per_region);
        cf.get("honest_vehicles", c.clone.honest_vehicles);
        cf.get("attackers", c.clone.attackers);
        cf.get("horizon_windows", c.clone.horizon_windows);
        cf.get("inject_window", c.clone.inject_window);
        cf.get("report_cycle_ms", c.clone.report_cycle_ms);
        cf.get("link_one_way_ms", c.clone.link_one_way_ms);
        cf.done();
    }
    f.done();
    c.clone.t_minutes = c.t_minutes;
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config: " + std::string(e.what()));
    }
    return config_from_json(j);
}

// --- refresh ---

bool simulate_pass(const SchemeProfile& p, const CoverageModel& cov, const ScenarioConfig& cfg, std::mt19937_64& rng) {
    const double c_ms = cov.sample(rng) * 1000.0;
    std::normal_distribution<double> z(0.0, 1.0);
    bool ok = false;
    // Every attempt draws all of its legs so the stream does not depend on outcomes.
    for (double t = 0; t < c_ms; t += cfg.retry_ms) {
        double total = p.rsu_compute_ms;
        bool in_time = true;
        for (const auto& l : p.legs) {
            const double lat = l.sigma > 0 ? l.median_ms * std::exp(l.sigma * z(rng)) : l.median_ms;
            if (lat > (l.hop == Hop::edge ? cfg.edge_timeout_ms : cfg.cloud_timeout_ms)) in_time = false;
            total += lat;
        }
        if (in_time && t + total <= c_ms) ok = true;
    }
    return ok;
}

double success_ratio(const SchemeProfile& p, const CoverageModel& cov, const ScenarioConfig& cfg, uint64_t passes,
                     uint64_t seed) {
    std::mt19937_64 rng(seed);
    uint64_t ok = 0;
    for (uint64_t i = 0; i < passes; ++i) ok += simulate_pass(p, cov, cfg, rng) ? 1 : 0;
    return double(ok) / double(passes);
}

namespace {

void set_cloud_median(SchemeProfile& p, double m) {
    for (auto& l : p.legs)
        if (l.hop == Hop::cloud) l.median_ms = m;
}

std::string speed_label(double s) {
    std::ostringstream o;
    o << s;
    return o.str();
}

}  // namespace

double calibrate_cloud_median(SchemeProfile& p, const ScenarioConfig& cfg, double target, uint64_t seed) {
    const CoverageModel cov = CoverageModel::fit(cfg.coverage_for(cfg.calibration_speed_mph));
    const uint64_t s = derive_seed(seed, "calibrate/" + p.name);
    // Success falls as the median grows; the same stream at every step keeps it monotone.
    double lo = std::log(0.01), hi = std::log(1e6);
    for (int i = 0; i < 48; ++i) {
        const double mid = 0.5 * (lo + hi);
        set_cloud_median(p, std::exp(mid));
        if (success_ratio(p, cov, cfg, cfg.calibration_passes, s) > target)
            lo = mid;
        else
            hi = mid;
    }
    const double m = std::exp(0.5 * (lo + hi));
    set_cloud_median(p, m);
    return m;
}

double RefreshResults::ratio(const std::string& scheme, double speed) const {
    for (const auto& c : cells)
        if (c.scheme == scheme && c.speed_mph == speed) return c.ratio;
    throw std::out_of_range("no refresh cell " + scheme + "/" + speed_label(speed));
}

RefreshResults run_refresh_experiment(const ScenarioConfig& cfg, uint64_t seed) {
    RefreshResults out;
    out.profiles = cfg.schemes;
    for (auto& p : out.profiles)
        if (p.calibrate_to) calibrate_cloud_median(p, cfg, *p.calibrate_to, seed);
    for (const auto& p : out.profiles)
        for (double s : cfg.speeds()) {
            const CoverageModel cov = CoverageModel::fit(cfg.coverage_for(s));
            const uint64_t cell_seed = derive_seed(seed, "refresh/" + p.name + "/" + speed_label(s));
            out.cells.push_back({p.name, s, success_ratio(p, cov, cfg, cfg.passes, cell_seed)});
        }
    return out;
}

// --- PCRL ---

std::vector<PcrlSizeRow> pcrl_sizes(const ScenarioConfig& cfg) {
    std::vector<PcrlSizeRow> out;
    for (const auto& s : cfg.pcrl_scopes)
        for (double r : cfg.revocation_ratios) {
            const double vehicles = s.vehicles > 0 ? s.vehicles : cfg.fleet_size;
            out.push_back({s.name, r, vehicles * r * cfg.pcrl_entry_bytes / s.divisor});
        }
    return out;
}

double DownloadResults::success(const std::string& scope, double ratio, double speed) const {
    for (const auto& c : cells)
        if (c.scope == scope && c.ratio == ratio && c.speed_mph == speed) return c.success;
    throw std::out_of_range("no download cell " + scope);
}

namespace {

std::vector<double> coverage_draws(const ScenarioConfig& cfg, double speed, uint64_t seed) {
    const CoverageModel cov = CoverageModel::fit(cfg.coverage_for(speed));
    std::mt19937_64 rng(derive_seed(seed, "download/" + speed_label(speed)));
    std::vector<double> out(cfg.passes);
    for (auto& c : out) c = cov.sample(rng);
    return out;
}

double download_ratio(const std::vector<double>& draws, double bytes, double bps) {
    uint64_t ok = 0;
    for (double c : draws) ok += c * bps / 8.0 >= bytes ? 1 : 0;
    return double(ok) / double(draws.size());
}

}  // namespace

DownloadResults run_pcrl_download(const ScenarioConfig& cfg, uint64_t seed) {
    DownloadResults out;
    const auto sizes = pcrl_sizes(cfg);
    out.efficiency = cfg.pcrl_efficiency;
    if (out.efficiency == 0) {
        const auto& pc = cfg.pcrl_calibration;
        double bytes = -1;
        for (const auto& s : sizes)
            if (s.scope == pc.scope && s.ratio == pc.ratio) bytes = s.bytes;
        if (bytes < 0) throw std::invalid_argument("config: pcrl calibration cell not in the size table");
        const auto draws = coverage_draws(cfg, pc.speed_mph, derive_seed(seed, "pcrl-calibration"));
        double lo = 1e-6, hi = 1.0;
        if (download_ratio(draws, bytes, cfg.dsrc_bps * hi) < pc.target) {
            out.efficiency = 1.0;
        } else {
            for (int i = 0; i < 60; ++i) {
                const double mid = std::sqrt(lo * hi);
                if (download_ratio(draws, bytes, cfg.dsrc_bps * mid) >= pc.target)
                    hi = mid;
                else
                    lo = mid;
            }
            out.efficiency = hi;
        }
    }
    for (double sp : cfg.speeds()) {
        const auto draws = coverage_draws(cfg, sp, seed);
        for (const auto& s : sizes)
            out.cells.push_back({s.scope, s.ratio, sp, download_ratio(draws, s.bytes, cfg.dsrc_bps * out.efficiency)});
    }
    return out;
}

// --- linkability ---

std::vector<LinkCell> linkability_window(const ScenarioConfig& cfg, const std::vector<SchemeProfile>& profiles,
                                         uint64_t seed) {
    std::vector<LinkCell> out;
    for (const auto& p : profiles)
        for (double sp : cfg.speeds()) {
            LinkCell c;
            c.scheme = p.name;
            c.speed_mph = sp;
            c.inter_rsu_min = cfg.rsu_spacing_miles / sp * 60.0;
            const CoverageModel cov = CoverageModel::fit(cfg.coverage_for(sp));
            std::mt19937_64 rng(derive_seed(seed, "linkability/" + p.name + "/" + speed_label(sp)));
            std::vector<uint64_t> gaps;
            uint64_t ok = 0;
            int64_t last = -1;
            for (uint64_t i = 0; i < cfg.linkability_passes; ++i) {
                if (!simulate_pass(p, cov, cfg, rng)) continue;
                ++ok;
                if (last >= 0) gaps.push_back(i - uint64_t(last));
                last = int64_t(i);
            }
            c.pass_success = double(ok) / double(cfg.linkability_passes);
            c.gaps = gaps.size();
            const double nan = std::numeric_limits<double>::quiet_NaN();
            c.geometric_min = ok ? c.inter_rsu_min / c.pass_success : nan;
            if (gaps.empty()) {
                c.empirical_mean_min = c.empirical_p95_min = nan;
            } else {
                double sum = 0;
                for (auto g : gaps) sum += double(g);
                c.empirical_mean_min = sum / double(gaps.size()) * c.inter_rsu_min;
                std::sort(gaps.begin(), gaps.end());
                const size_t rank = size_t(std::ceil(0.95 * double(gaps.size())));
                c.empirical_p95_min = double(gaps[std::max<size_t>(rank, 1) - 1]) * c.inter_rsu_min;
            }
            out.push_back(c);
        }
    return out;
}

// --- run + output ---

RunMetrics run_sim(const ScenarioConfig& cfg, uint64_t seed) {
    cfg.validate();
    RunMetrics m;
    m.seed = seed;
    for (const auto& r : cfg.coverage) m.coverage.push_back(CoverageModel::fit(r));
    m.refresh = run_refresh_experiment(cfg, seed);
    m.sizes = pcrl_sizes(cfg);
    m.download = run_pcrl_download(cfg, seed);
    m.linkability = linkability_window(cfg, m.refresh.profiles, seed);
    if (cfg.full_stack) {
        CloneScenarioConfig cc = cfg.clone;
        cc.t_minutes = cfg.t_minutes;
        m.clone = run_clone_scenario(cc, derive_seed(seed, "clone"));
    }
    return m;
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt(double v) {
    if (!std::isfinite(v)) return "";
    std::ostringstream o;
    o << std::setprecision(10) << v;
    return o.str();
}

}  // namespace

json metrics_json(const RunMetrics& m) {
    json j;
    j["seed"] = m.seed;
    json cov = json::array();
    for (const auto& c : m.coverage)
        cov.push_back({{"speed_mph", c.row().speed_mph},
                       {"theta", c.theta()},
                       {"fitted_mean_s", c.mean()},
                       {"table_mean_s", c.row().mean_s}});
    j["coverage_fit"] = cov;
    json prof = json::array();
    for (const auto& p : m.refresh.profiles) {
        json legs = json::array();
        for (const auto& l : p.legs) legs.push_back({{"hop", hop_name(l.hop)}, {"median_ms", l.median_ms}, {"sigma", l.sigma}});
        prof.push_back({{"name", p.name}, {"legs", legs}, {"rsu_compute_ms", p.rsu_compute_ms},
                        {"calibrate_to", p.calibrate_to ? json(*p.calibrate_to) : json(nullptr)}});
    }
    j["profiles"] = prof;
    json ref = json::array();
    for (const auto& c : m.refresh.cells) ref.push_back({{"scheme", c.scheme}, {"speed_mph", c.speed_mph}, {"ratio", c.ratio}});
    j["refresh_success"] = ref;
    json sizes = json::array();
    for (const auto& s : m.sizes)
        sizes.push_back({{"scope", s.scope}, {"revocation_ratio", s.ratio}, {"bytes", s.bytes}, {"mb", s.bytes / 1e6}});
    j["pcrl_sizes"] = sizes;
    json dl = json::array();
    for (const auto& c : m.download.cells)
        dl.push_back({{"scope", c.scope}, {"revocation_ratio", c.ratio}, {"speed_mph", c.speed_mph}, {"success", c.success}});
    j["pcrl_download"] = {{"efficiency", m.download.efficiency}, {"cells", dl}};
    json lk = json::array();
    for (const auto& c : m.linkability)
        lk.push_back({{"scheme", c.scheme},
                      {"speed_mph", c.speed_mph},
                      {"inter_rsu_min", c.inter_rsu_min},
                      {"pass_success", c.pass_success},
                      {"empirical_mean_min", num(c.empirical_mean_min)},
                      {"empirical_p95_min", num(c.empirical_p95_min)},
                      {"geometric_min", num(c.geometric_min)},
                      {"gaps", c.gaps}});
    j["linkability"] = lk;
    if (m.clone) {
        const auto& c = *m.clone;
        j["clone_scenario"] = {{"attackers", c.attackers},
                               {"detected", c.detected},
                               {"escapes", c.escapes},
                               {"post_attempts", c.post_attempts},
                               {"blacklisted_in_time", c.blacklisted_in_time},
                               {"detect_to_blacklist_ms", c.max_latency_ms},
                               {"bound_ms", c.bound_ms},
                               {"tbl_sizes", c.tbl_sizes},
                               {"remaining_tokens", c.remaining_tokens},
                               {"pcrl_listed", c.pcrl_listed},
                               {"pcrl_expired", c.pcrl_expired},
                               {"honest_failures", c.honest_failures},
                               {"events", c.events},
                               {"clean", c.clean()}};
    }
    return j;
}

void write_outputs(const RunMetrics& m, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error(std::string("cannot write ") + name);
        return f;
    };
    {
        auto f = open("metrics.json");
        f << metrics_json(m).dump(2) << "\n";
    }
    {
        auto f = open("success_ratio.csv");
        f << "kind,scheme,speed_mph,ratio\n";
        for (const auto& c : m.refresh.cells) f << "refresh," << c.scheme << "," << fmt(c.speed_mph) << "," << fmt(c.ratio) << "\n";
        for (const auto& c : m.download.cells)
            f << "pcrl_download," << c.scope << "@" << fmt(c.ratio) << "," << fmt(c.speed_mph) << "," << fmt(c.success)
              << "\n";
    }
    {
        auto f = open("pcrl_sizes.csv");
        f << "scope,revocation_ratio,bytes,mb\n";
        for (const auto& s : m.sizes) f << s.scope << "," << fmt(s.ratio) << "," << fmt(s.bytes) << "," << fmt(s.bytes / 1e6) << "\n";
    }
    {
        auto f = open("linkability.csv");
        f << "scheme,speed_mph,inter_rsu_min,pass_success,empirical_mean_min,empirical_p95_min,geometric_min\n";
        for (const auto& c : m.linkability)
            f << c.scheme << "," << fmt(c.speed_mph) << "," << fmt(c.inter_rsu_min) << "," << fmt(c.pass_success) << ","
              << fmt(c.empirical_mean_min) << "," << fmt(c.empirical_p95_min) << "," << fmt(c.geometric_min) << "\n";
    }
}

}  // namespace tvss
