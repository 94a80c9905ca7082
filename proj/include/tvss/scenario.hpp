#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "tvss/services.hpp"

namespace tvss {

// Single-threaded event queue ordered by (time_ms, insertion seq).
class EventQueue {
public:
    using Action = std::function<void()>;
    void at(int64_t time_ms, Action a);
    void after(int64_t delay_ms, Action a) { at(now_ + delay_ms, std::move(a)); }
    // Runs events up to and including end_ms.
    uint64_t run_until(int64_t end_ms);
    int64_t now() const { return now_; }

private:
    struct Ev {
        int64_t t;
        uint64_t seq;
        Action a;
    };
    struct Later {
        bool operator()(const Ev& x, const Ev& y) const { return x.t != y.t ? x.t > y.t : x.seq > y.seq; }
    };
    std::priority_queue<Ev, std::vector<Ev>, Later> q_;
    int64_t now_ = 0;
    uint64_t seq_ = 0;
};

// One-way asynchronous link: the frame reaches the service after a fixed
// delay and the caller gets an immediate ok acknowledgement.
class DelayLink final : public Link {
public:
    using Observer = std::function<void(const Frame& req, const Frame& resp)>;
    DelayLink(EventQueue& q, int64_t delay_ms, Service* target = nullptr)
        : q_(q), delay_ms_(delay_ms), target_(target) {}
    Frame call(const Frame& req) override;
    void set_target(Service* s) { target_ = s; }
    Observer on_delivered;

private:
    EventQueue& q_;
    int64_t delay_ms_;
    Service* target_;
};

struct CloneScenarioConfig {
    int t_minutes = 15;
    int regions = 2;
    int rsus_per_region = 2;
    int honest_vehicles = 3;
    int attackers = 1;
    int horizon_windows = 6;  // tokens per vehicle, from the first window
    int inject_window = 1;    // offset of the cloned redemption
    int64_t report_cycle_ms = 1000;
    int64_t link_one_way_ms = 40;  // RSU <-> backend; the CA sits next to the backend
    int64_t start_window = 1'900'000;
};

struct CloneScenarioResult {
    int attackers = 0;
    int detected = 0;
    int escapes = 0;             // successful PseudoGen by owner or clone after the inject window
    int post_attempts = 0;
    int blacklisted_in_time = 0;  // attackers blacklisted at every RSU before their next window
    int64_t max_latency_ms = -1;  // second redemption -> last RSU applied the notice
    int64_t bound_ms = 0;         // one report cycle + one notice round trip
    std::vector<size_t> tbl_sizes;  // per RSU, at the end of the inject window
    int remaining_tokens = 0;       // per attacker when revoked
    bool pcrl_listed = false;
    bool pcrl_expired = false;
    int honest_failures = 0;
    uint64_t events = 0;

    bool clean() const;
};

CloneScenarioResult run_clone_scenario(const CloneScenarioConfig& cfg, uint64_t seed);

}  // namespace tvss
