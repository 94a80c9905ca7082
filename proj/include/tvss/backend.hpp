#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>

#include "tvss/clients.hpp"

namespace tvss {

struct CloneEvent {
    Digest token_id{};
    int64_t window_index = 0;
    std::vector<TokenReport> reports;  // one per distinct (rsu, pc) redemption
    std::set<RegionId> regions;
};

enum class IngestStatus : uint8_t { ok, duplicate, clone_detected, stale, dropped };

struct IngestResult {
    IngestStatus status = IngestStatus::ok;
    std::optional<CloneEvent> clone;
};

struct MonitorStats {
    uint64_t reports = 0;
    uint64_t duplicates = 0;
    uint64_t decode_failures = 0;
    uint64_t seq_gaps = 0;
    uint64_t clones = 0;
};

// Duplicate-redemption detector. Two redemptions of one token by distinct
// (rsu, pc) pairs are a clone, whatever the regions.
class BackendMonitor {
public:
    explicit BackendMonitor(int lookback = 4) : lookback_(lookback) {}
    IngestResult ingest(const TokenReport& rep);
    IngestResult ingest_bytes(ByteView b);
    void advance_window(int64_t current);
    const MonitorStats& stats() const { return stats_; }
    size_t tracked_tokens() const;

private:
    struct Slot {
        std::vector<TokenReport> reports;
        bool latched = false;
    };
    int lookback_;
    int64_t current_ = 0;
    std::map<int64_t, std::map<Digest, Slot>> index_;
    std::map<uint64_t, uint64_t> max_seq_;
    MonitorStats stats_;
};

struct RsuPeer {
    uint64_t rsu_id = 0;
    RegionId region{};
    Link* link = nullptr;
};

struct DispatchStats {
    uint64_t revocations = 0;
    uint64_t ca_retries = 0;
    uint64_t deliveries = 0;
    uint64_t delivery_retries = 0;
};

// Carries clone events to the CA and fans the results out. At-least-once:
// anything that fails stays queued for retry_pending().
class RevocationDispatcher {
public:
    using Sleeper = std::function<void(int ms)>;
    RevocationDispatcher(Link& ca, std::vector<RsuPeer> rsus, int t_minutes, Sleeper sleeper = {},
                         int max_ca_attempts = 6, int base_backoff_ms = 100);
    // True once the CA answered and every RSU got its messages.
    bool on_clone(const CloneEvent& ev);
    bool retry_pending();
    size_t pending() const { return pending_ca_.size() + pending_rsu_.size(); }
    const DispatchStats& stats() const { return stats_; }
    std::vector<RevokeResult> results() const { return results_; }

private:
    struct Delivery {
        size_t peer;
        std::optional<RevokeNotice> notice;
        std::optional<PcrlSnapshot> snapshot;
    };
    bool call_ca(const CloneEvent& ev);
    bool deliver(const Delivery& d);

    CaClient ca_;
    std::vector<RsuPeer> rsus_;
    int t_minutes_;
    Sleeper sleeper_;
    int max_attempts_;
    int backoff_ms_;
    std::vector<CloneEvent> pending_ca_;
    std::vector<Delivery> pending_rsu_;
    std::vector<RevokeResult> results_;
    DispatchStats stats_;
};

}  // namespace tvss
