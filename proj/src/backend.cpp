#include "tvss/backend.hpp"

#include <spdlog/spdlog.h>

namespace tvss {

IngestResult BackendMonitor::ingest(const TokenReport& rep) {
    ++stats_.reports;
    uint64_t& hi = max_seq_[rep.rsu_id];
    if (rep.seq > hi + 1) {
        stats_.seq_gaps += rep.seq - hi - 1;
        spdlog::debug("rsu {} report gap: {} -> {}", rep.rsu_id, hi, rep.seq);
    }
    hi = std::max(hi, rep.seq);

    if (rep.window_index < current_ - lookback_) return {IngestStatus::stale, std::nullopt};
    Slot& slot = index_[rep.window_index][rep.token_id];
    for (const auto& r : slot.reports) {
        if (r.rsu_id == rep.rsu_id && r.seq == rep.seq) {
            ++stats_.duplicates;
            return {IngestStatus::duplicate, std::nullopt};
        }
    }
    bool distinct = true;
    for (const auto& r : slot.reports)
        if (r.rsu_id == rep.rsu_id && r.pc_body_hash == rep.pc_body_hash) distinct = false;
    if (!distinct) {
        ++stats_.duplicates;
        return {IngestStatus::duplicate, std::nullopt};
    }
    slot.reports.push_back(rep);
    if (slot.reports.size() < 2 || slot.latched) return {IngestStatus::ok, std::nullopt};

    slot.latched = true;
    ++stats_.clones;
    CloneEvent ev;
    ev.token_id = rep.token_id;
    ev.window_index = rep.window_index;
    ev.reports = slot.reports;
    for (const auto& r : slot.reports) ev.regions.insert(r.region);
    return {IngestStatus::clone_detected, std::move(ev)};
}

IngestResult BackendMonitor::ingest_bytes(ByteView b) {
    TokenReport rep;
    try {
        rep = decode<TokenReport>(b);
    } catch (const CodecError&) {
        ++stats_.decode_failures;
        return {IngestStatus::dropped, std::nullopt};
    }
    return ingest(rep);
}

void BackendMonitor::advance_window(int64_t current) {
    current_ = std::max(current_, current);
    std::erase_if(index_, [&](const auto& kv) { return kv.first < current_ - lookback_; });
}

size_t BackendMonitor::tracked_tokens() const {
    size_t n = 0;
    for (const auto& [w, m] : index_) n += m.size();
    return n;
}

RevocationDispatcher::RevocationDispatcher(Link& ca, std::vector<RsuPeer> rsus, int t_minutes, Sleeper sleeper,
                                           int max_ca_attempts, int base_backoff_ms)
    : ca_(ca),
      rsus_(std::move(rsus)),
      t_minutes_(t_minutes),
      sleeper_(std::move(sleeper)),
      max_attempts_(max_ca_attempts),
      backoff_ms_(base_backoff_ms) {}

bool RevocationDispatcher::deliver(const Delivery& d) {
    RsuClient c(*rsus_[d.peer].link);
    try {
        if (d.notice) c.push_notice(*d.notice);
        if (d.snapshot) c.push_pcrl(*d.snapshot);
        ++stats_.deliveries;
        return true;
    } catch (const std::exception& e) {
        spdlog::debug("delivery to rsu {} failed: {}", rsus_[d.peer].rsu_id, e.what());
        return false;
    }
}

bool RevocationDispatcher::call_ca(const CloneEvent& ev) {
    std::vector<PcrlEntry> pcs;
    for (const auto& r : ev.reports) {
        PcrlEntry e;
        e.pc_body_hash = r.pc_body_hash;
        e.region = r.region;
        e.expires_s = window_at(r.window_index, t_minutes_).end_s;
        pcs.push_back(e);
    }
    int delay = backoff_ms_;
    for (int attempt = 0; attempt < max_attempts_; ++attempt) {
        if (attempt > 0) {
            ++stats_.ca_retries;
            if (sleeper_) sleeper_(delay);
            delay *= 2;
        }
        try {
            auto out = ca_.revoke(ev.token_id, pcs);
            if (!out) {
                spdlog::warn("CA refused revocation: {}", to_string(out.error()));
                return true;  // a definitive answer; retrying cannot help
            }
            ++stats_.revocations;
            const RevokeResult& res = out.value();
            results_.push_back(res);
            for (size_t i = 0; i < rsus_.size(); ++i) {
                Delivery d{i, res.notice, std::nullopt};
                for (const auto& s : res.snapshots)
                    if (s.region == rsus_[i].region) d.snapshot = s;
                if (!deliver(d)) pending_rsu_.push_back(d);
            }
            return true;
        } catch (const TransportError& e) {
            spdlog::debug("CA unreachable (attempt {}): {}", attempt + 1, e.what());
        }
    }
    return false;
}

bool RevocationDispatcher::on_clone(const CloneEvent& ev) {
    if (!call_ca(ev)) {
        pending_ca_.push_back(ev);
        return false;
    }
    return pending_rsu_.empty();
}

bool RevocationDispatcher::retry_pending() {
    std::vector<CloneEvent> ca = std::exchange(pending_ca_, {});
    for (const auto& ev : ca)
        if (!call_ca(ev)) pending_ca_.push_back(ev);
    std::vector<Delivery> rsu = std::exchange(pending_rsu_, {});
    for (const auto& d : rsu) {
        ++stats_.delivery_retries;
        if (!deliver(d)) pending_rsu_.push_back(d);
    }
    return pending() == 0;
}

}  // namespace tvss
