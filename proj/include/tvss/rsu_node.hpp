#pragma once

#include <map>
#include <mutex>
#include <optional>

#include "tvss/protocol.hpp"
#include "tvss/tokenchain.hpp"

namespace tvss {

struct RsuConfig {
    int t_minutes = kDefaultTMinutes;
    int64_t skew_s = 30;
};

struct TblEntry {
    RevealPair pair;
    // Heads at max(window - 2, first_index - 1): enough to derive the ids of
    // the previous, current and next window.
    ChainHeads at;
    std::optional<Digest> current_id;  // absent before first_index
    bool exhausted = false;
};

class RsuNode {
public:
    RsuNode(RsuSigner signer, const VerificationKey& vk_ca, RsuConfig cfg, int64_t window_index);

    Outcome<PseudonymCert, IssueError> pseudo_gen(const Token& tau, const VerificationKey& vehicle_vk,
                                                  int64_t now_s);
    // False when the CA signature does not verify; the TBL is then unchanged.
    bool apply_revoke_notice(const RevokeNotice& notice);
    // Accepts CA-signed snapshots for this RSU's region at the current or a later window.
    bool apply_pcrl(const PcrlSnapshot& snap);
    void advance_window(int64_t new_index);
    // Advances one window at a time until the window containing now_s.
    void catch_up(int64_t now_s);
    PcrlSnapshot serve_pcrl() const;
    std::vector<TokenReport> drain_reports();

    const RsuCert& cert() const { return signer_.cert; }
    const VerificationKey& vk_ca() const { return vk_ca_; }
    int t_minutes() const { return cfg_.t_minutes; }
    int64_t window_index() const;
    size_t tbl_size() const;
    std::vector<TblEntry> tbl() const;
    size_t utl_size() const;  // ids across retained windows
    size_t utl_size(int64_t window) const;
    bool is_revoked(const Digest& id, int64_t window) const;

private:
    using PairKey = std::pair<Digest, Digest>;
    void add_ids_locked(const TblEntry& e);
    void refresh_entry_locked(TblEntry& e);

    RsuSigner signer_;
    VerificationKey vk_ca_;
    RsuConfig cfg_;

    mutable std::mutex mu_;
    int64_t window_;
    std::map<PairKey, TblEntry> tbl_;
    std::map<int64_t, DigestSet> revoked_;  // windows window-1 .. window+1
    std::map<int64_t, DigestSet> utl_;
    std::optional<PcrlSnapshot> pcrl_;

    std::mutex report_mu_;
    std::vector<TokenReport> reports_;
    uint64_t seq_ = 0;
};

}  // namespace tvss
