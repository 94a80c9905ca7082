#pragma once

#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>

#include "tvss/protocol.hpp"
#include "tvss/tokenchain.hpp"

namespace tvss {

struct CaConfig {
    int t_minutes = kDefaultTMinutes;
    int lookback = 4;
    std::string state_path;  // empty: in-memory only
};

enum class CaError : uint8_t {
    already_enrolled = 1,
    unknown_ec,
    ec_revoked,
    overlap,
    bad_proof,
    bad_request,
    unknown_token,
};
const char* to_string(CaError e);

struct TokenRequest {
    int64_t st = 0;
    int64_t et = 0;
};

// Bytes a vehicle signs to authenticate a token request.
Bytes token_request_bytes(const EnrollmentCert& ec, const TokenRequest& req);

using VehicleId = uint64_t;

struct VehicleRecord {
    EnrollmentCert ec;
    // Heads at (current window - 1). The only chain state kept per vehicle.
    ChainHeads cursor;
    std::vector<std::pair<int64_t, int64_t>> issued_ranges;  // sorted, disjoint, inclusive
    bool revoked = false;
    std::optional<RevokeNotice> notice;
};

struct RevokeResult {
    VehicleId vehicle = 0;
    RevokeNotice notice;
    std::vector<PcrlSnapshot> snapshots;
};

class CaNode {
public:
    CaNode(const SigningKeyPair& key, CaConfig cfg, std::unique_ptr<Entropy> rng, int64_t window_index);
    // Replays the log at cfg.state_path when present, otherwise starts fresh and
    // records the key there.
    static std::unique_ptr<CaNode> open(CaConfig cfg, std::unique_ptr<Entropy> rng, int64_t window_index);

    CaNode(const CaNode&) = delete;
    CaNode& operator=(const CaNode&) = delete;

    const VerificationKey& vk() const { return key_.vk; }
    int t_minutes() const { return cfg_.t_minutes; }
    int64_t window_index() const;

    Outcome<EnrollmentCert, CaError> enroll(const VerificationKey& vk_v);
    Outcome<std::vector<Token>, CaError> token_gen(const EnrollmentCert& ec, const TokenRequest& req,
                                                   const Signature& proof);
    // Returns a signed snapshot for every known region in the new window.
    std::vector<PcrlSnapshot> advance_window(int64_t new_index);
    Outcome<RevokeResult, CaError> revoke_by_token(const Digest& id, const std::vector<PcrlEntry>& pcs);
    RsuCert certify_rsu(uint64_t rsu_id, const VerificationKey& vk, const RegionId& region);
    PcrlSnapshot pcrl_snapshot(const RegionId& region) const;

    std::optional<VehicleId> lookup(const Digest& id) const;
    size_t vehicle_count() const;
    VehicleRecord record(VehicleId v) const;
    bool blacklisted(const EnrollmentCert& ec) const;
    size_t current_index_size() const;
    std::map<Digest, VehicleId> current_index() const;

private:
    void log(uint8_t k, const Bytes& body);
    VehicleId enroll_locked(const VerificationKey& vk_v, const ChainHeads& heads);
    void add_range_locked(VehicleId v, int64_t first, int64_t last);
    std::vector<PcrlSnapshot> advance_locked(int64_t new_index);
    RevokeResult revoke_locked(VehicleId v, const std::vector<PcrlEntry>& pcs);
    PcrlSnapshot snapshot_locked(const RegionId& region) const;
    void replay(const std::string& path);

    SigningKeyPair key_;
    CaConfig cfg_;
    std::unique_ptr<Entropy> rng_;
    int64_t window_;
    bool replaying_ = false;
    std::ofstream log_;

    mutable std::mutex mu_;
    std::vector<VehicleRecord> vehicles_;
    std::map<VerificationKey, VehicleId> by_vk_;
    std::set<Digest> blacklist_;
    std::unordered_map<Digest, VehicleId, DigestHash> current_;
    std::deque<std::unordered_map<Digest, VehicleId, DigestHash>> lookback_;
    std::map<uint64_t, RsuCert> rsus_;
    std::map<RegionId, std::map<Digest, int64_t>> pcrl_;  // region -> body hash -> expiry
};

}  // namespace tvss
