#pragma once

#include <map>
#include <optional>

#include "tvss/clients.hpp"
#include "tvss/services.hpp"

namespace tvss {

enum class RefreshStatus : uint8_t { refreshed, kept_old, failed };
enum class RefreshFailure : uint8_t { none, no_token, rsu_rejected, timeout };

struct RefreshResult {
    RefreshStatus status = RefreshStatus::failed;
    RefreshFailure reason = RefreshFailure::none;
    std::optional<IssueError> code;
};

enum class DownloadResult : uint8_t { complete, truncated, timeout, rejected };

struct HeldPc {
    PseudonymCert pc;
    SigningKeyPair keys;
};

class VehicleAgent {
public:
    VehicleAgent(const SigningKeyPair& identity, const VerificationKey& vk_ca, Clock clock, Entropy& rng,
                 int t_minutes = kDefaultTMinutes);

    Outcome<EnrollmentCert, CaError> enroll(CaClient& ca);
    // Requests tokens for `count` windows starting at `first_window`.
    Outcome<size_t, CaError> request_tokens(CaClient& ca, int64_t first_window, int64_t count);
    void add_tokens(const std::vector<Token>& tokens);

    RefreshResult refresh_pc(RsuClient& rsu);
    SignedMessage broadcast(ByteView payload) const;
    V2vResult receive(const SignedMessage& msg, const RegionId& here) const;
    DownloadResult download_pcrl(RsuClient& rsu, size_t budget_bytes);

    const std::optional<EnrollmentCert>& ec() const { return ec_; }
    void restore_ec(const EnrollmentCert& ec) { ec_ = ec; }
    const std::map<int64_t, Token>& tokens() const { return tokens_; }
    const std::optional<HeldPc>& current_pc() const { return pc_; }
    const std::vector<PseudonymCert>& pc_history() const { return history_; }
    const DigestSet& pcrl() const { return pcrl_; }
    size_t token_count() const { return tokens_.size(); }
    bool has_token(int64_t window) const { return tokens_.count(window) > 0; }
    std::optional<Token> token_for(int64_t window) const;
    int64_t current_window() const;

private:
    void drop_stale_tokens();

    SigningKeyPair identity_;
    VerificationKey vk_ca_;
    Clock clock_;
    Entropy& rng_;
    int t_minutes_;
    std::optional<EnrollmentCert> ec_;
    std::map<int64_t, Token> tokens_;
    std::optional<HeldPc> pc_;
    std::vector<PseudonymCert> history_;
    DigestSet pcrl_;
    int64_t pcrl_window_ = -1;
};

}  // namespace tvss
