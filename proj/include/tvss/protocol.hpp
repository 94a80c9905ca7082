#pragma once

#include <unordered_set>

#include "tvss/codec.hpp"
#include "tvss/outcome.hpp"

namespace tvss {

using DigestSet = std::unordered_set<Digest, DigestHash>;

inline constexpr int kDefaultTMinutes = 15;

TimeWindow window_of(int64_t now_s, int t_minutes);
TimeWindow window_at(int64_t index, int t_minutes);

EnrollmentCert setup(const VerificationKey& vk_v, const SigningKeyPair& ca);

enum class TokenStatus : uint8_t { ok, expired, not_yet_valid, bad_signature };
const char* to_string(TokenStatus s);

TokenStatus validate_token(const Token& tau, int64_t now_s, const VerificationKey& vk_ca);

enum class IssueError : uint8_t {
    token_expired = 1,
    token_not_yet_valid,
    token_bad_signature,
    token_revoked,
    token_already_used,
};
const char* to_string(IssueError e);
inline bool is_token_invalid(IssueError e) {
    return e == IssueError::token_expired || e == IssueError::token_not_yet_valid ||
           e == IssueError::token_bad_signature;
}

struct RsuSigner {
    RsuCert cert;
    SigningKeyPair keys;
};

// Takes only the token and the fresh key; no vehicle identity reaches here.
Outcome<PseudonymCert, IssueError> issue_pc(const Token& tau, const VerificationKey& vehicle_vk,
                                            const RsuSigner& rsu, int64_t now_s,
                                            const VerificationKey& vk_ca, const DigestSet& revoked_ids,
                                            const DigestSet& used_ids);

SignedMessage sign_v2v(const SigningKeyPair& pc_keys, const PseudonymCert& pc, ByteView payload);

enum class V2vResult : uint8_t { accept, bad_sig, bad_cert_chain, wrong_region, expired_pc, revoked_pc };
const char* to_string(V2vResult r);

V2vResult verify_v2v(const SignedMessage& msg, int64_t now_s, const RegionId& here,
                     const VerificationKey& vk_ca, const DigestSet& pcrl);

Bytes v2v_signing_bytes(ByteView payload);

RsuCert certify_rsu(uint64_t rsu_id, const VerificationKey& vk, const RegionId& region,
                    const SigningKeyPair& ca);

}  // namespace tvss
