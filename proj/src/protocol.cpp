#include "tvss/protocol.hpp"

namespace tvss {

TimeWindow window_at(int64_t index, int t_minutes) {
    if (t_minutes < 1) throw std::invalid_argument("T must be at least one minute");
    if (index < 0) throw std::invalid_argument("negative window index");
    int64_t len = int64_t(t_minutes) * 60;
    return TimeWindow{index, index * len, index * len + len};
}

TimeWindow window_of(int64_t now_s, int t_minutes) {
    if (t_minutes < 1) throw std::invalid_argument("T must be at least one minute");
    if (now_s < 0) throw std::invalid_argument("negative time");
    return window_at(now_s / (int64_t(t_minutes) * 60), t_minutes);
}

EnrollmentCert setup(const VerificationKey& vk_v, const SigningKeyPair& ca) {
    EnrollmentCert ec;
    ec.vk = vk_v;
    ec.sigma = sign(ca, signing_bytes(ec));
    return ec;
}

const char* to_string(TokenStatus s) {
    switch (s) {
        case TokenStatus::ok: return "ok";
        case TokenStatus::expired: return "expired";
        case TokenStatus::not_yet_valid: return "not_yet_valid";
        case TokenStatus::bad_signature: return "bad_signature";
    }
    return "?";
}

TokenStatus validate_token(const Token& tau, int64_t now_s, const VerificationKey& vk_ca) {
    if (now_s < tau.content.tw.start_s) return TokenStatus::not_yet_valid;
    if (now_s >= tau.content.tw.end_s) return TokenStatus::expired;
    if (!verify(vk_ca, signing_bytes(tau), tau.sigma)) return TokenStatus::bad_signature;
    return TokenStatus::ok;
}

const char* to_string(IssueError e) {
    switch (e) {
        case IssueError::token_expired: return "token_expired";
        case IssueError::token_not_yet_valid: return "token_not_yet_valid";
        case IssueError::token_bad_signature: return "token_bad_signature";
        case IssueError::token_revoked: return "token_revoked";
        case IssueError::token_already_used: return "token_already_used";
    }
    return "?";
}

Outcome<PseudonymCert, IssueError> issue_pc(const Token& tau, const VerificationKey& vehicle_vk,
                                            const RsuSigner& rsu, int64_t now_s,
                                            const VerificationKey& vk_ca, const DigestSet& revoked_ids,
                                            const DigestSet& used_ids) {
    switch (validate_token(tau, now_s, vk_ca)) {
        case TokenStatus::ok: break;
        case TokenStatus::expired: return IssueError::token_expired;
        case TokenStatus::not_yet_valid: return IssueError::token_not_yet_valid;
        case TokenStatus::bad_signature: return IssueError::token_bad_signature;
    }
    if (revoked_ids.count(tau.content.id)) return IssueError::token_revoked;
    if (used_ids.count(tau.content.id)) return IssueError::token_already_used;

    PseudonymCert pc;
    pc.body.vk = vehicle_vk;
    pc.body.region = rsu.cert.region;
    pc.body.tw = tau.content.tw;
    pc.rsu_cert = rsu.cert;
    pc.sigma_rsu = sign(rsu.keys, signing_bytes(pc));
    return pc;
}

Bytes v2v_signing_bytes(ByteView payload) {
    Writer w;
    w.bytes(payload);
    return w.take();
}

SignedMessage sign_v2v(const SigningKeyPair& pc_keys, const PseudonymCert& pc, ByteView payload) {
    if (pc_keys.vk != pc.body.vk) throw std::invalid_argument("keypair does not match pseudonym certificate");
    SignedMessage m;
    m.payload.assign(payload.begin(), payload.end());
    m.sigma = sign(pc_keys, v2v_signing_bytes(payload));
    m.pc = pc;
    return m;
}

const char* to_string(V2vResult r) {
    switch (r) {
        case V2vResult::accept: return "accept";
        case V2vResult::bad_sig: return "bad_sig";
        case V2vResult::bad_cert_chain: return "bad_cert_chain";
        case V2vResult::wrong_region: return "wrong_region";
        case V2vResult::expired_pc: return "expired_pc";
        case V2vResult::revoked_pc: return "revoked_pc";
    }
    return "?";
}

V2vResult verify_v2v(const SignedMessage& msg, int64_t now_s, const RegionId& here,
                     const VerificationKey& vk_ca, const DigestSet& pcrl) {
    const PseudonymCert& pc = msg.pc;
    if (!verify(pc.body.vk, v2v_signing_bytes(msg.payload), msg.sigma)) return V2vResult::bad_sig;
    if (!verify(vk_ca, signing_bytes(pc.rsu_cert), pc.rsu_cert.sigma_ca) ||
        pc.rsu_cert.region != pc.body.region ||
        !verify(pc.rsu_cert.vk, signing_bytes(pc), pc.sigma_rsu))
        return V2vResult::bad_cert_chain;
    if (pc.body.region != here) return V2vResult::wrong_region;
    if (now_s < pc.body.tw.start_s || now_s >= pc.body.tw.end_s) return V2vResult::expired_pc;
    if (pcrl.count(pc_body_hash(pc.body))) return V2vResult::revoked_pc;
    return V2vResult::accept;
}

RsuCert certify_rsu(uint64_t rsu_id, const VerificationKey& vk, const RegionId& region,
                    const SigningKeyPair& ca) {
    RsuCert c;
    c.rsu_id = rsu_id;
    c.vk = vk;
    c.region = region;
    c.sigma_ca = sign(ca, signing_bytes(c));
    return c;
}

}  // namespace tvss
