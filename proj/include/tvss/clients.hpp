#pragma once

#include "tvss/ca_node.hpp"
#include "tvss/transport.hpp"

namespace tvss {

class CaClient {
public:
    explicit CaClient(Link& link) : link_(link) {}
    Outcome<EnrollmentCert, CaError> enroll(const VerificationKey& vk);
    Outcome<std::vector<Token>, CaError> token_gen(const EnrollmentCert& ec, const TokenRequest& req,
                                                   const Signature& proof);
    Outcome<RevokeResult, CaError> revoke(const Digest& token_id, const std::vector<PcrlEntry>& pcs);
    std::vector<PcrlSnapshot> advance(int64_t new_index);
    RsuCert certify_rsu(uint64_t rsu_id, const VerificationKey& vk, const RegionId& region);

private:
    Link& link_;
};

class RsuClient {
public:
    explicit RsuClient(Link& link) : link_(link) {}
    Outcome<PseudonymCert, IssueError> pseudo(const Token& tau, const VerificationKey& vk);
    PcrlSnapshot pcrl();
    bool push_notice(const RevokeNotice& n);
    bool push_pcrl(const PcrlSnapshot& s);
    void tick(int64_t new_index);

private:
    Link& link_;
};

class BackendClient {
public:
    explicit BackendClient(Link& link) : link_(link) {}
    void report(const TokenReport& rep);

private:
    Link& link_;
};

}  // namespace tvss
