#pragma once

#include <cstdint>
#include <vector>

#include "tvss/crypto.hpp"

namespace tvss {

using RegionId = std::array<uint8_t, 8>;

struct TimeWindow {
    int64_t index = 0;
    int64_t start_s = 0;
    int64_t end_s = 0;
    bool operator==(const TimeWindow&) const = default;
};

struct EnrollmentCert {
    VerificationKey vk{};
    Signature sigma{};
    bool operator==(const EnrollmentCert&) const = default;
};

struct TokenContent {
    Digest id{};
    TimeWindow tw;
    bool operator==(const TokenContent&) const = default;
};

struct Token {
    TokenContent content;
    Signature sigma{};
    bool operator==(const Token&) const = default;
};

struct RsuCert {
    uint64_t rsu_id = 0;
    VerificationKey vk{};
    RegionId region{};
    Signature sigma_ca{};
    bool operator==(const RsuCert&) const = default;
};

struct PseudonymCertBody {
    VerificationKey vk{};
    RegionId region{};
    TimeWindow tw;
    bool operator==(const PseudonymCertBody&) const = default;
};

struct PseudonymCert {
    PseudonymCertBody body;
    Signature sigma_rsu{};
    RsuCert rsu_cert;
    bool operator==(const PseudonymCert&) const = default;
};

struct RevealPair {
    Digest x_prev{};
    Digest r_prev{};
    int64_t first_index = 0;
    int64_t last_index = 0;
    bool operator==(const RevealPair&) const = default;
};

struct RevokeNotice {
    RevealPair pair;
    Signature sigma{};
    bool operator==(const RevokeNotice&) const = default;
};

struct PcrlEntry {
    Digest pc_body_hash{};
    RegionId region{};
    int64_t expires_s = 0;
    bool operator==(const PcrlEntry&) const = default;
};

struct PcrlSnapshot {
    RegionId region{};
    int64_t window_index = 0;
    std::vector<Digest> entries;  // sorted, unique
    Signature sigma{};
    bool operator==(const PcrlSnapshot&) const = default;
};

struct TokenReport {
    Digest token_id{};
    uint64_t rsu_id = 0;
    RegionId region{};
    int64_t window_index = 0;
    Digest pc_body_hash{};
    uint64_t seq = 0;
    bool operator==(const TokenReport&) const = default;
};

struct SignedMessage {
    Bytes payload;
    Signature sigma{};
    PseudonymCert pc;
};

struct RegionHash {
    size_t operator()(const RegionId& r) const noexcept {
        size_t h = 0;
        for (uint8_t b : r) h = h * 131 + b;
        return h;
    }
};

RegionId region_from_u64(uint64_t v);
uint64_t region_to_u64(const RegionId& r);

}  // namespace tvss
