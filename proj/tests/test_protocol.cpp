#include "doctest.h"
#include "tvss/protocol.hpp"
#include "tvss/tokenchain.hpp"

using namespace tvss;

namespace {

struct Fixture {
    SeededEntropy rng{11};
    SigningKeyPair ca = keygen(rng.next());
    SigningKeyPair rsu_keys = keygen(rng.next());
    RegionId region = region_from_u64(7);
    RsuSigner rsu{certify_rsu(3, rsu_keys.vk, region, ca), rsu_keys};

    Token token(int64_t w, const Digest& id, int t = 15) {
        Token tau;
        tau.content.id = id;
        tau.content.tw = window_at(w, t);
        tau.sigma = sign(ca, signing_bytes(tau));
        return tau;
    }
};

}  // namespace

TEST_SUITE("protocol") {

TEST_CASE("window arithmetic") {
    CHECK(window_of(0, 15) == TimeWindow{0, 0, 900});
    CHECK(window_of(899, 15) == TimeWindow{0, 0, 900});
    CHECK(window_of(900, 15) == TimeWindow{1, 900, 1800});
    CHECK(window_at(96, 15).start_s == 86400);
    CHECK(window_of(3599, 60).index == 0);
    CHECK_THROWS_AS(window_of(10, 0), std::invalid_argument);
    CHECK_THROWS_AS(window_of(-1, 15), std::invalid_argument);
    CHECK_THROWS_AS(window_at(-1, 15), std::invalid_argument);
}

TEST_CASE("setup signs the enrollment certificate") {
    Fixture f;
    auto v = keygen(f.rng.next());
    EnrollmentCert ec = setup(v.vk, f.ca);
    CHECK(ec.vk == v.vk);
    CHECK(verify(f.ca.vk, signing_bytes(ec), ec.sigma));
}

TEST_CASE("token validity is half open") {
    Fixture f;
    Token tau = f.token(4, hash(std::string_view{"id"}));
    CHECK(validate_token(tau, 3600, f.ca.vk) == TokenStatus::ok);
    CHECK(validate_token(tau, 4499, f.ca.vk) == TokenStatus::ok);
    CHECK(validate_token(tau, 4500, f.ca.vk) == TokenStatus::expired);
    CHECK(validate_token(tau, 3599, f.ca.vk) == TokenStatus::not_yet_valid);
    Token bad = tau;
    bad.sigma[5] ^= 1;
    CHECK(validate_token(bad, 3600, f.ca.vk) == TokenStatus::bad_signature);
    // time is checked first
    CHECK(validate_token(bad, 4500, f.ca.vk) == TokenStatus::expired);
    CHECK(validate_token(tau, 3600, f.rsu_keys.vk) == TokenStatus::bad_signature);
}

TEST_CASE("issue_pc outcomes") {
    Fixture f;
    Digest id = hash(std::string_view{"tok"});
    Token tau = f.token(2, id);
    auto pk = keygen(f.rng.next());
    DigestSet none, with_id{id};

    auto ok = issue_pc(tau, pk.vk, f.rsu, 1800, f.ca.vk, none, none);
    REQUIRE(ok.ok());
    const PseudonymCert& pc = ok.value();
    CHECK(pc.body.vk == pk.vk);
    CHECK(pc.body.region == f.region);
    CHECK(pc.body.tw == tau.content.tw);
    CHECK(pc.rsu_cert == f.rsu.cert);
    CHECK(verify(f.rsu_keys.vk, signing_bytes(pc), pc.sigma_rsu));

    CHECK(issue_pc(tau, pk.vk, f.rsu, 2700, f.ca.vk, none, none).error() == IssueError::token_expired);
    CHECK(issue_pc(tau, pk.vk, f.rsu, 1799, f.ca.vk, none, none).error() == IssueError::token_not_yet_valid);
    Token bad = tau;
    bad.content.id[0] ^= 1;
    CHECK(issue_pc(bad, pk.vk, f.rsu, 1800, f.ca.vk, none, none).error() == IssueError::token_bad_signature);
    CHECK(issue_pc(tau, pk.vk, f.rsu, 1800, f.ca.vk, with_id, none).error() == IssueError::token_revoked);
    CHECK(issue_pc(tau, pk.vk, f.rsu, 1800, f.ca.vk, none, with_id).error() == IssueError::token_already_used);
    CHECK(is_token_invalid(IssueError::token_expired));
    CHECK_FALSE(is_token_invalid(IssueError::token_revoked));
    CHECK_THROWS_AS(ok.error(), std::logic_error);
}

TEST_CASE("v2v verification order") {
    Fixture f;
    Token tau = f.token(2, hash(std::string_view{"v2v"}));
    auto pk = keygen(f.rng.next());
    DigestSet none;
    PseudonymCert pc = issue_pc(tau, pk.vk, f.rsu, 1800, f.ca.vk, none, none).value();
    Bytes payload{1, 2, 3};
    SignedMessage m = sign_v2v(pk, pc, payload);

    CHECK(verify_v2v(m, 1800, f.region, f.ca.vk, none) == V2vResult::accept);
    CHECK(verify_v2v(m, 2699, f.region, f.ca.vk, none) == V2vResult::accept);
    CHECK(verify_v2v(m, 2700, f.region, f.ca.vk, none) == V2vResult::expired_pc);
    CHECK(verify_v2v(m, 1800, region_from_u64(8), f.ca.vk, none) == V2vResult::wrong_region);
    DigestSet pcrl{pc_body_hash(pc.body)};
    CHECK(verify_v2v(m, 1800, f.region, f.ca.vk, pcrl) == V2vResult::revoked_pc);

    SignedMessage tampered = m;
    tampered.payload[0] ^= 1;
    CHECK(verify_v2v(tampered, 2700, region_from_u64(8), f.ca.vk, pcrl) == V2vResult::bad_sig);

    SignedMessage forged_rsu = m;
    forged_rsu.pc.rsu_cert.sigma_ca[0] ^= 1;
    CHECK(verify_v2v(forged_rsu, 1800, f.region, f.ca.vk, none) == V2vResult::bad_cert_chain);
    SignedMessage moved = m;
    moved.pc.body.region = region_from_u64(8);
    CHECK(verify_v2v(moved, 1800, region_from_u64(8), f.ca.vk, none) == V2vResult::bad_cert_chain);
    SignedMessage bad_pc = m;
    bad_pc.pc.sigma_rsu[0] ^= 1;
    CHECK(verify_v2v(bad_pc, 1800, f.region, f.ca.vk, none) == V2vResult::bad_cert_chain);
    CHECK(verify_v2v(m, 1800, f.region, f.rsu_keys.vk, none) == V2vResult::bad_cert_chain);
}

TEST_CASE("sign_v2v needs the certified key") {
    Fixture f;
    Token tau = f.token(2, hash(std::string_view{"k"}));
    auto pk = keygen(f.rng.next());
    auto other = keygen(f.rng.next());
    PseudonymCert pc = issue_pc(tau, pk.vk, f.rsu, 1800, f.ca.vk, {}, {}).value();
    CHECK_THROWS_AS(sign_v2v(other, pc, Bytes{1}), std::invalid_argument);
}

TEST_CASE("region encoding") {
    CHECK(region_to_u64(region_from_u64(0x0102030405060708ull)) == 0x0102030405060708ull);
    CHECK(region_from_u64(1)[7] == 1);
}

TEST_CASE("status names") {
    CHECK(std::string(to_string(TokenStatus::expired)) == "expired");
    CHECK(std::string(to_string(IssueError::token_already_used)) == "token_already_used");
    CHECK(std::string(to_string(V2vResult::revoked_pc)) == "revoked_pc");
}

}
