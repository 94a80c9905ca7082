#include "doctest.h"
#include "tvss/game.hpp"

using namespace tvss;

TEST_SUITE("game") {

TEST_CASE("queries after the challenge abort") {
    Challenger g(1);
    size_t a = g.create_vehicle(), b = g.create_vehicle();
    g.challenge_anonymity(a, b);
    CHECK(g.phase() == Phase::challenge);
    CHECK_THROWS_AS(g.create_vehicle(), GameAborted);
    CHECK_THROWS_AS(g.get_pc(a), GameAborted);
    CHECK_THROWS_AS(g.get_tokens(a, 1), GameAborted);
    CHECK_THROWS_AS(g.corrupt(a), GameAborted);
    CHECK_THROWS_AS(g.finish_forgery({}, {}, {}), GameAborted);
    g.finish_bit(0);
    CHECK(g.phase() == Phase::finished);
    CHECK_THROWS_AS(g.finish_bit(0), GameAborted);
}

TEST_CASE("challenge preconditions") {
    Challenger g(2);
    size_t a = g.create_vehicle(), b = g.create_vehicle(), c = g.create_vehicle();
    CHECK_THROWS_AS(g.challenge_anonymity(a, a), GameAborted);
    CHECK_THROWS_AS(g.challenge_anonymity(a, 7), GameAborted);
    g.corrupt(c);
    CHECK_THROWS_AS(g.challenge_anonymity(a, c), GameAborted);
    g.get_tokens(b, 1);
    CHECK_THROWS_AS(g.challenge_anonymity(a, b), GameAborted);
    g.get_pc(a);
    CHECK_THROWS_AS(g.get_pc(a), GameAborted);
    CHECK_THROWS_AS(g.expose_pc_key(b), GameAborted);
}

TEST_CASE("anonymity challenge answers with the chosen vehicle") {
    Challenger g(3);
    size_t a = g.create_vehicle(), b = g.create_vehicle();
    PseudonymCert pc = g.challenge_anonymity(a, b);
    CHECK(verify(pc.rsu_cert.vk, signing_bytes(pc), pc.sigma_rsu));
    CHECK(g.finish_bit(g.hidden_bit()));
}

TEST_CASE("unlinkability challenge spans two windows") {
    Challenger g(4);
    size_t a = g.create_vehicle(), b = g.create_vehicle();
    auto pcs = g.challenge_unlinkability(a, b);
    CHECK(pcs[0].body.tw == pcs[1].body.tw);
    CHECK(pcs[2].body.tw.index == pcs[0].body.tw.index + 1);
    CHECK_FALSE(g.finish_bit(1 - g.hidden_bit()));
}

TEST_CASE("forgery against the issued pc") {
    Challenger g(5);
    size_t a = g.create_vehicle();
    PseudonymCert pc = g.challenge_forgery(a);
    CHECK_FALSE(g.finish_forgery(Bytes{1}, Signature{}, pc));
}

TEST_CASE("small runs") {
    auto f = run_game(Branch::forgery, 40, 1);
    CHECK(f.trials == 40);
    CHECK(f.wins == 0);
    CHECK(f.structural_violations == 0);
    auto an = run_game(Branch::anonymity, 40, 2);
    CHECK(an.structural_violations == 0);
    CHECK(an.wins <= 40);
    auto un = run_game(Branch::unlinkability, 40, 3);
    CHECK(un.structural_violations == 0);
    auto again = run_game(Branch::unlinkability, 40, 3);
    CHECK(again.wins == un.wins);
    CHECK(again.suite_fired == un.suite_fired);
    auto ci = un.ci95();
    CHECK(ci.first <= un.rate());
    CHECK(ci.second >= un.rate());
}

TEST_CASE("tokens and pcs carry nothing from the enrollment certificate") {
    Challenger g(6);
    size_t a = g.create_vehicle(), b = g.create_vehicle();
    g.get_pc(a);
    g.get_tokens(b, 3);
    g.advance_window();
    g.get_pc(a);
    CHECK(structural_scan(g) == 0);
    CHECK(std::string(to_string(Branch::unlinkability)) == "unlinkability");
}

}
