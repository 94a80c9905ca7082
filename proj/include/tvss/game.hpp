#pragma once

#include <memory>
#include <random>
#include <set>
#include <string>

#include "tvss/ca_node.hpp"
#include "tvss/rsu_node.hpp"

namespace tvss {

struct GameAborted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Phase : uint8_t { queries, challenge, finished };
enum class Branch : uint8_t { forgery, anonymity, unlinkability };
const char* to_string(Branch b);

// What the adversary sees. Everything here is public or explicitly handed over.
struct AdversaryView {
    VerificationKey vk_ca{};
    std::vector<EnrollmentCert> ecs;               // per vehicle
    std::vector<std::vector<Token>> tokens;        // exposed tokens per vehicle
    std::vector<std::vector<PseudonymCert>> pcs;   // PCs handed out per vehicle
    std::vector<SigningKeyPair> exposed_pc_keys;
    std::vector<size_t> corrupt;
};

struct TranscriptEntry {
    std::string query;
    int64_t vehicle = -1;
    Bytes artifact;  // canonical encoding of what was produced
};

// Challenger over the real CA and RSU code. One instance is one game.
class Challenger {
public:
    Challenger(uint64_t seed, int t_minutes = kDefaultTMinutes);

    size_t create_vehicle();
    std::vector<Token> get_tokens(size_t v, int64_t count);
    PseudonymCert get_pc(size_t v);
    void expose_pc_key(size_t v);  // hands over the key of v's latest PC
    void corrupt(size_t v);
    void advance_window();

    PseudonymCert challenge_anonymity(size_t v0, size_t v1);
    // Returns PC_00, PC_10 from the current window and PC_b1 from the next.
    std::array<PseudonymCert, 3> challenge_unlinkability(size_t v0, size_t v1);
    PseudonymCert challenge_forgery(size_t v);
    bool finish_bit(int guess);
    bool finish_forgery(const Bytes& msg, const Signature& sigma, const PseudonymCert& pc);

    const AdversaryView& view() const { return view_; }
    const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
    Phase phase() const { return phase_; }
    int hidden_bit() const { return b_; }  // tests only

private:
    void require_queries(const char* what);
    void require_live(size_t v, const char* what);
    struct Held {
        PseudonymCert pc;
        SigningKeyPair keys;
        bool exposed = false;
    };
    Held redeem(size_t v);
    void ensure_tokens(size_t v);

    std::mt19937_64 coin_;
    SeededEntropy entropy_;
    int t_minutes_;
    std::unique_ptr<CaNode> ca_;
    std::unique_ptr<RsuNode> rsu_;
    int64_t now_s_ = 0;
    std::vector<SigningKeyPair> identities_;
    std::vector<std::map<int64_t, Token>> tokens_;
    std::vector<int64_t> redeemed_window_;
    std::vector<std::set<int64_t>> exposed_;  // token windows handed to the adversary
    std::vector<std::vector<Held>> held_;
    std::vector<bool> corrupt_;
    AdversaryView view_;
    std::vector<TranscriptEntry> transcript_;
    Phase phase_ = Phase::queries;
    Branch branch_ = Branch::anonymity;
    int b_ = 0;
    std::optional<Held> forgery_target_;
};

// Fixed distinguisher suite. Returns a guess in {0,1}, or -1 when no test fires.
int distinguish_anonymity(const AdversaryView& view, size_t v0, size_t v1, const PseudonymCert& pc);
int distinguish_unlinkability(const std::array<PseudonymCert, 3>& pcs);

// Number of EC-derived byte patterns found in any token or PC of the transcript.
size_t structural_scan(const Challenger& g);

struct GameSummary {
    Branch branch = Branch::anonymity;
    uint64_t trials = 0;
    uint64_t wins = 0;
    uint64_t suite_fired = 0;  // games where a distinguisher test produced a signal
    uint64_t structural_violations = 0;
    double rate() const { return trials ? double(wins) / double(trials) : 0.0; }
    std::pair<double, double> ci95() const;
};

GameSummary run_game(Branch branch, uint64_t trials, uint64_t seed);

}  // namespace tvss
