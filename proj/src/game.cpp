#include "tvss/game.hpp"

#include <cmath>
#include <cstring>
#include <string_view>
#include <unordered_set>

namespace tvss {

namespace {
constexpr int64_t kStartWindow = 1000;
constexpr int64_t kBatch = 8;
constexpr uint64_t kRsuId = 1;

uint64_t mix(uint64_t seed, uint64_t salt) {
    uint8_t buf[16];
    for (int i = 0; i < 8; ++i) {
        buf[i] = uint8_t(seed >> (56 - 8 * i));
        buf[8 + i] = uint8_t(salt >> (56 - 8 * i));
    }
    Digest d = hash(ByteView(buf, 16));
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | d[i];
    return v;
}
}  // namespace

const char* to_string(Branch b) {
    switch (b) {
        case Branch::forgery: return "forgery";
        case Branch::anonymity: return "anonymity";
        case Branch::unlinkability: return "unlinkability";
    }
    return "?";
}

Challenger::Challenger(uint64_t seed, int t_minutes)
    : coin_(mix(seed, 1)), entropy_(mix(seed, 2)), t_minutes_(t_minutes) {
    CaConfig cfg;
    cfg.t_minutes = t_minutes;
    SigningKeyPair ca_key = keygen(entropy_.next());
    ca_ = std::make_unique<CaNode>(ca_key, cfg, std::make_unique<SeededEntropy>(entropy_.next()), kStartWindow);
    SigningKeyPair rsu_key = keygen(entropy_.next());
    RsuCert cert = ca_->certify_rsu(kRsuId, rsu_key.vk, region_from_u64(1));
    RsuConfig rc;
    rc.t_minutes = t_minutes;
    rc.skew_s = 0;
    rsu_ = std::make_unique<RsuNode>(RsuSigner{cert, rsu_key}, ca_->vk(), rc, kStartWindow);
    now_s_ = window_at(kStartWindow, t_minutes).start_s + 1;
    view_.vk_ca = ca_->vk();
}

void Challenger::require_queries(const char* what) {
    if (phase_ != Phase::queries) throw GameAborted(std::string(what) + " after the challenge phase began");
}

void Challenger::require_live(size_t v, const char* what) {
    if (v >= identities_.size()) throw GameAborted(std::string(what) + ": no such vehicle");
}

void Challenger::ensure_tokens(size_t v) {
    const int64_t w = ca_->window_index();
    if (tokens_[v].count(w)) return;
    TokenRequest req;
    req.st = window_at(w, t_minutes_).start_s;
    req.et = window_at(w + kBatch, t_minutes_).start_s;
    const EnrollmentCert& ec = view_.ecs[v];
    auto out = ca_->token_gen(ec, req, sign(identities_[v], token_request_bytes(ec, req)));
    if (!out) throw std::logic_error(std::string("challenger token_gen failed: ") + to_string(out.error()));
    for (const auto& t : out.value()) {
        tokens_[v][t.content.tw.index] = t;
        transcript_.push_back({"TokenGen", int64_t(v), encode(t)});
    }
}

size_t Challenger::create_vehicle() {
    require_queries("CreateVehicle");
    SigningKeyPair id = keygen(entropy_.next());
    auto ec = ca_->enroll(id.vk);
    if (!ec) throw std::logic_error("challenger enrollment failed");
    size_t v = identities_.size();
    identities_.push_back(id);
    tokens_.emplace_back();
    redeemed_window_.push_back(-1);
    exposed_.emplace_back();
    held_.emplace_back();
    corrupt_.push_back(false);
    view_.ecs.push_back(ec.value());
    view_.tokens.emplace_back();
    view_.pcs.emplace_back();
    transcript_.push_back({"CreateVehicle", int64_t(v), encode(ec.value())});
    return v;
}

std::vector<Token> Challenger::get_tokens(size_t v, int64_t count) {
    require_queries("GetTokens");
    require_live(v, "GetTokens");
    ensure_tokens(v);
    std::vector<Token> out;
    const int64_t w = ca_->window_index();
    for (int64_t i = w; i < w + count; ++i) {
        auto it = tokens_[v].find(i);
        if (it == tokens_[v].end()) break;
        exposed_[v].insert(i);
        out.push_back(it->second);
        view_.tokens[v].push_back(it->second);
    }
    transcript_.push_back({"GetTokens", int64_t(v), {}});
    return out;
}

Challenger::Held Challenger::redeem(size_t v) {
    const int64_t w = ca_->window_index();
    if (redeemed_window_[v] == w) throw GameAborted("vehicle already holds a PC for this window");
    ensure_tokens(v);
    SigningKeyPair keys = keygen(entropy_.next());
    auto out = rsu_->pseudo_gen(tokens_[v].at(w), keys.vk, now_s_);
    if (!out) throw std::logic_error(std::string("challenger PseudoGen failed: ") + to_string(out.error()));
    redeemed_window_[v] = w;
    transcript_.push_back({"PseudoGen", int64_t(v), encode(out.value())});
    return Held{out.value(), keys, false};
}

PseudonymCert Challenger::get_pc(size_t v) {
    require_queries("GetPC");
    require_live(v, "GetPC");
    Held h = redeem(v);
    held_[v].push_back(h);
    view_.pcs[v].push_back(h.pc);
    return h.pc;
}

void Challenger::expose_pc_key(size_t v) {
    require_queries("Expose");
    require_live(v, "Expose");
    if (held_[v].empty()) throw GameAborted("Expose: vehicle holds no PC");
    held_[v].back().exposed = true;
    view_.exposed_pc_keys.push_back(held_[v].back().keys);
    transcript_.push_back({"Expose", int64_t(v), {}});
}

void Challenger::corrupt(size_t v) {
    require_queries("Corrupt");
    require_live(v, "Corrupt");
    corrupt_[v] = true;
    view_.corrupt.push_back(v);
    for (auto& [w, t] : tokens_[v]) {
        exposed_[v].insert(w);
        view_.tokens[v].push_back(t);
    }
    for (auto& h : held_[v]) {
        h.exposed = true;
        view_.exposed_pc_keys.push_back(h.keys);
    }
    transcript_.push_back({"Corrupt", int64_t(v), {}});
}

void Challenger::advance_window() {
    const int64_t next = ca_->window_index() + 1;
    ca_->advance_window(next);
    rsu_->advance_window(next);
    now_s_ = window_at(next, t_minutes_).start_s + 1;
}

PseudonymCert Challenger::challenge_anonymity(size_t v0, size_t v1) {
    require_queries("challenge");
    require_live(v0, "challenge");
    require_live(v1, "challenge");
    if (v0 == v1) throw GameAborted("challenge vehicles must differ");
    if (corrupt_[v0] || corrupt_[v1]) throw GameAborted("corrupt vehicles are excluded from challenges");
    const int64_t w = ca_->window_index();
    if (exposed_[v0].count(w) || exposed_[v1].count(w)) throw GameAborted("challenge token already exposed");
    phase_ = Phase::challenge;
    branch_ = Branch::anonymity;
    b_ = int(coin_() & 1);
    return redeem(b_ ? v1 : v0).pc;
}

std::array<PseudonymCert, 3> Challenger::challenge_unlinkability(size_t v0, size_t v1) {
    require_queries("challenge");
    require_live(v0, "challenge");
    require_live(v1, "challenge");
    if (v0 == v1) throw GameAborted("challenge vehicles must differ");
    if (corrupt_[v0] || corrupt_[v1]) throw GameAborted("corrupt vehicles are excluded from challenges");
    const int64_t w = ca_->window_index();
    for (int64_t i : {w, w + 1})
        if (exposed_[v0].count(i) || exposed_[v1].count(i)) throw GameAborted("challenge token already exposed");
    phase_ = Phase::challenge;
    branch_ = Branch::unlinkability;
    std::array<PseudonymCert, 3> out;
    out[0] = redeem(v0).pc;
    out[1] = redeem(v1).pc;
    advance_window();
    b_ = int(coin_() & 1);
    out[2] = redeem(b_ ? v1 : v0).pc;
    return out;
}

PseudonymCert Challenger::challenge_forgery(size_t v) {
    require_queries("challenge");
    require_live(v, "challenge");
    phase_ = Phase::challenge;
    branch_ = Branch::forgery;
    forgery_target_ = redeem(v);
    return forgery_target_->pc;
}

bool Challenger::finish_bit(int guess) {
    if (phase_ != Phase::challenge || branch_ == Branch::forgery) throw GameAborted("no bit challenge pending");
    phase_ = Phase::finished;
    if (guess != 0 && guess != 1) return false;
    return guess == b_;
}

bool Challenger::finish_forgery(const Bytes& msg, const Signature& sigma, const PseudonymCert& pc) {
    if (phase_ != Phase::challenge || branch_ != Branch::forgery) throw GameAborted("no forgery challenge pending");
    phase_ = Phase::finished;
    if (!forgery_target_ || !(pc == forgery_target_->pc) || forgery_target_->exposed) return false;
    SignedMessage m{msg, sigma, pc};
    return verify_v2v(m, now_s_, pc.body.region, ca_->vk(), {}) == V2vResult::accept;
}

// --- distinguisher suite ---

namespace {

using Window16 = std::string;

void add_windows(std::unordered_set<Window16>& out, ByteView b) {
    for (size_t i = 0; i + 16 <= b.size(); ++i) out.emplace(reinterpret_cast<const char*>(b.data() + i), 16);
}

// Material derived from a set of artifacts: their bytes, every 32-byte
// field, and hashes of those fields to depth 2.
struct Material {
    std::unordered_set<Window16> windows;
    std::vector<Digest> fields;
};

Material material_of(const std::vector<Bytes>& artifacts, const std::vector<Digest>& named_fields) {
    Material m;
    for (const auto& a : artifacts) add_windows(m.windows, a);
    for (const auto& f : named_fields) {
        Digest h1 = hash(f), h2 = hash(h1);
        m.fields.push_back(f);
        add_windows(m.windows, f);
        add_windows(m.windows, h1);
        add_windows(m.windows, h2);
    }
    return m;
}

std::vector<Digest> named_fields(const PseudonymCert& pc) {
    Digest s0, s1;
    std::memcpy(s0.data(), pc.sigma_rsu.data(), 32);
    std::memcpy(s1.data(), pc.sigma_rsu.data() + 32, 32);
    return {pc.body.vk, s0, s1, pc_body_hash(pc.body)};
}

std::vector<Digest> named_fields(const EnrollmentCert& ec) {
    Digest s0, s1;
    std::memcpy(s0.data(), ec.sigma.data(), 32);
    std::memcpy(s1.data(), ec.sigma.data() + 32, 32);
    return {ec.vk, s0, s1, ec_hash(ec)};
}

// Signal present for the target against m but not against `other`.
bool exclusive_signal(const Bytes& target, const std::vector<Digest>& target_fields, const Material& m,
                      const Material& other) {
    for (size_t i = 0; i + 16 <= target.size(); ++i) {
        Window16 w(reinterpret_cast<const char*>(target.data() + i), 16);
        if (m.windows.count(w) && !other.windows.count(w)) return true;
    }
    for (const auto& a : m.fields)
        for (const auto& t : target_fields)
            if (a == t || linkable(a, t) || linkable(t, a)) {
                bool shared = false;
                for (const auto& o : other.fields)
                    if (o == a) shared = true;
                if (!shared) return true;
            }
    return false;
}

int decide(bool s0, bool s1) {
    if (s0 && !s1) return 0;
    if (s1 && !s0) return 1;
    return -1;
}

}  // namespace

int distinguish_anonymity(const AdversaryView& view, size_t v0, size_t v1, const PseudonymCert& pc) {
    auto build = [&](size_t v) {
        std::vector<Bytes> arts{encode(view.ecs[v])};
        std::vector<Digest> fields = named_fields(view.ecs[v]);
        for (const auto& t : view.tokens[v]) {
            arts.push_back(encode(t));
            fields.push_back(t.content.id);
        }
        for (const auto& p : view.pcs[v]) {
            arts.push_back(encode(p));
            for (const auto& f : named_fields(p)) fields.push_back(f);
        }
        return material_of(arts, fields);
    };
    Material m0 = build(v0), m1 = build(v1);
    Bytes target = encode(pc);
    auto tf = named_fields(pc);
    return decide(exclusive_signal(target, tf, m0, m1), exclusive_signal(target, tf, m1, m0));
}

int distinguish_unlinkability(const std::array<PseudonymCert, 3>& pcs) {
    Material m0 = material_of({encode(pcs[0])}, named_fields(pcs[0]));
    Material m1 = material_of({encode(pcs[1])}, named_fields(pcs[1]));
    Bytes target = encode(pcs[2]);
    auto tf = named_fields(pcs[2]);
    return decide(exclusive_signal(target, tf, m0, m1), exclusive_signal(target, tf, m1, m0));
}

size_t structural_scan(const Challenger& g) {
    std::vector<Bytes> needles;
    for (const auto& ec : g.view().ecs) {
        std::vector<Bytes> fields{Bytes(ec.vk.begin(), ec.vk.end()), Bytes(ec.sigma.begin(), ec.sigma.end()),
                                  Bytes(ec.sigma.begin(), ec.sigma.begin() + 32),
                                  Bytes(ec.sigma.begin() + 32, ec.sigma.end()), encode(ec)};
        for (const auto& f : fields) {
            Digest h1 = hash(f), h2 = hash(h1);
            needles.push_back(f);
            needles.emplace_back(h1.begin(), h1.end());
            needles.emplace_back(h2.begin(), h2.end());
        }
    }
    size_t hits = 0;
    for (const auto& e : g.transcript()) {
        if (e.artifact.empty() || e.query == "CreateVehicle") continue;
        std::string_view hay(reinterpret_cast<const char*>(e.artifact.data()), e.artifact.size());
        for (const auto& n : needles)
            if (hay.find(std::string_view(reinterpret_cast<const char*>(n.data()), n.size())) != hay.npos) ++hits;
    }
    return hits;
}

std::pair<double, double> GameSummary::ci95() const {
    if (!trials) return {0, 1};
    double p = rate(), half = 1.96 * std::sqrt(p * (1 - p) / double(trials));
    return {p - half, p + half};
}

GameSummary run_game(Branch branch, uint64_t trials, uint64_t seed) {
    GameSummary s;
    s.branch = branch;
    std::mt19937_64 adversary(mix(seed, 0xad));
    for (uint64_t t = 0; t < trials; ++t) {
        Challenger g(mix(seed, t + 16));
        bool win = false;
        size_t v0 = g.create_vehicle(), v1 = g.create_vehicle();
        if (branch == Branch::forgery) {
            PseudonymCert pc = g.challenge_forgery(v0);
            Bytes msg(32);
            for (auto& c : msg) c = uint8_t(adversary());
            Signature sig{};
            if (t % 2 == 0) {
                for (auto& c : sig) c = uint8_t(adversary());
            } else {
                Seed seed_bytes{};
                for (auto& c : seed_bytes) c = uint8_t(adversary());
                sig = sign(keygen(seed_bytes), v2v_signing_bytes(msg));
            }
            win = g.finish_forgery(msg, sig, pc);
        } else {
            // Background queries give the suite something to look for.
            size_t v2 = g.create_vehicle();
            g.get_pc(v0);
            g.get_pc(v1);
            g.get_pc(v2);
            g.expose_pc_key(v0);
            g.get_tokens(v2, 2);
            g.corrupt(v2);
            g.advance_window();
            int guess;
            if (branch == Branch::anonymity) {
                PseudonymCert pc = g.challenge_anonymity(v0, v1);
                guess = distinguish_anonymity(g.view(), v0, v1, pc);
            } else {
                guess = distinguish_unlinkability(g.challenge_unlinkability(v0, v1));
            }
            if (guess >= 0) ++s.suite_fired;
            else guess = int(adversary() & 1);
            win = g.finish_bit(guess);
        }
        s.structural_violations += structural_scan(g);
        ++s.trials;
        if (win) ++s.wins;
    }
    return s;
}

}  // namespace tvss
