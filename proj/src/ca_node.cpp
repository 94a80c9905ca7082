#include "tvss/ca_node.hpp"

#include <algorithm>
#include <filesystem>

#include <spdlog/spdlog.h>

#include "tvss/framing.hpp"

namespace tvss {

namespace {
namespace rec {
constexpr uint8_t enroll = 0x30;
constexpr uint8_t issue = 0x31;
constexpr uint8_t advance = 0x32;
constexpr uint8_t revoke = 0x33;
constexpr uint8_t rsu = 0x34;
constexpr uint8_t key = 0x35;
}  // namespace rec
}  // namespace

const char* to_string(CaError e) {
    switch (e) {
        case CaError::already_enrolled: return "already_enrolled";
        case CaError::unknown_ec: return "unknown_ec";
        case CaError::ec_revoked: return "ec_revoked";
        case CaError::overlap: return "overlap";
        case CaError::bad_proof: return "bad_proof";
        case CaError::bad_request: return "bad_request";
        case CaError::unknown_token: return "unknown_token";
    }
    return "?";
}

Bytes token_request_bytes(const EnrollmentCert& ec, const TokenRequest& req) {
    Writer w;
    w.u8(kind::TokenReq);
    put(w, ec);
    w.i64(req.st);
    w.i64(req.et);
    return w.take();
}

CaNode::CaNode(const SigningKeyPair& key, CaConfig cfg, std::unique_ptr<Entropy> rng, int64_t window_index)
    : key_(key), cfg_(std::move(cfg)), rng_(std::move(rng)), window_(window_index) {
    if (cfg_.t_minutes < 1) throw std::invalid_argument("T must be at least one minute");
    if (cfg_.lookback < 0) throw std::invalid_argument("negative look-back");
    if (window_ < 0) throw std::invalid_argument("negative window index");
    if (!cfg_.state_path.empty()) {
        std::error_code ec;
        if (std::filesystem::exists(cfg_.state_path, ec) && std::filesystem::file_size(cfg_.state_path, ec) > 0)
            throw std::invalid_argument("state file exists; use CaNode::open");
        log_.open(cfg_.state_path, std::ios::binary | std::ios::app);
        if (!log_) throw std::runtime_error("cannot open state file " + cfg_.state_path);
        Writer w;
        w.bytes(key_.seed);
        w.u64(uint64_t(cfg_.t_minutes));
        w.i64(window_);
        log(rec::key, w.take());
    }
}

std::unique_ptr<CaNode> CaNode::open(CaConfig cfg, std::unique_ptr<Entropy> rng, int64_t window_index) {
    std::error_code ec;
    if (cfg.state_path.empty() || !std::filesystem::exists(cfg.state_path, ec) ||
        std::filesystem::file_size(cfg.state_path, ec) == 0) {
        SigningKeyPair key = keygen(rng->next());
        return std::make_unique<CaNode>(key, std::move(cfg), std::move(rng), window_index);
    }
    std::ifstream in(cfg.state_path, std::ios::binary);
    Bytes all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(all);
    uint32_t len = r.u32();
    if (len < 1 || r.u8() != rec::key) throw CodecError("state file does not start with a key record");
    Seed seed = r.fixed<32>();
    int t = int(r.u64());
    int64_t w0 = r.i64();
    if (t != cfg.t_minutes) throw std::invalid_argument("state file was written with a different T");

    std::string path = cfg.state_path;
    cfg.state_path.clear();
    auto ca = std::make_unique<CaNode>(keygen(seed), cfg, std::move(rng), w0);
    ca->cfg_.state_path = path;
    ca->replay(path);
    ca->log_.open(path, std::ios::binary | std::ios::app);
    return ca;
}

void CaNode::replay(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    Bytes all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(all);
    replaying_ = true;
    bool first = true;
    size_t records = 0;
    while (!r.done()) {
        uint32_t len = r.u32();
        if (len < 1 || r.remaining() < len) {
            spdlog::warn("state log truncated after {} records; ignoring tail", records);
            break;
        }
        uint8_t k = r.u8();
        Reader b(r.rest().subspan(0, len - 1));
        r.skip(len - 1);
        if (first) {
            first = false;
            continue;  // key record, already applied
        }
        std::lock_guard lk(mu_);
        switch (k) {
            case rec::enroll: {
                VerificationKey vk = b.fixed<32>();
                ChainHeads h;
                h.x = b.fixed<32>();
                h.r = b.fixed<32>();
                h.index = b.i64();
                enroll_locked(vk, h);
                break;
            }
            case rec::issue: {
                VehicleId v = b.u64();
                int64_t f = b.i64(), l = b.i64();
                add_range_locked(v, f, l);
                break;
            }
            case rec::advance: advance_locked(b.i64()); break;
            case rec::revoke: {
                VehicleId v = b.u64();
                uint32_t n = b.u32();
                std::vector<PcrlEntry> pcs;
                for (uint32_t i = 0; i < n; ++i) pcs.push_back(get<PcrlEntry>(b));
                revoke_locked(v, pcs);
                break;
            }
            case rec::rsu: {
                RsuCert c = get<RsuCert>(b);
                rsus_[c.rsu_id] = c;
                break;
            }
            default: throw CodecError("unknown state record kind");
        }
        ++records;
    }
    replaying_ = false;
}

void CaNode::log(uint8_t k, const Bytes& body) {
    if (replaying_ || !log_.is_open()) return;
    Writer w;
    w.u32(static_cast<uint32_t>(body.size() + 1));
    w.u8(k);
    w.raw(body);
    const Bytes& b = w.data();
    log_.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
    log_.flush();
    if (!log_) throw std::runtime_error("state log write failed");
}

int64_t CaNode::window_index() const {
    std::lock_guard lk(mu_);
    return window_;
}

VehicleId CaNode::enroll_locked(const VerificationKey& vk_v, const ChainHeads& heads) {
    VehicleRecord rec;
    rec.ec = setup(vk_v, key_);
    rec.cursor = heads;
    VehicleId id = vehicles_.size();
    vehicles_.push_back(std::move(rec));
    by_vk_[vk_v] = id;
    return id;
}

Outcome<EnrollmentCert, CaError> CaNode::enroll(const VerificationKey& vk_v) {
    std::lock_guard lk(mu_);
    if (by_vk_.count(vk_v)) return CaError::already_enrolled;
    ChainHeads h;
    h.x = rng_->next();
    h.r = rng_->next();
    h.index = window_ - 1;
    VehicleId id = enroll_locked(vk_v, h);
    Writer lw;
    lw.bytes(vk_v);
    lw.bytes(h.x);
    lw.bytes(h.r);
    lw.i64(h.index);
    log(rec::enroll, lw.take());
    return vehicles_[id].ec;
}

void CaNode::add_range_locked(VehicleId v, int64_t first, int64_t last) {
    VehicleRecord& rec = vehicles_.at(v);
    auto& rs = rec.issued_ranges;
    rs.insert(std::upper_bound(rs.begin(), rs.end(), std::make_pair(first, last)), {first, last});
    if (first <= window_ && window_ <= last) current_[step(rec.cursor).x] = v;
}

Outcome<std::vector<Token>, CaError> CaNode::token_gen(const EnrollmentCert& ec, const TokenRequest& req,
                                                       const Signature& proof) {
    std::lock_guard lk(mu_);
    auto it = by_vk_.find(ec.vk);
    if (it == by_vk_.end() || !(vehicles_[it->second].ec == ec)) return CaError::unknown_ec;
    VehicleId v = it->second;
    VehicleRecord& rec = vehicles_[v];
    if (rec.revoked) return CaError::ec_revoked;
    if (!verify(ec.vk, token_request_bytes(ec, req), proof)) return CaError::bad_proof;

    const int64_t len = int64_t(cfg_.t_minutes) * 60;
    if (req.st < 0 || req.et <= req.st || req.st % len || req.et % len) return CaError::bad_request;
    const int64_t first = req.st / len, last = req.et / len - 1;
    if (first < window_) return CaError::bad_request;
    for (auto [f, l] : rec.issued_ranges)
        if (f <= last && first <= l) return CaError::overlap;

    ChainHeads tip = roll_to(rec.cursor, first - 1);
    auto [ids, end] = extend(tip, last - first + 1);
    std::vector<Token> out;
    out.reserve(ids.size());
    for (size_t j = 0; j < ids.size(); ++j) {
        Token t;
        t.content.id = ids[j];
        t.content.tw = window_at(first + int64_t(j), cfg_.t_minutes);
        t.sigma = sign(key_, encode(t.content));
        out.push_back(t);
    }
    add_range_locked(v, first, last);
    Writer w;
    w.u64(v);
    w.i64(first);
    w.i64(last);
    log(rec::issue, w.take());
    return out;
}

std::vector<PcrlSnapshot> CaNode::advance_locked(int64_t new_index) {
    if (new_index != window_ + 1) throw std::invalid_argument("window index must advance by exactly one");
    lookback_.push_front(std::move(current_));
    while (lookback_.size() > size_t(cfg_.lookback)) lookback_.pop_back();
    current_.clear();
    window_ = new_index;
    for (VehicleId v = 0; v < vehicles_.size(); ++v) {
        VehicleRecord& rec = vehicles_[v];
        if (rec.revoked) continue;
        rec.cursor = step(rec.cursor);
        for (auto [f, l] : rec.issued_ranges)
            if (f <= window_ && window_ <= l) {
                current_[step(rec.cursor).x] = v;
                break;
            }
    }
    const int64_t start = window_at(window_, cfg_.t_minutes).start_s;
    for (auto& [region, entries] : pcrl_)
        std::erase_if(entries, [&](const auto& kv) { return kv.second <= start; });

    std::set<RegionId> regions;
    for (auto& [id, c] : rsus_) regions.insert(c.region);
    for (auto& [region, e] : pcrl_) regions.insert(region);
    std::vector<PcrlSnapshot> out;
    if (!replaying_)
        for (const auto& r : regions) out.push_back(snapshot_locked(r));
    return out;
}

std::vector<PcrlSnapshot> CaNode::advance_window(int64_t new_index) {
    std::lock_guard lk(mu_);
    auto out = advance_locked(new_index);
    Writer w;
    w.i64(new_index);
    log(rec::advance, w.take());
    return out;
}

std::optional<VehicleId> CaNode::lookup(const Digest& id) const {
    std::lock_guard lk(mu_);
    if (auto it = current_.find(id); it != current_.end()) return it->second;
    for (const auto& m : lookback_)
        if (auto it = m.find(id); it != m.end()) return it->second;
    return std::nullopt;
}

RevokeResult CaNode::revoke_locked(VehicleId v, const std::vector<PcrlEntry>& pcs) {
    VehicleRecord& rec = vehicles_.at(v);
    if (!rec.revoked) {
        int64_t last = window_;
        for (auto [f, l] : rec.issued_ranges) last = std::max(last, l);
        RevokeNotice n;
        n.pair = reveal_for(rec.cursor, window_, last);
        n.sigma = sign(key_, signing_bytes(n));
        rec.notice = n;
        rec.revoked = true;
        blacklist_.insert(ec_hash(rec.ec));
    }
    const int64_t start = window_at(window_, cfg_.t_minutes).start_s;
    std::set<RegionId> touched;
    for (const auto& e : pcs) {
        if (e.expires_s <= start) continue;
        pcrl_[e.region][e.pc_body_hash] = e.expires_s;
        touched.insert(e.region);
    }
    RevokeResult out;
    out.vehicle = v;
    out.notice = *rec.notice;
    for (const auto& r : touched) out.snapshots.push_back(snapshot_locked(r));
    return out;
}

Outcome<RevokeResult, CaError> CaNode::revoke_by_token(const Digest& id, const std::vector<PcrlEntry>& pcs) {
    auto v = lookup(id);
    if (!v) return CaError::unknown_token;
    std::lock_guard lk(mu_);
    RevokeResult out = revoke_locked(*v, pcs);
    Writer w;
    w.u64(*v);
    w.u32(static_cast<uint32_t>(pcs.size()));
    for (const auto& e : pcs) put(w, e);
    log(rec::revoke, w.take());
    return out;
}

RsuCert CaNode::certify_rsu(uint64_t rsu_id, const VerificationKey& vk, const RegionId& region) {
    std::lock_guard lk(mu_);
    RsuCert c = tvss::certify_rsu(rsu_id, vk, region, key_);
    rsus_[rsu_id] = c;
    log(rec::rsu, encode(c));
    return c;
}

PcrlSnapshot CaNode::snapshot_locked(const RegionId& region) const {
    PcrlSnapshot s;
    s.region = region;
    s.window_index = window_;
    if (auto it = pcrl_.find(region); it != pcrl_.end())
        for (const auto& [h, exp] : it->second) s.entries.push_back(h);
    s.sigma = sign(key_, signing_bytes(s));
    return s;
}

PcrlSnapshot CaNode::pcrl_snapshot(const RegionId& region) const {
    std::lock_guard lk(mu_);
    return snapshot_locked(region);
}

size_t CaNode::vehicle_count() const {
    std::lock_guard lk(mu_);
    return vehicles_.size();
}

VehicleRecord CaNode::record(VehicleId v) const {
    std::lock_guard lk(mu_);
    return vehicles_.at(v);
}

bool CaNode::blacklisted(const EnrollmentCert& ec) const {
    std::lock_guard lk(mu_);
    return blacklist_.count(ec_hash(ec)) > 0;
}

size_t CaNode::current_index_size() const {
    std::lock_guard lk(mu_);
    return current_.size();
}

std::map<Digest, VehicleId> CaNode::current_index() const {
    std::lock_guard lk(mu_);
    return {current_.begin(), current_.end()};
}

}  // namespace tvss
