#include "tvss/services.hpp"

#include <chrono>

#include <spdlog/spdlog.h>

namespace tvss {

namespace {

Frame request(uint8_t k, Bytes body) { return Frame{k, std::move(body)}; }

// Checks the response kind and splits off the status byte.
uint8_t open_response(const Frame& f, uint8_t expect, Reader& body) {
    if (f.kind == kind::Error) throw TransportError("peer reported a malformed request");
    if (f.kind != expect || f.body.empty()) throw CodecError("unexpected response kind");
    return body.u8();
}

void put_snapshots(Writer& w, const std::vector<PcrlSnapshot>& snaps) {
    w.u32(static_cast<uint32_t>(snaps.size()));
    for (const auto& s : snaps) put(w, s);
}

std::vector<PcrlSnapshot> get_snapshots(Reader& r) {
    uint32_t n = r.u32();
    std::vector<PcrlSnapshot> out;
    for (uint32_t i = 0; i < n; ++i) out.push_back(get<PcrlSnapshot>(r));
    return out;
}

}  // namespace

Clock wall_clock() {
    return [] {
        return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

// --- clients ---

Outcome<EnrollmentCert, CaError> CaClient::enroll(const VerificationKey& vk) {
    Writer w;
    w.bytes(vk);
    Frame f = link_.call(request(kind::EnrollReq, w.take()));
    Reader r(f.body);
    if (uint8_t st = open_response(f, kind::EnrollResp, r)) return CaError(st);
    EnrollmentCert ec = get<EnrollmentCert>(r);
    r.finish();
    return ec;
}

Outcome<std::vector<Token>, CaError> CaClient::token_gen(const EnrollmentCert& ec, const TokenRequest& req,
                                                         const Signature& proof) {
    Writer w;
    put(w, ec);
    w.i64(req.st);
    w.i64(req.et);
    w.bytes(proof);
    Frame f = link_.call(request(kind::TokenReq, w.take()));
    Reader r(f.body);
    if (uint8_t st = open_response(f, kind::TokenResp, r)) return CaError(st);
    uint32_t n = r.u32();
    std::vector<Token> out;
    out.reserve(n);
    for (uint32_t i = 0; i < n; ++i) out.push_back(get<Token>(r));
    r.finish();
    return out;
}

Outcome<RevokeResult, CaError> CaClient::revoke(const Digest& token_id, const std::vector<PcrlEntry>& pcs) {
    Writer w;
    w.bytes(token_id);
    w.u32(static_cast<uint32_t>(pcs.size()));
    for (const auto& e : pcs) put(w, e);
    Frame f = link_.call(request(kind::RevokeCmd, w.take()));
    Reader r(f.body);
    if (uint8_t st = open_response(f, kind::RevokeResp, r)) return CaError(st);
    RevokeResult res;
    res.vehicle = r.u64();
    res.notice = get<RevokeNotice>(r);
    res.snapshots = get_snapshots(r);
    r.finish();
    return res;
}

std::vector<PcrlSnapshot> CaClient::advance(int64_t new_index) {
    Writer w;
    w.i64(new_index);
    Frame f = link_.call(request(kind::WindowAdvance, w.take()));
    Reader r(f.body);
    if (open_response(f, kind::WindowAdvance, r)) throw std::runtime_error("CA rejected window advance");
    auto out = get_snapshots(r);
    r.finish();
    return out;
}

RsuCert CaClient::certify_rsu(uint64_t rsu_id, const VerificationKey& vk, const RegionId& region) {
    Writer w;
    w.u64(rsu_id);
    w.bytes(vk);
    w.bytes(region);
    Frame f = link_.call(request(kind::RsuCertReq, w.take()));
    Reader r(f.body);
    if (open_response(f, kind::RsuCertResp, r)) throw std::runtime_error("CA refused RSU certification");
    RsuCert c = get<RsuCert>(r);
    r.finish();
    return c;
}

Outcome<PseudonymCert, IssueError> RsuClient::pseudo(const Token& tau, const VerificationKey& vk) {
    Writer w;
    put(w, tau);
    w.bytes(vk);
    Frame f = link_.call(request(kind::PseudoReq, w.take()));
    Reader r(f.body);
    if (uint8_t st = open_response(f, kind::PseudoResp, r)) return IssueError(st);
    PseudonymCert pc = get<PseudonymCert>(r);
    r.finish();
    return pc;
}

PcrlSnapshot RsuClient::pcrl() {
    Frame f = link_.call(request(kind::PcrlGet, {}));
    Reader r(f.body);
    if (open_response(f, kind::PcrlResp, r)) throw std::runtime_error("RSU refused PCRL request");
    PcrlSnapshot s = get<PcrlSnapshot>(r);
    r.finish();
    return s;
}

bool RsuClient::push_notice(const RevokeNotice& n) {
    Frame f = link_.call(request(kind::RevokeNotice, encode(n)));
    Reader r(f.body);
    return open_response(f, kind::RevokeNotice, r) == status::ok;
}

bool RsuClient::push_pcrl(const PcrlSnapshot& s) {
    Frame f = link_.call(request(kind::RevokeNotice, encode(s)));
    Reader r(f.body);
    return open_response(f, kind::RevokeNotice, r) == status::ok;
}

void RsuClient::tick(int64_t new_index) {
    Writer w;
    w.i64(new_index);
    Frame f = link_.call(request(kind::WindowTick, w.take()));
    Reader r(f.body);
    if (open_response(f, kind::WindowTick, r)) throw std::runtime_error("RSU rejected window tick");
}

void BackendClient::report(const TokenReport& rep) {
    Frame f = link_.call(request(kind::TokenReport, encode(rep)));
    Reader r(f.body);
    open_response(f, kind::TokenReport, r);
}

// --- services ---

void CaService::catch_up() {
    if (!clock_) return;
    const int64_t target = window_of(clock_(), ca_.t_minutes()).index;
    while (ca_.window_index() < target) ca_.advance_window(ca_.window_index() + 1);
}

Frame CaService::handle(const Frame& req) {
    try {
        catch_up();
        Reader r(req.body);
        switch (req.kind) {
            case kind::EnrollReq: {
                VerificationKey vk = r.fixed<32>();
                r.finish();
                auto out = ca_.enroll(vk);
                if (!out) return response(kind::EnrollResp, uint8_t(out.error()));
                return response(kind::EnrollResp, status::ok, encode(out.value()));
            }
            case kind::TokenReq: {
                EnrollmentCert ec = get<EnrollmentCert>(r);
                TokenRequest tr;
                tr.st = r.i64();
                tr.et = r.i64();
                Signature proof = r.fixed<64>();
                r.finish();
                auto out = ca_.token_gen(ec, tr, proof);
                if (!out) return response(kind::TokenResp, uint8_t(out.error()));
                Writer w;
                w.u32(static_cast<uint32_t>(out.value().size()));
                for (const auto& t : out.value()) put(w, t);
                return response(kind::TokenResp, status::ok, w.data());
            }
            case kind::RevokeCmd: {
                Digest id = r.fixed<32>();
                uint32_t n = r.u32();
                std::vector<PcrlEntry> pcs;
                for (uint32_t i = 0; i < n; ++i) pcs.push_back(get<PcrlEntry>(r));
                r.finish();
                auto out = ca_.revoke_by_token(id, pcs);
                if (!out) return response(kind::RevokeResp, uint8_t(out.error()));
                Writer w;
                w.u64(out.value().vehicle);
                put(w, out.value().notice);
                put_snapshots(w, out.value().snapshots);
                return response(kind::RevokeResp, status::ok, w.data());
            }
            case kind::WindowAdvance: {
                int64_t idx = r.i64();
                r.finish();
                Writer w;
                if (idx <= ca_.window_index()) {
                    put_snapshots(w, {});  // already there; idempotent for retried ticks
                } else {
                    std::vector<PcrlSnapshot> last;
                    while (ca_.window_index() < idx) last = ca_.advance_window(ca_.window_index() + 1);
                    put_snapshots(w, last);
                }
                return response(kind::WindowAdvance, status::ok, w.data());
            }
            case kind::RsuCertReq: {
                uint64_t id = r.u64();
                VerificationKey vk = r.fixed<32>();
                RegionId region = r.fixed<8>();
                r.finish();
                return response(kind::RsuCertResp, status::ok, encode(ca_.certify_rsu(id, vk, region)));
            }
            default: return response(kind::Error, status::unsupported);
        }
    } catch (const CodecError& e) {
        spdlog::debug("CA: malformed request: {}", e.what());
        return response(kind::Error, status::malformed);
    }
}

Frame RsuService::handle(const Frame& req) {
    try {
        const int64_t now = clock_();
        rsu_.catch_up(now);
        Reader r(req.body);
        switch (req.kind) {
            case kind::PseudoReq: {
                Token tau = get<Token>(r);
                VerificationKey vk = r.fixed<32>();
                r.finish();
                auto out = rsu_.pseudo_gen(tau, vk, now);
                if (backend_ && flush_on_issue_) flush_reports();
                if (!out) return response(kind::PseudoResp, uint8_t(out.error()));
                return response(kind::PseudoResp, status::ok, encode(out.value()));
            }
            case kind::PcrlGet:
                r.finish();
                return response(kind::PcrlResp, status::ok, encode(rsu_.serve_pcrl()));
            case kind::RevokeNotice: {
                bool ok;
                if (r.peek() == tag::RevokeNotice)
                    ok = rsu_.apply_revoke_notice(decode<RevokeNotice>(req.body));
                else
                    ok = rsu_.apply_pcrl(decode<PcrlSnapshot>(req.body));
                return response(kind::RevokeNotice, ok ? status::ok : 1);
            }
            case kind::WindowTick: {
                int64_t idx = r.i64();
                r.finish();
                while (rsu_.window_index() < idx) rsu_.advance_window(rsu_.window_index() + 1);
                return response(kind::WindowTick, status::ok);
            }
            default: return response(kind::Error, status::unsupported);
        }
    } catch (const CodecError& e) {
        spdlog::debug("RSU: malformed request: {}", e.what());
        return response(kind::Error, status::malformed);
    }
}

size_t RsuService::flush_reports() {
    std::lock_guard lk(mu_);
    for (auto& rep : rsu_.drain_reports()) unsent_.push_back(rep);
    if (!backend_) return 0;
    BackendClient bc(*backend_);
    size_t sent = 0;
    while (sent < unsent_.size()) {
        try {
            bc.report(unsent_[sent]);
        } catch (const std::exception& e) {
            spdlog::debug("report upload failed: {}", e.what());
            break;
        }
        ++sent;
    }
    unsent_.erase(unsent_.begin(), unsent_.begin() + long(sent));
    return sent;
}

size_t RsuService::unsent() const {
    std::lock_guard lk(mu_);
    return unsent_.size();
}

Frame BackendService::handle(const Frame& req) {
    if (req.kind != kind::TokenReport) return response(kind::Error, status::unsupported);
    std::lock_guard lk(mu_);
    IngestResult res = monitor_.ingest_bytes(req.body);
    if (res.status == IngestStatus::dropped) return response(kind::TokenReport, status::malformed);
    if (res.clone) {
        spdlog::info("clone detected for token {} across {} regions", to_hex(res.clone->token_id).substr(0, 16),
                     res.clone->regions.size());
        dispatcher_.on_clone(*res.clone);
    }
    return response(kind::TokenReport, status::ok);
}

}  // namespace tvss
