#include "tvss/vehicle.hpp"

namespace tvss {

VehicleAgent::VehicleAgent(const SigningKeyPair& identity, const VerificationKey& vk_ca, Clock clock, Entropy& rng,
                           int t_minutes)
    : identity_(identity), vk_ca_(vk_ca), clock_(std::move(clock)), rng_(rng), t_minutes_(t_minutes) {
    if (!clock_) throw std::invalid_argument("agent needs a clock");
}

int64_t VehicleAgent::current_window() const { return window_of(clock_(), t_minutes_).index; }

Outcome<EnrollmentCert, CaError> VehicleAgent::enroll(CaClient& ca) {
    auto out = ca.enroll(identity_.vk);
    if (out) ec_ = out.value();
    return out;
}

Outcome<size_t, CaError> VehicleAgent::request_tokens(CaClient& ca, int64_t first_window, int64_t count) {
    if (!ec_) throw std::logic_error("agent is not enrolled");
    if (count < 1) throw std::invalid_argument("token count must be positive");
    TokenRequest req;
    req.st = window_at(first_window, t_minutes_).start_s;
    req.et = window_at(first_window + count, t_minutes_).start_s;
    Signature proof = sign(identity_, token_request_bytes(*ec_, req));
    auto out = ca.token_gen(*ec_, req, proof);
    if (!out) return out.error();
    add_tokens(out.value());
    return out.value().size();
}

void VehicleAgent::add_tokens(const std::vector<Token>& tokens) {
    for (const auto& t : tokens) tokens_.emplace(t.content.tw.index, t);
    drop_stale_tokens();
}

void VehicleAgent::drop_stale_tokens() {
    const int64_t w = current_window();
    std::erase_if(tokens_, [&](const auto& kv) { return kv.first < w; });
}

std::optional<Token> VehicleAgent::token_for(int64_t window) const {
    auto it = tokens_.find(window);
    if (it == tokens_.end()) return std::nullopt;
    return it->second;
}

RefreshResult VehicleAgent::refresh_pc(RsuClient& rsu) {
    drop_stale_tokens();
    const int64_t w = current_window();
    if (pc_ && pc_->pc.body.tw.index == w) return {RefreshStatus::kept_old, RefreshFailure::none, std::nullopt};
    auto it = tokens_.find(w);
    if (it == tokens_.end()) return {RefreshStatus::failed, RefreshFailure::no_token, std::nullopt};

    SigningKeyPair keys = keygen(rng_.next());
    Outcome<PseudonymCert, IssueError> out = IssueError::token_expired;
    try {
        out = rsu.pseudo(it->second, keys.vk);
    } catch (const TransportError&) {
        return {RefreshStatus::failed, RefreshFailure::timeout, std::nullopt};
    }
    if (!out) {
        if (out.error() == IssueError::token_already_used) tokens_.erase(it);
        return {RefreshStatus::failed, RefreshFailure::rsu_rejected, out.error()};
    }
    const PseudonymCert& pc = out.value();
    if (pc.body.vk != keys.vk || pc.body.tw != it->second.content.tw ||
        !verify(pc.rsu_cert.vk, signing_bytes(pc), pc.sigma_rsu))
        return {RefreshStatus::failed, RefreshFailure::rsu_rejected, std::nullopt};
    tokens_.erase(it);
    pc_ = HeldPc{pc, keys};
    history_.push_back(pc);
    return {RefreshStatus::refreshed, RefreshFailure::none, std::nullopt};
}

SignedMessage VehicleAgent::broadcast(ByteView payload) const {
    if (!pc_) throw std::logic_error("no pseudonym certificate held");
    return sign_v2v(pc_->keys, pc_->pc, payload);
}

V2vResult VehicleAgent::receive(const SignedMessage& msg, const RegionId& here) const {
    return verify_v2v(msg, clock_(), here, vk_ca_, pcrl_);
}

DownloadResult VehicleAgent::download_pcrl(RsuClient& rsu, size_t budget_bytes) {
    PcrlSnapshot snap;
    try {
        snap = rsu.pcrl();
    } catch (const TransportError&) {
        return DownloadResult::timeout;
    }
    if (encode(snap).size() > budget_bytes) return DownloadResult::truncated;
    // An unsigned snapshot is only acceptable when it revokes nothing.
    if (!snap.entries.empty() && !verify(vk_ca_, signing_bytes(snap), snap.sigma)) return DownloadResult::rejected;
    if (snap.window_index < pcrl_window_) return DownloadResult::rejected;
    pcrl_.clear();
    pcrl_.insert(snap.entries.begin(), snap.entries.end());
    pcrl_window_ = snap.window_index;
    return DownloadResult::complete;
}

}  // namespace tvss
