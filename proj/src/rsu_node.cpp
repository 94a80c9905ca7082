#include "tvss/rsu_node.hpp"

#include <algorithm>

namespace tvss {

RsuNode::RsuNode(RsuSigner signer, const VerificationKey& vk_ca, RsuConfig cfg, int64_t window_index)
    : signer_(std::move(signer)), vk_ca_(vk_ca), cfg_(cfg), window_(window_index) {
    if (cfg_.t_minutes < 1) throw std::invalid_argument("T must be at least one minute");
    if (cfg_.skew_s < 0) throw std::invalid_argument("negative skew");
    if (signer_.keys.vk != signer_.cert.vk) throw std::invalid_argument("RSU key does not match its certificate");
}

int64_t RsuNode::window_index() const {
    std::lock_guard lk(mu_);
    return window_;
}

void RsuNode::refresh_entry_locked(TblEntry& e) {
    int64_t want = std::max(window_ - 2, e.pair.first_index - 1);
    if (e.at.index < want) e.at = roll_to(e.at, want);
    e.exhausted = window_ > e.pair.last_index;
    e.current_id.reset();
    if (!e.exhausted && window_ >= e.pair.first_index) e.current_id = roll_to(e.at, window_).x;
}

void RsuNode::add_ids_locked(const TblEntry& e) {
    ChainHeads h = e.at;
    for (int64_t w = h.index + 1; w <= window_ + 1; ++w) {
        h = step(h);
        if (w >= window_ - 1 && w >= e.pair.first_index && w <= e.pair.last_index) revoked_[w].insert(h.x);
    }
}

Outcome<PseudonymCert, IssueError> RsuNode::pseudo_gen(const Token& tau, const VerificationKey& vehicle_vk,
                                                       int64_t now_s) {
    const TimeWindow& tw = tau.content.tw;
    if (now_s < tw.start_s - cfg_.skew_s) return IssueError::token_not_yet_valid;
    if (now_s >= tw.end_s + cfg_.skew_s) return IssueError::token_expired;
    const int64_t eff_now = std::clamp(now_s, tw.start_s, tw.end_s - 1);

    PseudonymCert pc;
    {
        std::lock_guard lk(mu_);
        if (tw.index < window_ - 1) return IssueError::token_expired;
        if (tw.index > window_ + 1) return IssueError::token_not_yet_valid;
        static const DigestSet empty;
        auto rv = revoked_.find(tw.index);
        auto& used = utl_[tw.index];
        auto out = issue_pc(tau, vehicle_vk, signer_, eff_now, vk_ca_, rv == revoked_.end() ? empty : rv->second,
                            used);
        if (!out) return out;
        used.insert(tau.content.id);
        pc = std::move(out.value());
    }
    TokenReport rep;
    rep.token_id = tau.content.id;
    rep.rsu_id = signer_.cert.rsu_id;
    rep.region = signer_.cert.region;
    rep.window_index = tw.index;
    rep.pc_body_hash = pc_body_hash(pc.body);
    {
        std::lock_guard lk(report_mu_);
        rep.seq = ++seq_;
        reports_.push_back(rep);
    }
    return pc;
}

bool RsuNode::apply_revoke_notice(const RevokeNotice& notice) {
    if (!verify(vk_ca_, signing_bytes(notice), notice.sigma)) return false;
    if (notice.pair.last_index < notice.pair.first_index) return false;
    std::lock_guard lk(mu_);
    PairKey key{notice.pair.x_prev, notice.pair.r_prev};
    if (tbl_.count(key)) return true;
    TblEntry e;
    e.pair = notice.pair;
    e.at = ChainHeads{notice.pair.x_prev, notice.pair.r_prev, notice.pair.first_index - 1};
    refresh_entry_locked(e);
    add_ids_locked(e);
    if (!e.exhausted) tbl_.emplace(key, std::move(e));
    return true;
}

bool RsuNode::apply_pcrl(const PcrlSnapshot& snap) {
    if (snap.region != signer_.cert.region) return false;
    if (!verify(vk_ca_, signing_bytes(snap), snap.sigma)) return false;
    std::lock_guard lk(mu_);
    if (snap.window_index < window_) return false;
    if (pcrl_ && pcrl_->window_index > snap.window_index) return false;
    pcrl_ = snap;
    return true;
}

void RsuNode::advance_window(int64_t new_index) {
    std::lock_guard lk(mu_);
    if (new_index != window_ + 1) throw std::invalid_argument("window index must advance by exactly one");
    window_ = new_index;
    std::map<int64_t, DigestSet> keep;
    if (auto it = revoked_.find(window_ - 1); it != revoked_.end()) keep[window_ - 1] = std::move(it->second);
    if (auto it = revoked_.find(window_); it != revoked_.end()) keep[window_] = std::move(it->second);
    revoked_ = std::move(keep);
    for (auto it = tbl_.begin(); it != tbl_.end();) {
        refresh_entry_locked(it->second);
        if (it->second.exhausted) {
            it = tbl_.erase(it);
            continue;
        }
        if (window_ + 1 <= it->second.pair.last_index && window_ + 1 >= it->second.pair.first_index)
            revoked_[window_ + 1].insert(roll_to(it->second.at, window_ + 1).x);
        ++it;
    }
    const int64_t oldest = cfg_.skew_s > 0 ? window_ - 1 : window_;
    std::erase_if(utl_, [&](const auto& kv) { return kv.first < oldest; });
    if (pcrl_ && pcrl_->window_index < window_) pcrl_.reset();
}

void RsuNode::catch_up(int64_t now_s) {
    const int64_t target = window_of(now_s, cfg_.t_minutes).index;
    while (window_index() < target) advance_window(window_index() + 1);
}

PcrlSnapshot RsuNode::serve_pcrl() const {
    std::lock_guard lk(mu_);
    if (pcrl_ && pcrl_->window_index == window_) return *pcrl_;
    PcrlSnapshot s;
    s.region = signer_.cert.region;
    s.window_index = window_;
    return s;
}

std::vector<TokenReport> RsuNode::drain_reports() {
    std::lock_guard lk(report_mu_);
    return std::exchange(reports_, {});
}

size_t RsuNode::tbl_size() const {
    std::lock_guard lk(mu_);
    return tbl_.size();
}

std::vector<TblEntry> RsuNode::tbl() const {
    std::lock_guard lk(mu_);
    std::vector<TblEntry> out;
    for (const auto& [k, e] : tbl_) out.push_back(e);
    return out;
}

size_t RsuNode::utl_size() const {
    std::lock_guard lk(mu_);
    size_t n = 0;
    for (const auto& [w, s] : utl_) n += s.size();
    return n;
}

size_t RsuNode::utl_size(int64_t window) const {
    std::lock_guard lk(mu_);
    auto it = utl_.find(window);
    return it == utl_.end() ? 0 : it->second.size();
}

bool RsuNode::is_revoked(const Digest& id, int64_t window) const {
    std::lock_guard lk(mu_);
    auto it = revoked_.find(window);
    return it != revoked_.end() && it->second.count(id);
}

}  // namespace tvss
