#include "tvss/scenario.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <random>

#include "tvss/vehicle.hpp"

namespace tvss {

void EventQueue::at(int64_t time_ms, Action a) {
    if (time_ms < now_) throw std::logic_error("event scheduled in the past");
    q_.push(Ev{time_ms, seq_++, std::move(a)});
}

uint64_t EventQueue::run_until(int64_t end_ms) {
    uint64_t n = 0;
    while (!q_.empty() && q_.top().t <= end_ms) {
        Ev ev = q_.top();
        q_.pop();
        now_ = ev.t;
        ev.a();
        ++n;
    }
    now_ = std::max(now_, end_ms);
    return n;
}

Frame DelayLink::call(const Frame& req) {
    if (!target_) throw TransportError("delay link has no target");
    Service* target = target_;
    Observer obs = on_delivered;
    q_.after(delay_ms_, [target, obs, req] {
        InProcLink link(*target);
        Frame resp = link.call(req);
        if (obs) obs(req, resp);
    });
    return response(req.kind, status::ok);
}

bool CloneScenarioResult::clean() const {
    if (detected != attackers || escapes != 0 || blacklisted_in_time != attackers || honest_failures != 0) return false;
    if (max_latency_ms < 0 || max_latency_ms > bound_ms) return false;
    if (!pcrl_listed || !pcrl_expired) return false;
    return std::all_of(tbl_sizes.begin(), tbl_sizes.end(), [&](size_t s) { return s == size_t(attackers); });
}

namespace {

struct Rsu {
    std::unique_ptr<RsuNode> node;
    std::unique_ptr<RsuService> svc;
    std::unique_ptr<InProcLink> local;  // vehicles and operator
    std::unique_ptr<DelayLink> from_backend;
    int region = 0;
};

struct Attacker {
    std::unique_ptr<VehicleAgent> owner;
    std::unique_ptr<VehicleAgent> clone;
    VehicleId vehicle = 0;
    int64_t second_redemption_ms = -1;
    std::vector<Digest> pc_hashes;
};

}  // namespace

CloneScenarioResult run_clone_scenario(const CloneScenarioConfig& cfg, uint64_t seed) {
    if (cfg.regions < 2 || cfg.rsus_per_region < 1 || cfg.attackers < 0 || cfg.horizon_windows < cfg.inject_window + 2 ||
        cfg.inject_window < 0)
        throw std::invalid_argument("clone scenario needs two regions and windows after the injection");

    const int64_t window_ms = int64_t(cfg.t_minutes) * 60'000;
    const int64_t base_s = cfg.start_window * cfg.t_minutes * 60;
    const int64_t end_ms = cfg.horizon_windows * window_ms;
    const int64_t w_inj = cfg.start_window + cfg.inject_window;

    EventQueue q;
    Clock clock = [&q, base_s] { return base_s + q.now() / 1000; };
    SeededEntropy keys_rng(derive_seed(seed, "keys"));
    std::mt19937_64 rng(derive_seed(seed, "schedule"));
    auto at_random_in = [&](int64_t w) {
        std::uniform_int_distribution<int64_t> d(0, window_ms - 1);
        return (w - cfg.start_window) * window_ms + d(rng);
    };

    CaNode ca(keygen(keys_rng.next()), CaConfig{cfg.t_minutes, 4, {}},
              std::make_unique<SeededEntropy>(derive_seed(seed, "ca")), cfg.start_window);
    CaService ca_svc(ca);
    InProcLink ca_link(ca_svc);
    CaClient ca_client(ca_link);

    DelayLink to_backend(q, cfg.link_one_way_ms);
    std::vector<Rsu> rsus;
    for (int r = 0; r < cfg.regions; ++r)
        for (int j = 0; j < cfg.rsus_per_region; ++j) {
            Rsu x;
            x.region = r;
            SigningKeyPair k = keygen(keys_rng.next());
            RsuCert cert = ca_client.certify_rsu(rsus.size() + 1, k.vk, region_from_u64(uint64_t(r) + 1));
            x.node = std::make_unique<RsuNode>(RsuSigner{cert, k}, ca.vk(), RsuConfig{cfg.t_minutes, 30},
                                               cfg.start_window);
            x.svc = std::make_unique<RsuService>(*x.node, clock, &to_backend, false);
            x.local = std::make_unique<InProcLink>(*x.svc);
            x.from_backend = std::make_unique<DelayLink>(q, cfg.link_one_way_ms, x.svc.get());
            rsus.push_back(std::move(x));
        }

    // Time each RSU applied each notice, keyed by the revealed x.
    std::map<Digest, std::map<size_t, int64_t>> applied;
    std::vector<RsuPeer> peers;
    for (size_t i = 0; i < rsus.size(); ++i) {
        rsus[i].from_backend->on_delivered = [&applied, &q, i](const Frame& req, const Frame& resp) {
            if (req.kind != kind::RevokeNotice || req.body.empty() || req.body[0] != tag::RevokeNotice) return;
            if (resp.body.empty() || resp.body[0] != status::ok) return;
            RevokeNotice n = decode<RevokeNotice>(req.body);
            applied[n.pair.x_prev].emplace(i, q.now());
        };
        peers.push_back(RsuPeer{rsus[i].node->cert().rsu_id, rsus[i].node->cert().region, rsus[i].from_backend.get()});
    }
    BackendMonitor monitor(4);
    RevocationDispatcher dispatcher(ca_link, peers, cfg.t_minutes);
    BackendService backend_svc(monitor, dispatcher);
    to_backend.set_target(&backend_svc);

    SeededEntropy agent_rng(derive_seed(seed, "agents"));
    auto make_agent = [&](const SigningKeyPair& id) {
        return std::make_unique<VehicleAgent>(id, ca.vk(), clock, agent_rng, cfg.t_minutes);
    };
    auto rsu_client = [&](size_t i) { return RsuClient(*rsus[i].local); };
    auto pick_rsu = [&](int region) {
        std::uniform_int_distribution<int> d(0, cfg.rsus_per_region - 1);
        return size_t(region * cfg.rsus_per_region + d(rng));
    };

    CloneScenarioResult res;
    res.attackers = cfg.attackers;
    res.bound_ms = cfg.report_cycle_ms + 2 * cfg.link_one_way_ms;

    std::vector<std::unique_ptr<VehicleAgent>> honest;
    for (int i = 0; i < cfg.honest_vehicles; ++i) {
        auto a = make_agent(keygen(keys_rng.next()));
        if (!a->enroll(ca_client) || !a->request_tokens(ca_client, cfg.start_window, cfg.horizon_windows))
            throw std::runtime_error("honest vehicle setup failed");
        honest.push_back(std::move(a));
    }
    std::vector<Attacker> attackers(size_t(cfg.attackers));
    for (auto& at : attackers) {
        SigningKeyPair id = keygen(keys_rng.next());
        at.owner = make_agent(id);
        if (!at.owner->enroll(ca_client) || !at.owner->request_tokens(ca_client, cfg.start_window, cfg.horizon_windows))
            throw std::runtime_error("attacker setup failed");
        // The clone device holds a copy of every token.
        at.clone = make_agent(id);
        std::vector<Token> copy;
        for (int64_t w = cfg.start_window; w < cfg.start_window + cfg.horizon_windows; ++w)
            copy.push_back(*at.owner->token_for(w));
        at.clone->add_tokens(copy);
    }
    res.remaining_tokens = cfg.horizon_windows - cfg.inject_window - 1;

    for (int64_t w = cfg.start_window; w < cfg.start_window + cfg.horizon_windows; ++w) {
        for (auto& h : honest) {
            VehicleAgent* a = h.get();
            size_t r = pick_rsu(int(rng() % uint64_t(cfg.regions)));
            q.at(at_random_in(w), [&, a, r] {
                auto c = rsu_client(r);
                if (a->refresh_pc(c).status == RefreshStatus::failed) ++res.honest_failures;
            });
        }
        for (auto& at : attackers) {
            Attacker* p = &at;
            if (w < w_inj) {
                size_t r = pick_rsu(0);
                q.at(at_random_in(w), [&, p, r] {
                    auto c = rsu_client(r);
                    if (p->owner->refresh_pc(c).status == RefreshStatus::failed) ++res.honest_failures;
                });
            } else if (w == w_inj) {
                const int64_t t1 = at_random_in(w), t2 = at_random_in(w);
                size_t r1 = pick_rsu(0), r2 = pick_rsu(1);
                p->second_redemption_ms = std::max(t1, t2);
                q.at(t1, [&, p, r1] {
                    auto c = rsu_client(r1);
                    p->vehicle = *ca.lookup(p->owner->token_for(w_inj)->content.id);
                    if (p->owner->refresh_pc(c).status == RefreshStatus::refreshed)
                        p->pc_hashes.push_back(pc_body_hash(p->owner->current_pc()->pc.body));
                });
                q.at(t2, [&, p, r2] {
                    auto c = rsu_client(r2);
                    if (p->clone->refresh_pc(c).status == RefreshStatus::refreshed)
                        p->pc_hashes.push_back(pc_body_hash(p->clone->current_pc()->pc.body));
                });
            } else {
                // Owner and clone each try every RSU, once right after the boundary and once at random.
                for (size_t r = 0; r < rsus.size(); ++r)
                    for (VehicleAgent* a : {p->owner.get(), p->clone.get()})
                        for (int64_t when : {(w - cfg.start_window) * window_ms + 1, at_random_in(w)})
                            q.at(when, [&, a, r] {
                                auto c = rsu_client(r);
                                ++res.post_attempts;
                                if (a->refresh_pc(c).status != RefreshStatus::failed) ++res.escapes;
                            });
            }
        }
    }

    for (int64_t t = cfg.report_cycle_ms; t <= end_ms; t += cfg.report_cycle_ms)
        q.at(t, [&] {
            for (auto& x : rsus) x.svc->flush_reports();
        });

    for (int64_t w = cfg.start_window + 1; w < cfg.start_window + cfg.horizon_windows; ++w) {
        const int64_t t = (w - cfg.start_window) * window_ms;
        if (w == w_inj + 1)
            q.at(t - 1, [&] {
                for (auto& x : rsus) res.tbl_sizes.push_back(x.node->tbl_size());
                // Offending PCs are listed in their regions while the window lasts.
                bool listed = !attackers.empty();
                for (auto& at : attackers)
                    for (const auto& h : at.pc_hashes) {
                        bool found = false;
                        for (auto& x : rsus) {
                            auto s = x.node->serve_pcrl();
                            if (std::find(s.entries.begin(), s.entries.end(), h) != s.entries.end()) found = true;
                        }
                        listed = listed && found;
                    }
                res.pcrl_listed = listed;
            });
        q.at(t, [&, w] {
            for (const auto& snap : ca_client.advance(w))
                for (auto& x : rsus)
                    if (x.node->cert().region == snap.region) RsuClient(*x.local).push_pcrl(snap);
            for (auto& x : rsus) RsuClient(*x.local).tick(w);
            monitor.advance_window(w);
            dispatcher.retry_pending();
        });
        if (w == w_inj + 1)
            q.at(t + 1, [&] {
                bool gone = true;
                for (auto& x : rsus)
                    for (const auto& h : x.node->serve_pcrl().entries)
                        for (auto& at : attackers)
                            if (std::find(at.pc_hashes.begin(), at.pc_hashes.end(), h) != at.pc_hashes.end())
                                gone = false;
                res.pcrl_expired = gone;
            });
    }

    res.events = q.run_until(end_ms);

    const int64_t next_window_ms = (w_inj + 1 - cfg.start_window) * window_ms;
    const std::vector<RevokeResult> results = dispatcher.results();
    for (const auto& at : attackers) {
        const RevokeResult* rr = nullptr;
        for (const auto& r : results)
            if (r.vehicle == at.vehicle) rr = &r;
        if (!rr) continue;
        ++res.detected;
        auto it = applied.find(rr->notice.pair.x_prev);
        if (it == applied.end() || it->second.size() != rsus.size()) continue;
        int64_t last = 0;
        for (const auto& [i, t] : it->second) last = std::max(last, t);
        res.max_latency_ms = std::max(res.max_latency_ms, last - at.second_redemption_ms);
        if (last < next_window_ms) ++res.blacklisted_in_time;
    }
    return res;
}

}  // namespace tvss
