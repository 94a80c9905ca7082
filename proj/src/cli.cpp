#include "tvss/cli.hpp"

#include <pthread.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "tvss/game.hpp"
#include "tvss/sim.hpp"
#include "tvss/vehicle.hpp"

#ifndef TVSS_VECTORS_DIR
#define TVSS_VECTORS_DIR "vectors"
#endif

namespace tvss {

using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void setup_logging() {
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_color_mt("tvss");
        spdlog::set_default_logger(logger);
    });
    spdlog::set_level(spdlog::level::warn);
    if (const char* lvl = std::getenv("TVSS_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string trim(std::string s) {
    const char* ws = " \t\r\n";
    s.erase(0, s.find_first_not_of(ws));
    s.erase(s.find_last_not_of(ws) + 1);
    return s;
}

RegionId parse_region(const std::string& hex) {
    if (hex.size() != 16) throw std::invalid_argument("region must be 16 hex digits");
    return array_from_hex<8>(hex);
}

std::optional<uint64_t> opt_seed(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::stoull(s);
}

int64_t current_window(int t_minutes) { return window_of(wall_clock()(), t_minutes).index; }

// Blocks until SIGINT or SIGTERM.
void serve(Service& svc, const std::string& listen, json banner, std::ostream& out) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    TcpServer server(svc, parse_hostport(listen));
    banner["port"] = server.port();
    out << banner.dump() << std::endl;
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
    });
    server.run();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
}

// --- vectors ---

class Raw {
public:
    explicit Raw(const Bytes& b) : b_(b) {}
    template <size_t N>
    std::array<uint8_t, N> take() {
        need(N);
        std::array<uint8_t, N> a{};
        std::copy_n(b_.begin() + long(off_), N, a.begin());
        off_ += N;
        return a;
    }
    uint64_t u64() { return be(8); }
    int64_t i64() { return int64_t(be(8)); }
    uint32_t u32() { return uint32_t(be(4)); }
    void done() const {
        if (off_ != b_.size()) throw std::invalid_argument("trailing input bytes");
    }

private:
    void need(size_t n) const {
        if (b_.size() - off_ < n) throw std::invalid_argument("input too short");
    }
    uint64_t be(size_t n) {
        need(n);
        uint64_t v = 0;
        for (size_t i = 0; i < n; ++i) v = (v << 8) | b_[off_ + i];
        off_ += n;
        return v;
    }
    const Bytes& b_;
    size_t off_ = 0;
};

TimeWindow raw_tw(Raw& r) {
    TimeWindow tw;
    tw.start_s = r.i64();
    tw.end_s = r.i64();
    if (tw.end_s <= tw.start_s) throw std::invalid_argument("bad window");
    tw.index = tw.start_s / (tw.end_s - tw.start_s);
    return tw;
}

RsuCert raw_rsu_cert(Raw& r) {
    RsuCert c;
    c.rsu_id = r.u64();
    c.vk = r.take<32>();
    c.region = r.take<8>();
    c.sigma_ca = r.take<64>();
    return c;
}

PseudonymCertBody raw_body(Raw& r) {
    PseudonymCertBody b;
    b.vk = r.take<32>();
    b.region = r.take<8>();
    b.tw = raw_tw(r);
    return b;
}

template <class T>
std::string roundtrip(const T& v, const Bytes& expected) {
    if (encode(v) != expected) return "encoding differs";
    if (!(decode<T>(expected) == v)) return "decode differs";
    return {};
}

std::string check_codec_line(const std::string& type, const Bytes& in, const Bytes& enc) {
    Raw r(in);
    std::string why;
    if (type == "TimeWindow") {
        auto v = raw_tw(r);
        r.done();
        why = roundtrip(v, enc);
    } else if (type == "EnrollmentCert") {
        EnrollmentCert v{r.take<32>(), r.take<64>()};
        r.done();
        why = roundtrip(v, enc);
    } else if (type == "TokenContent") {
        TokenContent v;
        v.id = r.take<32>();
        v.tw = raw_tw(r);
        r.done();
        why = roundtrip(v, enc);
    } else if (type == "Token") {
        Token v;
        v.content.id = r.take<32>();
        v.content.tw = raw_tw(r);
        v.sigma = r.take<64>();
        r.done();
        why = roundtrip(v, enc);
    } else if (type == "RsuCert") {
        auto v = raw_rsu_cert(r);
        r.done();
        why = roundtrip(v, enc);
    } else if (type == "PseudonymCertBody") {
        auto v = raw_body(r);
        r.done();
        why = roundtrip(v, enc);
    } else if (type == "PseudonymCert") {
        PseudonymCert v;
        v.body = raw_body(r);
        v.sigma_rsu = r.take<64>();
        v.rsu_cert = raw_rsu_cert(r);
        r.done();
        why = roundtrip(v, enc);
    } else if (type == "RevokeNotice") {
        RevokeNotice v;
        v.pair.x_prev = r.take<32>();
        v.pair.r_prev = r.take<32>();
        v.pair.first_index = r.i64();
        v.pair.last_index = r.i64();
        v.sigma = r.take<64>();
        r.done();
        why = roundtrip(v, enc);
    } else if (type == "PcrlEntry") {
        PcrlEntry v;
        v.pc_body_hash = r.take<32>();
        v.region = r.take<8>();
        v.expires_s = r.i64();
        r.done();
        why = roundtrip(v, enc);
    } else if (type == "PcrlSnapshot") {
        PcrlSnapshot v;
        v.region = r.take<8>();
        v.window_index = r.i64();
        for (uint32_t n = r.u32(); n > 0; --n) v.entries.push_back(r.take<32>());
        v.sigma = r.take<64>();
        r.done();
        why = roundtrip(v, enc);
    } else if (type == "TokenReport") {
        TokenReport v;
        v.token_id = r.take<32>();
        v.rsu_id = r.u64();
        v.region = r.take<8>();
        v.window_index = r.i64();
        v.pc_body_hash = r.take<32>();
        v.seq = r.u64();
        r.done();
        why = roundtrip(v, enc);
    } else {
        why = "unknown type";
    }
    return why;
}

struct VectorLine {
    std::string label;
    Bytes in, out;
};

std::vector<VectorLine> read_vectors(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::vector<VectorLine> out;
    std::string line;
    while (std::getline(f, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream s(line);
        std::string label, in, enc;
        if (!(s >> label >> in >> enc)) throw std::runtime_error("malformed vector line in " + path);
        out.push_back({label, from_hex(in), from_hex(enc)});
    }
    return out;
}

// --- subcommands ---

int cmd_vectors(const std::string& dir, std::ostream& out) {
    VectorReport rep = check_vectors(dir);
    json j{{"codec", rep.codec}, {"chain", rep.chain}, {"failures", rep.failures}, {"ok", rep.ok()}};
    out << j.dump() << "\n";
    if (!rep.ok()) throw std::runtime_error("golden vector mismatch");
    return 0;
}

json summary_json(const GameSummary& s) {
    auto [lo, hi] = s.ci95();
    return {{"branch", to_string(s.branch)},
            {"trials", s.trials},
            {"wins", s.wins},
            {"rate", s.rate()},
            {"ci95", {lo, hi}},
            {"suite_fired", s.suite_fired},
            {"structural_violations", s.structural_violations}};
}

int cmd_game(uint64_t trials, uint64_t seed, const std::string& branch, std::ostream& out) {
    std::vector<Branch> branches;
    if (branch == "all")
        branches = {Branch::forgery, Branch::anonymity, Branch::unlinkability};
    else if (branch == "forgery")
        branches = {Branch::forgery};
    else if (branch == "anonymity")
        branches = {Branch::anonymity};
    else if (branch == "unlinkability")
        branches = {Branch::unlinkability};
    else
        throw UsageError("branch must be forgery, anonymity, unlinkability or all");
    json arr = json::array();
    for (Branch b : branches) arr.push_back(summary_json(run_game(b, trials, derive_seed(seed, to_string(b)))));
    out << (branches.size() == 1 ? arr[0] : arr).dump() << "\n";
    return 0;
}

int cmd_sim(const std::string& config, uint64_t seed, const std::string& out_dir, std::ostream& out) {
    ScenarioConfig cfg = config.empty() ? ScenarioConfig{} : load_config(config);
    if (config.empty()) cfg.validate();
    RunMetrics m = run_sim(cfg, seed);
    write_outputs(m, out_dir);
    out << metrics_json(m).dump() << "\n";
    return 0;
}

int cmd_ca(const std::string& listen, int t, int lookback, const std::string& state, const std::string& seed,
           std::ostream& out) {
    CaConfig cfg{t, lookback, state};
    auto ca = CaNode::open(cfg, make_entropy(opt_seed(seed)), current_window(t));
    CaService svc(*ca, wall_clock());
    serve(svc, listen, {{"role", "ca"}, {"vk_ca", to_hex(ca->vk())}, {"window", ca->window_index()}}, out);
    return 0;
}

VerificationKey read_ca_pub(const std::string& path) { return array_from_hex<32>(trim(read_file(path))); }

int cmd_rsu(const std::string& listen, const std::string& region_hex, const std::string& backend,
            const std::string& ca_addr, const std::string& ca_pub, uint64_t id, int t, int64_t skew,
            const std::string& seed, std::ostream& out) {
    const VerificationKey vk_ca = read_ca_pub(ca_pub);
    const RegionId region = parse_region(region_hex);
    auto rng = make_entropy(opt_seed(seed));
    SigningKeyPair keys = keygen(rng->next());
    TcpLink ca_link(parse_hostport(ca_addr));
    RsuCert cert = CaClient(ca_link).certify_rsu(id, keys.vk, region);
    if (cert.vk != keys.vk || cert.region != region || !verify(vk_ca, signing_bytes(cert), cert.sigma_ca))
        throw std::runtime_error("CA returned a certificate that does not verify under --ca-pub");
    RsuNode node(RsuSigner{cert, keys}, vk_ca, RsuConfig{t, skew}, current_window(t));
    std::unique_ptr<TcpLink> backend_link;
    if (!backend.empty()) backend_link = std::make_unique<TcpLink>(parse_hostport(backend));
    RsuService svc(node, wall_clock(), backend_link.get());
    serve(svc, listen, {{"role", "rsu"}, {"rsu_id", id}, {"region", region_hex}}, out);
    return 0;
}

int cmd_backend(const std::string& listen, const std::string& ca_addr, const std::string& rsus_file, int t,
                int lookback, std::ostream& out) {
    TcpLink ca_link(parse_hostport(ca_addr));
    std::vector<std::unique_ptr<TcpLink>> links;
    std::vector<RsuPeer> peers;
    std::istringstream lines(read_file(rsus_file));
    std::string line;
    while (std::getline(lines, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::istringstream s(line);
        uint64_t id = 0;
        std::string region, addr;
        if (!(s >> id >> region >> addr)) throw std::invalid_argument("rsus file lines are: <id> <region hex8> <host:port>");
        links.push_back(std::make_unique<TcpLink>(parse_hostport(addr)));
        peers.push_back(RsuPeer{id, parse_region(region), links.back().get()});
    }
    BackendMonitor monitor(lookback);
    RevocationDispatcher dispatcher(ca_link, peers, t,
                                    [](int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); });
    BackendService svc(monitor, dispatcher);
    serve(svc, listen, {{"role", "backend"}, {"rsus", peers.size()}}, out);
    return 0;
}

const char* refresh_name(RefreshStatus s) {
    switch (s) {
        case RefreshStatus::refreshed: return "refreshed";
        case RefreshStatus::kept_old: return "kept_old";
        case RefreshStatus::failed: return "failed";
    }
    return "?";
}

const char* failure_name(RefreshFailure f) {
    switch (f) {
        case RefreshFailure::none: return "none";
        case RefreshFailure::no_token: return "no_token";
        case RefreshFailure::rsu_rejected: return "rsu_rejected";
        case RefreshFailure::timeout: return "timeout";
    }
    return "?";
}

const char* download_name(DownloadResult d) {
    switch (d) {
        case DownloadResult::complete: return "complete";
        case DownloadResult::truncated: return "truncated";
        case DownloadResult::timeout: return "timeout";
        case DownloadResult::rejected: return "rejected";
    }
    return "?";
}

int cmd_obu(const std::string& ca_addr, const std::string& ca_pub, const std::string& rsu_addr, int64_t tokens_window,
            const std::string& state, int t, const std::string& seed, std::ostream& out) {
    if (tokens_window < 1) throw UsageError("--tokens-window must be positive");
    json st = json::object();
    std::ifstream probe(state);
    if (probe) st = json::parse(read_file(state));
    auto rng = make_entropy(opt_seed(seed));
    if (!st.contains("identity")) st["identity"] = to_hex(rng->next());
    const SigningKeyPair identity = keygen(array_from_hex<32>(st["identity"].get<std::string>()));

    TcpLink ca_link(parse_hostport(ca_addr));
    CaClient ca(ca_link);
    VerificationKey vk_ca{};
    if (!ca_pub.empty()) vk_ca = read_ca_pub(ca_pub);
    VehicleAgent agent(identity, vk_ca, wall_clock(), *rng, t);
    if (st.contains("ec")) agent.restore_ec(decode<EnrollmentCert>(from_hex(st["ec"].get<std::string>())));
    if (st.contains("tokens")) {
        std::vector<Token> toks;
        for (const auto& h : st["tokens"]) toks.push_back(decode<Token>(from_hex(h.get<std::string>())));
        agent.add_tokens(toks);
    }

    json report;
    if (!agent.ec()) {
        auto r = agent.enroll(ca);
        if (!r) throw std::runtime_error(std::string("enrollment refused: ") + to_string(r.error()));
        st["ec"] = to_hex(encode(r.value()));
    }
    const int64_t w = agent.current_window();
    if (!agent.has_token(w)) {
        auto r = agent.request_tokens(ca, w, tokens_window);
        if (!r) throw std::runtime_error(std::string("token request refused: ") + to_string(r.error()));
        report["issued"] = r.value();
    }
    if (!rsu_addr.empty()) {
        TcpLink rsu_link(parse_hostport(rsu_addr));
        RsuClient rsu(rsu_link);
        RefreshResult rr = agent.refresh_pc(rsu);
        report["refresh"] = refresh_name(rr.status);
        report["reason"] = failure_name(rr.reason);
        if (rr.code) report["code"] = to_string(*rr.code);
        if (agent.current_pc()) {
            report["pc_window"] = agent.current_pc()->pc.body.tw.index;
            report["pc_vk"] = to_hex(agent.current_pc()->pc.body.vk);
        }
        if (!ca_pub.empty()) report["pcrl"] = download_name(agent.download_pcrl(rsu, kMaxFrameBytes));
    }
    json toks = json::array();
    for (const auto& [idx, tok] : agent.tokens()) toks.push_back(to_hex(encode(tok)));
    st["tokens"] = toks;
    std::ofstream f(state, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + state);
    f << st.dump(2) << "\n";
    report["tokens"] = agent.token_count();
    report["window"] = w;
    out << report.dump() << "\n";
    return 0;
}

}  // namespace

VectorReport check_vectors(const std::string& dir) {
    VectorReport rep;
    for (const auto& v : read_vectors(dir + "/codec.txt")) {
        const std::string type = v.label.substr(0, v.label.find('/'));
        std::string why;
        try {
            why = check_codec_line(type, v.in, v.out);
        } catch (const std::exception& e) {
            why = e.what();
        }
        ++rep.codec;
        if (!why.empty()) rep.failures.push_back(v.label + ": " + why);
    }
    for (const auto& v : read_vectors(dir + "/chain.txt")) {
        ++rep.chain;
        if (v.in.size() != 64 || v.out.empty() || v.out.size() % 32 != 0) {
            rep.failures.push_back(v.label + ": malformed");
            continue;
        }
        ChainHeads h;
        std::copy_n(v.in.begin(), 32, h.x.begin());
        std::copy_n(v.in.begin() + 32, 32, h.r.begin());
        auto [ids, next] = extend(h, int64_t(v.out.size() / 32));
        Bytes got;
        for (const auto& id : ids) got.insert(got.end(), id.begin(), id.end());
        if (got != v.out) rep.failures.push_back(v.label + ": ids differ");
    }
    return rep;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    setup_logging();
    CLI::App app{"token-based vehicular PKI", "tvss"};
    app.require_subcommand(1);

    int t = kDefaultTMinutes;
    std::string listen, state, seed_s, ca_addr, backend, region, ca_pub, rsus_file, rsu_addr, config, out_dir;
    std::string branch = "all", vec_dir = TVSS_VECTORS_DIR;
    int lookback = 4;
    int64_t skew = 30, tokens_window = 96;
    uint64_t rsu_id = 1, trials = 10000, seed = 0;
    bool check = false;

    auto* ca = app.add_subcommand("ca", "run the certificate authority");
    ca->add_option("--listen", listen, "host:port")->required();
    ca->add_option("--t-minutes", t)->check(CLI::PositiveNumber);
    ca->add_option("--state", state, "append-only state log");
    ca->add_option("--lookback", lookback)->check(CLI::PositiveNumber);
    ca->add_option("--seed", seed_s, "deterministic keys (test mode)");

    auto* rsu = app.add_subcommand("rsu", "run a road side unit");
    rsu->add_option("--listen", listen)->required();
    rsu->add_option("--region", region, "16 hex digits")->required();
    rsu->add_option("--backend", backend, "host:port");
    rsu->add_option("--ca", ca_addr, "CA host:port for certification")->required();
    rsu->add_option("--ca-pub", ca_pub, "file holding the CA key in hex")->required();
    rsu->add_option("--id", rsu_id);
    rsu->add_option("--skew-s", skew)->check(CLI::NonNegativeNumber);
    rsu->add_option("--t-minutes", t)->check(CLI::PositiveNumber);
    rsu->add_option("--seed", seed_s);

    auto* be = app.add_subcommand("backend", "run the RSU backend monitor");
    be->add_option("--listen", listen)->required();
    be->add_option("--ca", ca_addr)->required();
    be->add_option("--rsus", rsus_file, "lines of <id> <region> <host:port>")->required();
    be->add_option("--t-minutes", t)->check(CLI::PositiveNumber);
    be->add_option("--lookback", lookback)->check(CLI::PositiveNumber);

    auto* obu = app.add_subcommand("obu", "on-board unit: enroll, fetch tokens, refresh a PC");
    obu->add_option("--ca", ca_addr)->required();
    obu->add_option("--rsu", rsu_addr);
    obu->add_option("--ca-pub", ca_pub, "CA key file; enables PCRL download");
    obu->add_option("--tokens-window", tokens_window, "windows per token request");
    obu->add_option("--state", state)->required();
    obu->add_option("--t-minutes", t)->check(CLI::PositiveNumber);
    obu->add_option("--seed", seed_s);

    auto* sim = app.add_subcommand("sim", "run the simulator");
    sim->add_option("--config", config, "JSON scenario; defaults when omitted");
    sim->add_option("--seed", seed);
    sim->add_option("--out", out_dir)->required();

    auto* game = app.add_subcommand("game", "play the security game");
    game->add_option("--trials", trials)->check(CLI::PositiveNumber);
    game->add_option("--seed", seed);
    game->add_option("--branch", branch, "forgery|anonymity|unlinkability|all");

    auto* vec = app.add_subcommand("vectors", "check golden vectors");
    vec->add_flag("--check", check)->required();
    vec->add_option("--dir", vec_dir);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return 1;
    }

    auto* sub = app.get_subcommands().front();
    try {
        if (sub == ca) return cmd_ca(listen, t, lookback, state, seed_s, out);
        if (sub == rsu) return cmd_rsu(listen, region, backend, ca_addr, ca_pub, rsu_id, t, skew, seed_s, out);
        if (sub == be) return cmd_backend(listen, ca_addr, rsus_file, t, lookback, out);
        if (sub == obu) return cmd_obu(ca_addr, ca_pub, rsu_addr, tokens_window, state, t, seed_s, out);
        if (sub == sim) return cmd_sim(config, seed, out_dir, out);
        if (sub == game) return cmd_game(trials, seed, branch, out);
        if (sub == vec) return cmd_vectors(vec_dir, out);
    } catch (const UsageError& e) {
        err << json{{"error", e.what()}, {"command", sub->get_name()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << json{{"error", e.what()}, {"command", sub->get_name()}}.dump() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace tvss
