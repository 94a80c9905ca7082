#include "tvss/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <spdlog/spdlog.h>

#include "tvss/codec.hpp"

namespace tvss {

Frame InProcLink::call(const Frame& req) {
    ++calls_;
    if (fault && fault()) throw TransportError("link down");
    FrameDecoder in;
    in.feed(frame_encode(req));
    Frame resp = svc_.handle(*in.next());
    FrameDecoder out;
    out.feed(frame_encode(resp));
    return *out.next();
}

HostPort parse_hostport(const std::string& s) {
    auto colon = s.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("address must be host:port");
    HostPort hp;
    hp.host = s.substr(0, colon);
    if (hp.host.empty()) hp.host = "127.0.0.1";
    int port = std::stoi(s.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::invalid_argument("port out of range");
    hp.port = static_cast<uint16_t>(port);
    return hp;
}

static void write_all(int fd, ByteView b) {
    size_t off = 0;
    while (off < b.size()) {
        ssize_t n = ::send(fd, b.data() + off, b.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("send: ") + std::strerror(errno));
        }
        off += size_t(n);
    }
}

// Reads until one whole frame is available or the peer closes.
static std::optional<Frame> read_frame(int fd, FrameDecoder& dec, int timeout_ms) {
    uint8_t buf[8192];
    for (;;) {
        if (auto f = dec.next()) return f;
        if (timeout_ms >= 0) {
            pollfd p{fd, POLLIN, 0};
            int r = ::poll(&p, 1, timeout_ms);
            if (r == 0) throw TransportError("timeout");
            if (r < 0 && errno != EINTR) throw TransportError("poll failed");
        }
        ssize_t n = ::recv(fd, buf, sizeof buf, 0);
        if (n == 0) return std::nullopt;
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("recv: ") + std::strerror(errno));
        }
        dec.feed(ByteView(buf, size_t(n)));
    }
}

TcpLink::~TcpLink() {
    std::lock_guard lk(mu_);
    close_locked();
}

void TcpLink::close_locked() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

void TcpLink::connect_locked() {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(hp_.host.c_str(), std::to_string(hp_.port).c_str(), &hints, &res) != 0)
        throw TransportError("cannot resolve " + hp_.host);
    int fd = -1;
    for (addrinfo* a = res; a; a = a->ai_next) {
        fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw TransportError("cannot connect to " + hp_.host + ":" + std::to_string(hp_.port));
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    fd_ = fd;
}

Frame TcpLink::call(const Frame& req) {
    std::lock_guard lk(mu_);
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            if (fd_ < 0) connect_locked();
            write_all(fd_, frame_encode(req));
            FrameDecoder dec;
            auto f = read_frame(fd_, dec, timeout_ms_);
            if (f) return *f;
            close_locked();  // stale keep-alive connection; reconnect once
        } catch (const TransportError&) {
            close_locked();
            if (attempt == 1) throw;
        }
    }
    throw TransportError("connection closed by peer");
}

TcpServer::TcpServer(Service& svc, const HostPort& bind) : svc_(svc) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw TransportError("socket failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(bind.port);
    if (::inet_pton(AF_INET, bind.host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw TransportError("bind address must be an IPv4 literal");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0) {
        ::close(listen_fd_);
        throw TransportError(std::string("bind: ") + std::strerror(errno));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() {
    stop();
    for (auto& t : workers_)
        if (t.joinable()) t.join();
}

void TcpServer::run() {
    while (!stopping_) {
        pollfd p{listen_fd_, POLLIN, 0};
        int r = ::poll(&p, 1, 200);
        if (r <= 0) continue;
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        std::lock_guard lk(mu_);
        conns_.push_back(fd);
        workers_.emplace_back([this, fd] { serve_conn(fd); });
    }
}

void TcpServer::stop() {
    if (stopping_.exchange(true)) return;
    std::lock_guard lk(mu_);
    for (int fd : conns_) ::shutdown(fd, SHUT_RDWR);
    if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpServer::serve_conn(int fd) {
    FrameDecoder dec;
    try {
        while (!stopping_) {
            auto f = read_frame(fd, dec, -1);
            if (!f) break;
            Frame resp;
            try {
                resp = svc_.handle(*f);
            } catch (const std::exception& e) {
                spdlog::warn("request kind {:#04x} failed: {}", f->kind, e.what());
                resp = response(kind::Error, status::malformed);
            }
            write_all(fd, frame_encode(resp));
        }
    } catch (const std::exception& e) {
        spdlog::debug("connection closed: {}", e.what());
    }
    ::close(fd);
}

}  // namespace tvss
