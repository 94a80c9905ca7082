#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tvss/framing.hpp"

namespace tvss {

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Service {
public:
    virtual ~Service() = default;
    virtual Frame handle(const Frame& req) = 0;
};

class Link {
public:
    virtual ~Link() = default;
    // Throws TransportError when the peer cannot be reached.
    virtual Frame call(const Frame& req) = 0;
};

// Passes every frame through the wire encoding so in-process and TCP runs
// exercise the same bytes.
class InProcLink final : public Link {
public:
    explicit InProcLink(Service& svc) : svc_(svc) {}
    Frame call(const Frame& req) override;
    // Returns true to drop the call; lets tests model an unreachable peer.
    std::function<bool()> fault;
    uint64_t calls() const { return calls_; }

private:
    Service& svc_;
    uint64_t calls_ = 0;
};

struct HostPort {
    std::string host;
    uint16_t port = 0;
};
HostPort parse_hostport(const std::string& s);

class TcpLink final : public Link {
public:
    TcpLink(HostPort hp, int timeout_ms = 2000) : hp_(std::move(hp)), timeout_ms_(timeout_ms) {}
    ~TcpLink() override;
    Frame call(const Frame& req) override;

private:
    void connect_locked();
    void close_locked();
    HostPort hp_;
    int timeout_ms_;
    int fd_ = -1;
    std::mutex mu_;
};

// Thread per connection; each connection is a sequence of request/response frames.
class TcpServer {
public:
    TcpServer(Service& svc, const HostPort& bind);
    ~TcpServer();
    uint16_t port() const { return port_; }
    void run();  // blocks until stop()
    void stop();

private:
    void serve_conn(int fd);
    Service& svc_;
    int listen_fd_ = -1;
    uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::mutex mu_;
    std::vector<std::thread> workers_;
    std::vector<int> conns_;
};

}  // namespace tvss
