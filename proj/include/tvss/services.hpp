#pragma once

#include <functional>
#include <mutex>

#include "tvss/backend.hpp"
#include "tvss/rsu_node.hpp"

namespace tvss {

// Unix seconds.
using Clock = std::function<int64_t()>;
Clock wall_clock();

class CaService final : public Service {
public:
    // With a clock, the CA advances its window before serving each request.
    explicit CaService(CaNode& ca, Clock clock = {}) : ca_(ca), clock_(std::move(clock)) {}
    Frame handle(const Frame& req) override;

private:
    void catch_up();
    CaNode& ca_;
    Clock clock_;
};

class RsuService final : public Service {
public:
    // With flush_on_issue off, reports wait for an explicit flush_reports().
    RsuService(RsuNode& rsu, Clock clock, Link* backend = nullptr, bool flush_on_issue = true)
        : rsu_(rsu), clock_(std::move(clock)), backend_(backend), flush_on_issue_(flush_on_issue) {}
    Frame handle(const Frame& req) override;
    // Sends queued reports to the backend; keeps whatever fails.
    size_t flush_reports();
    size_t unsent() const;

private:
    RsuNode& rsu_;
    Clock clock_;
    Link* backend_;
    bool flush_on_issue_;
    mutable std::mutex mu_;
    std::vector<TokenReport> unsent_;
};

class BackendService final : public Service {
public:
    BackendService(BackendMonitor& monitor, RevocationDispatcher& dispatcher)
        : monitor_(monitor), dispatcher_(dispatcher) {}
    Frame handle(const Frame& req) override;

private:
    std::mutex mu_;
    BackendMonitor& monitor_;
    RevocationDispatcher& dispatcher_;
};

}  // namespace tvss
