// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "chaperone/gateway.hpp"

namespace chaperone {

// HTTP front for GatewayService:
//   POST /sessions                  -> {"session_id": ...}
//   POST /sessions/{id}/messages    {"text": ...} -> message outcome
//   GET  /sessions/{id}             -> transcript + status
// Errors carry {"error": ...} with 400 (bad request), 404 (unknown session),
// 409 (session stopped), 502 (upstream failure), 500 (evaluator failure).
class GatewayHttpServer {
public:
    // port 0 picks a free port (see port() after start()).
    GatewayHttpServer(std::shared_ptr<GatewayService> service, std::string host, int port);
    ~GatewayHttpServer();

    GatewayHttpServer(const GatewayHttpServer&) = delete;
    GatewayHttpServer& operator=(const GatewayHttpServer&) = delete;

    // Binds and serves on a background thread. Throws TransportError when
    // the address cannot be bound.
    void start();
    void stop();
    [[nodiscard]] int port() const noexcept;
    [[nodiscard]] bool running() const noexcept;

    // Serve on the calling thread until stop() is invoked elsewhere.
    void run();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace chaperone
