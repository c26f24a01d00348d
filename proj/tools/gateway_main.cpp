// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0
//
// chaperone-gateway: HTTP proxy that gates a chat upstream.
//
//   chaperone-gateway --config data/config.example.json
//
// API keys are read from the environment variables the config names; the
// config file itself never holds key material.

#include <csignal>
#include <exception>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "chaperone/config.hpp"
#include "chaperone/engine.hpp"
#include "chaperone/gateway.hpp"
#include "chaperone/gateway_http.hpp"
#include "chaperone/remote.hpp"

namespace {

chaperone::GatewayHttpServer* g_server = nullptr;

void handle_signal(int) {
    if (g_server != nullptr) {
        g_server->stop();
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conversation gating gateway"};
    std::string config_path;
    app.add_option("--config", config_path, "gateway config JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const chaperone::GatewayAppConfig cfg = chaperone::load_gateway_config(config_path);

        chaperone::GatewayDeps deps;
        deps.judge = std::make_shared<chaperone::RemoteJudge>(cfg.judge);
        if (cfg.engine.block_action == chaperone::BlockAction::Rephrase) {
            deps.rephraser = std::make_shared<chaperone::RemoteRephraser>(cfg.rephraser);
        }
        deps.upstream = std::make_shared<chaperone::RemoteUpstream>(cfg.upstream);
        if (!cfg.audit_log_path.empty()) {
            deps.audit = std::make_shared<chaperone::FileAuditSink>(cfg.audit_log_path);
        }

        auto service = std::make_shared<chaperone::GatewayService>(cfg.engine, std::move(deps));
        const auto [host, port] = chaperone::parse_bind(cfg.bind);
        chaperone::GatewayHttpServer server(service, host, port);

        g_server = &server;
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);

        std::cerr << "chaperone-gateway listening on " << host << ":" << port << "\n";
        server.run();
        g_server = nullptr;
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
