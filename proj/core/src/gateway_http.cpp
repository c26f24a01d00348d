// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#include "chaperone/gateway_http.hpp"

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "chaperone/errors.hpp"

namespace chaperone {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, json{{"error", message}});
}

json outcome_to_json(const MessageOutcome& outcome) {
    json j;
    j["kind"] = std::string(outcome_kind_name(outcome.kind));
    if (outcome.kind == OutcomeKind::Delivered ||
        outcome.kind == OutcomeKind::DeliveredRephrased) {
        j["text"] = outcome.text;
    }
    json tallies = json::array();
    for (const TallySummary& t : outcome.tallies) {
        tallies.push_back({{"unit_index", t.unit_index},
                           {"S", t.score},
                           {"decision", std::string(decision_name(t.decision))}});
    }
    j["tallies"] = std::move(tallies);
    return j;
}

json session_to_json(const SessionView& view) {
    json j;
    j["session_id"] = view.session_id;
    j["status"] = std::string(session_status_name(view.status));
    json utterances = json::array();
    for (const Utterance& u : view.conversation.utterances) {
        utterances.push_back({{"role", std::string(role_name(u.role))}, {"text", u.text}});
    }
    j["utterances"] = std::move(utterances);
    j["created_at"] = view.created_at;
    j["updated_at"] = view.updated_at;
    return j;
}

} // namespace

struct GatewayHttpServer::Impl {
    std::shared_ptr<GatewayService> service;
    std::string host;
    int requested_port = 0;
    int bound_port = 0;
    httplib::Server server;
    std::thread thread;
    bool started = false;

    void wire_routes() {
        server.Post("/sessions", [this](const httplib::Request&, httplib::Response& res) {
            handle(res, [&]() {
                send_json(res, 200, json{{"session_id", service->create_session()}});
            });
        });

        server.Post("/sessions/:id/messages",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        handle(res, [&]() {
                            json body;
                            try {
                                body = json::parse(req.body);
                            } catch (const json::exception& e) {
                                send_error(res, 400,
                                           std::string("request body is not valid JSON: ") +
                                               e.what());
                                return;
                            }
                            if (!body.is_object() || !body.contains("text") ||
                                !body.at("text").is_string()) {
                                send_error(res, 400, "request body needs a string field 'text'");
                                return;
                            }
                            MessageOutcome outcome = service->handle_user_message(
                                req.path_params.at("id"), body.at("text").get<std::string>());
                            send_json(res, 200, outcome_to_json(outcome));
                        });
                    });

        server.Get("/sessions/:id", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&]() {
                send_json(res, 200, session_to_json(service->get_session(req.path_params.at("id"))));
            });
        });
    }

    template <typename Fn>
    void handle(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const NotFoundError& e) {
            send_error(res, 404, e.what());
        } catch (const SessionStoppedError& e) {
            send_error(res, 409, e.what());
        } catch (const ValidationError& e) {
            send_error(res, 400, e.what());
        } catch (const ParseError& e) {
            send_error(res, 400, e.what());
        } catch (const TransportError& e) {
            send_error(res, 502, e.what());
        } catch (const EvaluationError& e) {
            send_error(res, 500, e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    }
};

GatewayHttpServer::GatewayHttpServer(std::shared_ptr<GatewayService> service, std::string host,
                                     int port)
    : impl_(std::make_unique<Impl>()) {
    if (!service) {
        throw ValidationError("http server needs a gateway service");
    }
    impl_->service = std::move(service);
    impl_->host = std::move(host);
    impl_->requested_port = port;
    impl_->wire_routes();
}

GatewayHttpServer::~GatewayHttpServer() {
    stop();
}

namespace {

int bind_server(httplib::Server& server, const std::string& host, int port) {
    if (port == 0) {
        const int bound = server.bind_to_any_port(host);
        if (bound <= 0) {
            throw TransportError("cannot bind " + host + " on any port");
        }
        return bound;
    }
    if (!server.bind_to_port(host, port)) {
        throw TransportError("cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

} // namespace

void GatewayHttpServer::start() {
    if (impl_->started) {
        return;
    }
    impl_->bound_port = bind_server(impl_->server, impl_->host, impl_->requested_port);
    impl_->thread = std::thread([this]() { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    impl_->started = true;
}

void GatewayHttpServer::stop() {
    if (!impl_->started) {
        return;
    }
    impl_->server.stop();
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
    impl_->started = false;
}

int GatewayHttpServer::port() const noexcept {
    return impl_->bound_port;
}

bool GatewayHttpServer::running() const noexcept {
    return impl_->started;
}

void GatewayHttpServer::run() {
    if (impl_->started) {
        throw ValidationError("server already running in the background");
    }
    impl_->bound_port = bind_server(impl_->server, impl_->host, impl_->requested_port);
    impl_->server.listen_after_bind(); // blocks until stop()
}

} // namespace chaperone
