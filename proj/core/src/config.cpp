// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#include "chaperone/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chaperone/errors.hpp"

namespace chaperone {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open config file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json parse_object(const std::string& text, const char* what) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
    if (!j.is_object()) {
        throw ParseError(std::string(what) + ": expected a JSON object");
    }
    return j;
}

int timeout_ms_of(const json& j, int fallback) {
    if (j.contains("timeout_ms")) {
        return j.at("timeout_ms").get<int>();
    }
    if (j.contains("timeout")) {
        return j.at("timeout").get<int>();
    }
    return fallback;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

EngineConfig engine_from_json(const json& j) {
    EngineConfig cfg;
    maybe(j, "passes", cfg.passes);
    if (j.contains("rule")) {
        cfg.rule = parse_rule(j.at("rule").get<std::string>());
    }
    if (j.contains("block_action")) {
        cfg.block_action = parse_block_action(j.at("block_action").get<std::string>());
    }
    maybe(j, "early_stop", cfg.early_stop);
    if (j.contains("max_context_units") && !j.at("max_context_units").is_null()) {
        cfg.max_context_units = j.at("max_context_units").get<int>();
    }
    validate_engine_config(cfg);
    return cfg;
}

JudgeConfig judge_from_json(const json& j) {
    JudgeConfig cfg;
    maybe(j, "endpoint", cfg.endpoint);
    maybe(j, "model", cfg.model);
    maybe(j, "prompt_template", cfg.prompt_template);
    maybe(j, "api_key_env", cfg.api_key_env);
    cfg.timeout_ms = timeout_ms_of(j, cfg.timeout_ms);
    if (j.contains("retries")) {
        cfg.max_retries = j.at("retries").get<int>();
    }
    maybe(j, "max_retries", cfg.max_retries);
    if (j.contains("sampling")) {
        cfg.sampling_params_json = j.at("sampling").dump();
    }
    return cfg;
}

} // namespace

GatewayAppConfig parse_gateway_config(const std::string& json_text) {
    const json j = parse_object(json_text, "gateway config");
    GatewayAppConfig cfg;
    try {
        if (j.contains("engine")) {
            cfg.engine = engine_from_json(j.at("engine"));
        }
        if (j.contains("judge")) {
            cfg.judge = judge_from_json(j.at("judge"));
        }
        if (cfg.judge.endpoint.empty()) {
            throw ParseError("gateway config: judge.endpoint is required");
        }
        if (j.contains("rephraser")) {
            const json& r = j.at("rephraser");
            maybe(r, "endpoint", cfg.rephraser.endpoint);
            maybe(r, "model", cfg.rephraser.model);
            maybe(r, "api_key_env", cfg.rephraser.api_key_env);
            cfg.rephraser.timeout_ms = timeout_ms_of(r, cfg.rephraser.timeout_ms);
            if (r.contains("retries")) {
                cfg.rephraser.max_retries = r.at("retries").get<int>();
            }
        }
        if (!j.contains("upstream")) {
            throw ParseError("gateway config: upstream is required");
        }
        const json& u = j.at("upstream");
        maybe(u, "endpoint", cfg.upstream.endpoint);
        maybe(u, "model", cfg.upstream.model);
        maybe(u, "api_key_env", cfg.upstream.api_key_env);
        cfg.upstream.timeout_ms = timeout_ms_of(u, cfg.upstream.timeout_ms);
        if (cfg.upstream.endpoint.empty()) {
            throw ParseError("gateway config: upstream.endpoint is required");
        }
        maybe(j, "audit_log_path", cfg.audit_log_path);
        maybe(j, "bind", cfg.bind);
    } catch (const json::exception& e) {
        throw ParseError(std::string("gateway config: ") + e.what());
    }
    if (cfg.engine.block_action == BlockAction::Rephrase && cfg.rephraser.endpoint.empty()) {
        throw ParseError("gateway config: block_action is rephrase but rephraser.endpoint "
                         "is missing");
    }
    parse_bind(cfg.bind);
    return cfg;
}

GatewayAppConfig load_gateway_config(const std::string& path) {
    return parse_gateway_config(read_file(path));
}

JudgeConfig parse_judge_config(const std::string& json_text) {
    const json j = parse_object(json_text, "judge config");
    try {
        JudgeConfig cfg = judge_from_json(j.contains("judge") ? j.at("judge") : j);
        if (cfg.endpoint.empty()) {
            throw ParseError("judge config: endpoint is required");
        }
        return cfg;
    } catch (const json::exception& e) {
        throw ParseError(std::string("judge config: ") + e.what());
    }
}

JudgeConfig load_judge_config(const std::string& path) {
    return parse_judge_config(read_file(path));
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
    const std::size_t colon = bind.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= bind.size()) {
        throw ParseError("bind address must look like host:port, got '" + bind + "'");
    }
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(bind.substr(colon + 1), &used);
        if (used != bind.size() - colon - 1) {
            throw std::invalid_argument("trailing characters");
        }
    } catch (const std::exception&) {
        throw ParseError("bind address has a non-numeric port: '" + bind + "'");
    }
    if (port < 0 || port > 65535) {
        throw ParseError("bind port out of range: " + std::to_string(port));
    }
    return {bind.substr(0, colon), port};
}

} // namespace chaperone
