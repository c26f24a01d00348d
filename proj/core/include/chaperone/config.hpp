// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>

#include "chaperone/engine.hpp"
#include "chaperone/remote.hpp"

namespace chaperone {

// Everything the gateway binary needs, from one JSON config file. The file
// never holds credentials — only the names of environment variables.
struct GatewayAppConfig {
    EngineConfig engine;
    JudgeConfig judge;
    RephraserConfig rephraser; // endpoint may stay empty when block_action is stop
    UpstreamConfig upstream;
    std::string audit_log_path; // empty -> in-memory only
    std::string bind = "127.0.0.1:8080";
};

// Keys: engine{passes, rule, block_action, early_stop, max_context_units},
// judge{endpoint, model, timeout, retries, api_key_env, prompt_template,
// sampling}, rephraser{endpoint, model, timeout, retries, api_key_env},
// upstream{endpoint, model, timeout, api_key_env}, audit_log_path, bind.
// Timeouts are integer milliseconds ("timeout" or "timeout_ms" both parse).
GatewayAppConfig parse_gateway_config(const std::string& json_text);
GatewayAppConfig load_gateway_config(const std::string& path);

// Judge-only config file for the harness CLI (--judge). Same judge keys as
// above, at top level or under a "judge" object.
JudgeConfig parse_judge_config(const std::string& json_text);
JudgeConfig load_judge_config(const std::string& path);

// "host:port" -> {host, port}. Throws ParseError on malformed input.
std::pair<std::string, int> parse_bind(const std::string& bind);

} // namespace chaperone
