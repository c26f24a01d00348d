// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <string>

#include "chaperone/config.hpp"
#include "chaperone/errors.hpp"
#include "test_support.hpp"

using namespace chaperone;

namespace {

const char* kMinimalGateway = R"({
  "judge": {"endpoint": "http://127.0.0.1:9100"},
  "upstream": {"endpoint": "http://127.0.0.1:9102"}
})";

} // namespace

TEST_CASE("minimal gateway config fills in the defaults") {
    const GatewayAppConfig cfg = parse_gateway_config(kMinimalGateway);
    CHECK(cfg.judge.endpoint == "http://127.0.0.1:9100");
    CHECK(cfg.judge.model == "claude-opus-4-1-20250805");
    CHECK(cfg.judge.api_key_env == "CHAPERONE_JUDGE_API_KEY");
    CHECK(cfg.judge.timeout_ms == 30000);
    CHECK(cfg.judge.max_retries == 2);
    CHECK(cfg.upstream.endpoint == "http://127.0.0.1:9102");
    CHECK(cfg.upstream.api_key_env == "CHAPERONE_UPSTREAM_API_KEY");
    CHECK(cfg.engine.passes == 5);
    CHECK(cfg.engine.rule == SensitivityRule::Unanimous);
    CHECK(cfg.engine.block_action == BlockAction::Stop);
    CHECK_FALSE(cfg.engine.early_stop);
    CHECK_FALSE(cfg.engine.max_context_units.has_value());
    CHECK(cfg.audit_log_path.empty());
    CHECK(cfg.bind == "127.0.0.1:8080");
}

TEST_CASE("full gateway config parses every section") {
    const char* text = R"({
      "engine": {"passes": 3, "rule": "balanced", "block_action": "rephrase",
                 "early_stop": true, "max_context_units": 4},
      "judge": {"endpoint": "http://j:1", "model": "judge-x", "timeout": 1500,
                "retries": 7, "api_key_env": "J_KEY",
                "sampling": {"temperature": 1.0, "max_tokens": 4}},
      "rephraser": {"endpoint": "http://r:2", "model": "r-x", "timeout_ms": 2500,
                    "retries": 1, "api_key_env": "R_KEY"},
      "upstream": {"endpoint": "http://u:3", "model": "u-x", "timeout_ms": 9000,
                   "api_key_env": "U_KEY"},
      "audit_log_path": "audit.jsonl",
      "bind": "0.0.0.0:9999"
    })";
    const GatewayAppConfig cfg = parse_gateway_config(text);
    CHECK(cfg.engine.passes == 3);
    CHECK(cfg.engine.rule == SensitivityRule::Balanced);
    CHECK(cfg.engine.block_action == BlockAction::Rephrase);
    CHECK(cfg.engine.early_stop);
    CHECK(cfg.engine.max_context_units == 4);
    CHECK(cfg.judge.model == "judge-x");
    CHECK(cfg.judge.timeout_ms == 1500);
    CHECK(cfg.judge.max_retries == 7);
    CHECK(cfg.judge.api_key_env == "J_KEY");
    CHECK(cfg.judge.sampling_params_json.find("temperature") != std::string::npos);
    CHECK(cfg.rephraser.endpoint == "http://r:2");
    CHECK(cfg.rephraser.timeout_ms == 2500);
    CHECK(cfg.rephraser.max_retries == 1);
    CHECK(cfg.upstream.timeout_ms == 9000);
    CHECK(cfg.audit_log_path == "audit.jsonl");
    CHECK(cfg.bind == "0.0.0.0:9999");
}

TEST_CASE("gateway config rejections") {
    CHECK_THROWS_AS(parse_gateway_config("not json"), ParseError);
    CHECK_THROWS_AS(parse_gateway_config("[1,2]"), ParseError);
    // judge.endpoint is mandatory
    CHECK_THROWS_AS(parse_gateway_config(R"({"upstream": {"endpoint": "http://u:1"}})"),
                    ParseError);
    // upstream is mandatory
    CHECK_THROWS_AS(parse_gateway_config(R"({"judge": {"endpoint": "http://j:1"}})"),
                    ParseError);
    CHECK_THROWS_AS(
        parse_gateway_config(R"({"judge": {"endpoint": "http://j:1"}, "upstream": {}})"),
        ParseError);
    // rephrase without a rephraser endpoint cannot run
    CHECK_THROWS_AS(parse_gateway_config(R"({
        "engine": {"block_action": "rephrase"},
        "judge": {"endpoint": "http://j:1"},
        "upstream": {"endpoint": "http://u:1"}
    })"),
                    ParseError);
    // malformed bind surfaces at parse time
    CHECK_THROWS_AS(parse_gateway_config(R"({
        "judge": {"endpoint": "http://j:1"},
        "upstream": {"endpoint": "http://u:1"},
        "bind": "no-port"
    })"),
                    ParseError);
    // engine validation applies to config files too
    CHECK_THROWS_AS(parse_gateway_config(R"({
        "engine": {"passes": 0},
        "judge": {"endpoint": "http://j:1"},
        "upstream": {"endpoint": "http://u:1"}
    })"),
                    ValidationError);
}

TEST_CASE("judge config accepts flat and wrapped forms") {
    const JudgeConfig flat = parse_judge_config(R"({"endpoint": "http://j:1", "timeout": 12})");
    CHECK(flat.endpoint == "http://j:1");
    CHECK(flat.timeout_ms == 12);

    const JudgeConfig wrapped =
        parse_judge_config(R"({"judge": {"endpoint": "http://j:2", "max_retries": 0}})");
    CHECK(wrapped.endpoint == "http://j:2");
    CHECK(wrapped.max_retries == 0);

    CHECK_THROWS_AS(parse_judge_config(R"({"model": "x"})"), ParseError);
    CHECK_THROWS_AS(parse_judge_config("42"), ParseError);
}

TEST_CASE("timeout_ms is preferred over timeout when both appear") {
    const JudgeConfig cfg =
        parse_judge_config(R"({"endpoint": "http://j:1", "timeout_ms": 7, "timeout": 9})");
    CHECK(cfg.timeout_ms == 7);
}

TEST_CASE("parse_bind splits host and port") {
    CHECK(parse_bind("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
    CHECK(parse_bind("0.0.0.0:0") == std::pair<std::string, int>{"0.0.0.0", 0});
    CHECK(parse_bind("localhost:65535") == std::pair<std::string, int>{"localhost", 65535});
    CHECK_THROWS_AS(parse_bind("nohost"), ParseError);
    CHECK_THROWS_AS(parse_bind(":8080"), ParseError);
    CHECK_THROWS_AS(parse_bind("host:"), ParseError);
    CHECK_THROWS_AS(parse_bind("host:abc"), ParseError);
    CHECK_THROWS_AS(parse_bind("host:80x"), ParseError);
    CHECK_THROWS_AS(parse_bind("host:70000"), ParseError);
}

TEST_CASE("load_gateway_config reads files and rejects missing ones") {
    testsupport::TempDir dir;
    testsupport::write_file(dir.file("gw.json"), kMinimalGateway);
    const GatewayAppConfig cfg = load_gateway_config(dir.file("gw.json"));
    CHECK(cfg.judge.endpoint == "http://127.0.0.1:9100");
    CHECK_THROWS_AS(load_gateway_config(dir.file("absent.json")), ParseError);
    CHECK_THROWS_AS(load_judge_config(dir.file("absent.json")), ParseError);
}

TEST_CASE("shipped example config parses and stores env var names only") {
    const std::string path = (testsupport::data_dir() / "config.example.json").string();
    const GatewayAppConfig cfg = load_gateway_config(path);
    CHECK(cfg.engine.passes == 5);
    CHECK(cfg.engine.rule == SensitivityRule::Unanimous);
    CHECK(cfg.engine.block_action == BlockAction::Rephrase);
    CHECK(cfg.engine.early_stop);
    CHECK(cfg.judge.model == "claude-opus-4-1-20250805");
    CHECK(cfg.judge.api_key_env == "CHAPERONE_JUDGE_API_KEY");
    CHECK(cfg.rephraser.api_key_env == "CHAPERONE_REPHRASER_API_KEY");
    CHECK(cfg.upstream.api_key_env == "CHAPERONE_UPSTREAM_API_KEY");
    CHECK_FALSE(cfg.rephraser.endpoint.empty());
    CHECK(cfg.bind == "127.0.0.1:8080");
    // The file names environment variables; it must never hold a credential.
    const std::string raw = testsupport::read_file(path);
    CHECK(raw.find("api_key_env") != std::string::npos);
    CHECK(raw.find("\"api_key\"") == std::string::npos);
    CHECK(raw.find("Bearer") == std::string::npos);
    CHECK(raw.find("sk-") == std::string::npos);
}
