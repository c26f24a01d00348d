// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "chaperone/engine.hpp"
#include "chaperone/evaluator.hpp"
#include "chaperone/gateway.hpp"

namespace chaperone {

struct ChatMessage {
    std::string role; // "user" | "assistant" | "system"
    std::string content;
};

// A chat-completion endpoint. api_key_env names the environment variable
// holding the bearer token; when the variable is unset the request goes out
// unauthenticated (local mock endpoints).
struct ChatEndpoint {
    std::string base_url; // e.g. "http://127.0.0.1:8091"
    std::string model;
    std::string api_key_env;
    int timeout_ms = 30000;
    // Opaque provider parameters merged into the request body (JSON object).
    std::string extra_params_json;
};

// One POST to {base_url}/v1/chat/completions. Returns the first choice's
// message content. Throws TransportError on connection/status failure and
// ParseError on a malformed body. No retries here — callers own the policy.
std::string chat_complete(const ChatEndpoint& endpoint,
                          const std::vector<ChatMessage>& messages);

// Live LLM judge: renders the judge prompt, asks the model, parses the
// YES/NO verdict. Unparseable replies and transport failures are retried
// up to max_retries; after that evaluate_once throws EvaluationError.
class RemoteJudge : public Evaluator {
public:
    explicit RemoteJudge(JudgeConfig config);

    EvaluatorVerdict evaluate_once(const EvaluationRequest& request) override;

    [[nodiscard]] const JudgeConfig& config() const noexcept { return config_; }

private:
    JudgeConfig config_;
};

struct RephraserConfig {
    std::string endpoint;
    std::string model;
    std::string api_key_env = "CHAPERONE_REPHRASER_API_KEY";
    int timeout_ms = 30000;
    int max_retries = 2;
};

// Asks a model to restate a flagged response in neutral terms. Failures
// after retries surface as TransportError; the engine degrades to Stop.
class RemoteRephraser : public Rephraser {
public:
    explicit RemoteRephraser(RephraserConfig config);

    std::string rephrase(const RephraseRequest& request) override;

private:
    RephraserConfig config_;
};

struct UpstreamConfig {
    std::string endpoint;
    std::string model;
    std::string api_key_env = "CHAPERONE_UPSTREAM_API_KEY";
    int timeout_ms = 60000;
};

// The real chatbot behind the gateway. The whole session transcript is
// forwarded as chat messages (user/assistant).
class RemoteUpstream : public Upstream {
public:
    explicit RemoteUpstream(UpstreamConfig config);

    std::string complete(const Conversation& conversation) override;

private:
    UpstreamConfig config_;
};

} // namespace chaperone
