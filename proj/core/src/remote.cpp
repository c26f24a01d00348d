// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#include "chaperone/remote.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "chaperone/errors.hpp"

namespace chaperone {

using nlohmann::json;

namespace {

constexpr const char* kChatPath = "/v1/chat/completions";

httplib::Headers auth_headers(const std::string& api_key_env) {
    httplib::Headers headers;
    if (!api_key_env.empty()) {
        if (const char* key = std::getenv(api_key_env.c_str()); key != nullptr && *key != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    return headers;
}

} // namespace

std::string chat_complete(const ChatEndpoint& endpoint,
                          const std::vector<ChatMessage>& messages) {
    if (endpoint.base_url.empty()) {
        throw ValidationError("chat endpoint has no base URL");
    }
    json body;
    body["model"] = endpoint.model;
    json jmessages = json::array();
    for (const ChatMessage& m : messages) {
        jmessages.push_back({{"role", m.role}, {"content", m.content}});
    }
    body["messages"] = std::move(jmessages);
    if (!endpoint.extra_params_json.empty()) {
        json extra;
        try {
            extra = json::parse(endpoint.extra_params_json);
        } catch (const json::exception& e) {
            throw ParseError(std::string("extra provider parameters are not valid JSON: ") +
                             e.what());
        }
        if (!extra.is_object()) {
            throw ParseError("extra provider parameters must be a JSON object");
        }
        for (auto& [k, v] : extra.items()) {
            body[k] = v;
        }
    }

    httplib::Client client(endpoint.base_url);
    const auto timeout = std::chrono::milliseconds(endpoint.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Result res =
        client.Post(kChatPath, auth_headers(endpoint.api_key_env), body.dump(),
                    "application/json");
    if (!res) {
        throw TransportError("chat completion request to " + endpoint.base_url +
                             " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw TransportError("chat completion request to " + endpoint.base_url +
                             " returned status " + std::to_string(res->status));
    }
    try {
        json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed chat completion reply: ") + e.what());
    }
}

RemoteJudge::RemoteJudge(JudgeConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw ValidationError("judge config has no endpoint");
    }
    if (config_.max_retries < 0) {
        throw ValidationError("judge max_retries must be >= 0");
    }
}

EvaluatorVerdict RemoteJudge::evaluate_once(const EvaluationRequest& request) {
    const std::string prompt = render_judge_prompt(config_, request);
    const ChatEndpoint endpoint{config_.endpoint, config_.model, config_.api_key_env,
                                config_.timeout_ms, config_.sampling_params_json};
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        const auto started = std::chrono::steady_clock::now();
        try {
            std::string raw = chat_complete(endpoint, {{"user", prompt}});
            EvaluatorVerdict verdict;
            verdict.bit = parse_verdict(raw);
            verdict.raw = std::move(raw);
            verdict.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - started);
            return verdict;
        } catch (const TransportError& e) {
            last_error = e.what();
        } catch (const ParseError& e) {
            last_error = e.what();
        }
    }
    throw EvaluationError("judge pass failed after " +
                          std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

RemoteRephraser::RemoteRephraser(RephraserConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw ValidationError("rephraser config has no endpoint");
    }
}

std::string RemoteRephraser::rephrase(const RephraseRequest& request) {
    std::string transcript;
    for (const Utterance& u : request.context) {
        transcript += (u.role == Role::User ? "User: " : "Chatbot: ");
        transcript += u.text;
        transcript += "\n";
    }
    std::string prompt =
        "The final chatbot response in the transcript below was flagged for fostering a "
        "parasocial relationship. Rewrite that response so it stays helpful and kind but "
        "does not present the chatbot as a companion, does not flatter, and encourages the "
        "user's own judgment and human connections. Reply with the rewritten response only.\n"
        "\n"
        "Transcript:\n" +
        transcript +
        "\n"
        "Flagged response:\n" +
        request.flagged_response;

    const ChatEndpoint endpoint{config_.endpoint, config_.model, config_.api_key_env,
                                config_.timeout_ms, {}};
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        try {
            return chat_complete(endpoint, {{"user", prompt}});
        } catch (const TransportError& e) {
            last_error = e.what();
        } catch (const ParseError& e) {
            last_error = e.what();
        }
    }
    throw TransportError("rephraser failed after " + std::to_string(config_.max_retries + 1) +
                         " attempts: " + last_error);
}

RemoteUpstream::RemoteUpstream(UpstreamConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw ValidationError("upstream config has no endpoint");
    }
}

std::string RemoteUpstream::complete(const Conversation& conversation) {
    if (conversation.utterances.empty() ||
        conversation.utterances.back().role != Role::User) {
        throw ValidationError("upstream called with a conversation not ending in a user message");
    }
    std::vector<ChatMessage> messages;
    messages.reserve(conversation.utterances.size());
    for (const Utterance& u : conversation.utterances) {
        messages.push_back({u.role == Role::User ? "user" : "assistant", u.text});
    }
    const ChatEndpoint endpoint{config_.endpoint, config_.model, config_.api_key_env,
                                config_.timeout_ms, {}};
    try {
        return chat_complete(endpoint, messages);
    } catch (const ParseError& e) {
        // A garbled upstream body is an upstream failure from the gateway's
        // point of view.
        throw TransportError(std::string("upstream returned a malformed reply: ") + e.what());
    }
}

} // namespace chaperone
