// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chaperone/conversation.hpp"
#include "chaperone/engine.hpp"

namespace chaperone {

class NotFoundError : public std::runtime_error {
public:
    explicit NotFoundError(const std::string& msg) : std::runtime_error(msg) {}
};

// A stopped session refuses further messages, permanently.
class SessionStoppedError : public std::runtime_error {
public:
    explicit SessionStoppedError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class SessionStatus : std::uint8_t { Active, BlockedStopped };

std::string_view session_status_name(SessionStatus status) noexcept;

enum class OutcomeKind : std::uint8_t {
    Delivered,
    DeliveredRephrased,
    BlockedPrompt,
    BlockedResponse,
};

std::string_view outcome_kind_name(OutcomeKind kind) noexcept;

// One assessment round as shown to the client.
struct TallySummary {
    int unit_index = 0;
    int score = 0;
    Decision decision = Decision::Allow;
};

struct MessageOutcome {
    OutcomeKind kind = OutcomeKind::Delivered;
    std::string text; // delivered text; empty for Blocked* outcomes
    std::vector<TallySummary> tallies; // every assessment round of this turn, in order
};

// Append-only record of one assessment round. `text` is the unit exactly as
// assessed, so a rephrased delivery still leaves the original flagged text
// in the log.
struct AuditEntry {
    std::string timestamp;
    std::string session_id;
    int unit_index = 0;
    UnitKind unit_kind = UnitKind::Prompt;
    std::vector<int> votes;
    int score = 0;
    SensitivityRule rule = SensitivityRule::Unanimous;
    int total_passes = 0; // configured N, for replaying early-stopped tallies
    int passes_executed = 0;
    Decision decision = Decision::Allow;
    std::string action; // "none" | "stop" | "rephrase"
    std::string text;
};

class AuditSink {
public:
    virtual ~AuditSink() = default;
    virtual void append(const AuditEntry& entry) = 0;
};

// Keeps entries in memory; for tests and replay checks.
class MemoryAuditSink : public AuditSink {
public:
    void append(const AuditEntry& entry) override;
    [[nodiscard]] std::vector<AuditEntry> entries() const;

private:
    mutable std::mutex mu_;
    std::vector<AuditEntry> entries_;
};

// Appends one JSON record per line to a file, flushed per entry.
class FileAuditSink : public AuditSink {
public:
    explicit FileAuditSink(const std::string& path);
    ~FileAuditSink() override;
    void append(const AuditEntry& entry) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string audit_entry_to_json(const AuditEntry& entry);

// The chatbot being chaperoned. complete() is called with a conversation
// ending in a User utterance and returns the reply text.
class Upstream {
public:
    virtual ~Upstream() = default;
    virtual std::string complete(const Conversation& conversation) = 0;
};

// Scripted upstream for tests: replies keyed by (conversation id, turn)
// where turn counts user messages (turn 1 = reply to the first prompt).
// Unknown keys fall back to the default reply, or fail like a dead
// upstream when none is set. Counts every call.
class ReplayUpstream : public Upstream {
public:
    void script(const std::string& conversation_id, int turn, const std::string& reply);
    void set_default(const std::string& reply);
    std::string complete(const Conversation& conversation) override;
    [[nodiscard]] int calls() const;

private:
    mutable std::mutex mu_;
    std::map<std::pair<std::string, int>, std::string> replies_;
    std::optional<std::string> default_reply_;
    int calls_ = 0;
};

// Read-only session snapshot.
struct SessionView {
    std::string session_id;
    SessionStatus status = SessionStatus::Active;
    Conversation conversation; // rephrasings already applied
    std::string created_at;
    std::string updated_at;
};

// Injectable collaborators. Defaults give random session ids and wall-clock
// timestamps; tests swap both for determinism.
struct GatewayDeps {
    std::shared_ptr<Evaluator> judge;
    std::shared_ptr<Rephraser> rephraser; // may be null (block_action Stop)
    std::shared_ptr<Upstream> upstream;
    std::shared_ptr<AuditSink> audit;     // may be null
    std::function<std::string()> session_id_gen; // null -> built-in generator
    std::function<std::string()> clock;          // null -> UTC wall clock
};

// Proxy between a chat client and the upstream chatbot: prompts are judged
// before the upstream sees them, replies are judged before delivery, every
// assessment round is audit-logged. Distinct sessions proceed concurrently;
// messages within one session are serialized in arrival order.
class GatewayService {
public:
    GatewayService(EngineConfig config, GatewayDeps deps);

    std::string create_session();

    // Runs the full prompt-gate / upstream / response-gate turn. Throws
    // NotFoundError, SessionStoppedError, ValidationError (empty text),
    // TransportError (upstream failure; session unchanged), or
    // EvaluationError (judge failure; turn rolled back).
    MessageOutcome handle_user_message(const std::string& session_id, const std::string& text);

    SessionView get_session(const std::string& session_id) const;

    [[nodiscard]] const EngineConfig& config() const noexcept { return config_; }

private:
    struct Session;

    std::shared_ptr<Session> find_session(const std::string& session_id) const;
    void audit_round(const std::string& session_id, const TurnEvaluation& eval,
                     std::string_view action, const std::string& text);

    EngineConfig config_;
    GatewayDeps deps_;
    std::unique_ptr<ChaperoneEngine> engine_;
    mutable std::mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

std::string default_timestamp();

} // namespace chaperone
