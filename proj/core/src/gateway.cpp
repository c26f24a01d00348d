// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#include "chaperone/gateway.hpp"

#include <atomic>
#include <ctime>
#include <fstream>
#include <random>

#include <json.hpp>

#include "chaperone/errors.hpp"

namespace chaperone {

using nlohmann::json;

std::string_view session_status_name(SessionStatus status) noexcept {
    return status == SessionStatus::Active ? "active" : "blocked_stopped";
}

std::string_view outcome_kind_name(OutcomeKind kind) noexcept {
    switch (kind) {
    case OutcomeKind::Delivered:
        return "delivered";
    case OutcomeKind::DeliveredRephrased:
        return "delivered_rephrased";
    case OutcomeKind::BlockedPrompt:
        return "blocked_prompt";
    case OutcomeKind::BlockedResponse:
        return "blocked_response";
    }
    return "unknown";
}

void MemoryAuditSink::append(const AuditEntry& entry) {
    std::lock_guard<std::mutex> lock(mu_);
    entries_.push_back(entry);
}

std::vector<AuditEntry> MemoryAuditSink::entries() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_;
}

struct FileAuditSink::Impl {
    std::mutex mu;
    std::ofstream out;
};

FileAuditSink::FileAuditSink(const std::string& path) : impl_(std::make_unique<Impl>()) {
    impl_->out.open(path, std::ios::app);
    if (!impl_->out) {
        throw ParseError("cannot open audit log for appending: " + path);
    }
}

FileAuditSink::~FileAuditSink() = default;

void FileAuditSink::append(const AuditEntry& entry) {
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->out << audit_entry_to_json(entry) << "\n";
    impl_->out.flush();
}

std::string audit_entry_to_json(const AuditEntry& entry) {
    json j;
    j["timestamp"] = entry.timestamp;
    j["session_id"] = entry.session_id;
    j["unit_index"] = entry.unit_index;
    j["unit_kind"] = std::string(unit_kind_name(entry.unit_kind));
    j["votes"] = entry.votes;
    j["S"] = entry.score;
    j["rule"] = std::string(rule_name(entry.rule));
    j["total_passes"] = entry.total_passes;
    j["passes_executed"] = entry.passes_executed;
    j["decision"] = std::string(decision_name(entry.decision));
    j["action"] = entry.action;
    j["text"] = entry.text;
    return j.dump();
}

void ReplayUpstream::script(const std::string& conversation_id, int turn,
                            const std::string& reply) {
    std::lock_guard<std::mutex> lock(mu_);
    replies_[{conversation_id, turn}] = reply;
}

void ReplayUpstream::set_default(const std::string& reply) {
    std::lock_guard<std::mutex> lock(mu_);
    default_reply_ = reply;
}

std::string ReplayUpstream::complete(const Conversation& conversation) {
    if (conversation.utterances.empty() ||
        conversation.utterances.back().role != Role::User) {
        throw ValidationError("upstream called with a conversation not ending in a user message");
    }
    std::lock_guard<std::mutex> lock(mu_);
    ++calls_;
    const int turn = (conversation.unit_count() + 1) / 2;
    auto it = replies_.find({conversation.id, turn});
    if (it != replies_.end()) {
        return it->second;
    }
    if (default_reply_.has_value()) {
        return *default_reply_;
    }
    throw TransportError("replay upstream has no reply for (" + conversation.id + ", turn " +
                         std::to_string(turn) + ")");
}

int ReplayUpstream::calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
}

std::string default_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace {

std::function<std::string()> make_default_id_gen() {
    auto state = std::make_shared<std::pair<std::mutex, std::mt19937_64>>();
    state->second.seed(std::random_device{}());
    auto counter = std::make_shared<std::atomic<std::uint64_t>>(0);
    return [state, counter]() {
        std::uint64_t nonce = 0;
        {
            std::lock_guard<std::mutex> lock(state->first);
            nonce = state->second();
        }
        char buf[64];
        std::snprintf(buf, sizeof(buf), "sess-%llu-%016llx",
                      static_cast<unsigned long long>(counter->fetch_add(1) + 1),
                      static_cast<unsigned long long>(nonce));
        return std::string(buf);
    };
}

bool is_blank(const std::string& text) {
    return text.find_first_not_of(" \t\r\n") == std::string::npos;
}

} // namespace

struct GatewayService::Session {
    std::mutex mu; // serializes messages within the session
    Conversation conversation;
    SessionStatus status = SessionStatus::Active;
    std::string created_at;
    std::string updated_at;
};

GatewayService::GatewayService(EngineConfig config, GatewayDeps deps)
    : config_(config), deps_(std::move(deps)) {
    validate_engine_config(config_);
    if (!deps_.judge) {
        throw ValidationError("gateway needs a judge evaluator");
    }
    if (!deps_.upstream) {
        throw ValidationError("gateway needs an upstream client");
    }
    if (!deps_.session_id_gen) {
        deps_.session_id_gen = make_default_id_gen();
    }
    if (!deps_.clock) {
        deps_.clock = default_timestamp;
    }
    engine_ = std::make_unique<ChaperoneEngine>(config_, deps_.judge, deps_.rephraser);
}

std::string GatewayService::create_session() {
    std::lock_guard<std::mutex> lock(sessions_mu_);
    std::string id;
    do {
        id = deps_.session_id_gen();
    } while (sessions_.count(id) > 0);
    auto session = std::make_shared<Session>();
    session->conversation.id = id;
    session->created_at = deps_.clock();
    session->updated_at = session->created_at;
    sessions_.emplace(id, std::move(session));
    return id;
}

std::shared_ptr<GatewayService::Session>
GatewayService::find_session(const std::string& session_id) const {
    std::lock_guard<std::mutex> lock(sessions_mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        throw NotFoundError("unknown session: " + session_id);
    }
    return it->second;
}

void GatewayService::audit_round(const std::string& session_id, const TurnEvaluation& eval,
                                 std::string_view action, const std::string& text) {
    if (!deps_.audit) {
        return;
    }
    AuditEntry entry;
    entry.timestamp = deps_.clock();
    entry.session_id = session_id;
    entry.unit_index = eval.unit_index;
    entry.unit_kind = eval.kind;
    entry.votes = eval.votes;
    entry.score = eval.score;
    entry.rule = config_.rule;
    entry.total_passes = config_.passes;
    entry.passes_executed = eval.passes_executed;
    entry.decision = eval.decision;
    entry.action = std::string(action);
    entry.text = text;
    deps_.audit->append(entry);
}

MessageOutcome GatewayService::handle_user_message(const std::string& session_id,
                                                   const std::string& text) {
    if (is_blank(text)) {
        throw ValidationError("message text must not be empty");
    }
    auto session = find_session(session_id);
    std::lock_guard<std::mutex> lock(session->mu);
    if (session->status != SessionStatus::Active) {
        throw SessionStoppedError("session " + session_id + " is blocked_stopped");
    }

    Conversation& conv = session->conversation;
    MessageOutcome outcome;

    // (1) append the prompt, (2) gate it before the upstream ever sees it.
    conv.utterances.push_back({Role::User, text});
    const int prompt_index = conv.unit_count();
    TurnEvaluation prompt_eval;
    try {
        prompt_eval = engine_->assess_unit(session_id, prompt_index,
                                           context_prefix(conv, prompt_index));
    } catch (const EvaluationError&) {
        conv.utterances.pop_back(); // turn rolled back
        throw;
    }
    const bool prompt_blocked = prompt_eval.decision == Decision::Block;
    audit_round(session_id, prompt_eval, prompt_blocked ? "stop" : "none", text);
    outcome.tallies.push_back({prompt_eval.unit_index, prompt_eval.score, prompt_eval.decision});
    if (prompt_blocked) {
        // The prompt stays in the transcript for audit; the session ends.
        session->status = SessionStatus::BlockedStopped;
        session->updated_at = deps_.clock();
        outcome.kind = OutcomeKind::BlockedPrompt;
        return outcome;
    }

    // (3) fetch the reply; a dead upstream leaves the session unchanged.
    std::string reply;
    try {
        reply = deps_.upstream->complete(conv);
    } catch (const TransportError&) {
        conv.utterances.pop_back();
        throw;
    }

    // (4) append and gate the reply.
    conv.utterances.push_back({Role::Chatbot, reply});
    const int response_index = conv.unit_count();
    TurnEvaluation response_eval;
    try {
        response_eval = engine_->assess_unit(session_id, response_index,
                                             context_prefix(conv, response_index));
    } catch (const EvaluationError&) {
        conv.utterances.pop_back();
        conv.utterances.pop_back(); // turn rolled back
        throw;
    }
    if (response_eval.decision == Decision::Allow) {
        audit_round(session_id, response_eval, "none", reply);
        outcome.tallies.push_back(
            {response_eval.unit_index, response_eval.score, response_eval.decision});
        session->updated_at = deps_.clock();
        outcome.kind = OutcomeKind::Delivered;
        outcome.text = reply;
        return outcome;
    }

    // Blocked response: stop, or substitute a rephrasing that survives
    // re-assessment.
    ActionTaken action = engine_->apply_block_action(session_id, response_index,
                                                     context_prefix(conv, response_index));
    audit_round(session_id, response_eval,
                action.kind == ActionKind::Rephrased ? "rephrase" : "stop", reply);
    outcome.tallies.push_back(
        {response_eval.unit_index, response_eval.score, response_eval.decision});
    if (action.reassessment.has_value()) {
        const TurnEvaluation& re = *action.reassessment;
        audit_round(session_id, re, re.decision == Decision::Block ? "stop" : "none",
                    action.rephrased_text);
        outcome.tallies.push_back({re.unit_index, re.score, re.decision});
    }
    session->updated_at = deps_.clock();
    if (action.kind == ActionKind::Rephrased) {
        // The transcript carries the substitute; the audit log above kept
        // the original.
        conv.utterances.back().text = action.rephrased_text;
        outcome.kind = OutcomeKind::DeliveredRephrased;
        outcome.text = action.rephrased_text;
        return outcome;
    }
    session->status = SessionStatus::BlockedStopped;
    outcome.kind = OutcomeKind::BlockedResponse;
    return outcome;
}

SessionView GatewayService::get_session(const std::string& session_id) const {
    auto session = find_session(session_id);
    std::lock_guard<std::mutex> lock(session->mu);
    SessionView view;
    view.session_id = session_id;
    view.status = session->status;
    view.conversation = session->conversation;
    view.created_at = session->created_at;
    view.updated_at = session->updated_at;
    return view;
}

} // namespace chaperone
