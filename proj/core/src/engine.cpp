// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#include "chaperone/engine.hpp"

#include "chaperone/errors.hpp"

namespace chaperone {

std::string_view block_action_name(BlockAction action) noexcept {
    return action == BlockAction::Stop ? "stop" : "rephrase";
}

BlockAction parse_block_action(std::string_view name) {
    if (name == "stop") {
        return BlockAction::Stop;
    }
    if (name == "rephrase") {
        return BlockAction::Rephrase;
    }
    throw ParseError("unknown block action: '" + std::string(name) +
                     "' (expected stop | rephrase)");
}

void validate_engine_config(const EngineConfig& config) {
    if (config.passes < 1) {
        throw ValidationError("engine passes must be >= 1, got " +
                              std::to_string(config.passes));
    }
    if (config.max_context_units.has_value() && *config.max_context_units < 1) {
        throw ValidationError("max_context_units must be >= 1 when set, got " +
                              std::to_string(*config.max_context_units));
    }
    threshold(config.rule, config.passes); // rejects unknown rules
}

void ScriptedRephraser::script(const std::string& original, const std::string& rephrased) {
    if (rephrased.empty()) {
        throw ValidationError("rephrased text must not be empty");
    }
    by_text_[original] = rephrased;
}

std::string ScriptedRephraser::rephrase(const RephraseRequest& request) {
    auto it = by_text_.find(request.flagged_response);
    if (it == by_text_.end()) {
        throw EvaluationError("no scripted rephrasing for the flagged response");
    }
    return it->second;
}

ChaperoneEngine::ChaperoneEngine(EngineConfig config, std::shared_ptr<Evaluator> evaluator,
                                 std::shared_ptr<Rephraser> rephraser)
    : config_(config), evaluator_(std::move(evaluator)), rephraser_(std::move(rephraser)) {
    validate_engine_config(config_);
    if (!evaluator_) {
        throw ValidationError("engine needs an evaluator");
    }
}

TurnEvaluation ChaperoneEngine::assess_unit(const std::string& conversation_id, int unit_index,
                                            std::span<const Utterance> context, int first_pass) {
    if (context.empty()) {
        throw ValidationError("cannot assess a unit with an empty context");
    }
    if (first_pass < 1) {
        throw ValidationError("first pass index must be >= 1");
    }
    std::span<const Utterance> window = context;
    if (config_.max_context_units.has_value() &&
        static_cast<int>(window.size()) > *config_.max_context_units) {
        window = window.last(static_cast<std::size_t>(*config_.max_context_units));
    }

    const int n = config_.passes;
    TurnEvaluation eval;
    eval.unit_index = unit_index;
    eval.kind = unit_kind(unit_index);

    // Passes run in pass-index order so early-stopped tallies are
    // order-deterministic.
    PartialDecision partial = PartialDecision::Undecided;
    for (int i = 0; i < n; ++i) {
        EvaluationRequest request{conversation_id, unit_index, window, first_pass + i};
        eval.votes.push_back(evaluator_->evaluate_once(request).bit);
        if (config_.early_stop) {
            partial = partial_decision(config_.rule, n, eval.votes);
            if (partial != PartialDecision::Undecided) {
                break;
            }
        }
    }
    eval.passes_executed = static_cast<int>(eval.votes.size());
    VoteTally t = tally(eval.votes);
    eval.score = t.score();
    if (eval.passes_executed == n) {
        eval.decision = decide(config_.rule, t);
    } else {
        // Early-stopped: the partial verdict is final by construction.
        eval.decision =
            partial == PartialDecision::DecidedBlock ? Decision::Block : Decision::Allow;
    }
    return eval;
}

GateResult ChaperoneEngine::run_live(const Conversation& conv) {
    validate_conversation(conv);
    GateResult result;
    result.conversation_id = conv.id;
    for (int k = 1; k <= conv.unit_count(); ++k) {
        TurnEvaluation eval;
        try {
            eval = assess_unit(conv.id, k, context_prefix(conv, k));
        } catch (const EvaluationError& e) {
            result.error = e.what();
            return result;
        }
        result.evaluations.push_back(eval);
        if (eval.decision == Decision::Block) {
            result.blocked_at = k;
            result.detector = eval.kind;
            result.action_taken = apply_block_action(conv.id, k, context_prefix(conv, k));
            break; // no evaluations past the block in live mode
        }
    }
    return result;
}

GateResult ChaperoneEngine::run_full_scan(const Conversation& conv) {
    validate_conversation(conv);
    GateResult result;
    result.conversation_id = conv.id;
    for (int k = 1; k <= conv.unit_count(); ++k) {
        TurnEvaluation eval;
        try {
            eval = assess_unit(conv.id, k, context_prefix(conv, k));
        } catch (const EvaluationError& e) {
            result.error = e.what();
            return result;
        }
        result.evaluations.push_back(eval);
        if (eval.decision == Decision::Block && !result.blocked_at.has_value()) {
            result.blocked_at = k;
            result.detector = eval.kind;
        }
    }
    return result;
}

ActionTaken ChaperoneEngine::apply_block_action(const std::string& conversation_id,
                                                int unit_index,
                                                std::span<const Utterance> context) {
    if (context.empty()) {
        throw ValidationError("cannot apply a block action over an empty context");
    }
    ActionTaken action;
    action.original_text = context.back().text;

    // Prompts carry nothing of the chatbot's to rephrase: always Stop.
    if (unit_kind(unit_index) == UnitKind::Prompt ||
        config_.block_action == BlockAction::Stop) {
        return action;
    }
    if (!rephraser_) {
        action.note = "no rephraser configured; stopped instead";
        return action;
    }

    std::string rephrased;
    try {
        rephrased = rephraser_->rephrase({context, context.back().text});
    } catch (const std::runtime_error& e) {
        action.note = std::string("rephrase failed: ") + e.what() + "; stopped instead";
        return action;
    }

    // Re-assess the substitute once with the same machinery; pass numbering
    // continues at N+1 so recorded votes stay distinguishable.
    action.rephrased_text = rephrased;
    std::vector<Utterance> patched(context.begin(), context.end());
    patched.back().text = rephrased;
    TurnEvaluation reassessment;
    try {
        reassessment = assess_unit(conversation_id, unit_index, patched, config_.passes + 1);
    } catch (const EvaluationError& e) {
        action.note = std::string("rephrase re-assessment failed: ") + e.what() +
                      "; stopped instead";
        return action;
    }
    action.reassessment = reassessment;
    if (reassessment.decision == Decision::Block) {
        action.note = "rephrased text still blocked; stopped instead";
        return action;
    }
    action.kind = ActionKind::Rephrased;
    return action;
}

} // namespace chaperone
