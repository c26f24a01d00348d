// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chaperone/conversation.hpp"
#include "chaperone/evaluator.hpp"
#include "chaperone/vote_policy.hpp"

namespace chaperone {

enum class BlockAction : std::uint8_t { Stop, Rephrase };

std::string_view block_action_name(BlockAction action) noexcept;
BlockAction parse_block_action(std::string_view name);

struct EngineConfig {
    int passes = 5;
    SensitivityRule rule = SensitivityRule::Unanimous;
    BlockAction block_action = BlockAction::Stop;
    bool early_stop = false;
    // Optional cap on how much of the prefix the evaluator sees (a trailing
    // window including the unit). Unset = full prefix, the default.
    std::optional<int> max_context_units;
};

void validate_engine_config(const EngineConfig& config);

// A flagged chatbot response handed to the rephraser, with its context.
struct RephraseRequest {
    std::span<const Utterance> context; // prefix whose last entry is the flagged response
    std::string flagged_response;
};

class Rephraser {
public:
    virtual ~Rephraser() = default;
    // Returns the substitute text. Throws EvaluationError / TransportError
    // on failure; the engine then degrades the action to Stop.
    virtual std::string rephrase(const RephraseRequest& request) = 0;
};

// Fixture-backed rephraser: exact original text -> rephrased text.
// Unknown text is a failure (EvaluationError), not an identity rewrite.
class ScriptedRephraser : public Rephraser {
public:
    void script(const std::string& original, const std::string& rephrased);
    std::string rephrase(const RephraseRequest& request) override;

private:
    std::unordered_map<std::string, std::string> by_text_;
};

// Outcome of the N passes over one unit.
struct TurnEvaluation {
    int unit_index = 0;
    UnitKind kind = UnitKind::Prompt;
    std::vector<int> votes; // votes actually collected, pass order
    int score = 0;          // S over the collected votes
    Decision decision = Decision::Allow;
    int passes_executed = 0;
};

enum class ActionKind : std::uint8_t { Stop, Rephrased };

// What the engine did about a blocked unit.
struct ActionTaken {
    ActionKind kind = ActionKind::Stop;
    std::string original_text;  // the flagged text
    // The substitute text whenever the rephraser produced one, even if the
    // re-assessment then rejected it (kind tells which happened).
    std::string rephrased_text;
    // Re-assessment of the rephrased text (passes N+1..2N), when one ran.
    std::optional<TurnEvaluation> reassessment;
    // Why a rephrase attempt degraded to Stop, empty otherwise.
    std::string note;
};

// Per-conversation gating outcome.
struct GateResult {
    std::string conversation_id;
    std::optional<int> blocked_at;       // first unit whose decision was Block
    std::optional<UnitKind> detector;    // kind of that unit
    std::vector<TurnEvaluation> evaluations;
    std::optional<ActionTaken> action_taken; // live mode, when blocked
    std::string error; // non-empty when an evaluator failure aborted the run
};

// Turn-by-turn gating: builds prefixes, runs up to N passes per unit
// (short-circuited when early_stop is on), applies the sensitivity rule,
// and executes the block action.
class ChaperoneEngine {
public:
    // rephraser may be null unless block_action == Rephrase is exercised.
    ChaperoneEngine(EngineConfig config, std::shared_ptr<Evaluator> evaluator,
                    std::shared_ptr<Rephraser> rephraser = nullptr);

    // Runs up to N passes over the unit at the end of `context`. Pass
    // numbering starts at first_pass (re-assessment uses N+1). Throws
    // EvaluationError when a pass fails; no decision is fabricated.
    TurnEvaluation assess_unit(const std::string& conversation_id, int unit_index,
                               std::span<const Utterance> context, int first_pass = 1);

    // Walks units 1..T in order, stops at the first Block, applies the
    // block action. Evaluator failures are captured in GateResult::error
    // together with the evaluations finished so far.
    GateResult run_live(const Conversation& conv);

    // Assesses every unit regardless of earlier blocks (analysis mode).
    // Evaluator failure aborts with the partial results marked via error.
    GateResult run_full_scan(const Conversation& conv);

    // Decides what happens to a flagged unit: prompts always Stop; responses
    // Stop or Rephrase per config. A rephrased response is re-assessed once
    // (passes N+1..2N); still-blocked or failed rephrasing degrades to Stop
    // with a note.
    ActionTaken apply_block_action(const std::string& conversation_id, int unit_index,
                                   std::span<const Utterance> context);

    [[nodiscard]] const EngineConfig& config() const noexcept { return config_; }

private:
    EngineConfig config_;
    std::shared_ptr<Evaluator> evaluator_;
    std::shared_ptr<Rephraser> rephraser_;
};

} // namespace chaperone
