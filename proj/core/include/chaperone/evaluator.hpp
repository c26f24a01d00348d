// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chaperone/conversation.hpp"

namespace chaperone {

// One evaluation pass against one unit. `context` is the full dialogue
// prefix ending at the unit under assessment; `pass_index` is 1-based.
// Pass indices above the configured pass count are legal: re-assessment
// after a rephrase continues the numbering (N+1..2N).
struct EvaluationRequest {
    std::string conversation_id;
    int unit_index = 0;
    std::span<const Utterance> context;
    int pass_index = 0;
};

// Outcome of a single pass. bit is the vote (1 = parasocial relationship
// identified); raw keeps the judge's reply when one exists.
struct EvaluatorVerdict {
    int bit = 0;
    std::string raw;
    std::optional<std::chrono::milliseconds> latency;
};

// A vote source. evaluate_once() throws EvaluationError when it cannot
// produce a verdict for the request. Implementations must be safe for
// concurrent calls.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual EvaluatorVerdict evaluate_once(const EvaluationRequest& request) = 0;
};

// Remote judge settings. api_key_env names the environment variable that
// holds the credential — the key itself never appears in config files.
struct JudgeConfig {
    std::string endpoint;
    std::string model = "claude-opus-4-1-20250805";
    std::string prompt_template; // empty -> default_judge_prompt_template()
    std::string api_key_env = "CHAPERONE_JUDGE_API_KEY";
    int timeout_ms = 30000;
    int max_retries = 2;
    // Opaque provider parameters merged verbatim into the request body
    // (e.g. {"temperature": 1.0}). Empty means provider defaults.
    std::string sampling_params_json;
};

// Recorded votes keyed by (conversation id, unit index). Pass p reads
// votes[p-1]; the vote list length bounds how many passes the trace can
// answer for that unit. Closed world: anything absent is an error, never
// an implicit 0.
class VoteTrace {
public:
    // Throws ValidationError on empty/invalid votes or duplicate key.
    void add(const std::string& conversation_id, int unit_index, std::vector<int> votes);

    [[nodiscard]] bool contains(const std::string& conversation_id, int unit_index) const;
    // Throws EvaluationError when the key is absent.
    [[nodiscard]] const std::vector<int>& votes_for(const std::string& conversation_id,
                                                    int unit_index) const;
    [[nodiscard]] std::size_t entry_count() const noexcept;
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

    // JSONL, one unit per line:
    //   {"conversation_id": ..., "unit_index": ..., "votes": [0,1,...]}
    // Vote lists may vary in length between lines. Malformed records,
    // non-binary votes, and duplicate keys are ParseErrors.
    static VoteTrace parse(std::istream& in);
    static VoteTrace load(const std::string& path);
    void write(std::ostream& out) const;
    void save(const std::string& path) const;

    bool operator==(const VoteTrace& other) const { return entries_ == other.entries_; }

private:
    // conversation id -> unit index -> votes, ordered for stable writes.
    std::map<std::string, std::map<int, std::vector<int>>> entries_;
};

// Replays a VoteTrace. Missing unit or pass index beyond the recorded list
// throws EvaluationError (with the missing key in the message).
class TraceEvaluator : public Evaluator {
public:
    explicit TraceEvaluator(VoteTrace trace) : trace_(std::move(trace)) {}

    EvaluatorVerdict evaluate_once(const EvaluationRequest& request) override;

    [[nodiscard]] const VoteTrace& trace() const noexcept { return trace_; }

private:
    VoteTrace trace_;
};

// Deterministic stand-in for a live judge, keyed by the unit's text rather
// than conversation identity, so it works for sessions with generated ids.
// Pass p over a known text reads votes[(p-1) % votes.size()]; unknown text
// votes 0.
class ScriptedJudge : public Evaluator {
public:
    void script(const std::string& unit_text, std::vector<int> votes);

    EvaluatorVerdict evaluate_once(const EvaluationRequest& request) override;

private:
    std::unordered_map<std::string, std::vector<int>> by_text_;
};

// Caching decorator: the first call for a (conversation, unit, pass) key
// hits the inner evaluator, later calls replay the stored bit. Guarantees
// that several rule runs over one corpus share a single vote set, and makes
// the votes exportable as a trace. Thread-safe.
class RecordingEvaluator : public Evaluator {
public:
    explicit RecordingEvaluator(std::shared_ptr<Evaluator> inner);

    EvaluatorVerdict evaluate_once(const EvaluationRequest& request) override;

    // Snapshot of the recorded votes. Each unit exports its longest
    // contiguous pass prefix 1..k (the trace format is positional and
    // cannot express gaps).
    [[nodiscard]] VoteTrace recorded() const;

private:
    std::shared_ptr<Evaluator> inner_;
    mutable std::mutex mu_;
    std::map<std::string, std::map<int, std::map<int, int>>> cache_;
};

// Fills {transcript} and {unit} in the config's template. The transcript is
// the speaker-tagged context ("User: ..." / "Chatbot: ..."), the unit is the
// final context entry restated on its own. Throws ValidationError when the
// template lacks either placeholder.
std::string render_judge_prompt(const JudgeConfig& config, const EvaluationRequest& request);

// The question every pass puts to the judge.
std::string_view default_judge_prompt_template();

// Maps a judge reply onto a vote: after trimming, a reply starting with the
// word YES (any case) is 1, NO is 0, anything else throws ParseError.
int parse_verdict(std::string_view reply);

} // namespace chaperone
