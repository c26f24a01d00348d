// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chaperone/conversation.hpp"
#include "chaperone/engine.hpp"
#include "chaperone/evaluator.hpp"

namespace chaperone {

enum class RunMode : std::uint8_t { Live, FullScan };

std::string_view run_mode_name(RunMode mode) noexcept;
RunMode parse_run_mode(std::string_view name);

// Batch experiment description. Exactly one of trace_path / judge_config_path
// selects the evaluator (scripted replay vs remote judge).
struct ExperimentConfig {
    std::string corpus_path;
    std::string trace_path;
    std::string judge_config_path;
    std::vector<SensitivityRule> rules = all_rules();
    RunMode mode = RunMode::FullScan;
    int passes = 5;
    bool early_stop = false;
    int threads = 1;
    std::string out_dir;
};

// One unit of one conversation in a full scan, decided under every
// requested rule over one shared vote set.
struct UnitOutcome {
    std::string conversation_id;
    Label label = Label::Neutral;
    int unit_index = 0;
    UnitKind kind = UnitKind::Prompt;
    int score = 0; // S over the full N passes
    std::map<SensitivityRule, Decision> decisions;
};

struct ExperimentResults {
    RunMode mode = RunMode::FullScan;
    int passes = 5;
    std::vector<SensitivityRule> rules;
    // Live mode: per rule, one GateResult per conversation, sorted by
    // conversation id (aggregation is order-independent; sorting keeps the
    // emitted results identical across degrees of parallelism).
    std::map<SensitivityRule, std::vector<GateResult>> live_results;
    // Full-scan mode: sorted by (conversation id, unit index).
    std::vector<UnitOutcome> unit_outcomes;
    // Conversations that could not be evaluated ("<id>: <why>"). Metrics
    // refuse to run while this is non-empty.
    std::vector<std::string> errors;
    // Votes actually consumed, exportable for replay (remote runs).
    VoteTrace recorded_trace;
};

// First-block summary of one conversation under one rule.
struct ConvSummary {
    std::string conversation_id;
    Label label = Label::Neutral;
    std::optional<int> blocked_at;
    std::optional<UnitKind> detector;
};

struct RuleMetrics {
    SensitivityRule rule = SensitivityRule::Unanimous;
    std::map<Label, int> total_by_label;
    std::map<Label, int> blocked_by_label;
    int true_positives = 0;  // parasocial blocked
    int false_negatives = 0; // parasocial never blocked
    int false_positives = 0; // non-parasocial blocked
    int true_negatives = 0;
    double accuracy = 0.0; // (TP + TN) / total
    // Mean first-block index over blocked conversations; absent when none.
    std::optional<double> mean_detection_overall;
    std::map<Label, double> mean_detection_by_label; // labels with >= 1 block
    // Which evaluator side caught the block, over all blocked conversations.
    int detector_prompts = 0;
    int detector_responses = 0;
    std::vector<ConvSummary> conversations; // sorted by conversation id
};

// Flagged-unit counts for one (label, kind) row of the count table.
struct UnitCountRow {
    Label label = Label::Neutral;
    UnitKind kind = UnitKind::Prompt;
    int total_units = 0;
    std::map<SensitivityRule, int> flagged;
};

// 3 labels x 2 kinds, rows in fixed order (parasocial, sycophantic,
// neutral) x (prompt, response).
struct UnitCountTable {
    std::vector<SensitivityRule> rules;
    std::vector<UnitCountRow> rows;

    [[nodiscard]] int flagged_count(Label label, UnitKind kind, SensitivityRule rule) const;
};

struct MetricsReport {
    RunMode mode = RunMode::FullScan;
    int passes = 5;
    int total_conversations = 0;
    std::vector<RuleMetrics> rules;
    std::optional<UnitCountTable> unit_counts; // full-scan runs only
};

// Loads corpus and evaluator per cfg, then runs. Throws ParseError /
// ValidationError on unusable inputs; per-conversation evaluation failures
// land in ExperimentResults::errors instead.
ExperimentResults run_experiment(const ExperimentConfig& cfg);

// Core variant with injected corpus and evaluator (tests, determinism
// checks). The evaluator must be safe for concurrent calls.
ExperimentResults run_experiment(const ExperimentConfig& cfg, const Corpus& corpus,
                                 std::shared_ptr<Evaluator> evaluator);

// Aggregates results into every reported metric. The corpus supplies the
// ground-truth labels; every conversation in the results must appear in it
// with a label. Throws ValidationError on incomplete results.
MetricsReport compute_metrics(const ExperimentResults& results, const Corpus& corpus);

// The per-unit flagged-count matrix (full-scan results).
UnitCountTable tabulate_unit_counts(const std::vector<UnitOutcome>& outcomes);

// The deterministic vote trace over the 30 shipped fixtures that reproduces
// every published aggregate (accuracies, detection means, false-positive
// schedule, per-unit counts) at N=5.
VoteTrace synthesize_paper_trace();

// Fixture conversation ids, in corpus order: para-01..10, syco-01..10,
// neut-01..10.
const std::vector<std::string>& fixture_conversation_ids();

// Renders one report artifact: "table" (aligned text mirroring the
// flagged-unit matrix plus per-rule summaries), "records" (metrics JSON), or
// "series" (plot-ready CSV). Unknown format names are ValidationErrors,
// which the CLI reports as usage errors.
std::string emit_report(const MetricsReport& report, std::string_view format);

// Writes metrics.json, table.txt, and series.csv into out_dir (created if
// missing). Throws ParseError when the directory cannot be written.
void write_report_files(const MetricsReport& report, const std::string& out_dir);

// Renderers behind emit_report, exposed for tests.
std::string render_table(const MetricsReport& report);
std::string render_series_csv(const MetricsReport& report);
std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& json_text);

// One machine-readable record per line: per (rule, conversation) in live
// mode, per unit in full-scan mode.
void write_outcomes(std::ostream& out, const ExperimentResults& results);

} // namespace chaperone
