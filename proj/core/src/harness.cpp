// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#include "chaperone/harness.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "chaperone/config.hpp"
#include "chaperone/errors.hpp"
#include "chaperone/remote.hpp"
#include "chaperone/vote_policy.hpp"

namespace chaperone {

namespace {

// Everything one worker produces for one conversation, filled into a
// preallocated slot so the assembly order never depends on thread timing.
struct ConvOutput {
    std::map<SensitivityRule, GateResult> live;
    std::vector<UnitOutcome> units;
    std::string error;
};

void validate_experiment_config(const ExperimentConfig& cfg) {
    if (cfg.passes < 1) {
        throw ValidationError("experiment passes must be >= 1");
    }
    if (cfg.threads < 1) {
        throw ValidationError("experiment threads must be >= 1");
    }
    if (cfg.rules.empty()) {
        throw ValidationError("experiment needs at least one sensitivity rule");
    }
    auto sorted = cfg.rules;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ValidationError("experiment rules must be distinct");
    }
}

void process_conversation(const ExperimentConfig& cfg, const Conversation& conv,
                          const std::shared_ptr<RecordingEvaluator>& recorder, ConvOutput& out) {
    try {
        if (cfg.mode == RunMode::Live) {
            for (SensitivityRule rule : cfg.rules) {
                EngineConfig ec;
                ec.passes = cfg.passes;
                ec.rule = rule;
                ec.block_action = BlockAction::Stop;
                ec.early_stop = cfg.early_stop;
                ChaperoneEngine engine(ec, recorder);
                GateResult res = engine.run_live(conv);
                if (!res.error.empty() && out.error.empty()) {
                    out.error = conv.id + ": " + res.error;
                }
                out.live.emplace(rule, std::move(res));
            }
        } else {
            // Full scan shares one N-pass vote set per unit across every
            // rule; early stopping would leave scores undefined, so it is
            // ignored here (engine-level scans still honour it).
            for (int k = 1; k <= conv.unit_count(); ++k) {
                const auto context = context_prefix(conv, k);
                std::vector<int> votes;
                votes.reserve(static_cast<std::size_t>(cfg.passes));
                for (int p = 1; p <= cfg.passes; ++p) {
                    EvaluationRequest req;
                    req.conversation_id = conv.id;
                    req.unit_index = k;
                    req.context = context;
                    req.pass_index = p;
                    votes.push_back(recorder->evaluate_once(req).bit);
                }
                const VoteTally t = tally(votes);
                UnitOutcome u;
                u.conversation_id = conv.id;
                u.label = conv.label.value();
                u.unit_index = k;
                u.kind = unit_kind(k);
                u.score = t.score();
                for (SensitivityRule rule : cfg.rules) {
                    u.decisions.emplace(rule, decide(rule, t));
                }
                out.units.push_back(std::move(u));
            }
        }
    } catch (const std::exception& e) {
        if (out.error.empty()) {
            out.error = conv.id + ": " + e.what();
        }
    }
}

} // namespace

std::string_view run_mode_name(RunMode mode) noexcept {
    switch (mode) {
    case RunMode::Live:
        return "live";
    case RunMode::FullScan:
        return "full-scan";
    }
    return "full-scan";
}

RunMode parse_run_mode(std::string_view name) {
    if (name == "live") {
        return RunMode::Live;
    }
    if (name == "full-scan") {
        return RunMode::FullScan;
    }
    throw ParseError("unknown run mode '" + std::string(name) + "' (expected live or full-scan)");
}

ExperimentResults run_experiment(const ExperimentConfig& cfg) {
    if (cfg.corpus_path.empty()) {
        throw ValidationError("experiment needs a corpus path");
    }
    const bool has_trace = !cfg.trace_path.empty();
    const bool has_judge = !cfg.judge_config_path.empty();
    if (has_trace == has_judge) {
        throw ValidationError("experiment needs exactly one of a vote trace or a judge config");
    }
    const Corpus corpus = load_corpus(cfg.corpus_path);
    std::shared_ptr<Evaluator> evaluator;
    if (has_trace) {
        evaluator = std::make_shared<TraceEvaluator>(VoteTrace::load(cfg.trace_path));
    } else {
        evaluator = std::make_shared<RemoteJudge>(load_judge_config(cfg.judge_config_path));
    }
    return run_experiment(cfg, corpus, std::move(evaluator));
}

ExperimentResults run_experiment(const ExperimentConfig& cfg, const Corpus& corpus,
                                 std::shared_ptr<Evaluator> evaluator) {
    validate_experiment_config(cfg);
    if (!evaluator) {
        throw ValidationError("experiment needs an evaluator");
    }
    std::set<std::string> seen_ids;
    for (const Conversation& conv : corpus) {
        validate_conversation(conv);
        if (!conv.label) {
            throw ValidationError("conversation '" + conv.id +
                                  "' has no label; experiments need ground truth");
        }
        if (!seen_ids.insert(conv.id).second) {
            throw ValidationError("duplicate conversation id '" + conv.id + "'");
        }
    }

    auto recorder = std::make_shared<RecordingEvaluator>(std::move(evaluator));

    ExperimentResults results;
    results.mode = cfg.mode;
    results.passes = cfg.passes;
    results.rules = cfg.rules;

    std::vector<ConvOutput> outputs(corpus.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= corpus.size()) {
                return;
            }
            process_conversation(cfg, corpus[i], recorder, outputs[i]);
        }
    };

    const int thread_count =
        std::min<int>(cfg.threads, static_cast<int>(std::max<std::size_t>(corpus.size(), 1)));
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(thread_count));
        for (int i = 0; i < thread_count; ++i) {
            threads.emplace_back(worker);
        }
        for (std::thread& t : threads) {
            t.join();
        }
    }

    // Results are emitted sorted by conversation id so the output never
    // depends on corpus order or the degree of parallelism.
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(),
              [&corpus](std::size_t a, std::size_t b) { return corpus[a].id < corpus[b].id; });

    for (std::size_t i : order) {
        ConvOutput& out = outputs[i];
        if (!out.error.empty()) {
            results.errors.push_back(out.error);
        }
        if (cfg.mode == RunMode::Live) {
            for (SensitivityRule rule : cfg.rules) {
                auto it = out.live.find(rule);
                if (it != out.live.end()) {
                    results.live_results[rule].push_back(std::move(it->second));
                } else {
                    GateResult placeholder;
                    placeholder.conversation_id = corpus[i].id;
                    placeholder.error = out.error.empty() ? "not evaluated" : out.error;
                    results.live_results[rule].push_back(std::move(placeholder));
                }
            }
        } else {
            for (UnitOutcome& u : out.units) {
                results.unit_outcomes.push_back(std::move(u));
            }
        }
    }
    results.recorded_trace = recorder->recorded();
    return results;
}

namespace {

ConvSummary summarize_gate_result(const GateResult& res, Label label) {
    ConvSummary s;
    s.conversation_id = res.conversation_id;
    s.label = label;
    s.blocked_at = res.blocked_at;
    s.detector = res.detector;
    return s;
}

Label corpus_label(const std::map<std::string, Label>& labels, const std::string& id) {
    const auto it = labels.find(id);
    if (it == labels.end()) {
        throw ValidationError("conversation '" + id + "' is missing from the labelled corpus");
    }
    return it->second;
}

} // namespace

MetricsReport compute_metrics(const ExperimentResults& results, const Corpus& corpus) {
    if (!results.errors.empty()) {
        throw ValidationError("experiment results carry " + std::to_string(results.errors.size()) +
                              " error(s); first: " + results.errors.front());
    }
    if (results.rules.empty()) {
        throw ValidationError("experiment results carry no rules");
    }

    std::map<std::string, Label> labels;
    for (const Conversation& conv : corpus) {
        if (conv.label) {
            labels.emplace(conv.id, *conv.label);
        }
    }

    // One first-block summary per (rule, conversation).
    std::map<SensitivityRule, std::vector<ConvSummary>> per_rule;
    if (results.mode == RunMode::Live) {
        for (SensitivityRule rule : results.rules) {
            const auto it = results.live_results.find(rule);
            if (it == results.live_results.end()) {
                throw ValidationError("results lack the '" + std::string(rule_name(rule)) +
                                      "' rule");
            }
            auto& summaries = per_rule[rule];
            for (const GateResult& res : it->second) {
                if (!res.error.empty()) {
                    throw ValidationError("result for '" + res.conversation_id +
                                          "' carries an error: " + res.error);
                }
                summaries.push_back(
                    summarize_gate_result(res, corpus_label(labels, res.conversation_id)));
            }
        }
    } else {
        // Group unit outcomes by conversation, preserving corpus order.
        std::vector<std::string> order;
        std::map<std::string, std::vector<const UnitOutcome*>> grouped;
        for (const UnitOutcome& u : results.unit_outcomes) {
            auto [it, inserted] = grouped.try_emplace(u.conversation_id);
            if (inserted) {
                order.push_back(u.conversation_id);
            }
            it->second.push_back(&u);
        }
        for (const std::string& id : order) {
            auto& units = grouped[id];
            std::sort(units.begin(), units.end(), [](const UnitOutcome* a, const UnitOutcome* b) {
                return a->unit_index < b->unit_index;
            });
            const Label label = corpus_label(labels, id);
            if (!units.empty() && units.front()->label != label) {
                throw ValidationError("conversation '" + id +
                                      "' label disagrees with the corpus");
            }
            for (SensitivityRule rule : results.rules) {
                ConvSummary s;
                s.conversation_id = id;
                s.label = label;
                for (const UnitOutcome* u : units) {
                    const auto dit = u->decisions.find(rule);
                    if (dit == u->decisions.end()) {
                        throw ValidationError("unit outcome for '" + id + "' lacks the '" +
                                              std::string(rule_name(rule)) + "' rule");
                    }
                    if (dit->second == Decision::Block) {
                        s.blocked_at = u->unit_index;
                        s.detector = u->kind;
                        break;
                    }
                }
                per_rule[rule].push_back(std::move(s));
            }
        }
    }

    MetricsReport report;
    report.mode = results.mode;
    report.passes = results.passes;
    report.total_conversations = static_cast<int>(per_rule.begin()->second.size());
    for (const auto& [rule, summaries] : per_rule) {
        if (static_cast<int>(summaries.size()) != report.total_conversations) {
            throw ValidationError("rules disagree on the number of conversations");
        }
        (void)rule;
    }

    for (SensitivityRule rule : results.rules) {
        const std::vector<ConvSummary>& summaries = per_rule.at(rule);
        RuleMetrics m;
        m.rule = rule;
        double sum_overall = 0.0;
        int blocked_overall = 0;
        std::map<Label, double> sum_by_label;
        for (const ConvSummary& s : summaries) {
            m.total_by_label[s.label] += 1;
            const bool positive = s.label == Label::Parasocial;
            if (s.blocked_at) {
                m.blocked_by_label[s.label] += 1;
                blocked_overall += 1;
                sum_overall += *s.blocked_at;
                sum_by_label[s.label] += *s.blocked_at;
                if (s.detector == UnitKind::Prompt) {
                    m.detector_prompts += 1;
                } else {
                    m.detector_responses += 1;
                }
                (positive ? m.true_positives : m.false_positives) += 1;
            } else {
                (positive ? m.false_negatives : m.true_negatives) += 1;
            }
        }
        const int total = static_cast<int>(summaries.size());
        m.accuracy =
            total > 0 ? static_cast<double>(m.true_positives + m.true_negatives) / total : 0.0;
        if (blocked_overall > 0) {
            m.mean_detection_overall = sum_overall / blocked_overall;
        }
        for (const auto& [label, sum] : sum_by_label) {
            m.mean_detection_by_label[label] = sum / m.blocked_by_label.at(label);
        }
        m.conversations = summaries;
        report.rules.push_back(std::move(m));
    }

    if (results.mode == RunMode::FullScan) {
        report.unit_counts = tabulate_unit_counts(results.unit_outcomes);
    }
    return report;
}

int UnitCountTable::flagged_count(Label label, UnitKind kind, SensitivityRule rule) const {
    for (const UnitCountRow& row : rows) {
        if (row.label == label && row.kind == kind) {
            const auto it = row.flagged.find(rule);
            return it == row.flagged.end() ? 0 : it->second;
        }
    }
    return 0;
}

UnitCountTable tabulate_unit_counts(const std::vector<UnitOutcome>& outcomes) {
    UnitCountTable table;
    if (!outcomes.empty()) {
        for (SensitivityRule rule : all_rules()) {
            if (outcomes.front().decisions.count(rule) != 0) {
                table.rules.push_back(rule);
            }
        }
        if (table.rules.size() != outcomes.front().decisions.size()) {
            throw ValidationError("unit outcomes carry an unknown sensitivity rule");
        }
    }

    static constexpr Label kLabels[] = {Label::Parasocial, Label::Sycophantic, Label::Neutral};
    static constexpr UnitKind kKinds[] = {UnitKind::Prompt, UnitKind::Response};
    for (Label label : kLabels) {
        for (UnitKind kind : kKinds) {
            UnitCountRow row;
            row.label = label;
            row.kind = kind;
            for (SensitivityRule rule : table.rules) {
                row.flagged[rule] = 0;
            }
            table.rows.push_back(std::move(row));
        }
    }
    const auto row_of = [&table](Label label, UnitKind kind) -> UnitCountRow& {
        for (UnitCountRow& row : table.rows) {
            if (row.label == label && row.kind == kind) {
                return row;
            }
        }
        throw ValidationError("unit count table row lookup failed");
    };

    for (const UnitOutcome& u : outcomes) {
        if (u.decisions.size() != table.rules.size()) {
            throw ValidationError("unit outcomes disagree on the rule set");
        }
        UnitCountRow& row = row_of(u.label, u.kind);
        row.total_units += 1;
        for (const auto& [rule, decision] : u.decisions) {
            if (row.flagged.find(rule) == row.flagged.end()) {
                throw ValidationError("unit outcomes disagree on the rule set");
            }
            if (decision == Decision::Block) {
                row.flagged[rule] += 1;
            }
        }
    }
    return table;
}

} // namespace chaperone
