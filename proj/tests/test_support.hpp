// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Shared test fixtures: scratch directories, deterministic random corpora
// and vote traces, and a from-scratch metrics oracle that restates the rule
// definitions independently of the library code it checks.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chaperone/conversation.hpp"
#include "chaperone/evaluator.hpp"
#include "chaperone/gateway.hpp"
#include "chaperone/harness.hpp"
#include "chaperone/vote_policy.hpp"

namespace testsupport {

inline std::filesystem::path data_dir() {
    return std::filesystem::path(CHAPERONE_DATA_DIR);
}

// Unique scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        const auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        for (int attempt = 0; attempt < 64; ++attempt) {
            auto candidate = base / ("chaperone-test-" + std::to_string(rd()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path = std::move(candidate);
                return;
            }
        }
        throw std::runtime_error("could not create a scratch directory");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << content;
}

inline chaperone::Conversation make_conversation(const std::string& id, int units,
                                                 std::optional<chaperone::Label> label = {}) {
    chaperone::Conversation conv;
    conv.id = id;
    conv.label = label;
    for (int k = 1; k <= units; ++k) {
        conv.utterances.push_back(
            {chaperone::unit_role(k), id + " utterance " + std::to_string(k)});
    }
    return conv;
}

inline chaperone::Corpus random_corpus(std::mt19937& rng, int max_convs = 6, int max_units = 8) {
    std::uniform_int_distribution<int> conv_count(1, max_convs);
    std::uniform_int_distribution<int> unit_count(1, max_units);
    std::uniform_int_distribution<int> label_pick(0, 2);
    static const chaperone::Label kLabels[] = {
        chaperone::Label::Parasocial,
        chaperone::Label::Sycophantic,
        chaperone::Label::Neutral,
    };
    chaperone::Corpus corpus;
    const int n = conv_count(rng);
    for (int i = 0; i < n; ++i) {
        corpus.push_back(make_conversation("conv-" + std::to_string(i + 1), unit_count(rng),
                                           kLabels[label_pick(rng)]));
    }
    return corpus;
}

// Parasocial units lean positive so the zero-false-negatives precondition of
// the rule-consistency property shows up often in random instances.
inline chaperone::VoteTrace random_trace(const chaperone::Corpus& corpus, std::mt19937& rng,
                                         int passes) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    chaperone::VoteTrace trace;
    for (const chaperone::Conversation& conv : corpus) {
        const double p_one = conv.label == chaperone::Label::Parasocial ? 0.7 : 0.2;
        for (int k = 1; k <= conv.unit_count(); ++k) {
            std::vector<int> votes;
            votes.reserve(static_cast<std::size_t>(passes));
            for (int p = 0; p < passes; ++p) {
                votes.push_back(coin(rng) < p_one ? 1 : 0);
            }
            trace.add(conv.id, k, std::move(votes));
        }
    }
    return trace;
}

// ---- independent oracle ---------------------------------------------------
// Restates the decision rules from their definitions: a unit is flagged when
// its yes-vote count S reaches N (unanimous), ceil(N/2) (balanced), or 1
// (conservative); a conversation's first flagged unit blocks it.

inline int naive_threshold(chaperone::SensitivityRule rule, int passes) {
    switch (rule) {
    case chaperone::SensitivityRule::Unanimous:
        return passes;
    case chaperone::SensitivityRule::Balanced:
        return static_cast<int>(std::ceil(passes / 2.0));
    case chaperone::SensitivityRule::Conservative:
        return 1;
    }
    throw std::runtime_error("bad rule");
}

inline int naive_score(const std::vector<int>& votes, int passes) {
    if (static_cast<int>(votes.size()) < passes) {
        throw std::runtime_error("trace entry is shorter than the pass count");
    }
    int s = 0;
    for (int p = 0; p < passes; ++p) {
        s += votes[static_cast<std::size_t>(p)];
    }
    return s;
}

struct NaiveSummary {
    std::optional<int> blocked_at;
    std::optional<chaperone::UnitKind> detector;
};

inline NaiveSummary naive_first_block(const chaperone::VoteTrace& trace,
                                      const chaperone::Conversation& conv,
                                      chaperone::SensitivityRule rule, int passes) {
    NaiveSummary out;
    const int need = naive_threshold(rule, passes);
    for (int k = 1; k <= conv.unit_count(); ++k) {
        const int s = naive_score(trace.votes_for(conv.id, k), passes);
        if (s >= need) {
            out.blocked_at = k;
            out.detector =
                (k % 2 == 1) ? chaperone::UnitKind::Prompt : chaperone::UnitKind::Response;
            break;
        }
    }
    return out;
}

struct NaiveRuleMetrics {
    std::map<chaperone::Label, int> total_by_label;
    std::map<chaperone::Label, int> blocked_by_label;
    int true_positives = 0;
    int false_negatives = 0;
    int false_positives = 0;
    int true_negatives = 0;
    double accuracy = 0.0;
    std::optional<double> mean_detection_overall;
    std::map<chaperone::Label, double> mean_detection_by_label;
    int detector_prompts = 0;
    int detector_responses = 0;
    std::vector<chaperone::ConvSummary> conversations; // sorted by conversation id
};

inline NaiveRuleMetrics naive_rule_metrics(const chaperone::VoteTrace& trace,
                                           const chaperone::Corpus& corpus,
                                           chaperone::SensitivityRule rule, int passes) {
    std::vector<const chaperone::Conversation*> ordered;
    ordered.reserve(corpus.size());
    for (const chaperone::Conversation& conv : corpus) {
        ordered.push_back(&conv);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const chaperone::Conversation* a, const chaperone::Conversation* b) {
                  return a->id < b->id;
              });

    NaiveRuleMetrics m;
    double sum_overall = 0.0;
    int blocked_overall = 0;
    std::map<chaperone::Label, double> sum_by_label;
    for (const chaperone::Conversation* conv : ordered) {
        const chaperone::Label label = conv->label.value();
        const NaiveSummary s = naive_first_block(trace, *conv, rule, passes);
        m.total_by_label[label] += 1;
        const bool positive = label == chaperone::Label::Parasocial;
        if (s.blocked_at) {
            m.blocked_by_label[label] += 1;
            blocked_overall += 1;
            sum_overall += *s.blocked_at;
            sum_by_label[label] += *s.blocked_at;
            if (s.detector == chaperone::UnitKind::Prompt) {
                m.detector_prompts += 1;
            } else {
                m.detector_responses += 1;
            }
            (positive ? m.true_positives : m.false_positives) += 1;
        } else {
            (positive ? m.false_negatives : m.true_negatives) += 1;
        }
        chaperone::ConvSummary cs;
        cs.conversation_id = conv->id;
        cs.label = label;
        cs.blocked_at = s.blocked_at;
        cs.detector = s.detector;
        m.conversations.push_back(std::move(cs));
    }
    const int total = static_cast<int>(ordered.size());
    m.accuracy =
        total > 0 ? static_cast<double>(m.true_positives + m.true_negatives) / total : 0.0;
    if (blocked_overall > 0) {
        m.mean_detection_overall = sum_overall / blocked_overall;
    }
    for (const auto& [label, sum] : sum_by_label) {
        m.mean_detection_by_label[label] = sum / m.blocked_by_label.at(label);
    }
    return m;
}

// "" when every field matches; otherwise the first mismatch, described.
// Comparisons are exact: every mean is a ratio of small exact integers, so
// both sides compute bit-identical doubles.
inline std::string diff_rule_metrics(const chaperone::RuleMetrics& got,
                                     const NaiveRuleMetrics& want) {
    const auto label_str = [](chaperone::Label l) { return std::string(label_name(l)); };
    if (got.total_by_label != want.total_by_label) {
        return "total_by_label differs";
    }
    if (got.blocked_by_label != want.blocked_by_label) {
        return "blocked_by_label differs";
    }
    if (got.true_positives != want.true_positives) {
        return "true_positives: got " + std::to_string(got.true_positives) + " want " +
               std::to_string(want.true_positives);
    }
    if (got.false_negatives != want.false_negatives) {
        return "false_negatives: got " + std::to_string(got.false_negatives) + " want " +
               std::to_string(want.false_negatives);
    }
    if (got.false_positives != want.false_positives) {
        return "false_positives: got " + std::to_string(got.false_positives) + " want " +
               std::to_string(want.false_positives);
    }
    if (got.true_negatives != want.true_negatives) {
        return "true_negatives: got " + std::to_string(got.true_negatives) + " want " +
               std::to_string(want.true_negatives);
    }
    if (got.accuracy != want.accuracy) {
        return "accuracy: got " + std::to_string(got.accuracy) + " want " +
               std::to_string(want.accuracy);
    }
    if (got.mean_detection_overall != want.mean_detection_overall) {
        return "mean_detection_overall differs";
    }
    if (got.mean_detection_by_label != want.mean_detection_by_label) {
        return "mean_detection_by_label differs";
    }
    if (got.detector_prompts != want.detector_prompts) {
        return "detector_prompts: got " + std::to_string(got.detector_prompts) + " want " +
               std::to_string(want.detector_prompts);
    }
    if (got.detector_responses != want.detector_responses) {
        return "detector_responses: got " + std::to_string(got.detector_responses) + " want " +
               std::to_string(want.detector_responses);
    }
    if (got.conversations.size() != want.conversations.size()) {
        return "conversation summary count differs";
    }
    for (std::size_t i = 0; i < got.conversations.size(); ++i) {
        const chaperone::ConvSummary& g = got.conversations[i];
        const chaperone::ConvSummary& w = want.conversations[i];
        if (g.conversation_id != w.conversation_id) {
            return "summary order: got '" + g.conversation_id + "' want '" + w.conversation_id +
                   "'";
        }
        if (g.label != w.label) {
            return "summary label for '" + g.conversation_id + "': got " + label_str(g.label);
        }
        if (g.blocked_at != w.blocked_at) {
            return "blocked_at for '" + g.conversation_id + "' differs";
        }
        if (g.detector != w.detector) {
            return "detector for '" + g.conversation_id + "' differs";
        }
    }
    return "";
}

inline int naive_total_units(const chaperone::Corpus& corpus, chaperone::Label label,
                             chaperone::UnitKind kind) {
    int n = 0;
    for (const chaperone::Conversation& conv : corpus) {
        if (conv.label != label) {
            continue;
        }
        for (int k = 1; k <= conv.unit_count(); ++k) {
            const bool prompt = k % 2 == 1;
            if ((prompt && kind == chaperone::UnitKind::Prompt) ||
                (!prompt && kind == chaperone::UnitKind::Response)) {
                n += 1;
            }
        }
    }
    return n;
}

inline int naive_flagged_units(const chaperone::VoteTrace& trace, const chaperone::Corpus& corpus,
                               chaperone::Label label, chaperone::UnitKind kind,
                               chaperone::SensitivityRule rule, int passes) {
    const int need = naive_threshold(rule, passes);
    int n = 0;
    for (const chaperone::Conversation& conv : corpus) {
        if (conv.label != label) {
            continue;
        }
        for (int k = 1; k <= conv.unit_count(); ++k) {
            const bool prompt = k % 2 == 1;
            if ((prompt && kind != chaperone::UnitKind::Prompt) ||
                (!prompt && kind != chaperone::UnitKind::Response)) {
                continue;
            }
            if (naive_score(trace.votes_for(conv.id, k), passes) >= need) {
                n += 1;
            }
        }
    }
    return n;
}

// "" when the count table matches a from-scratch tabulation.
inline std::string diff_unit_counts(const chaperone::UnitCountTable& table,
                                    const chaperone::VoteTrace& trace,
                                    const chaperone::Corpus& corpus, int passes) {
    static const chaperone::Label kLabels[] = {
        chaperone::Label::Parasocial,
        chaperone::Label::Sycophantic,
        chaperone::Label::Neutral,
    };
    static const chaperone::UnitKind kKinds[] = {
        chaperone::UnitKind::Prompt,
        chaperone::UnitKind::Response,
    };
    if (table.rows.size() != 6) {
        return "expected 6 rows, got " + std::to_string(table.rows.size());
    }
    std::size_t i = 0;
    for (chaperone::Label label : kLabels) {
        for (chaperone::UnitKind kind : kKinds) {
            const chaperone::UnitCountRow& row = table.rows[i++];
            if (row.label != label || row.kind != kind) {
                return "row " + std::to_string(i - 1) + " is out of order";
            }
            const int want_total = naive_total_units(corpus, label, kind);
            if (row.total_units != want_total) {
                return "total_units for " + std::string(label_name(label)) + "/" +
                       std::string(unit_kind_name(kind)) + ": got " +
                       std::to_string(row.total_units) + " want " + std::to_string(want_total);
            }
            for (chaperone::SensitivityRule rule : table.rules) {
                const int want = naive_flagged_units(trace, corpus, label, kind, rule, passes);
                const int got = table.flagged_count(label, kind, rule);
                if (got != want) {
                    return "flagged for " + std::string(label_name(label)) + "/" +
                           std::string(unit_kind_name(kind)) + "/" +
                           std::string(rule_name(rule)) + ": got " + std::to_string(got) +
                           " want " + std::to_string(want);
                }
            }
        }
    }
    return "";
}

inline std::set<std::string> blocked_ids(const chaperone::RuleMetrics& metrics) {
    std::set<std::string> ids;
    for (const chaperone::ConvSummary& s : metrics.conversations) {
        if (s.blocked_at) {
            ids.insert(s.conversation_id);
        }
    }
    return ids;
}

// Replays one audit entry through the vote policy: the recorded decision
// must be what the rule yields over the recorded votes. Early-stopped
// tallies replay through partial_decision against the configured pass
// count. Returns "" on success, a description otherwise.
inline std::string replay_audit_entry(const chaperone::AuditEntry& entry) {
    if (static_cast<int>(entry.votes.size()) != entry.passes_executed) {
        return "passes_executed disagrees with the vote list length";
    }
    int s = 0;
    for (int v : entry.votes) {
        s += v;
    }
    if (s != entry.score) {
        return "S disagrees with the recorded votes";
    }
    if (entry.passes_executed == entry.total_passes) {
        const chaperone::Decision replayed =
            chaperone::decide(entry.rule, chaperone::tally(entry.votes));
        if (replayed != entry.decision) {
            return "decide() disagrees with the recorded decision";
        }
    } else {
        const chaperone::PartialDecision partial =
            chaperone::partial_decision(entry.rule, entry.total_passes, entry.votes);
        const chaperone::PartialDecision want = entry.decision == chaperone::Decision::Block
                                                    ? chaperone::PartialDecision::DecidedBlock
                                                    : chaperone::PartialDecision::DecidedAllow;
        if (partial != want) {
            return "partial_decision() disagrees with the early-stopped decision";
        }
    }
    return "";
}

// ---- shipped fixtures -------------------------------------------------------

struct Rephrasing {
    std::string conversation_id;
    std::string original;
    std::string rephrased;
};

inline std::vector<Rephrasing> load_rephrasings(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::vector<Rephrasing> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const nlohmann::json j = nlohmann::json::parse(line);
        out.push_back({j.at("conversation_id").get<std::string>(),
                       j.at("original").get<std::string>(),
                       j.at("rephrased").get<std::string>()});
    }
    return out;
}

inline chaperone::Corpus load_fixture_corpus() {
    return chaperone::load_corpus((data_dir() / "corpus.jsonl").string());
}

inline const chaperone::Conversation& conversation_by_id(const chaperone::Corpus& corpus,
                                                         const std::string& id) {
    for (const chaperone::Conversation& conv : corpus) {
        if (conv.id == id) {
            return conv;
        }
    }
    throw std::runtime_error("fixture corpus lacks conversation " + id);
}

} // namespace testsupport
