// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaperone/errors.hpp"
#include "chaperone/harness.hpp"

namespace chaperone {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr Label kLabelOrder[] = {Label::Parasocial, Label::Sycophantic, Label::Neutral};

std::string fmt(const char* format, ...) {
    char buf[256];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

UnitKind parse_unit_kind(const std::string& name) {
    if (name == "prompt") {
        return UnitKind::Prompt;
    }
    if (name == "response") {
        return UnitKind::Response;
    }
    throw ParseError("unknown unit kind '" + name + "'");
}

const char* action_kind_name(ActionKind kind) {
    return kind == ActionKind::Rephrased ? "rephrased" : "stop";
}

ordered_json label_count_json(const std::map<Label, int>& counts,
                              const std::map<Label, int>& domain) {
    ordered_json j = ordered_json::object();
    for (Label label : kLabelOrder) {
        if (domain.find(label) == domain.end()) {
            continue;
        }
        const auto it = counts.find(label);
        j[std::string(label_name(label))] = it == counts.end() ? 0 : it->second;
    }
    return j;
}

ordered_json rule_metrics_to_json(const RuleMetrics& m) {
    ordered_json j;
    j["rule"] = std::string(rule_name(m.rule));
    j["totals"] = label_count_json(m.total_by_label, m.total_by_label);
    j["blocked"] = label_count_json(m.blocked_by_label, m.total_by_label);
    j["true_positives"] = m.true_positives;
    j["false_negatives"] = m.false_negatives;
    j["false_positives"] = m.false_positives;
    j["true_negatives"] = m.true_negatives;
    j["accuracy"] = m.accuracy;
    ordered_json mean;
    if (m.mean_detection_overall) {
        mean["overall"] = *m.mean_detection_overall;
    } else {
        mean["overall"] = nullptr;
    }
    ordered_json by_label = ordered_json::object();
    for (Label label : kLabelOrder) {
        const auto it = m.mean_detection_by_label.find(label);
        if (it != m.mean_detection_by_label.end()) {
            by_label[std::string(label_name(label))] = it->second;
        }
    }
    mean["by_label"] = by_label;
    j["mean_detection"] = mean;
    j["detector"] = ordered_json{{"prompts", m.detector_prompts}, {"responses", m.detector_responses}};
    ordered_json convs = ordered_json::array();
    for (const ConvSummary& s : m.conversations) {
        ordered_json c;
        c["conversation_id"] = s.conversation_id;
        c["label"] = std::string(label_name(s.label));
        if (s.blocked_at) {
            c["blocked_at"] = *s.blocked_at;
        } else {
            c["blocked_at"] = nullptr;
        }
        if (s.detector) {
            c["detector"] = std::string(unit_kind_name(*s.detector));
        } else {
            c["detector"] = nullptr;
        }
        convs.push_back(std::move(c));
    }
    j["conversations"] = convs;
    return j;
}

RuleMetrics rule_metrics_from_json(const ordered_json& j) {
    RuleMetrics m;
    m.rule = parse_rule(j.at("rule").get<std::string>());
    for (const auto& [key, value] : j.at("totals").items()) {
        m.total_by_label[parse_label(key)] = value.get<int>();
    }
    for (const auto& [key, value] : j.at("blocked").items()) {
        const int count = value.get<int>();
        if (count != 0) {
            m.blocked_by_label[parse_label(key)] = count;
        }
    }
    m.true_positives = j.at("true_positives").get<int>();
    m.false_negatives = j.at("false_negatives").get<int>();
    m.false_positives = j.at("false_positives").get<int>();
    m.true_negatives = j.at("true_negatives").get<int>();
    m.accuracy = j.at("accuracy").get<double>();
    const ordered_json& mean = j.at("mean_detection");
    if (!mean.at("overall").is_null()) {
        m.mean_detection_overall = mean.at("overall").get<double>();
    }
    for (const auto& [key, value] : mean.at("by_label").items()) {
        m.mean_detection_by_label[parse_label(key)] = value.get<double>();
    }
    m.detector_prompts = j.at("detector").at("prompts").get<int>();
    m.detector_responses = j.at("detector").at("responses").get<int>();
    for (const ordered_json& c : j.at("conversations")) {
        ConvSummary s;
        s.conversation_id = c.at("conversation_id").get<std::string>();
        s.label = parse_label(c.at("label").get<std::string>());
        if (!c.at("blocked_at").is_null()) {
            s.blocked_at = c.at("blocked_at").get<int>();
        }
        if (!c.at("detector").is_null()) {
            s.detector = parse_unit_kind(c.at("detector").get<std::string>());
        }
        m.conversations.push_back(std::move(s));
    }
    return m;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("cannot open '" + path.string() + "' for writing");
    }
    out << content;
    out.flush();
    if (!out) {
        throw ParseError("failed writing '" + path.string() + "'");
    }
}

int blocked_of(const RuleMetrics& m, Label label) {
    const auto it = m.blocked_by_label.find(label);
    return it == m.blocked_by_label.end() ? 0 : it->second;
}

int total_of(const RuleMetrics& m, Label label) {
    const auto it = m.total_by_label.find(label);
    return it == m.total_by_label.end() ? 0 : it->second;
}

} // namespace

std::string metrics_to_json(const MetricsReport& report) {
    ordered_json j;
    j["mode"] = std::string(run_mode_name(report.mode));
    j["passes"] = report.passes;
    j["total_conversations"] = report.total_conversations;
    ordered_json rules = ordered_json::array();
    for (const RuleMetrics& m : report.rules) {
        rules.push_back(rule_metrics_to_json(m));
    }
    j["rules"] = rules;
    if (report.unit_counts) {
        ordered_json counts;
        ordered_json rule_names = ordered_json::array();
        for (SensitivityRule rule : report.unit_counts->rules) {
            rule_names.push_back(std::string(rule_name(rule)));
        }
        counts["rules"] = rule_names;
        ordered_json rows = ordered_json::array();
        for (const UnitCountRow& row : report.unit_counts->rows) {
            ordered_json r;
            r["label"] = std::string(label_name(row.label));
            r["kind"] = std::string(unit_kind_name(row.kind));
            r["total_units"] = row.total_units;
            ordered_json flagged = ordered_json::object();
            for (SensitivityRule rule : report.unit_counts->rules) {
                flagged[std::string(rule_name(rule))] = row.flagged.at(rule);
            }
            r["flagged"] = flagged;
            rows.push_back(std::move(r));
        }
        counts["rows"] = rows;
        j["unit_counts"] = counts;
    } else {
        j["unit_counts"] = nullptr;
    }
    return j.dump(2) + "\n";
}

MetricsReport metrics_from_json(const std::string& json_text) {
    try {
        const ordered_json j = ordered_json::parse(json_text);
        MetricsReport report;
        report.mode = parse_run_mode(j.at("mode").get<std::string>());
        report.passes = j.at("passes").get<int>();
        report.total_conversations = j.at("total_conversations").get<int>();
        for (const ordered_json& r : j.at("rules")) {
            report.rules.push_back(rule_metrics_from_json(r));
        }
        if (!j.at("unit_counts").is_null()) {
            const ordered_json& counts = j.at("unit_counts");
            UnitCountTable table;
            for (const ordered_json& name : counts.at("rules")) {
                table.rules.push_back(parse_rule(name.get<std::string>()));
            }
            for (const ordered_json& r : counts.at("rows")) {
                UnitCountRow row;
                row.label = parse_label(r.at("label").get<std::string>());
                row.kind = parse_unit_kind(r.at("kind").get<std::string>());
                row.total_units = r.at("total_units").get<int>();
                for (const auto& [key, value] : r.at("flagged").items()) {
                    row.flagged[parse_rule(key)] = value.get<int>();
                }
                table.rows.push_back(std::move(row));
            }
            report.unit_counts = std::move(table);
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid metrics JSON: ") + e.what());
    }
}

std::string render_table(const MetricsReport& report) {
    std::ostringstream out;
    out << "chaperone experiment report\n";
    out << "mode: " << run_mode_name(report.mode) << " | passes per unit: " << report.passes
        << " | conversations: " << report.total_conversations << "\n";
    if (report.total_conversations == 0) {
        out << "\nno results: 0 conversations evaluated\n";
        return out.str();
    }

    for (const RuleMetrics& m : report.rules) {
        const int total = m.true_positives + m.true_negatives + m.false_positives + m.false_negatives;
        out << "\nrule: " << rule_name(m.rule) << "\n";
        out << fmt("  accuracy: %.2f%% (%d/%d correct)\n", m.accuracy * 100.0,
                   m.true_positives + m.true_negatives, total);
        out << "  blocked:";
        bool first = true;
        for (Label label : kLabelOrder) {
            if (m.total_by_label.find(label) == m.total_by_label.end()) {
                continue;
            }
            out << (first ? " " : " | ") << label_name(label) << " " << blocked_of(m, label) << "/"
                << total_of(m, label);
            first = false;
        }
        out << "\n";
        out << "  false positives: " << m.false_positives
            << " | false negatives: " << m.false_negatives << "\n";
        out << "  mean detection unit:";
        if (m.mean_detection_overall) {
            out << fmt(" overall %.2f", *m.mean_detection_overall);
            for (Label label : kLabelOrder) {
                const auto it = m.mean_detection_by_label.find(label);
                if (it != m.mean_detection_by_label.end()) {
                    out << fmt(" | %s %.2f", std::string(label_name(label)).c_str(), it->second);
                }
            }
            out << "\n";
        } else {
            out << " n/a (nothing blocked)\n";
        }
        out << "  detector split: prompts " << m.detector_prompts << " | responses "
            << m.detector_responses << "\n";
    }

    if (report.unit_counts) {
        const UnitCountTable& table = *report.unit_counts;
        out << "\nflagged units by label and kind\n";
        std::vector<int> widths;
        out << fmt("  %-12s %-9s %6s", "label", "kind", "units");
        for (SensitivityRule rule : table.rules) {
            const int w = static_cast<int>(std::string(rule_name(rule)).size()) + 2;
            widths.push_back(w);
            out << fmt(" %*s", w, std::string(rule_name(rule)).c_str());
        }
        out << "\n";
        std::map<SensitivityRule, int> rule_totals;
        int unit_total = 0;
        for (const UnitCountRow& row : table.rows) {
            out << fmt("  %-12s %-9s %6d", std::string(label_name(row.label)).c_str(),
                       std::string(unit_kind_name(row.kind)).c_str(), row.total_units);
            unit_total += row.total_units;
            std::size_t col = 0;
            for (SensitivityRule rule : table.rules) {
                const int count = row.flagged.at(rule);
                rule_totals[rule] += count;
                out << fmt(" %*d", widths[col++], count);
            }
            out << "\n";
        }
        out << fmt("  %-12s %-9s %6d", "total", "", unit_total);
        std::size_t col = 0;
        for (SensitivityRule rule : table.rules) {
            out << fmt(" %*d", widths[col++], rule_totals[rule]);
        }
        out << "\n";
    }
    return out.str();
}

std::string render_series_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "rule,accuracy,block_rate_parasocial,block_rate_sycophantic,block_rate_neutral\n";
    for (const RuleMetrics& m : report.rules) {
        out << rule_name(m.rule) << fmt(",%.4f", m.accuracy);
        for (Label label : kLabelOrder) {
            const int total = total_of(m, label);
            const double rate = total > 0 ? static_cast<double>(blocked_of(m, label)) / total : 0.0;
            out << fmt(",%.4f", rate);
        }
        out << "\n";
    }
    return out.str();
}

std::string emit_report(const MetricsReport& report, std::string_view format) {
    if (format == "table") {
        return render_table(report);
    }
    if (format == "records") {
        return metrics_to_json(report);
    }
    if (format == "series") {
        return render_series_csv(report);
    }
    throw ValidationError("unknown report format '" + std::string(format) +
                          "' (expected table, records, or series)");
}

void write_report_files(const MetricsReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    try {
        fs::create_directories(out_dir);
    } catch (const fs::filesystem_error& e) {
        throw ParseError(std::string("cannot create output directory: ") + e.what());
    }
    const fs::path dir(out_dir);
    write_text_file(dir / "metrics.json", emit_report(report, "records"));
    write_text_file(dir / "table.txt", emit_report(report, "table"));
    write_text_file(dir / "series.csv", emit_report(report, "series"));
}

void write_outcomes(std::ostream& out, const ExperimentResults& results) {
    if (results.mode == RunMode::Live) {
        for (SensitivityRule rule : results.rules) {
            const auto it = results.live_results.find(rule);
            if (it == results.live_results.end()) {
                continue;
            }
            for (const GateResult& res : it->second) {
                ordered_json j;
                j["mode"] = "live";
                j["rule"] = std::string(rule_name(rule));
                j["conversation_id"] = res.conversation_id;
                if (res.blocked_at) {
                    j["blocked_at"] = *res.blocked_at;
                } else {
                    j["blocked_at"] = nullptr;
                }
                if (res.detector) {
                    j["detector"] = std::string(unit_kind_name(*res.detector));
                } else {
                    j["detector"] = nullptr;
                }
                ordered_json evals = ordered_json::array();
                for (const TurnEvaluation& e : res.evaluations) {
                    ordered_json ev;
                    ev["unit_index"] = e.unit_index;
                    ev["kind"] = std::string(unit_kind_name(e.kind));
                    ev["votes"] = e.votes;
                    ev["S"] = e.score;
                    ev["decision"] = std::string(decision_name(e.decision));
                    ev["passes_executed"] = e.passes_executed;
                    evals.push_back(std::move(ev));
                }
                j["evaluations"] = evals;
                if (res.action_taken) {
                    ordered_json action;
                    action["kind"] = action_kind_name(res.action_taken->kind);
                    if (!res.action_taken->note.empty()) {
                        action["note"] = res.action_taken->note;
                    }
                    j["action"] = action;
                } else {
                    j["action"] = nullptr;
                }
                if (!res.error.empty()) {
                    j["error"] = res.error;
                }
                out << j.dump() << "\n";
            }
        }
    } else {
        for (const UnitOutcome& u : results.unit_outcomes) {
            ordered_json j;
            j["mode"] = "full-scan";
            j["conversation_id"] = u.conversation_id;
            j["label"] = std::string(label_name(u.label));
            j["unit_index"] = u.unit_index;
            j["kind"] = std::string(unit_kind_name(u.kind));
            j["S"] = u.score;
            ordered_json decisions = ordered_json::object();
            for (const auto& [rule, decision] : u.decisions) {
                decisions[std::string(rule_name(rule))] = std::string(decision_name(decision));
            }
            j["decisions"] = decisions;
            out << j.dump() << "\n";
        }
    }
}

} // namespace chaperone
