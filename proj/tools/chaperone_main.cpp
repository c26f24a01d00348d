// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0
//
// chaperone: batch harness CLI.
//
//   chaperone run        evaluate a corpus against a vote trace or live judge
//   chaperone synth-trace  write the built-in reference vote trace
//   chaperone report     re-render a stored report in another format
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chaperone/conversation.hpp"
#include "chaperone/errors.hpp"
#include "chaperone/evaluator.hpp"
#include "chaperone/harness.hpp"
#include "chaperone/vote_policy.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct RunArgs {
    std::string corpus;
    std::string trace;
    std::string judge;
    std::string rules = "unanimous,balanced,conservative";
    std::string mode = "full-scan";
    int passes = 5;
    std::string out_dir;
    int threads = 1;
    bool early_stop = false;
};

// Splits the --rules CSV; empty segments and unknown names are usage errors.
std::vector<chaperone::SensitivityRule> parse_rules_csv(const std::string& csv) {
    std::vector<chaperone::SensitivityRule> rules;
    std::size_t begin = 0;
    while (begin <= csv.size()) {
        const std::size_t comma = csv.find(',', begin);
        const std::size_t end = comma == std::string::npos ? csv.size() : comma;
        const std::string token = csv.substr(begin, end - begin);
        if (token.empty()) {
            throw chaperone::ValidationError("--rules contains an empty entry: '" + csv + "'");
        }
        rules.push_back(chaperone::parse_rule(token));
        if (comma == std::string::npos) {
            break;
        }
        begin = comma + 1;
    }
    return rules;
}

int do_run(const RunArgs& args) {
    chaperone::ExperimentConfig cfg;

    // Usage validation first: these failures exit 1, anything found in the
    // input files afterwards exits 2.
    try {
        if (args.trace.empty() == args.judge.empty()) {
            throw chaperone::ValidationError(
                "exactly one of --trace and --judge must be given");
        }
        cfg.corpus_path = args.corpus;
        cfg.trace_path = args.trace;
        cfg.judge_config_path = args.judge;
        cfg.rules = parse_rules_csv(args.rules);
        cfg.mode = chaperone::parse_run_mode(args.mode);
        cfg.passes = args.passes;
        cfg.threads = args.threads;
        cfg.early_stop = args.early_stop;
        cfg.out_dir = args.out_dir;
        if (cfg.passes < 1) {
            throw chaperone::ValidationError("--passes must be at least 1");
        }
        if (cfg.threads < 1) {
            throw chaperone::ValidationError("--threads must be at least 1");
        }
    } catch (const std::exception& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        const chaperone::ExperimentResults results = chaperone::run_experiment(cfg);
        if (!results.errors.empty()) {
            for (const std::string& err : results.errors) {
                std::cerr << "error: " << err << "\n";
            }
            return kExitData;
        }
        const chaperone::Corpus corpus = chaperone::load_corpus(cfg.corpus_path);
        const chaperone::MetricsReport report = chaperone::compute_metrics(results, corpus);

        chaperone::write_report_files(report, cfg.out_dir);
        const std::filesystem::path out_dir(cfg.out_dir);
        {
            std::ofstream out(out_dir / "outcomes.jsonl", std::ios::binary);
            if (!out) {
                throw chaperone::ParseError("cannot write " +
                                            (out_dir / "outcomes.jsonl").string());
            }
            chaperone::write_outcomes(out, results);
        }
        results.recorded_trace.save((out_dir / "trace.jsonl").string());

        std::cout << chaperone::emit_report(report, "table");
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

int do_synth_trace(const std::string& out_path) {
    try {
        chaperone::synthesize_paper_trace().save(out_path);
        std::cout << "wrote " << out_path << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

int do_report(const std::string& in_dir, const std::string& format) {
    std::string rendered;
    try {
        const std::filesystem::path metrics = std::filesystem::path(in_dir) / "metrics.json";
        std::ifstream in(metrics, std::ios::binary);
        if (!in) {
            throw chaperone::ParseError("cannot open " + metrics.string());
        }
        const std::string text((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
        const chaperone::MetricsReport report = chaperone::metrics_from_json(text);
        rendered = chaperone::emit_report(report, format);
    } catch (const chaperone::ValidationError& e) {
        // Only the format dispatch raises ValidationError here.
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    std::cout << rendered;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conversation gating harness"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "evaluate a corpus and write a report");
    run->add_option("--corpus", run_args.corpus, "corpus JSONL path")->required();
    run->add_option("--trace", run_args.trace, "vote trace JSONL path (scripted mode)");
    run->add_option("--judge", run_args.judge, "judge config JSON path (live judge mode)");
    run->add_option("--rules", run_args.rules,
                    "comma-separated rules (unanimous,balanced,conservative)");
    run->add_option("--mode", run_args.mode, "live or full-scan");
    run->add_option("--passes", run_args.passes, "evaluation passes per unit");
    run->add_option("--out", run_args.out_dir, "output directory")->required();
    run->add_option("--threads", run_args.threads, "worker threads across conversations");
    run->add_flag("--early-stop", run_args.early_stop,
                  "stop passes once the rule's decision is fixed (live mode)");

    std::string synth_out;
    CLI::App* synth = app.add_subcommand("synth-trace", "write the reference vote trace");
    synth->add_option("--out", synth_out, "output trace path")->required();

    std::string report_in;
    std::string report_format = "table";
    CLI::App* report = app.add_subcommand("report", "render a stored report");
    report->add_option("--in", report_in, "directory holding metrics.json")->required();
    report->add_option("--format", report_format, "table, records, or series");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // help goes to stdout, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (run->parsed()) {
        return do_run(run_args);
    }
    if (synth->parsed()) {
        return do_synth_trace(synth_out);
    }
    if (report->parsed()) {
        return do_report(report_in, report_format);
    }
    std::cerr << "usage error: no subcommand given\n";
    return kExitUsage;
}
