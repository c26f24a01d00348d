// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#include "chaperone/vote_policy.hpp"

#include <numeric>

#include "chaperone/errors.hpp"

namespace chaperone {

namespace {

void check_votes(std::span<const int> votes) {
    for (int v : votes) {
        if (v != 0 && v != 1) {
            throw ValidationError("votes must be 0 or 1, got " + std::to_string(v));
        }
    }
}

} // namespace

VoteTally::VoteTally(std::vector<int> votes) : votes_(std::move(votes)) {
    if (votes_.empty()) {
        throw ValidationError("vote tally must contain at least one vote");
    }
    check_votes(votes_);
    score_ = std::accumulate(votes_.begin(), votes_.end(), 0);
}

int threshold(SensitivityRule rule, int passes) {
    if (passes < 1) {
        throw ValidationError("pass count must be >= 1, got " + std::to_string(passes));
    }
    switch (rule) {
    case SensitivityRule::Unanimous:
        return passes;
    case SensitivityRule::Balanced:
        return (passes + 1) / 2; // ceil(N/2)
    case SensitivityRule::Conservative:
        return 1;
    }
    throw ValidationError("unknown sensitivity rule");
}

VoteTally tally(std::span<const int> votes) {
    return VoteTally(std::vector<int>(votes.begin(), votes.end()));
}

Decision decide(SensitivityRule rule, const VoteTally& t) {
    return t.score() >= threshold(rule, t.pass_count()) ? Decision::Block : Decision::Allow;
}

PartialDecision partial_decision(SensitivityRule rule, int total_passes,
                                 std::span<const int> votes_seen) {
    if (static_cast<int>(votes_seen.size()) > total_passes) {
        throw ValidationError("saw more votes than total passes");
    }
    check_votes(votes_seen);
    const int need = threshold(rule, total_passes);
    int yes = 0;
    for (int v : votes_seen) {
        yes += v;
    }
    const int remaining = total_passes - static_cast<int>(votes_seen.size());
    if (yes >= need) {
        return PartialDecision::DecidedBlock;
    }
    if (yes + remaining < need) {
        return PartialDecision::DecidedAllow;
    }
    return PartialDecision::Undecided;
}

std::string_view rule_name(SensitivityRule rule) noexcept {
    switch (rule) {
    case SensitivityRule::Unanimous:
        return "unanimous";
    case SensitivityRule::Balanced:
        return "balanced";
    case SensitivityRule::Conservative:
        return "conservative";
    }
    return "unknown";
}

SensitivityRule parse_rule(std::string_view name) {
    if (name == "unanimous") {
        return SensitivityRule::Unanimous;
    }
    if (name == "balanced") {
        return SensitivityRule::Balanced;
    }
    if (name == "conservative") {
        return SensitivityRule::Conservative;
    }
    throw ParseError("unknown sensitivity rule: '" + std::string(name) +
                     "' (expected unanimous | balanced | conservative)");
}

std::string_view decision_name(Decision decision) noexcept {
    return decision == Decision::Block ? "block" : "allow";
}

Decision parse_decision(std::string_view name) {
    if (name == "block") {
        return Decision::Block;
    }
    if (name == "allow") {
        return Decision::Allow;
    }
    throw ParseError("unknown decision: '" + std::string(name) + "' (expected block | allow)");
}

const std::vector<SensitivityRule>& all_rules() {
    static const std::vector<SensitivityRule> rules = {
        SensitivityRule::Unanimous,
        SensitivityRule::Balanced,
        SensitivityRule::Conservative,
    };
    return rules;
}

} // namespace chaperone
