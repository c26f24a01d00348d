// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chaperone {

// How many yes-votes it takes to block a unit.
enum class SensitivityRule : std::uint8_t {
    Unanimous,    // every pass must vote yes
    Balanced,     // majority of passes
    Conservative, // a single yes vote suffices
};

enum class Decision : std::uint8_t { Allow, Block };

// Verdict available while votes are still arriving. DecidedBlock and
// DecidedAllow hold for every completion of the partial vote sequence.
enum class PartialDecision : std::uint8_t { DecidedAllow, DecidedBlock, Undecided };

// Votes from the evaluation passes run against one unit. Each entry is
// 0 (no) or 1 (yes). Construction validates; a tally is never empty.
class VoteTally {
public:
    explicit VoteTally(std::vector<int> votes);

    [[nodiscard]] int pass_count() const noexcept { return static_cast<int>(votes_.size()); }
    [[nodiscard]] int score() const noexcept { return score_; }
    [[nodiscard]] const std::vector<int>& votes() const noexcept { return votes_; }

private:
    std::vector<int> votes_;
    int score_ = 0;
};

// Minimum blocking score under `rule` with `passes` total passes.
// Throws ValidationError if passes < 1.
int threshold(SensitivityRule rule, int passes);

// Validates and wraps a raw vote sequence.
VoteTally tally(std::span<const int> votes);

Decision decide(SensitivityRule rule, const VoteTally& t);

// Early-stop check over a vote prefix: `votes_seen` of `total_passes` have
// arrived. DecidedBlock once the threshold is reached, DecidedAllow once it
// is out of reach even if every remaining vote were yes, Undecided otherwise.
// Never contradicts what decide() would say over any completion.
PartialDecision partial_decision(SensitivityRule rule, int total_passes,
                                 std::span<const int> votes_seen);

std::string_view rule_name(SensitivityRule rule) noexcept;

// Accepts exactly "unanimous" | "balanced" | "conservative"; throws ParseError.
SensitivityRule parse_rule(std::string_view name);

std::string_view decision_name(Decision decision) noexcept;
Decision parse_decision(std::string_view name);

// All rules, in fixed report order (loosest threshold last).
const std::vector<SensitivityRule>& all_rules();

} // namespace chaperone
