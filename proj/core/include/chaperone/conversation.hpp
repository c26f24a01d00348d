// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chaperone {

enum class Role : std::uint8_t { User, Chatbot };

// Ground-truth label a corpus dialogue carries.
enum class Label : std::uint8_t { Parasocial, Sycophantic, Neutral };

// Units are 1-based positions in the utterance list: odd units are user
// prompts, even units are chatbot responses.
enum class UnitKind : std::uint8_t { Prompt, Response };

struct Utterance {
    Role role = Role::User;
    std::string text;
};

struct Conversation {
    std::string id;
    // Ground truth is known for corpus fixtures, absent for live sessions.
    std::optional<Label> label;
    std::vector<Utterance> utterances;

    [[nodiscard]] int unit_count() const noexcept { return static_cast<int>(utterances.size()); }
    // 1-based access; throws ValidationError when out of range.
    [[nodiscard]] const Utterance& unit(int unit_index) const;
};

using Corpus = std::vector<Conversation>;

[[nodiscard]] constexpr UnitKind unit_kind(int unit_index) noexcept {
    return (unit_index % 2 == 1) ? UnitKind::Prompt : UnitKind::Response;
}

[[nodiscard]] constexpr Role unit_role(int unit_index) noexcept {
    return (unit_index % 2 == 1) ? Role::User : Role::Chatbot;
}

std::string_view role_name(Role role) noexcept;
Role parse_role(std::string_view name);

std::string_view label_name(Label label) noexcept;
Label parse_label(std::string_view name);

std::string_view unit_kind_name(UnitKind kind) noexcept;

// Non-empty id, at least one utterance, roles strictly alternate starting
// with User, no empty texts. Throws ValidationError with the offending
// conversation id in the message.
void validate_conversation(const Conversation& conv);

// Full dialogue from the opening prompt through `unit_index`, inclusive —
// the context an evaluation pass sees.
std::span<const Utterance> context_prefix(const Conversation& conv, int unit_index);

// JSONL, one conversation per line:
//   {"id": ..., "label": ..., "utterances": [{"role": ..., "text": ...}, ...]}
// Every corpus conversation must carry a label. Throws ParseError (with the
// line number) on malformed lines, unknown labels, duplicate ids, or failed
// conversation validation. Blank lines are skipped.
Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::string& path);
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::string& path, const Corpus& corpus);

} // namespace chaperone
