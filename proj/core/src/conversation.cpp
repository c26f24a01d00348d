// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#include "chaperone/conversation.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "chaperone/errors.hpp"

namespace chaperone {

using nlohmann::json;

const Utterance& Conversation::unit(int unit_index) const {
    if (unit_index < 1 || unit_index > unit_count()) {
        throw ValidationError("conversation '" + id + "': unit index " +
                              std::to_string(unit_index) + " out of range 1.." +
                              std::to_string(unit_count()));
    }
    return utterances[static_cast<std::size_t>(unit_index - 1)];
}

std::string_view role_name(Role role) noexcept {
    return role == Role::User ? "user" : "chatbot";
}

Role parse_role(std::string_view name) {
    if (name == "user") {
        return Role::User;
    }
    if (name == "chatbot") {
        return Role::Chatbot;
    }
    throw ParseError("unknown role: '" + std::string(name) + "' (expected user | chatbot)");
}

std::string_view label_name(Label label) noexcept {
    switch (label) {
    case Label::Parasocial:
        return "parasocial";
    case Label::Sycophantic:
        return "sycophantic";
    case Label::Neutral:
        return "neutral";
    }
    return "unknown";
}

Label parse_label(std::string_view name) {
    if (name == "parasocial") {
        return Label::Parasocial;
    }
    if (name == "sycophantic") {
        return Label::Sycophantic;
    }
    if (name == "neutral") {
        return Label::Neutral;
    }
    throw ParseError("unknown label: '" + std::string(name) +
                     "' (expected parasocial | sycophantic | neutral)");
}

std::string_view unit_kind_name(UnitKind kind) noexcept {
    return kind == UnitKind::Prompt ? "prompt" : "response";
}

void validate_conversation(const Conversation& conv) {
    if (conv.id.empty()) {
        throw ValidationError("conversation id must not be empty");
    }
    if (conv.utterances.empty()) {
        throw ValidationError("conversation '" + conv.id + "' has no utterances");
    }
    for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
        const int unit_index = static_cast<int>(i) + 1;
        const Utterance& u = conv.utterances[i];
        if (u.role != unit_role(unit_index)) {
            throw ValidationError("conversation '" + conv.id + "': unit " +
                                  std::to_string(unit_index) + " has role '" +
                                  std::string(role_name(u.role)) +
                                  "' but roles must alternate starting with user");
        }
        if (u.text.find_first_not_of(" \t\r\n") == std::string::npos) {
            throw ValidationError("conversation '" + conv.id + "': unit " +
                                  std::to_string(unit_index) + " has empty text");
        }
    }
}

std::span<const Utterance> context_prefix(const Conversation& conv, int unit_index) {
    if (unit_index < 1 || unit_index > conv.unit_count()) {
        throw ValidationError("conversation '" + conv.id + "': context prefix for unit " +
                              std::to_string(unit_index) + " out of range");
    }
    return {conv.utterances.data(), static_cast<std::size_t>(unit_index)};
}

namespace {

Conversation conversation_from_json(const json& j, int line_no) {
    const std::string where = "corpus line " + std::to_string(line_no);
    if (!j.is_object()) {
        throw ParseError(where + ": expected a JSON object");
    }
    Conversation conv;
    try {
        conv.id = j.at("id").get<std::string>();
        conv.label = parse_label(j.at("label").get<std::string>());
        for (const json& ju : j.at("utterances")) {
            Utterance u;
            u.role = parse_role(ju.at("role").get<std::string>());
            u.text = ju.at("text").get<std::string>();
            conv.utterances.push_back(std::move(u));
        }
    } catch (const json::exception& e) {
        throw ParseError(where + ": " + e.what());
    }
    return conv;
}

} // namespace

Corpus parse_corpus(std::istream& in) {
    Corpus corpus;
    std::unordered_set<std::string> ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = "corpus line " + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        Conversation conv = conversation_from_json(j, line_no);
        try {
            validate_conversation(conv);
        } catch (const ValidationError& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (!ids.insert(conv.id).second) {
            throw ParseError(where + ": duplicate conversation id '" + conv.id + "'");
        }
        corpus.push_back(std::move(conv));
    }
    return corpus;
}

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open corpus file: " + path);
    }
    return parse_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const Conversation& conv : corpus) {
        if (!conv.label.has_value()) {
            throw ValidationError("conversation '" + conv.id + "' has no label; corpus "
                                  "conversations must be labeled");
        }
        json j;
        j["id"] = conv.id;
        j["label"] = std::string(label_name(*conv.label));
        json utterances = json::array();
        for (const Utterance& u : conv.utterances) {
            utterances.push_back({{"role", std::string(role_name(u.role))}, {"text", u.text}});
        }
        j["utterances"] = std::move(utterances);
        out << j.dump() << "\n";
    }
}

void save_corpus(const std::string& path, const Corpus& corpus) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot open corpus file for writing: " + path);
    }
    write_corpus(out, corpus);
}

} // namespace chaperone
