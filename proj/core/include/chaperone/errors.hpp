// Copyright 2026 Chaperone Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace chaperone {

// Invalid in-memory state: bad votes, malformed conversations, out-of-range
// parameters. Thrown by constructors and validators.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed external input: corpus lines, trace lines, config files,
// judge replies that are neither YES nor NO.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// An evaluation pass could not produce a vote (missing trace entry,
// upstream judge failure after retries).
class EvaluationError : public std::runtime_error {
public:
    explicit EvaluationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Network / HTTP level failure talking to a remote endpoint.
class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace chaperone
