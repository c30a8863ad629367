// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace vgedit {

enum class ErrorKind {
    invalid_argument,  // caller passed values violating a precondition
    io,                // unreadable / unwritable file
    validation,        // well-formed input that violates a domain invariant
    runtime,           // numerical failure or provider failure during a run
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), m_kind(kind) {}

    ErrorKind kind() const noexcept { return m_kind; }

private:
    ErrorKind m_kind;
};

/// Error raised from inside edit_video / invert, tagged with the stage that
/// failed and, when the failure is frame-local, the frame index.
class StageError : public Error {
public:
    StageError(ErrorKind kind, std::string stage, std::optional<std::size_t> frame, const std::string& what);

    const std::string& stage() const noexcept { return m_stage; }
    std::optional<std::size_t> frame() const noexcept { return m_frame; }

private:
    std::string m_stage;
    std::optional<std::size_t> m_frame;
};

[[noreturn]] void throw_error(ErrorKind kind, const std::string& message);

#define VGEDIT_CHECK(cond, kind, msg)                  \
    do {                                               \
        if (!(cond))                                   \
            ::vgedit::throw_error((kind), (msg));      \
    } while (0)

}  // namespace vgedit
