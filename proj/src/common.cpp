// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/error.hpp"
#include "vgedit/rng.hpp"

namespace vgedit {

namespace {

std::string stage_message(const std::string& stage, std::optional<std::size_t> frame, const std::string& what) {
    std::string msg = "stage '" + stage + "'";
    if (frame)
        msg += " (frame " + std::to_string(*frame) + ")";
    return msg + ": " + what;
}

}  // namespace

StageError::StageError(ErrorKind kind, std::string stage, std::optional<std::size_t> frame, const std::string& what)
    : Error(kind, stage_message(stage, frame, what)), m_stage(std::move(stage)), m_frame(frame) {}

void throw_error(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

std::uint64_t Rng::splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view name) {
    return Rng::splitmix64(base ^ fnv1a64(name));
}

}  // namespace vgedit
