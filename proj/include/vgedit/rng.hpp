// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vgedit {

/// Seeded generator whose output is identical on every platform.
///
/// Streams are std::mt19937_64 seeded through splitmix64; doubles are built
/// from the top 53 bits, so no implementation-defined distribution is used.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : m_engine(splitmix64(seed)) {}

    std::uint64_t next_u64() { return m_engine(); }
    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(m_engine() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    static std::uint64_t splitmix64(std::uint64_t x);

private:
    std::mt19937_64 m_engine;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Seed for the named sub-stream of a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view name);

}  // namespace vgedit
