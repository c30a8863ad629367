// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "vgedit/attention.hpp"
#include "vgedit/error.hpp"
#include "vgedit/toy_providers.hpp"

using namespace vgedit;
using vgedit::testing::random_tensor;

TEST_CASE("vanilla attention matches the scalar oracle") {
    for (std::size_t heads : {1u, 2u}) {
        const auto w = oracle::random_attention(3 + heads, 6, 5, 4, heads);
        const Tensor q = random_tensor({3, 6}, 1), kv = random_tensor({4, 5}, 2);
        const Tensor got = attention(q, kv, w);
        const auto want = oracle::attention(oracle::rows_of(q, 0, 3, 6), oracle::rows_of(kv, 0, 4, 5), w);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                CHECK(got.at({r, c}) == doctest::Approx(want[r][c]).epsilon(1e-12));
    }
}

TEST_CASE("spatial-temporal self-attention") {
    const auto w = oracle::random_attention(9, 4, 4, 4, 2);
    const Tensor z = random_tensor({3, 5, 4}, 3);
    CHECK(max_abs_diff(spatial_temporal_self_attention(z, w), oracle::spatial_temporal(z, w)) <= 1e-12);

    const Tensor single = random_tensor({1, 5, 4}, 4);
    CHECK(max_abs_diff(spatial_temporal_self_attention(single, w).slice_copy(0),
                       attention(single.slice_copy(0), single.slice_copy(0), w)) <= 1e-12);
    // Swapping two frames swaps the outputs.
    Tensor swapped = z;
    std::copy(z.slice(0).begin(), z.slice(0).end(), swapped.slice(2).begin());
    std::copy(z.slice(2).begin(), z.slice(2).end(), swapped.slice(0).begin());
    const Tensor a = spatial_temporal_self_attention(z, w), b = spatial_temporal_self_attention(swapped, w);
    CHECK(max_abs_diff(a.slice_copy(0), b.slice_copy(2)) <= 1e-12);
    CHECK_THROWS_AS(spatial_temporal_self_attention(random_tensor({2, 3, 5}, 1), w), Error);
}

TEST_CASE("modulated cross-attention") {
    const auto w = oracle::random_attention(5, 4, 3, 4, 1);
    const Tensor z = random_tensor({6, 4}, 6), ctx = random_tensor({3, 2, 3}, 7);
    for (std::size_t f = 0; f < 3; ++f) {
        CHECK(max_abs_diff(modulated_cross_attention(z, ctx, f, ContextMode::cond, w),
                           oracle::modulated_cross(z, ctx, f, false, w)) <= 1e-12);
        CHECK(max_abs_diff(modulated_cross_attention(z, ctx, f, ContextMode::uncond, w),
                           oracle::modulated_cross(z, ctx, f, true, w)) <= 1e-12);
    }
    // Identical contexts concatenated N times behave like one context.
    Tensor dup({4, 2, 3});
    for (std::size_t f = 0; f < 4; ++f)
        std::copy(ctx.slice(0).begin(), ctx.slice(0).end(), dup.slice(f).begin());
    CHECK(max_abs_diff(modulated_cross_attention(z, dup, 2, ContextMode::uncond, w),
                       modulated_cross_attention(z, ctx, 0, ContextMode::cond, w)) <= 1e-12);
    CHECK_THROWS_AS(modulated_cross_attention(z, ctx, 3, ContextMode::cond, w), Error);
}

TEST_CASE("graph cross-attention splits frames in cond mode") {
    const auto w = oracle::random_attention(8, 4, 3, 4, 2);
    const Tensor z = random_tensor({2, 3, 4}, 8), ctx = random_tensor({2, 2, 3}, 9);
    ad::Tape tape;
    const auto vars = graph::bind(tape, w);
    const ad::Var out = graph::modulated_cross_attention(tape.constant(ad::Matrix(6, 4, std::vector<double>(z.values().begin(), z.values().end()))), 2,
                                                         tape.constant(ad::Matrix(4, 3, std::vector<double>(ctx.values().begin(), ctx.values().end()))),
                                                         ContextMode::cond, vars);
    for (std::size_t f = 0; f < 2; ++f) {
        const Tensor want = oracle::modulated_cross(z.slice_copy(f), ctx, f, false, w);
        for (std::size_t i = 0; i < want.size(); ++i)
            CHECK(out.value().data[f * 12 + i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("cross-frame gated attention") {
    const auto w = oracle::random_attention(10, 4, 4, 4, 2);
    const Tensor z = random_tensor({3, 4, 4}, 10), g = random_tensor({3, 2, 4}, 11);
    const GateParams gate{0.7, 1.3};
    CHECK(max_abs_diff(cross_frame_gated_attention(z, g, gate, w), oracle::gated_cross_frame(z, g, gate, w)) <= 1e-12);
    CHECK(cross_frame_gated_attention(z, g, {0.0, 1.0}, w) == z);
    CHECK(cross_frame_gated_attention(z, g, {0.7, 0.0}, w) == z);
    CHECK(cross_frame_gated_attention(z, Tensor({3, 0, 4}), gate, w) == z);
    CHECK_THROWS_AS(cross_frame_gated_attention(z, random_tensor({2, 2, 4}, 1), gate, w), Error);
}

TEST_CASE("token slicing") {
    const Tensor joint = random_tensor({5, 3}, 12);
    const Tensor s = token_slice(joint, 3);
    REQUIRE(s.shape() == std::vector<std::size_t>{3, 3});
    for (std::size_t i = 0; i < 9; ++i)
        CHECK(s[i] == joint[i]);
    CHECK_THROWS_AS(token_slice(joint, 6), Error);
}

TEST_CASE("fourier layout embedding") {
    const BoundingBox box{0.25, 0.5, 0.75, 1.0};
    const auto e = fourier_embed(box, 3);
    REQUIRE(e.size() == 24);
    CHECK(e[0] == doctest::Approx(std::sin(std::numbers::pi * 0.25)));
    CHECK(e[1] == doctest::Approx(std::cos(std::numbers::pi * 0.25)));
    CHECK(e[2] == doctest::Approx(std::sin(2 * std::numbers::pi * 0.25)));
    CHECK(e[5] == doctest::Approx(std::cos(4 * std::numbers::pi * 0.25)));
    CHECK(e[6] == doctest::Approx(std::sin(std::numbers::pi * 0.5)));
    CHECK(e[23] == doctest::Approx(std::cos(4 * std::numbers::pi * 1.0)));
    CHECK_THROWS_AS(fourier_embed(box, 0), Error);
}

TEST_CASE("grounding tokens") {
    const ToyTextEncoder text(3);
    const GroundingMLP mlp = seeded_grounding_mlp(4, text.context_width(), 8);
    CHECK(mlp.input_width() == 16 + 64);
    CHECK(mlp.output_width() == 16);
    const auto g = vgedit::testing::moving_disc_grounding(3);
    const Tensor tokens = build_video_grounding_tokens(g, text, mlp, 8);
    REQUIRE(tokens.shape() == std::vector<std::size_t>{3, 1, 16});
    CHECK(tokens.all_finite());
    // Same phrase, different boxes, different tokens.
    CHECK(tokens.slice_copy(0) != tokens.slice_copy(1));
    CHECK_THROWS_AS(build_grounding_tokens(g.per_frame[0], text, mlp, 4), Error);
}
