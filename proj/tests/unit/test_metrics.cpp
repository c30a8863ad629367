// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "vgedit/error.hpp"
#include "vgedit/metrics.hpp"
#include "vgedit/toy_providers.hpp"

using namespace vgedit;
namespace vt = vgedit::testing;

TEST_CASE("cosine similarity") {
    const std::vector<double> a{1, 0}, b{0, 2}, c{-3, 0};
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, b) == 0.0);
    CHECK(cosine_similarity(a, c) == doctest::Approx(-1.0));
    CHECK(cosine_similarity(a, std::vector<double>{0, 0}) == 0.0);
    CHECK_THROWS_AS(cosine_similarity(a, std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("text alignment is the per-frame mean") {
    // Frame vectors at angles whose cosine with the prompt is 0.2, 0.4, 0.9.
    const std::vector<double> prompt{1, 0};
    std::vector<std::vector<double>> frames;
    for (double c : {0.2, 0.4, 0.9})
        frames.push_back({c, std::sqrt(1 - c * c)});
    std::vector<double> per;
    CHECK(text_alignment(frames, prompt, &per) == doctest::Approx(0.5));
    REQUIRE(per.size() == 3);
    CHECK(per[2] == doctest::Approx(0.9));

    const vt::TableEmbedder e(frames, prompt);
    CHECK(text_alignment(vt::indexed_clip(3), "anything", e) == doctest::Approx(0.5));
}

TEST_CASE("frame consistency") {
    const std::vector<std::vector<double>> three{{1, 0}, {1, 0}, {0, 1}};
    CHECK(frame_consistency(three) == doctest::Approx(1.0 / 3.0));
    const std::vector<std::vector<double>> same(5, std::vector<double>{0.3, -0.2, 0.9});
    CHECK(frame_consistency(same) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(frame_consistency(std::vector<std::vector<double>>{{1, 0}}), Error);

    Rng rng(3);
    for (std::size_t n = 2; n <= 6; ++n) {
        std::vector<std::vector<double>> e(n, std::vector<double>(4));
        for (auto& v : e)
            for (double& x : v)
                x = rng.uniform(-1, 1);
        CHECK(frame_consistency(e) == doctest::Approx(oracle::pair_mean(e)).epsilon(1e-12));
        std::mt19937_64 shuffle(n);
        auto perm = e;
        std::shuffle(perm.begin(), perm.end(), shuffle);
        CHECK(frame_consistency(perm) == doctest::Approx(frame_consistency(e)).epsilon(1e-12));
    }
}

TEST_CASE("evaluate with the toy embedder") {
    const ToyEmbedder e(42);
    const auto clip = vt::moving_disc_clip(4, 16);
    const MetricReport r = evaluate_metrics(clip, "a red disc", e);
    CHECK(r.per_frame_alignments.size() == 4);
    CHECK(r.frame_consistency <= 1.0 + 1e-12);
    CHECK(r.frame_consistency > 0.5);
    const auto j = nlohmann::json::parse(report_to_json(r));
    CHECK(j["frame_consistency"].get<double>() == doctest::Approx(r.frame_consistency));
    CHECK(j["text_align"].get<double>() == doctest::Approx(r.text_align));
    CHECK_THROWS_AS(evaluate_metrics(vt::moving_disc_clip(1, 16), "x", e), Error);
}
