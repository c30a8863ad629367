// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "vgedit/error.hpp"
#include "vgedit/pipeline.hpp"

using namespace vgedit;
namespace vt = vgedit::testing;

namespace {

PipelineConfig quick_config() {
    PipelineConfig c;
    c.num_inference_steps = 3;
    c.guidance_scale = 3.0;
    c.null_opt.inner_steps = 2;
    return c;
}

VideoGrounding single_box(std::size_t frames, BoundingBox box) {
    VideoGrounding g;
    for (std::size_t i = 0; i < frames; ++i)
        g.per_frame.push_back({{"thing", box}});
    return g;
}

class BrokenFlow final : public FlowEstimator {
public:
    Tensor estimate(const FrameSequence&) const override { throw Error(ErrorKind::runtime, "flow exploded"); }
};

}  // namespace

TEST_CASE("inpaint mask examples") {
    CHECK(derive_inpaint_mask(VideoGrounding{{{}, {}}}, 4, 4) == Tensor({4, 4}, 1.0));
    CHECK_FALSE(derive_inpaint_mask(single_box(2, {0, 0, 1, 1}), 4, 4).has_value());

    // Left half in frame 0, top half in frame 1: only the bottom-right quarter survives.
    VideoGrounding g{{{{"a", {0.0, 0.0, 0.5, 1.0}}}, {{"a", {0.0, 0.0, 1.0, 0.5}}}}};
    const auto m = derive_inpaint_mask(g, 4, 4);
    REQUIRE(m.has_value());
    CHECK(*m == Tensor({4, 4}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1}));

    // A box edge through a cell centre: the centre at 0.375 is outside [0, 0.375).
    const auto edge = derive_inpaint_mask(single_box(1, {0.0, 0.0, 0.375, 1.0}), 1, 4);
    CHECK(*edge == Tensor({1, 4}, {0, 1, 1, 1}));
}

TEST_CASE("inpaint mask matches the rasterisation oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t frames = 1 + rng.next_u64() % 3, boxes = rng.next_u64() % 3;
        VideoGrounding g;
        for (std::size_t f = 0; f < frames; ++f) {
            std::vector<GroundingEntity> es;
            for (std::size_t b = 0; b < boxes; ++b) {
                const double x0 = rng.uniform(0, 0.9), y0 = rng.uniform(0, 0.9);
                es.push_back({"e", {x0, y0, rng.uniform(x0 + 0.01, 1.0), rng.uniform(y0 + 0.01, 1.0)}});
            }
            g.per_frame.push_back(es);
        }
        const auto got = derive_inpaint_mask(g, 8, 8);
        const auto want = oracle::inpaint_mask(g, 8, 8);
        REQUIRE(got.has_value() == want.has_value());
        if (got)
            CHECK(*got == *want);
    }
}

TEST_CASE("pipeline stages") {
    const PipelineConfig cfg = quick_config();
    const Pipeline p(cfg);
    const auto clip = vt::moving_disc_clip(3, 16);
    const auto g = vt::moving_disc_grounding(3, 16);
    const EditSpec spec{{{"red disc", "blue disc"}}, "a red disc", "a blue disc"};

    SUBCASE("inversion shapes") {
        const InversionResult inv = p.invert(clip, "a red disc");
        CHECK(inv.clean.shape() == std::vector<std::size_t>{3, 4, 4, 4});
        CHECK(inv.noise.shape() == inv.clean.shape());
        CHECK(inv.nulls.shape() == std::vector<std::size_t>{3, 3, 8, 16});
        CHECK(inv.trajectories.size() == 3);
        CHECK(inv.trajectories[1].latents.back() == inv.noise.slice_copy(1));
    }
    SUBCASE("edit output") {
        const auto big = vt::moving_disc_clip(3, 32);
        const auto big_g = vt::moving_disc_grounding(3, 32);
        const EditOutput out = p.edit({big, big_g, spec});
        CHECK(out.frames.tensor().shape() == big.tensor().shape());
        CHECK(out.frames.tensor().all_finite());
        CHECK(out.target_grounding.per_frame[0][0].phrase == "blue disc");
        CHECK(out.warnings.empty());
        REQUIRE(out.inpaint_mask.has_value());
        CHECK(*out.inpaint_mask == *derive_inpaint_mask(big_g, 8, 8));

        const EditOutput again = p.edit({big, big_g, spec});
        CHECK(again.frames.tensor() == out.frames.tensor());
    }
    SUBCASE("smoothing with zero threshold is a no-op") {
        PipelineConfig c = cfg;
        c.flow_threshold = 0.0;
        const Tensor z = vt::random_tensor({3, 4, 4, 4}, 1);
        CHECK(Pipeline(c).smooth(z, clip) == z);
        CHECK(p.smooth_with_flow(z, Tensor({2, 16, 16, 2})).slice_copy(2) == z.slice_copy(0));
    }
    SUBCASE("frame-count mismatch fails validation") {
        try {
            p.edit({clip, vt::moving_disc_grounding(2, 16), spec});
            FAIL("expected a validation error");
        } catch (const StageError& e) {
            CHECK(e.stage() == "validation");
            CHECK(e.kind() == ErrorKind::validation);
        }
    }
    SUBCASE("pose control requires maps") {
        PipelineConfig c = cfg;
        c.control.condition = ConditionKind::pose;
        CHECK_THROWS_AS(Pipeline(c).edit({clip, g, spec}), StageError);
    }
}

TEST_CASE("provider failures name their stage") {
    ProviderRegistry reg = ProviderRegistry::with_toys();
    reg.add_flow_estimator("broken", [](const ProviderContext&) { return std::make_unique<BrokenFlow>(); });
    PipelineConfig cfg = quick_config();
    cfg.providers["flow_estimator"].impl = "broken";
    const Pipeline p(cfg, reg);
    const EditSpec spec{{}, "a red disc", "a red disc"};
    try {
        p.edit({vt::moving_disc_clip(2, 16), vt::moving_disc_grounding(2, 16), spec});
        FAIL("expected a flow error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "flow");
        CHECK(std::string(e.what()).find("flow exploded") != std::string::npos);
    }

    PipelineConfig bad = quick_config();
    bad.providers["denoiser"].impl = "missing";
    CHECK_THROWS_AS(Pipeline(bad, reg), StageError);
}

TEST_CASE("control at scale zero equals no control") {
    PipelineConfig a = quick_config();
    a.control.scale = 0.0;
    PipelineConfig b = quick_config();
    b.control.condition = ConditionKind::none;
    const auto clip = vt::moving_disc_clip(2, 16);
    const auto g = vt::moving_disc_grounding(2, 16);
    const EditSpec spec{{{"red disc", "green disc"}}, "a red disc", "a green disc"};
    const EditOutput x = Pipeline(a).edit({clip, g, spec}), y = Pipeline(b).edit({clip, g, spec});
    CHECK(max_abs_diff(x.latents, y.latents) <= 1e-12);
}
