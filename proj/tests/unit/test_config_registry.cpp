// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>

#include <json.hpp>

#include "vgedit/config.hpp"
#include "vgedit/error.hpp"
#include "vgedit/registry.hpp"
#include "vgedit/rng.hpp"
#include "vgedit/toy_providers.hpp"

using namespace vgedit;
using nlohmann::json;

namespace {

ErrorKind kind_of(std::string_view text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("config was accepted: " << text);
    return ErrorKind::runtime;
}

}  // namespace

TEST_CASE("defaults") {
    const PipelineConfig c = parse_config("{}");
    CHECK(c.num_inference_steps == 50);
    CHECK(c.guidance_scale == 12.5);
    CHECK(c.flow_threshold == 0.2);
    CHECK(c.control.scale == 1.0);
    CHECK(c.control.condition == ConditionKind::depth);
    CHECK(c.fourier_freqs == 8);
    CHECK(c.inpainting == InpaintMode::automatic);
    CHECK(c.base_seed == 42);
    CHECK(parse_config("null").guidance_scale == 12.5);
    CHECK(c.schedule().step_count() == 50);
}

TEST_CASE("parsing every section") {
    const PipelineConfig c = parse_config(R"({
        "diffusion": {"num_inference_steps": 20, "guidance_scale": 7.5, "null_opt": {"inner_steps": 3}},
        "smoothing": {"flow_threshold": 0.3},
        "control": {"scale": 0.5, "condition": "pose"},
        "grounding": {"fourier_freqs": 4, "gate": {"gamma": 0.2}, "inpainting": "off"},
        "providers": {"denoiser": {"impl": "toy", "seed": 9}},
        "seeds": {"base": 7}})");
    CHECK(c.num_inference_steps == 20);
    CHECK(c.guidance_scale == 7.5);
    CHECK(c.null_opt.inner_steps == 3);
    CHECK(c.flow_threshold == 0.3);
    CHECK(c.control.condition == ConditionKind::pose);
    CHECK(c.fourier_freqs == 4);
    CHECK(c.gate.gamma == 0.2);
    CHECK(c.gate.scale == 1.0);
    CHECK(c.inpainting == InpaintMode::off);
    CHECK(c.provider_seed("denoiser") == 9);
    CHECK(c.provider_seed("text_encoder") == derive_seed(7, "text_encoder"));
}

TEST_CASE("invalid configurations are rejected") {
    CHECK(kind_of(R"({"diffusion": {"steps": 3}})") == ErrorKind::validation);
    CHECK(kind_of(R"({"extra": 1})") == ErrorKind::validation);
    CHECK(kind_of(R"({"diffusion": {"num_inference_steps": "many"}})") == ErrorKind::validation);
    CHECK(kind_of(R"({"diffusion": {"num_inference_steps": 0}})") == ErrorKind::validation);
    CHECK(kind_of(R"({"diffusion": {"beta_start": 0.02, "beta_end": 0.02}})") == ErrorKind::validation);
    CHECK(kind_of(R"({"smoothing": {"flow_threshold": 1.5}})") == ErrorKind::validation);
    CHECK(kind_of(R"({"control": {"scale": -1}})") == ErrorKind::validation);
    CHECK(kind_of(R"({"control": {"condition": "canny"}})") == ErrorKind::validation);
    CHECK(kind_of(R"({"grounding": {"inpainting": "maybe"}})") == ErrorKind::validation);
    CHECK(kind_of(R"({"providers": {"painter": {"impl": "toy"}}})") == ErrorKind::validation);
    CHECK(kind_of("{not json") == ErrorKind::validation);
}

TEST_CASE("resolved config round trips") {
    PipelineConfig c;
    c.guidance_scale = 3.0;
    c.inpainting = InpaintMode::on;
    const std::string text = config_to_json(c);
    const json j = json::parse(text);
    CHECK(j["providers"].size() == std::size(provider_roles));
    CHECK(j["providers"]["embedder"]["seed"].get<std::uint64_t>() == derive_seed(42, "embedder"));
    const PipelineConfig back = parse_config(text);
    CHECK(back.guidance_scale == 3.0);
    CHECK(back.inpainting == InpaintMode::on);
    CHECK(config_to_json(back) == text);
}

TEST_CASE("merge patch") {
    const std::string merged =
        merge_config_json(R"({"diffusion": {"guidance_scale": 5, "num_inference_steps": 9}, "seeds": {"base": 1}})",
                          R"({"diffusion": {"guidance_scale": 2}, "seeds": null})");
    const json j = json::parse(merged);
    CHECK(j["diffusion"]["guidance_scale"] == 2);
    CHECK(j["diffusion"]["num_inference_steps"] == 9);
    CHECK_FALSE(j.contains("seeds"));
    CHECK_THROWS_AS(merge_config_json("{", "{}"), Error);
}

TEST_CASE("registry resolves every role") {
    PipelineConfig c;
    const Providers p = ProviderRegistry::with_toys().resolve(c);
    CHECK(p.text_encoder != nullptr);
    CHECK(p.flow_estimator != nullptr);
    CHECK(p.depth_estimator != nullptr);
    CHECK(p.embedder != nullptr);
    CHECK(p.latent_codec != nullptr);
    CHECK(p.denoiser != nullptr);
    REQUIRE(p.control_branch != nullptr);
    CHECK(p.control_branch->condition_channels() == 1);
    CHECK(p.grounding_mlp.output_width() == p.denoiser->model_width());

    c.control.condition = ConditionKind::pose;
    CHECK(ProviderRegistry::with_toys().resolve(c).control_branch->condition_channels() == 3);
    c.control.condition = ConditionKind::none;
    CHECK(ProviderRegistry::with_toys().resolve(c).control_branch == nullptr);

    c.providers["embedder"].impl = "clip";
    CHECK_THROWS_AS(ProviderRegistry::with_toys().resolve(c), Error);
}

TEST_CASE("custom factories plug in") {
    ProviderRegistry reg = ProviderRegistry::with_toys();
    std::uint64_t seen = 0;
    reg.add_text_encoder("counting", [&](const ProviderContext& ctx) {
        seen = ctx.seed;
        return std::make_unique<ToyTextEncoder>(ctx.seed);
    });
    PipelineConfig c;
    c.providers["text_encoder"].impl = "counting";
    c.providers["text_encoder"].seed = 1234;
    reg.resolve(c);
    CHECK(seen == 1234);
}

TEST_CASE("denoiser weights load from an archive") {
    const std::string path = "test_config_registry_weights.vgw";
    const ToyDenoiserWeights w = ToyDenoiserWeights::seeded(77);
    write_weight_archive(path, w.to_archive());
    PipelineConfig c;
    c.providers["denoiser"].weights = path;
    const Providers p = ProviderRegistry::with_toys().resolve(c);
    const auto* toy = dynamic_cast<const ToyDenoiser*>(p.denoiser.get());
    REQUIRE(toy != nullptr);
    // Archives store single precision.
    const auto& loaded = toy->weights().out_w;
    REQUIRE(loaded.data.size() == w.out_w.data.size());
    for (std::size_t i = 0; i < loaded.data.size(); ++i)
        CHECK(loaded.data[i] == static_cast<double>(static_cast<float>(w.out_w.data[i])));
    std::remove(path.c_str());
}
