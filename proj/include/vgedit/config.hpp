// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Pipeline configuration. The JSON form has the sections
//
//   diffusion  train_steps, beta_start, beta_end, num_inference_steps,
//              guidance_scale, null_opt {inner_steps, learning_rate,
//              early_stop_loss}
//   smoothing  flow_threshold
//   control    scale, condition ("depth" | "pose" | "none")
//   grounding  fourier_freqs, gate {gamma, scale}, inpainting ("auto" | "on" | "off")
//   providers  <role> -> {impl, seed, weights}
//   seeds      base
//
// Every key is optional; unknown keys are rejected.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "vgedit/attention.hpp"
#include "vgedit/control.hpp"
#include "vgedit/diffusion.hpp"

namespace vgedit {

enum class InpaintMode { automatic, on, off };

struct ProviderBinding {
    std::string impl = "toy";
    std::optional<std::uint64_t> seed;  // derived from the base seed when absent
    std::string weights;                // optional archive path
};

/// Provider roles known to the registry.
inline constexpr std::string_view provider_roles[] = {"text_encoder", "flow_estimator", "depth_estimator",
                                                      "embedder",     "latent_codec",   "denoiser",
                                                      "control_branch", "grounding_mlp"};

struct PipelineConfig {
    int train_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int num_inference_steps = 50;
    double guidance_scale = 12.5;
    NullOptOptions null_opt;

    double flow_threshold = 0.2;

    ControlConfig control;

    int fourier_freqs = 8;
    GateParams gate{0.1, 1.0};
    InpaintMode inpainting = InpaintMode::automatic;

    std::map<std::string, ProviderBinding> providers;
    std::uint64_t base_seed = 42;

    /// Throws Error(validation) naming the first offending key.
    void validate() const;
    NoiseSchedule schedule() const;
    /// Binding for a role, with defaults filled in.
    ProviderBinding provider(std::string_view role) const;
    std::uint64_t provider_seed(std::string_view role) const;
};

PipelineConfig parse_config(std::string_view json_text);
/// Resolved configuration (every key, every provider) as pretty JSON.
std::string config_to_json(const PipelineConfig& config);
/// RFC 7386 merge of `patch_json` into `base_json`.
std::string merge_config_json(std::string_view base_json, std::string_view patch_json);

std::string to_string(InpaintMode mode);

}  // namespace vgedit
