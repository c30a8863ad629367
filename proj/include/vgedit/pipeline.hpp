// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// End-to-end editing: encode, per-frame inversion and null optimisation,
// flow-guided smoothing of the noise latents, then grounded and controlled
// denoising with an optional inpainting blend before every step.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vgedit/config.hpp"
#include "vgedit/registry.hpp"
#include "vgedit/video_model.hpp"

namespace vgedit {

/// Latent cells [h, w] lying outside every box of every frame (1 = keep the
/// source). A cell is inside a box when its centre falls in the half-open box
/// [x0, x1) x [y0, y1). No boxes at all yields all ones; an empty outside
/// region yields nullopt.
std::optional<Tensor> derive_inpaint_mask(const VideoGrounding& grounding, std::size_t h, std::size_t w);

struct InversionResult {
    Tensor clean;   // [N, h, w, c]
    Tensor noise;   // z_T, [N, h, w, c]
    Tensor nulls;   // [N, S, L, d_ctx]
    std::vector<InversionTrajectory> trajectories;
    std::vector<NullOptResult> null_opt;
};

struct EditRequest {
    const FrameSequence& frames;
    const VideoGrounding& grounding;
    const EditSpec& spec;
    const DepthSequence* depth = nullptr;           // estimated when absent and condition is depth
    const FrameSequence* condition_maps = nullptr;  // required when condition is pose
};

struct EditOutput {
    FrameSequence frames;
    Tensor latents;           // final [N, h, w, c]
    Tensor smoothed_noise;    // z_T after smoothing
    VideoGrounding target_grounding;
    std::optional<Tensor> inpaint_mask;  // the mask actually applied
    std::vector<std::string> warnings;
};

/// Inputs to the denoising loop once inversion and smoothing are done.
struct DenoiseInputs {
    const InversionResult& inversion;
    const Tensor& start;                 // [N, h, w, c] at the largest timestep
    const Tensor& cond_context;          // [L, d_ctx], shared by all frames
    const Tensor* grounding = nullptr;   // [N, M, d_model]
    const Tensor* conditions = nullptr;  // [N, h, w, k]; control is skipped when null
    const Tensor* mask = nullptr;        // [h, w]
};

class Pipeline {
public:
    explicit Pipeline(PipelineConfig config, const ProviderRegistry& registry = ProviderRegistry::with_toys());

    const PipelineConfig& config() const noexcept { return m_config; }
    const Providers& providers() const noexcept { return m_providers; }

    InversionResult invert(const FrameSequence& frames, std::string_view source_prompt) const;
    InversionResult invert_latents(const Tensor& clean, std::string_view source_prompt) const;
    /// Flow-guided smoothing at the configured threshold; a single frame or
    /// threshold 0 returns the latents unchanged.
    Tensor smooth(const Tensor& latents, const FrameSequence& frames) const;
    Tensor smooth_with_flow(const Tensor& latents, const Tensor& flow) const;
    Tensor denoise(const DenoiseInputs& inputs) const;
    EditOutput edit(const EditRequest& request) const;

private:
    PipelineConfig m_config;
    Providers m_providers;
};

EditOutput edit_video(const FrameSequence& frames, const VideoGrounding& grounding, const EditSpec& spec,
                      const DepthSequence* depth, const PipelineConfig& config);

}  // namespace vgedit
