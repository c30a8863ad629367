// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "vgedit/denoiser.hpp"
#include "vgedit/providers.hpp"
#include "vgedit/tensor.hpp"
#include "vgedit/video_model.hpp"

namespace vgedit {

enum class ConditionKind { depth, pose, none };

ConditionKind parse_condition_kind(const std::string& name);
std::string to_string(ConditionKind kind);

struct ControlConfig {
    double scale = 1.0;
    ConditionKind condition = ConditionKind::depth;
};

/// Runs the (inflated) control branch; conditions are [N, h, w, k] features
/// at latent resolution.
ControlResiduals control_residuals(const ControlBranch& branch, const Tensor& latents, int timestep,
                                   const Contexts& contexts, const Tensor& conditions);

ControlResiduals scale_residuals(const ControlResiduals& residuals, double scale);

/// Per-site elementwise sum.
std::vector<Tensor> inject_residuals(const std::vector<Tensor>& features, const ControlResiduals& residuals);

/// Depth maps [N, H, W] area-pooled to [N, h, w, 1].
Tensor depth_condition_features(const DepthSequence& depth, std::size_t h, std::size_t w);

/// 3-channel condition images (pose rasterisations) area-pooled to [N, h, w, 3].
Tensor pose_condition_features(const FrameSequence& maps, std::size_t h, std::size_t w);

}  // namespace vgedit
