// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "vgedit/tensor.hpp"

namespace vgedit {

/// [N-1, H, W, 2]: (vertical, horizontal) motion from frame i to frame i+1.
struct FlowField {
    Tensor data;
};

/// [N-1, H, W], globally normalised to [0, 1].
struct MagnitudeMaps {
    Tensor data;
};

/// [N-1, h, w] of {0, 1}; 1 marks a static cell.
struct StaticMasks {
    Tensor data;
};

/// Per-pixel Euclidean norm of the two flow channels, [N-1, H, W].
Tensor magnitude_map(const FlowField& flow);

/// Divides by the maximum over all maps; an all-zero input stays zero.
MagnitudeMaps normalize_magnitudes(const Tensor& magnitudes);

/// 1 where magnitude < threshold (strict), else 0.
Tensor static_mask(const MagnitudeMaps& magnitudes, double threshold);

/// Area-average pooling of a binary [H, W] mask to [h, w], re-binarised at
/// >= 0.5 (half-covered blocks count as static).
Tensor downsample_mask(const Tensor& mask, std::size_t h, std::size_t w);

/// Full mask pipeline: magnitude, normalise, threshold, downsample every
/// frame pair to latent resolution.
StaticMasks static_masks_from_flow(const FlowField& flow, double threshold, std::size_t h, std::size_t w);

/// Sequential blend over i = 1..N-1 (0-based):
///   z[i] = mask[i-1] ? z[i-1] : z[i]
/// reading the already-smoothed z[i-1]; masks broadcast over channels.
Tensor smooth_latents(const Tensor& latents, const StaticMasks& masks);

}  // namespace vgedit
