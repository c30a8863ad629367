// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Interfaces behind which external models sit. The toy implementations in
// toy_providers.hpp satisfy them deterministically; adapters for pretrained
// models plug in through the registry without touching pipeline code.

#include <string_view>
#include <vector>

#include "vgedit/denoiser.hpp"
#include "vgedit/tensor.hpp"
#include "vgedit/video_model.hpp"

namespace vgedit {

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    /// Token embeddings [L, d_ctx] for a prompt; "" yields the null embedding.
    virtual Tensor encode(std::string_view text) const = 0;
    /// Fixed-width vector for a grounding phrase.
    virtual std::vector<double> phrase_vector(std::string_view phrase) const = 0;
    virtual std::size_t context_length() const = 0;
    virtual std::size_t context_width() const = 0;
};

/// Optical flow between consecutive frames: [N-1, H, W, 2] holding
/// (vertical, horizontal) displacement of frame i-1 content in frame i.
class FlowEstimator {
public:
    virtual ~FlowEstimator() = default;
    virtual Tensor estimate(const FrameSequence& frames) const = 0;
};

class DepthEstimator {
public:
    virtual ~DepthEstimator() = default;
    /// [H, W] map in [0, 1] for one [H, W, 3] frame.
    virtual Tensor estimate_frame(const Tensor& frame) const = 0;
    DepthSequence estimate(const FrameSequence& frames) const;
};

/// Joint image/text embedder used by the evaluation metrics.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed_frame(const Tensor& frame) const = 0;
    virtual std::vector<double> embed_text(std::string_view text) const = 0;
};

/// Maps frames to latents and back.
class LatentCodec {
public:
    virtual ~LatentCodec() = default;
    virtual Tensor encode(const FrameSequence& frames) const = 0;  // [N, h, w, c]
    virtual FrameSequence decode(const Tensor& latents) const = 0;
};

/// Control branch producing residuals for the denoiser's injection sites.
class ControlBranch {
public:
    virtual ~ControlBranch() = default;
    /// conditions: [N, h, w, k] condition features at latent resolution.
    virtual ControlResiduals residuals(const Tensor& latents, int timestep, const Contexts& contexts,
                                       const Tensor& conditions) const = 0;
    virtual std::size_t condition_channels() const = 0;
};

}  // namespace vgedit
