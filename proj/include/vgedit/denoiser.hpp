// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "vgedit/tensor.hpp"

namespace vgedit {

/// Which context set a cross-attention layer reads.
///   cond:   frame i attends to contexts[i] only.
///   uncond: frame i attends to the token-axis concatenation of all N contexts.
enum class ContextMode { cond, uncond };

struct Contexts {
    Tensor embeddings;  // [N, L, d_ctx]
    ContextMode mode = ContextMode::cond;
};

/// Control-branch residuals, one [N, h_l, w_l, c_l] array per injection site.
struct ControlResiduals {
    std::vector<Tensor> levels;
};

struct DenoiseRequest {
    const Tensor& latents;  // [N, h, w, c]
    int timestep;
    const Contexts& contexts;
    const Tensor* grounding = nullptr;  // [N, M, d_model] grounding tokens, or none
    const ControlResiduals* residuals = nullptr;
};

/// Noise predictor eps(z_t, t, context [, grounding, control]).
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual Tensor predict(const DenoiseRequest& request) const = 0;

    using UpstreamFn = std::function<Tensor(const Tensor& prediction)>;

    /// Prediction together with the vector-Jacobian product
    /// d<upstream, prediction> / d contexts.embeddings, where the upstream
    /// gradient is computed from the prediction by `upstream`.
    virtual std::pair<Tensor, Tensor> predict_with_context_vjp(const DenoiseRequest& request,
                                                               const UpstreamFn& upstream) const = 0;

    /// Shapes of the control injection sites for latents of size (h, w).
    virtual std::vector<std::vector<std::size_t>> residual_shapes(std::size_t frames, std::size_t h,
                                                                  std::size_t w) const = 0;
    virtual std::size_t model_width() const = 0;
};

}  // namespace vgedit
