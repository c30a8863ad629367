// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "vgedit/autodiff.hpp"
#include "vgedit/denoiser.hpp"
#include "vgedit/providers.hpp"
#include "vgedit/tensor.hpp"
#include "vgedit/video_model.hpp"

namespace vgedit {

/// Bias-free multi-head projections. query/key/value are [in_width x D],
/// output is [D x D], with D = heads * head_dim the model width.
struct AttentionWeights {
    ad::Matrix query;
    ad::Matrix key;
    ad::Matrix value;
    ad::Matrix output;
    std::size_t heads = 1;

    std::size_t model_width() const noexcept { return query.cols; }
    std::size_t head_dim() const noexcept { return heads == 0 ? 0 : query.cols / heads; }
    /// Throws unless the matrices fit query inputs of width q_in and
    /// key/value inputs of width kv_in.
    void validate(std::size_t q_in, std::size_t kv_in) const;
};

/// Gated residual z + scale * tanh(gamma) * attention.
struct GateParams {
    double gamma = 0.0;
    double scale = 1.0;
};

/// Two affine layers with SiLU between, [text, fourier] -> d_model.
struct GroundingMLP {
    ad::Matrix w1;  // [in x hidden]
    ad::Matrix b1;  // [1 x hidden]
    ad::Matrix w2;  // [hidden x d_model]
    ad::Matrix b2;  // [1 x d_model]

    std::size_t input_width() const noexcept { return w1.rows; }
    std::size_t output_width() const noexcept { return w2.cols; }
    std::vector<double> forward(std::span<const double> input) const;
};

// ---------------------------------------------------------------------------
// Tensor-level operations.

/// Vanilla multi-head attention: queries [P, q_in], keys/values [K, kv_in].
Tensor attention(const Tensor& queries, const Tensor& keys_values, const AttentionWeights& weights);

/// z [N, P, D]: queries from frame i, keys/values from all frames' tokens.
Tensor spatial_temporal_self_attention(const Tensor& z, const AttentionWeights& weights);

/// z_i [P, D]; contexts [N, L, d_ctx]. cond reads contexts[frame_index];
/// uncond reads all N contexts concatenated along the token axis.
Tensor modulated_cross_attention(const Tensor& z_i, const Tensor& contexts, std::size_t frame_index, ContextMode mode,
                                 const AttentionWeights& weights);

/// Layout token of length 8F: for each coordinate in (x0, y0, x1, y1) and
/// k in [0, F): sin(2^k pi v), cos(2^k pi v).
std::vector<double> fourier_embed(const BoundingBox& box, int num_freqs);

/// Grounding tokens [M, D] for one frame: mlp([text(phrase), fourier(box)]).
Tensor build_grounding_tokens(const std::vector<GroundingEntity>& entities, const TextEncoder& text_encoder,
                              const GroundingMLP& mlp, int num_freqs);

/// Grounding tokens for every frame, [N, M, D].
Tensor build_video_grounding_tokens(const VideoGrounding& grounding, const TextEncoder& text_encoder,
                                    const GroundingMLP& mlp, int num_freqs);

/// z [N, P, D]; grounding [N, M, D]. Joint tokens [z_i; U_i] attend over the
/// interleaved concatenation of all frames' joint tokens; the first P rows
/// are kept and added back through the gate. M == 0 or a closed gate returns
/// the input unchanged.
Tensor cross_frame_gated_attention(const Tensor& z, const Tensor& grounding, const GateParams& gate,
                                   const AttentionWeights& weights);

/// First `visual_count` rows of a [P + M, D] joint token matrix.
Tensor token_slice(const Tensor& joint, std::size_t visual_count);

// ---------------------------------------------------------------------------
// Differentiable forms used by the denoiser and control branch. Token
// matrices stack all frames: row f*P + p is token p of frame f.

namespace graph {

struct AttentionVars {
    ad::Var query;
    ad::Var key;
    ad::Var value;
    ad::Var output;
    std::size_t heads = 1;
};

AttentionVars bind(ad::Tape& tape, const AttentionWeights& weights);

/// softmax(QKᵀ / sqrt(d)) V per head, heads concatenated, then W_O.
ad::Var attend(ad::Var queries, ad::Var keys_values, const AttentionVars& w);

ad::Var spatial_temporal_self_attention(ad::Var tokens, const AttentionVars& w);

/// contexts stacks N blocks of L rows.
ad::Var modulated_cross_attention(ad::Var tokens, std::size_t frames, ad::Var contexts, ContextMode mode,
                                  const AttentionVars& w);

/// grounding stacks N blocks of M rows (M may be 0, then pass an invalid Var).
ad::Var cross_frame_gated_attention(ad::Var tokens, std::size_t frames, ad::Var grounding, std::size_t entities,
                                    const GateParams& gate, const AttentionVars& w);

}  // namespace graph

}  // namespace vgedit
