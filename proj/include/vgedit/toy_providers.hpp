// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic stand-ins for every external model.
//
// Seeding: each weight matrix is filled from Rng(derive_seed(seed, name))
// (mt19937_64 behind splitmix64, see rng.hpp) in row-major order, so the
// same seed yields the same weights on every platform. Denoiser and control
// weights are uniform(-0.05, 0.05) except the latent input projections
// (in_w), which are uniform(-0.01, 0.01); the grounding MLP uses
// uniform(-0.1, 0.1).

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vgedit/attention.hpp"
#include "vgedit/binary_io.hpp"
#include "vgedit/denoiser.hpp"
#include "vgedit/providers.hpp"

namespace vgedit {

struct ToyDims {
    std::size_t latent_channels = 4;
    std::size_t model_width = 16;
    std::size_t context_width = 16;
    std::size_t context_length = 8;
    std::size_t heads = 2;
    std::size_t downsample = 4;  // pixels per latent cell along each axis
    std::size_t embed_width = 32;
};

/// uniform(lo, hi) matrix from the named sub-stream of `seed`.
ad::Matrix seeded_matrix(std::uint64_t seed, std::string_view name, std::size_t rows, std::size_t cols,
                         double lo = -0.1, double hi = 0.1);

// ---------------------------------------------------------------------------

/// Whitespace tokens, each hashed to a seeded unit vector. A prompt encodes to
/// [<bos>, tokens..., <eos>, <pad>...] truncated/padded to L rows.
class ToyTextEncoder final : public TextEncoder {
public:
    explicit ToyTextEncoder(std::uint64_t seed, ToyDims dims = {});

    Tensor encode(std::string_view text) const override;
    /// Mean of the phrase's token vectors (the <eos> vector for no tokens).
    std::vector<double> phrase_vector(std::string_view phrase) const override;
    std::size_t context_length() const override { return m_dims.context_length; }
    std::size_t context_width() const override { return m_dims.context_width; }

    std::vector<double> token_vector(std::string_view token) const;
    static std::vector<std::string> tokenize(std::string_view text);

private:
    std::uint64_t m_seed;
    ToyDims m_dims;
};

/// Exhaustive block matching: 4x4 blocks, +-4 pixel search, sum of absolute
/// differences over RGB. Ties prefer the smaller displacement.
class ToyFlowEstimator final : public FlowEstimator {
public:
    explicit ToyFlowEstimator(std::size_t block = 4, int radius = 4) : m_block(block), m_radius(radius) {}
    Tensor estimate(const FrameSequence& frames) const override;

private:
    std::size_t m_block;
    int m_radius;
};

/// Luminance 0.299r + 0.587g + 0.114b rescaled to [0, 1] per frame; a frame
/// with zero luminance range maps to zeros.
class ToyDepthEstimator final : public DepthEstimator {
public:
    Tensor estimate_frame(const Tensor& frame) const override;
};

/// Seeded linear projections of pooled pixels (8x8x3 grid) or of the mean
/// text-token vector, normalised to unit length.
class ToyEmbedder final : public Embedder {
public:
    explicit ToyEmbedder(std::uint64_t seed, ToyDims dims = {});
    std::vector<double> embed_frame(const Tensor& frame) const override;
    std::vector<double> embed_text(std::string_view text) const override;

private:
    ToyTextEncoder m_text;
    ad::Matrix m_pixel_projection;  // [192 x d_e]
    ad::Matrix m_text_projection;   // [d_ctx x d_e]
};

/// Affine map to [-1, 1], average pooling by `downsample`, then a fixed
/// seeded 3 -> c linear lift. Decoding applies the least-squares inverse of
/// the lift, bilinear upsampling (pixel centres, clamped at the border) and
/// clamps to [0, 1].
class ToyLatentCodec final : public LatentCodec {
public:
    explicit ToyLatentCodec(std::uint64_t seed, ToyDims dims = {});
    Tensor encode(const FrameSequence& frames) const override;
    FrameSequence decode(const Tensor& latents) const override;

    const ad::Matrix& lift() const noexcept { return m_lift; }

private:
    ToyDims m_dims;
    ad::Matrix m_lift;     // [3 x c]
    ad::Matrix m_inverse;  // [c x 3]
};

// ---------------------------------------------------------------------------

struct MixWeights {
    ad::Matrix w1, b1, w2, b2;  // x + silu(x W1 + b1) W2 + b2
};

struct DenoiserLevel {
    AttentionWeights self_attention;
    AttentionWeights gated_attention;
    GateParams gate;
    AttentionWeights cross_attention;
    MixWeights mix;
};

/// Two-level toy eps-predictor. Per level: spatial-temporal self-attention,
/// cross-frame gated attention, modulated cross-attention, affine mix; then
/// a middle mix block. Control residual sites: after level 0, after level 1,
/// after the middle block.
struct ToyDenoiserWeights {
    ToyDims dims;
    ad::Matrix in_w, in_b;  // [c x D], [1 x D]
    ad::Matrix time_w;      // [D x D]
    DenoiserLevel levels[2];
    MixWeights middle;
    ad::Matrix out_w, out_b;  // [D x c], [1 x c]

    static ToyDenoiserWeights seeded(std::uint64_t seed, ToyDims dims = {}, GateParams gate = {0.1, 1.0});
    static ToyDenoiserWeights zeros(ToyDims dims = {});
    WeightArchive to_archive() const;
    static ToyDenoiserWeights from_archive(const WeightArchive& archive, ToyDims dims = {});
};

class ToyDenoiser final : public Denoiser {
public:
    explicit ToyDenoiser(ToyDenoiserWeights weights);

    Tensor predict(const DenoiseRequest& request) const override;
    std::pair<Tensor, Tensor> predict_with_context_vjp(const DenoiseRequest& request,
                                                       const UpstreamFn& upstream) const override;
    std::vector<std::vector<std::size_t>> residual_shapes(std::size_t frames, std::size_t h,
                                                          std::size_t w) const override;
    std::size_t model_width() const override { return m_weights.dims.model_width; }

    const ToyDenoiserWeights& weights() const noexcept { return m_weights; }

    /// Differentiable forward; `contexts` is [N*L, d_ctx]. Returns [N*h*w, c].
    ad::Var forward(ad::Tape& tape, const Tensor& latents, int timestep, ad::Var contexts, ContextMode mode,
                    const Tensor* grounding, const ControlResiduals* residuals) const;

private:
    ToyDenoiserWeights m_weights;
};

struct ControlLevel {
    AttentionWeights self_attention;
    AttentionWeights cross_attention;
    MixWeights mix;
};

/// Control branch mirroring the denoiser topology without gated attention.
struct ToyControlWeights {
    ToyDims dims;
    std::size_t condition_channels = 1;
    ad::Matrix in_w, in_b, cond_w;  // [c x D], [1 x D], [k x D]
    ad::Matrix time_w;
    ControlLevel levels[2];
    MixWeights middle;
    ad::Matrix site_w[3];  // [D x D] output projection per injection site

    static ToyControlWeights seeded(std::uint64_t seed, std::size_t condition_channels, ToyDims dims = {});
    WeightArchive to_archive() const;
    static ToyControlWeights from_archive(const WeightArchive& archive, ToyDims dims = {});
};

class ToyControlBranch final : public ControlBranch {
public:
    explicit ToyControlBranch(ToyControlWeights weights);
    ControlResiduals residuals(const Tensor& latents, int timestep, const Contexts& contexts,
                               const Tensor& conditions) const override;
    std::size_t condition_channels() const override { return m_weights.condition_channels; }
    const ToyControlWeights& weights() const noexcept { return m_weights; }

private:
    ToyControlWeights m_weights;
};

GroundingMLP seeded_grounding_mlp(std::uint64_t seed, std::size_t text_width, int num_freqs, ToyDims dims = {});

/// Sinusoidal embedding of a timestep, width `width` (even).
std::vector<double> timestep_embedding(int timestep, std::size_t width);

}  // namespace vgedit
