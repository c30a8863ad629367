// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/attention.hpp"

#include <cmath>
#include <numbers>

#include "matrix_util.hpp"
#include "vgedit/error.hpp"

namespace vgedit {

using detail::to_matrix;
using detail::to_tensor;

void AttentionWeights::validate(std::size_t q_in, std::size_t kv_in) const {
    const std::size_t d = model_width();
    VGEDIT_CHECK(heads >= 1 && d % heads == 0, ErrorKind::invalid_argument,
                 "attention: model width " + std::to_string(d) + " is not divisible by " + std::to_string(heads) +
                     " heads");
    VGEDIT_CHECK(query.rows == q_in && key.rows == kv_in && value.rows == kv_in, ErrorKind::invalid_argument,
                 "attention: projection input widths do not match the token widths");
    VGEDIT_CHECK(key.cols == d && value.cols == d && output.rows == d && output.cols == d, ErrorKind::invalid_argument,
                 "attention: projection output widths are inconsistent");
}

std::vector<double> GroundingMLP::forward(std::span<const double> input) const {
    VGEDIT_CHECK(input.size() == w1.rows, ErrorKind::invalid_argument,
                 "grounding MLP expects input width " + std::to_string(w1.rows) + ", got " +
                     std::to_string(input.size()));
    ad::Matrix x(1, input.size(), std::vector<double>(input.begin(), input.end()));
    ad::Matrix h = b1;
    ad::matmul_acc(x, w1, h);
    for (double& v : h.data)
        v = v / (1.0 + std::exp(-v));
    ad::Matrix y = b2;
    ad::matmul_acc(h, w2, y);
    return y.data;
}

namespace graph {

AttentionVars bind(ad::Tape& tape, const AttentionWeights& weights) {
    return {tape.constant(weights.query), tape.constant(weights.key), tape.constant(weights.value),
            tape.constant(weights.output), weights.heads};
}

ad::Var attend(ad::Var queries, ad::Var keys_values, const AttentionVars& w) {
    const ad::Var q = ad::matmul(queries, w.query);
    const ad::Var k = ad::matmul(keys_values, w.key);
    const ad::Var v = ad::matmul(keys_values, w.value);
    const std::size_t d = q.cols();
    VGEDIT_CHECK(w.heads >= 1 && d % w.heads == 0, ErrorKind::invalid_argument,
                 "attention: model width not divisible by head count");
    const std::size_t hd = d / w.heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));

    std::vector<ad::Var> heads;
    heads.reserve(w.heads);
    for (std::size_t h = 0; h < w.heads; ++h) {
        const ad::Var qh = w.heads == 1 ? q : ad::slice_cols(q, h * hd, hd);
        const ad::Var kh = w.heads == 1 ? k : ad::slice_cols(k, h * hd, hd);
        const ad::Var vh = w.heads == 1 ? v : ad::slice_cols(v, h * hd, hd);
        const ad::Var probs = ad::softmax_rows(ad::scale(ad::matmul_bt(qh, kh), inv_sqrt));
        heads.push_back(ad::matmul(probs, vh));
    }
    const ad::Var merged = w.heads == 1 ? heads.front() : ad::concat_cols(heads);
    return ad::matmul(merged, w.output);
}

ad::Var spatial_temporal_self_attention(ad::Var tokens, const AttentionVars& w) {
    // Every query row attends over the stacked tokens of all frames, which is
    // exactly per-frame queries against the frame-concatenated keys/values.
    return attend(tokens, tokens, w);
}

ad::Var modulated_cross_attention(ad::Var tokens, std::size_t frames, ad::Var contexts, ContextMode mode,
                                  const AttentionVars& w) {
    VGEDIT_CHECK(frames >= 1 && tokens.rows() % frames == 0 && contexts.rows() % frames == 0,
                 ErrorKind::invalid_argument, "modulated cross-attention: rows not divisible by frame count");
    if (mode == ContextMode::uncond || frames == 1)
        return attend(tokens, contexts, w);
    const std::size_t p = tokens.rows() / frames;
    const std::size_t l = contexts.rows() / frames;
    std::vector<ad::Var> outs;
    outs.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f)
        outs.push_back(attend(ad::slice_rows(tokens, f * p, p), ad::slice_rows(contexts, f * l, l), w));
    return ad::concat_rows(outs);
}

ad::Var cross_frame_gated_attention(ad::Var tokens, std::size_t frames, ad::Var grounding, std::size_t entities,
                                    const GateParams& gate, const AttentionVars& w) {
    const double factor = gate.scale * std::tanh(gate.gamma);
    if (entities == 0 || factor == 0.0)
        return tokens;
    VGEDIT_CHECK(frames >= 1 && tokens.rows() % frames == 0 && grounding.valid() &&
                     grounding.rows() == frames * entities && grounding.cols() == tokens.cols(),
                 ErrorKind::invalid_argument, "cross-frame gated attention: grounding tokens do not match the latents");
    const std::size_t p = tokens.rows() / frames;
    std::vector<ad::Var> joint;
    joint.reserve(2 * frames);
    for (std::size_t f = 0; f < frames; ++f) {
        joint.push_back(ad::slice_rows(tokens, f * p, p));
        joint.push_back(ad::slice_rows(grounding, f * entities, entities));
    }
    const ad::Var all = ad::concat_rows(joint);
    const ad::Var attended = attend(all, all, w);
    std::vector<ad::Var> visual;
    visual.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f)
        visual.push_back(ad::slice_rows(attended, f * (p + entities), p));
    return ad::axpby(1.0, tokens, factor, ad::concat_rows(visual));
}

}  // namespace graph

Tensor attention(const Tensor& queries, const Tensor& keys_values, const AttentionWeights& weights) {
    VGEDIT_CHECK(queries.rank() == 2 && keys_values.rank() == 2, ErrorKind::invalid_argument,
                 "attention expects [P, d] queries and [K, d] keys/values");
    weights.validate(queries.dim(1), keys_values.dim(1));
    ad::Tape tape;
    const auto w = graph::bind(tape, weights);
    const ad::Var out = graph::attend(tape.constant(to_matrix(queries, queries.dim(0))),
                                      tape.constant(to_matrix(keys_values, keys_values.dim(0))), w);
    return to_tensor(out.value(), {queries.dim(0), weights.model_width()});
}

Tensor spatial_temporal_self_attention(const Tensor& z, const AttentionWeights& weights) {
    VGEDIT_CHECK(z.rank() == 3, ErrorKind::invalid_argument,
                 "spatial-temporal self-attention expects [N, P, D], got " + z.shape_string());
    weights.validate(z.dim(2), z.dim(2));
    VGEDIT_CHECK(weights.model_width() == z.dim(2), ErrorKind::invalid_argument,
                 "spatial-temporal self-attention: model width differs from token width");
    ad::Tape tape;
    const auto w = graph::bind(tape, weights);
    const ad::Var out = graph::spatial_temporal_self_attention(tape.constant(to_matrix(z, z.dim(0) * z.dim(1))), w);
    return to_tensor(out.value(), z.shape());
}

Tensor modulated_cross_attention(const Tensor& z_i, const Tensor& contexts, std::size_t frame_index, ContextMode mode,
                                 const AttentionWeights& weights) {
    VGEDIT_CHECK(z_i.rank() == 2 && contexts.rank() == 3, ErrorKind::invalid_argument,
                 "modulated cross-attention expects z_i [P, D] and contexts [N, L, d_ctx]");
    VGEDIT_CHECK(mode == ContextMode::cond || mode == ContextMode::uncond, ErrorKind::invalid_argument,
                 "modulated cross-attention: invalid mode");
    VGEDIT_CHECK(frame_index < contexts.dim(0), ErrorKind::invalid_argument,
                 "modulated cross-attention: frame index out of range");
    weights.validate(z_i.dim(1), contexts.dim(2));
    VGEDIT_CHECK(weights.model_width() == z_i.dim(1), ErrorKind::invalid_argument,
                 "modulated cross-attention: model width differs from token width");
    const Tensor selected = mode == ContextMode::cond ? contexts.slice_copy(frame_index) : contexts;
    ad::Tape tape;
    const auto w = graph::bind(tape, weights);
    const ad::Var out = graph::attend(tape.constant(to_matrix(z_i, z_i.dim(0))),
                                      tape.constant(to_matrix(selected, selected.size() / contexts.dim(2))), w);
    return to_tensor(out.value(), z_i.shape());
}

std::vector<double> fourier_embed(const BoundingBox& box, int num_freqs) {
    VGEDIT_CHECK(num_freqs >= 1, ErrorKind::invalid_argument, "fourier_embed requires at least one frequency");
    std::vector<double> out;
    out.reserve(8 * static_cast<std::size_t>(num_freqs));
    for (double v : {box.x0, box.y0, box.x1, box.y1}) {
        for (int k = 0; k < num_freqs; ++k) {
            const double arg = std::ldexp(std::numbers::pi, k) * v;
            out.push_back(std::sin(arg));
            out.push_back(std::cos(arg));
        }
    }
    return out;
}

Tensor build_grounding_tokens(const std::vector<GroundingEntity>& entities, const TextEncoder& text_encoder,
                              const GroundingMLP& mlp, int num_freqs) {
    Tensor tokens({entities.size(), mlp.output_width()});
    for (std::size_t j = 0; j < entities.size(); ++j) {
        std::vector<double> input = text_encoder.phrase_vector(entities[j].phrase);
        const std::vector<double> layout = fourier_embed(entities[j].box, num_freqs);
        input.insert(input.end(), layout.begin(), layout.end());
        const std::vector<double> u = mlp.forward(input);
        std::copy(u.begin(), u.end(), tokens.slice(j).begin());
    }
    return tokens;
}

Tensor build_video_grounding_tokens(const VideoGrounding& grounding, const TextEncoder& text_encoder,
                                    const GroundingMLP& mlp, int num_freqs) {
    const std::size_t m = grounding.entity_count();
    Tensor out({grounding.frame_count(), m, mlp.output_width()});
    for (std::size_t f = 0; f < grounding.frame_count(); ++f) {
        VGEDIT_CHECK(grounding.per_frame[f].size() == m, ErrorKind::validation, "entity counts differ between frames");
        const Tensor u = build_grounding_tokens(grounding.per_frame[f], text_encoder, mlp, num_freqs);
        std::copy(u.values().begin(), u.values().end(), out.slice(f).begin());
    }
    return out;
}

Tensor cross_frame_gated_attention(const Tensor& z, const Tensor& grounding, const GateParams& gate,
                                   const AttentionWeights& weights) {
    VGEDIT_CHECK(z.rank() == 3 && grounding.rank() == 3, ErrorKind::invalid_argument,
                 "cross-frame gated attention expects z [N, P, D] and grounding [N, M, D]");
    VGEDIT_CHECK(grounding.dim(0) == z.dim(0) && (grounding.dim(1) == 0 || grounding.dim(2) == z.dim(2)),
                 ErrorKind::invalid_argument, "cross-frame gated attention: grounding shape does not match latents");
    const std::size_t m = grounding.dim(1);
    if (m == 0 || gate.scale * std::tanh(gate.gamma) == 0.0)
        return z;
    weights.validate(z.dim(2), z.dim(2));
    ad::Tape tape;
    const auto w = graph::bind(tape, weights);
    const ad::Var out = graph::cross_frame_gated_attention(tape.constant(to_matrix(z, z.dim(0) * z.dim(1))), z.dim(0),
                                                           tape.constant(to_matrix(grounding, z.dim(0) * m)), m, gate,
                                                           w);
    return to_tensor(out.value(), z.shape());
}

Tensor token_slice(const Tensor& joint, std::size_t visual_count) {
    VGEDIT_CHECK(joint.rank() == 2, ErrorKind::invalid_argument, "token_slice expects [P + M, D]");
    VGEDIT_CHECK(visual_count <= joint.dim(0), ErrorKind::invalid_argument,
                 "token_slice: " + std::to_string(visual_count) + " visual tokens exceed " +
                     std::to_string(joint.dim(0)) + " joint tokens");
    const std::size_t n = visual_count * joint.dim(1);
    return Tensor({visual_count, joint.dim(1)}, std::vector<double>(joint.values().begin(), joint.values().begin() + static_cast<std::ptrdiff_t>(n)));
}

}  // namespace vgedit
