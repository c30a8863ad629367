// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reference implementations written with plain scalar loops. They share no
// code with the library beyond the data types.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "vgedit/attention.hpp"
#include "vgedit/rng.hpp"
#include "vgedit/tensor.hpp"
#include "vgedit/video_model.hpp"

namespace vgedit::oracle {

using Rows = std::vector<std::vector<double>>;

inline Rows rows_of(const Tensor& t, std::size_t first, std::size_t count, std::size_t width) {
    Rows out(count, std::vector<double>(width));
    for (std::size_t r = 0; r < count; ++r)
        for (std::size_t c = 0; c < width; ++c)
            out[r][c] = t[(first + r) * width + c];
    return out;
}

inline Rows project(const Rows& x, const ad::Matrix& w) {
    Rows out(x.size(), std::vector<double>(w.cols, 0.0));
    for (std::size_t r = 0; r < x.size(); ++r)
        for (std::size_t c = 0; c < w.cols; ++c)
            for (std::size_t k = 0; k < w.rows; ++k)
                out[r][c] += x[r][k] * w(k, c);
    return out;
}

/// softmax(q kᵀ / sqrt(d_h)) v per head, heads concatenated, then W_O.
inline Rows attention(const Rows& queries, const Rows& kv, const AttentionWeights& w) {
    const Rows q = project(queries, w.query), k = project(kv, w.key), v = project(kv, w.value);
    const std::size_t d = w.query.cols, hd = d / w.heads;
    Rows merged(queries.size(), std::vector<double>(d, 0.0));
    for (std::size_t h = 0; h < w.heads; ++h) {
        for (std::size_t i = 0; i < q.size(); ++i) {
            std::vector<double> score(k.size());
            double top = -INFINITY;
            for (std::size_t j = 0; j < k.size(); ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < hd; ++c)
                    s += q[i][h * hd + c] * k[j][h * hd + c];
                score[j] = s / std::sqrt(static_cast<double>(hd));
                top = std::max(top, score[j]);
            }
            double total = 0.0;
            for (double& s : score) {
                s = std::exp(s - top);
                total += s;
            }
            for (std::size_t j = 0; j < k.size(); ++j)
                for (std::size_t c = 0; c < hd; ++c)
                    merged[i][h * hd + c] += score[j] / total * v[j][h * hd + c];
        }
    }
    return project(merged, w.output);
}

/// z [N, P, D]: frame i's tokens attend over the tokens of every frame.
inline Tensor spatial_temporal(const Tensor& z, const AttentionWeights& w) {
    const std::size_t n = z.dim(0), p = z.dim(1), d = z.dim(2);
    const Rows all = rows_of(z, 0, n * p, d);
    Tensor out(z.shape());
    for (std::size_t f = 0; f < n; ++f) {
        const Rows o = attention(rows_of(z, f * p, p, d), all, w);
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t c = 0; c < d; ++c)
                out[(f * p + r) * d + c] = o[r][c];
    }
    return out;
}

inline Tensor modulated_cross(const Tensor& z_i, const Tensor& contexts, std::size_t frame, bool uncond,
                              const AttentionWeights& w) {
    const std::size_t p = z_i.dim(0), d = z_i.dim(1), l = contexts.dim(1), dc = contexts.dim(2);
    const Rows kv = uncond ? rows_of(contexts, 0, contexts.dim(0) * l, dc) : rows_of(contexts, frame * l, l, dc);
    const Rows o = attention(rows_of(z_i, 0, p, d), kv, w);
    Tensor out(z_i.shape());
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < d; ++c)
            out[r * d + c] = o[r][c];
    return out;
}

/// Joint tokens [z_f; U_f] of every frame, interleaved frame by frame, attend
/// over all joint tokens; visual rows return through the gate.
inline Tensor gated_cross_frame(const Tensor& z, const Tensor& g, const GateParams& gate, const AttentionWeights& w) {
    const std::size_t n = z.dim(0), p = z.dim(1), d = z.dim(2), m = g.dim(1);
    Rows all;
    for (std::size_t f = 0; f < n; ++f) {
        for (const auto& r : rows_of(z, f * p, p, d))
            all.push_back(r);
        for (const auto& r : rows_of(g, f * m, m, d))
            all.push_back(r);
    }
    const Rows o = attention(all, all, w);
    const double factor = gate.scale * std::tanh(gate.gamma);
    Tensor out(z.shape());
    for (std::size_t f = 0; f < n; ++f)
        for (std::size_t r = 0; r < p; ++r)
            for (std::size_t c = 0; c < d; ++c) {
                const std::size_t i = (f * p + r) * d + c;
                out[i] = z[i] + factor * o[f * (p + m) + r][c];
            }
    return out;
}

inline AttentionWeights random_attention(std::uint64_t seed, std::size_t q_in, std::size_t kv_in, std::size_t d,
                                         std::size_t heads, double range = 1.0) {
    Rng rng(seed);
    auto fill = [&](std::size_t r, std::size_t c) {
        ad::Matrix m(r, c);
        for (double& v : m.data)
            v = rng.uniform(-range, range);
        return m;
    };
    AttentionWeights w;
    w.query = fill(q_in, d);
    w.key = fill(kv_in, d);
    w.value = fill(kv_in, d);
    w.output = fill(d, d);
    w.heads = heads;
    return w;
}

/// Sequential smoothing read straight off the definition, cell by cell.
inline Tensor smooth(const Tensor& latents, const Tensor& masks) {
    Tensor z = latents;
    const std::size_t n = z.dim(0), h = z.dim(1), w = z.dim(2), c = z.dim(3);
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                if (masks.at({i - 1, y, x}) == 1.0)
                    for (std::size_t k = 0; k < c; ++k)
                        z.at({i, y, x, k}) = z.at({i - 1, y, x, k});
    return z;
}

/// Cell (y, x) is edited when its centre lies in some half-open box.
inline std::optional<Tensor> inpaint_mask(const VideoGrounding& g, std::size_t h, std::size_t w) {
    Tensor mask({h, w}, 1.0);
    bool any = false;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double cx = (x + 0.5) / static_cast<double>(w), cy = (y + 0.5) / static_cast<double>(h);
            for (const auto& frame : g.per_frame)
                for (const auto& e : frame)
                    if (cx >= e.box.x0 && cx < e.box.x1 && cy >= e.box.y0 && cy < e.box.y1)
                        mask.at({y, x}) = 0.0;
            any = any || mask.at({y, x}) == 1.0;
        }
    if (!any)
        return std::nullopt;
    return mask;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return aa == 0 || bb == 0 ? 0.0 : ab / std::sqrt(aa * bb);
}

inline double pair_mean(const std::vector<std::vector<double>>& e) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t j = 0; j < e.size(); ++j)
            if (i < j) {
                total += cosine(e[i], e[j]);
                ++count;
            }
    return total / static_cast<double>(count);
}

}  // namespace vgedit::oracle
