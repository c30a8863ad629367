// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/flow_smoothing.hpp"

#include <algorithm>
#include <cmath>

#include "vgedit/error.hpp"

namespace vgedit {

Tensor magnitude_map(const FlowField& flow) {
    const Tensor& f = flow.data;
    VGEDIT_CHECK(f.rank() == 4 && f.dim(3) == 2, ErrorKind::invalid_argument,
                 "flow field must have shape [N-1, H, W, 2], got " + f.shape_string());
    VGEDIT_CHECK(f.all_finite(), ErrorKind::validation, "flow field contains non-finite values");
    Tensor mags({f.dim(0), f.dim(1), f.dim(2)});
    for (std::size_t i = 0; i < mags.size(); ++i)
        mags[i] = std::sqrt(f[2 * i] * f[2 * i] + f[2 * i + 1] * f[2 * i + 1]);
    return mags;
}

MagnitudeMaps normalize_magnitudes(const Tensor& magnitudes) {
    double mx = 0.0;
    for (double v : magnitudes.values()) {
        VGEDIT_CHECK(std::isfinite(v) && v >= 0.0, ErrorKind::invalid_argument,
                     "magnitudes must be finite and non-negative");
        mx = std::max(mx, v);
    }
    Tensor out(magnitudes.shape());
    if (mx > 0.0)
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = magnitudes[i] / mx;
    return {std::move(out)};
}

Tensor static_mask(const MagnitudeMaps& magnitudes, double threshold) {
    VGEDIT_CHECK(threshold >= 0.0, ErrorKind::invalid_argument, "threshold must be non-negative");
    Tensor mask(magnitudes.data.shape());
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = magnitudes.data[i] < threshold ? 1.0 : 0.0;
    return mask;
}

Tensor downsample_mask(const Tensor& mask, std::size_t h, std::size_t w) {
    VGEDIT_CHECK(mask.rank() == 2, ErrorKind::invalid_argument, "downsample_mask expects [H, W]");
    const std::size_t H = mask.dim(0), W = mask.dim(1);
    VGEDIT_CHECK(h > 0 && w > 0 && H % h == 0 && W % w == 0, ErrorKind::invalid_argument,
                 "mask " + mask.shape_string() + " is not divisible into a " + std::to_string(h) + "x" +
                     std::to_string(w) + " grid");
    const std::size_t bh = H / h, bw = W / w;
    Tensor out({h, w});
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            std::size_t ones = 0;
            for (std::size_t y = r * bh; y < (r + 1) * bh; ++y)
                for (std::size_t x = c * bw; x < (c + 1) * bw; ++x)
                    ones += mask[y * W + x] != 0.0;
            // Integer comparison for the 0.5 tie rule.
            out[r * w + c] = 2 * ones >= bh * bw ? 1.0 : 0.0;
        }
    return out;
}

StaticMasks static_masks_from_flow(const FlowField& flow, double threshold, std::size_t h, std::size_t w) {
    const Tensor pixel_masks = static_mask(normalize_magnitudes(magnitude_map(flow)), threshold);
    const std::size_t pairs = pixel_masks.dim(0);
    Tensor out({pairs, h, w});
    for (std::size_t i = 0; i < pairs; ++i) {
        const Tensor small = downsample_mask(pixel_masks.slice_copy(i), h, w);
        std::copy(small.values().begin(), small.values().end(), out.slice(i).begin());
    }
    return {std::move(out)};
}

Tensor smooth_latents(const Tensor& latents, const StaticMasks& masks) {
    VGEDIT_CHECK(latents.rank() == 4, ErrorKind::invalid_argument,
                 "latents must have shape [N, h, w, c], got " + latents.shape_string());
    const std::size_t n = latents.dim(0), h = latents.dim(1), w = latents.dim(2), c = latents.dim(3);
    const Tensor& m = masks.data;
    VGEDIT_CHECK(m.rank() == 3 && m.dim(0) + 1 == n && m.dim(1) == h && m.dim(2) == w, ErrorKind::invalid_argument,
                 "masks " + m.shape_string() + " do not match latents " + latents.shape_string());
    for (double v : m.values())
        VGEDIT_CHECK(v == 0.0 || v == 1.0, ErrorKind::invalid_argument, "static masks must be binary");
    Tensor out = latents;
    for (std::size_t i = 1; i < n; ++i) {
        const auto prev = out.slice(i - 1);
        auto cur = out.slice(i);
        const auto mask = m.slice(i - 1);
        for (std::size_t cell = 0; cell < h * w; ++cell) {
            if (mask[cell] == 0.0)
                continue;
            for (std::size_t k = 0; k < c; ++k)
                cur[cell * c + k] = prev[cell * c + k];
        }
    }
    return out;
}

}  // namespace vgedit
