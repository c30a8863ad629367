// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/control.hpp"

#include <cmath>

#include "vgedit/error.hpp"

namespace vgedit {

ConditionKind parse_condition_kind(const std::string& name) {
    if (name == "depth")
        return ConditionKind::depth;
    if (name == "pose")
        return ConditionKind::pose;
    if (name == "none")
        return ConditionKind::none;
    throw_error(ErrorKind::validation, "unknown condition kind '" + name + "' (expected depth, pose or none)");
}

std::string to_string(ConditionKind kind) {
    switch (kind) {
    case ConditionKind::depth:
        return "depth";
    case ConditionKind::pose:
        return "pose";
    case ConditionKind::none:
        return "none";
    }
    return "none";
}

ControlResiduals control_residuals(const ControlBranch& branch, const Tensor& latents, int timestep,
                                   const Contexts& contexts, const Tensor& conditions) {
    VGEDIT_CHECK(latents.rank() == 4 && conditions.rank() == 4, ErrorKind::invalid_argument,
                 "control branch expects [N, h, w, c] latents and [N, h, w, k] conditions");
    VGEDIT_CHECK(conditions.dim(0) == latents.dim(0), ErrorKind::validation,
                 "condition count " + std::to_string(conditions.dim(0)) + " does not match frame count " +
                     std::to_string(latents.dim(0)));
    VGEDIT_CHECK(conditions.dim(1) == latents.dim(1) && conditions.dim(2) == latents.dim(2),
                 ErrorKind::invalid_argument, "condition features are not at latent resolution");
    ControlResiduals r = branch.residuals(latents, timestep, contexts, conditions);
    for (const Tensor& level : r.levels)
        VGEDIT_CHECK(level.all_finite(), ErrorKind::runtime, "control branch produced non-finite residuals");
    return r;
}

ControlResiduals scale_residuals(const ControlResiduals& residuals, double scale) {
    VGEDIT_CHECK(std::isfinite(scale) && scale >= 0.0, ErrorKind::invalid_argument,
                 "control scale must be finite and non-negative");
    ControlResiduals out = residuals;
    for (Tensor& level : out.levels)
        for (double& v : level.values())
            v *= scale;
    return out;
}

std::vector<Tensor> inject_residuals(const std::vector<Tensor>& features, const ControlResiduals& residuals) {
    VGEDIT_CHECK(features.size() == residuals.levels.size(), ErrorKind::invalid_argument,
                 "residual level count " + std::to_string(residuals.levels.size()) + " does not match " +
                     std::to_string(features.size()) + " injection sites");
    std::vector<Tensor> out = features;
    for (std::size_t l = 0; l < out.size(); ++l) {
        VGEDIT_CHECK(out[l].shape() == residuals.levels[l].shape(), ErrorKind::invalid_argument,
                     "residual level " + std::to_string(l) + " shape " + residuals.levels[l].shape_string() +
                         " does not match feature shape " + out[l].shape_string());
        for (std::size_t i = 0; i < out[l].size(); ++i)
            out[l][i] += residuals.levels[l][i];
    }
    return out;
}

namespace {

Tensor pool_channels(const Tensor& maps, std::size_t channels, std::size_t h, std::size_t w) {
    const std::size_t n = maps.dim(0), H = maps.dim(1), W = maps.dim(2);
    VGEDIT_CHECK(H % h == 0 && W % w == 0, ErrorKind::invalid_argument,
                 "condition maps " + maps.shape_string() + " do not pool evenly to latent resolution");
    const std::size_t bh = H / h, bw = W / w;
    Tensor out({n, h, w, channels});
    const double inv = 1.0 / static_cast<double>(bh * bw);
    for (std::size_t f = 0; f < n; ++f)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t c = 0; c < channels; ++c)
                    out.at({f, y / bh, x / bw, c}) += maps[((f * H + y) * W + x) * channels + c] * inv;
    return out;
}

}  // namespace

Tensor depth_condition_features(const DepthSequence& depth, std::size_t h, std::size_t w) {
    return pool_channels(depth.tensor(), 1, h, w);
}

Tensor pose_condition_features(const FrameSequence& maps, std::size_t h, std::size_t w) {
    return pool_channels(maps.tensor(), 3, h, w);
}

}  // namespace vgedit
