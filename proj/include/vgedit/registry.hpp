// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// String-keyed provider factories. A config binds each role to an
// implementation key plus seed and optional weights path; `resolve` builds
// every provider before a run starts, so a missing key fails early.

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "vgedit/attention.hpp"
#include "vgedit/config.hpp"
#include "vgedit/providers.hpp"

namespace vgedit {

struct ProviderContext {
    std::uint64_t seed;
    std::string weights;
    const PipelineConfig& config;
};

/// Everything a pipeline run needs. `control_branch` is null when the
/// configured condition is "none".
struct Providers {
    std::unique_ptr<TextEncoder> text_encoder;
    std::unique_ptr<FlowEstimator> flow_estimator;
    std::unique_ptr<DepthEstimator> depth_estimator;
    std::unique_ptr<Embedder> embedder;
    std::unique_ptr<LatentCodec> latent_codec;
    std::unique_ptr<Denoiser> denoiser;
    std::unique_ptr<ControlBranch> control_branch;
    GroundingMLP grounding_mlp;
};

class ProviderRegistry {
public:
    template <class T>
    using Factory = std::function<std::unique_ptr<T>(const ProviderContext&)>;
    using MlpFactory = std::function<GroundingMLP(const ProviderContext&, const TextEncoder&, const Denoiser&)>;

    /// A registry with the "toy" implementation registered for every role.
    static ProviderRegistry with_toys();

    void add_text_encoder(const std::string& key, Factory<TextEncoder> f) { m_text[key] = std::move(f); }
    void add_flow_estimator(const std::string& key, Factory<FlowEstimator> f) { m_flow[key] = std::move(f); }
    void add_depth_estimator(const std::string& key, Factory<DepthEstimator> f) { m_depth[key] = std::move(f); }
    void add_embedder(const std::string& key, Factory<Embedder> f) { m_embed[key] = std::move(f); }
    void add_latent_codec(const std::string& key, Factory<LatentCodec> f) { m_codec[key] = std::move(f); }
    void add_denoiser(const std::string& key, Factory<Denoiser> f) { m_denoiser[key] = std::move(f); }
    void add_control_branch(const std::string& key, Factory<ControlBranch> f) { m_control[key] = std::move(f); }
    void add_grounding_mlp(const std::string& key, MlpFactory f) { m_mlp[key] = std::move(f); }

    Providers resolve(const PipelineConfig& config) const;
    std::unique_ptr<Embedder> make_embedder(const PipelineConfig& config) const;
    std::unique_ptr<FlowEstimator> make_flow_estimator(const PipelineConfig& config) const;

private:
    std::map<std::string, Factory<TextEncoder>> m_text;
    std::map<std::string, Factory<FlowEstimator>> m_flow;
    std::map<std::string, Factory<DepthEstimator>> m_depth;
    std::map<std::string, Factory<Embedder>> m_embed;
    std::map<std::string, Factory<LatentCodec>> m_codec;
    std::map<std::string, Factory<Denoiser>> m_denoiser;
    std::map<std::string, Factory<ControlBranch>> m_control;
    std::map<std::string, MlpFactory> m_mlp;
};

}  // namespace vgedit
