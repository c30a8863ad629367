// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/registry.hpp"

#include "vgedit/binary_io.hpp"
#include "vgedit/error.hpp"
#include "vgedit/toy_providers.hpp"

namespace vgedit {

namespace {

template <class Map>
const typename Map::mapped_type& lookup(const Map& factories, std::string_view role, const ProviderBinding& b) {
    auto it = factories.find(b.impl);
    VGEDIT_CHECK(it != factories.end(), ErrorKind::validation,
                 "no " + std::string(role) + " implementation registered under '" + b.impl + "'");
    return it->second;
}

template <class T, class Map>
std::unique_ptr<T> build(const Map& factories, std::string_view role, const PipelineConfig& config) {
    const ProviderBinding b = config.provider(role);
    auto p = lookup(factories, role, b)(ProviderContext{*b.seed, b.weights, config});
    VGEDIT_CHECK(p != nullptr, ErrorKind::runtime, std::string(role) + " factory '" + b.impl + "' returned nothing");
    return p;
}

std::size_t condition_channels(ConditionKind kind) { return kind == ConditionKind::pose ? 3 : 1; }

}  // namespace

ProviderRegistry ProviderRegistry::with_toys() {
    ProviderRegistry r;
    r.add_text_encoder("toy", [](const ProviderContext& c) { return std::make_unique<ToyTextEncoder>(c.seed); });
    r.add_flow_estimator("toy", [](const ProviderContext&) { return std::make_unique<ToyFlowEstimator>(); });
    r.add_depth_estimator("toy", [](const ProviderContext&) { return std::make_unique<ToyDepthEstimator>(); });
    r.add_embedder("toy", [](const ProviderContext& c) { return std::make_unique<ToyEmbedder>(c.seed); });
    r.add_latent_codec("toy", [](const ProviderContext& c) { return std::make_unique<ToyLatentCodec>(c.seed); });
    r.add_denoiser("toy", [](const ProviderContext& c) {
        if (!c.weights.empty())
            return std::make_unique<ToyDenoiser>(ToyDenoiserWeights::from_archive(read_weight_archive(c.weights)));
        return std::make_unique<ToyDenoiser>(ToyDenoiserWeights::seeded(c.seed, {}, c.config.gate));
    });
    r.add_control_branch("toy", [](const ProviderContext& c) {
        if (!c.weights.empty())
            return std::make_unique<ToyControlBranch>(ToyControlWeights::from_archive(read_weight_archive(c.weights)));
        return std::make_unique<ToyControlBranch>(
            ToyControlWeights::seeded(c.seed, condition_channels(c.config.control.condition)));
    });
    r.add_grounding_mlp("toy", [](const ProviderContext& c, const TextEncoder& text, const Denoiser& denoiser) {
        ToyDims dims;
        dims.model_width = denoiser.model_width();
        return seeded_grounding_mlp(c.seed, text.context_width(), c.config.fourier_freqs, dims);
    });
    return r;
}

Providers ProviderRegistry::resolve(const PipelineConfig& config) const {
    config.validate();
    Providers p;
    p.text_encoder = build<TextEncoder>(m_text, "text_encoder", config);
    p.flow_estimator = build<FlowEstimator>(m_flow, "flow_estimator", config);
    p.depth_estimator = build<DepthEstimator>(m_depth, "depth_estimator", config);
    p.embedder = build<Embedder>(m_embed, "embedder", config);
    p.latent_codec = build<LatentCodec>(m_codec, "latent_codec", config);
    p.denoiser = build<Denoiser>(m_denoiser, "denoiser", config);
    if (config.control.condition != ConditionKind::none) {
        p.control_branch = build<ControlBranch>(m_control, "control_branch", config);
        VGEDIT_CHECK(p.control_branch->condition_channels() == condition_channels(config.control.condition),
                     ErrorKind::validation,
                     "control branch expects " + std::to_string(p.control_branch->condition_channels()) +
                         " condition channels but condition '" + to_string(config.control.condition) + "' has " +
                         std::to_string(condition_channels(config.control.condition)));
    }
    const ProviderBinding mlp = config.provider("grounding_mlp");
    p.grounding_mlp = lookup(m_mlp, "grounding_mlp", mlp)(ProviderContext{*mlp.seed, mlp.weights, config},
                                                          *p.text_encoder, *p.denoiser);
    return p;
}

std::unique_ptr<Embedder> ProviderRegistry::make_embedder(const PipelineConfig& config) const {
    return build<Embedder>(m_embed, "embedder", config);
}

std::unique_ptr<FlowEstimator> ProviderRegistry::make_flow_estimator(const PipelineConfig& config) const {
    return build<FlowEstimator>(m_flow, "flow_estimator", config);
}

}  // namespace vgedit
