// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "vgedit/error.hpp"
#include "vgedit/rng.hpp"

namespace vgedit {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    VGEDIT_CHECK(obj.is_object(), ErrorKind::validation, "config '" + where + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; });
        VGEDIT_CHECK(known, ErrorKind::validation, "unknown config key '" + where + "." + key + "'");
    }
}

template <class T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
    auto it = obj.find(key);
    if (it == obj.end())
        return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw_error(ErrorKind::validation, "config key '" + where + "." + key + "' has the wrong type");
    }
}

InpaintMode parse_inpaint(const std::string& s) {
    if (s == "auto")
        return InpaintMode::automatic;
    if (s == "on")
        return InpaintMode::on;
    if (s == "off")
        return InpaintMode::off;
    throw_error(ErrorKind::validation, "grounding.inpainting must be auto, on or off, got '" + s + "'");
}

}  // namespace

std::string to_string(InpaintMode mode) {
    switch (mode) {
    case InpaintMode::automatic:
        return "auto";
    case InpaintMode::on:
        return "on";
    case InpaintMode::off:
        return "off";
    }
    return "auto";
}

void PipelineConfig::validate() const {
    auto fail = [](const std::string& msg) { throw_error(ErrorKind::validation, "invalid config: " + msg); };
    if (train_steps < 1)
        fail("diffusion.train_steps must be >= 1");
    if (!(beta_start > 0.0 && beta_end > beta_start && beta_end < 1.0))
        fail("diffusion betas must satisfy 0 < beta_start < beta_end < 1");
    if (num_inference_steps < 1 || num_inference_steps > train_steps)
        fail("diffusion.num_inference_steps must be in [1, train_steps]");
    if (!std::isfinite(guidance_scale))
        fail("diffusion.guidance_scale must be finite");
    if (null_opt.inner_steps < 0)
        fail("diffusion.null_opt.inner_steps must be >= 0");
    if (!(null_opt.learning_rate > 0.0))
        fail("diffusion.null_opt.learning_rate must be > 0");
    if (!(null_opt.early_stop_loss >= 0.0))
        fail("diffusion.null_opt.early_stop_loss must be >= 0");
    if (!(flow_threshold >= 0.0 && flow_threshold <= 1.0))
        fail("smoothing.flow_threshold must be in [0, 1]");
    if (!(control.scale >= 0.0 && std::isfinite(control.scale)))
        fail("control.scale must be finite and >= 0");
    if (fourier_freqs < 1)
        fail("grounding.fourier_freqs must be >= 1");
    if (!std::isfinite(gate.gamma) || !std::isfinite(gate.scale))
        fail("grounding.gate values must be finite");
    for (const auto& [role, binding] : providers) {
        const bool known = std::find(std::begin(provider_roles), std::end(provider_roles), role) !=
                           std::end(provider_roles);
        if (!known)
            fail("unknown provider role '" + role + "'");
        if (binding.impl.empty())
            fail("providers." + role + ".impl is empty");
    }
}

NoiseSchedule PipelineConfig::schedule() const {
    return make_schedule(train_steps, beta_start, beta_end, num_inference_steps);
}

ProviderBinding PipelineConfig::provider(std::string_view role) const {
    ProviderBinding b;
    auto it = providers.find(std::string(role));
    if (it != providers.end())
        b = it->second;
    if (!b.seed)
        b.seed = derive_seed(base_seed, role);
    return b;
}

std::uint64_t PipelineConfig::provider_seed(std::string_view role) const { return *provider(role).seed; }

PipelineConfig parse_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw_error(ErrorKind::validation, std::string("config is not valid JSON: ") + e.what());
    }
    if (root.is_null())
        root = json::object();
    reject_unknown(root, "config", {"diffusion", "smoothing", "control", "grounding", "providers", "seeds"});

    PipelineConfig c;
    if (auto it = root.find("diffusion"); it != root.end()) {
        const json& d = *it;
        reject_unknown(d, "diffusion",
                       {"train_steps", "beta_start", "beta_end", "num_inference_steps", "guidance_scale", "null_opt"});
        read(d, "train_steps", "diffusion", c.train_steps);
        read(d, "beta_start", "diffusion", c.beta_start);
        read(d, "beta_end", "diffusion", c.beta_end);
        read(d, "num_inference_steps", "diffusion", c.num_inference_steps);
        read(d, "guidance_scale", "diffusion", c.guidance_scale);
        if (auto n = d.find("null_opt"); n != d.end()) {
            reject_unknown(*n, "diffusion.null_opt", {"inner_steps", "learning_rate", "early_stop_loss"});
            read(*n, "inner_steps", "diffusion.null_opt", c.null_opt.inner_steps);
            read(*n, "learning_rate", "diffusion.null_opt", c.null_opt.learning_rate);
            read(*n, "early_stop_loss", "diffusion.null_opt", c.null_opt.early_stop_loss);
        }
    }
    if (auto it = root.find("smoothing"); it != root.end()) {
        reject_unknown(*it, "smoothing", {"flow_threshold"});
        read(*it, "flow_threshold", "smoothing", c.flow_threshold);
    }
    if (auto it = root.find("control"); it != root.end()) {
        reject_unknown(*it, "control", {"scale", "condition"});
        read(*it, "scale", "control", c.control.scale);
        std::string cond = to_string(c.control.condition);
        read(*it, "condition", "control", cond);
        try {
            c.control.condition = parse_condition_kind(cond);
        } catch (const Error& e) {
            throw_error(ErrorKind::validation, e.what());
        }
    }
    if (auto it = root.find("grounding"); it != root.end()) {
        reject_unknown(*it, "grounding", {"fourier_freqs", "gate", "inpainting"});
        read(*it, "fourier_freqs", "grounding", c.fourier_freqs);
        if (auto g = it->find("gate"); g != it->end()) {
            reject_unknown(*g, "grounding.gate", {"gamma", "scale"});
            read(*g, "gamma", "grounding.gate", c.gate.gamma);
            read(*g, "scale", "grounding.gate", c.gate.scale);
        }
        std::string mode = to_string(c.inpainting);
        read(*it, "inpainting", "grounding", mode);
        c.inpainting = parse_inpaint(mode);
    }
    if (auto it = root.find("providers"); it != root.end()) {
        VGEDIT_CHECK(it->is_object(), ErrorKind::validation, "config 'providers' must be an object");
        for (const auto& [role, entry] : it->items()) {
            const std::string where = "providers." + role;
            reject_unknown(entry, where, {"impl", "seed", "weights"});
            ProviderBinding b;
            read(entry, "impl", where, b.impl);
            if (entry.contains("seed")) {
                std::uint64_t s = 0;
                read(entry, "seed", where, s);
                b.seed = s;
            }
            read(entry, "weights", where, b.weights);
            c.providers[role] = b;
        }
    }
    if (auto it = root.find("seeds"); it != root.end()) {
        reject_unknown(*it, "seeds", {"base"});
        read(*it, "base", "seeds", c.base_seed);
    }
    c.validate();
    return c;
}

std::string config_to_json(const PipelineConfig& c) {
    json providers = json::object();
    for (std::string_view role : provider_roles) {
        const ProviderBinding b = c.provider(role);
        json entry{{"impl", b.impl}, {"seed", *b.seed}};
        if (!b.weights.empty())
            entry["weights"] = b.weights;
        providers[std::string(role)] = entry;
    }
    const json root{
        {"diffusion",
         {{"train_steps", c.train_steps},
          {"beta_start", c.beta_start},
          {"beta_end", c.beta_end},
          {"num_inference_steps", c.num_inference_steps},
          {"guidance_scale", c.guidance_scale},
          {"null_opt",
           {{"inner_steps", c.null_opt.inner_steps},
            {"learning_rate", c.null_opt.learning_rate},
            {"early_stop_loss", c.null_opt.early_stop_loss}}}}},
        {"smoothing", {{"flow_threshold", c.flow_threshold}}},
        {"control", {{"scale", c.control.scale}, {"condition", to_string(c.control.condition)}}},
        {"grounding",
         {{"fourier_freqs", c.fourier_freqs},
          {"gate", {{"gamma", c.gate.gamma}, {"scale", c.gate.scale}}},
          {"inpainting", to_string(c.inpainting)}}},
        {"providers", providers},
        {"seeds", {{"base", c.base_seed}}},
    };
    return root.dump(2);
}

std::string merge_config_json(std::string_view base_json, std::string_view patch_json) {
    auto parse = [](std::string_view text, const char* what) {
        if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
            return json::object();
        try {
            return json::parse(text.begin(), text.end());
        } catch (const json::parse_error& e) {
            throw_error(ErrorKind::validation, std::string(what) + " is not valid JSON: " + e.what());
        }
    };
    json base = parse(base_json, "config");
    base.merge_patch(parse(patch_json, "config override"));
    return base.dump(2);
}

}  // namespace vgedit
