// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include "vgedit/attention.hpp"
#include "vgedit/control.hpp"
#include "vgedit/error.hpp"
#include "vgedit/flow_smoothing.hpp"

namespace vgedit {

std::optional<Tensor> derive_inpaint_mask(const VideoGrounding& grounding, std::size_t h, std::size_t w) {
    VGEDIT_CHECK(h > 0 && w > 0, ErrorKind::invalid_argument, "inpaint mask needs a non-empty latent grid");
    Tensor mask({h, w}, 1.0);
    for (const auto& frame : grounding.per_frame)
        for (const auto& e : frame) {
            if (auto v = e.box.violation())
                throw_error(ErrorKind::validation, "invalid box for '" + e.phrase + "': " + *v);
            for (std::size_t r = 0; r < h; ++r) {
                const double cy = (static_cast<double>(r) + 0.5) / static_cast<double>(h);
                if (cy < e.box.y0 || cy >= e.box.y1)
                    continue;
                for (std::size_t c = 0; c < w; ++c) {
                    const double cx = (static_cast<double>(c) + 0.5) / static_cast<double>(w);
                    if (cx >= e.box.x0 && cx < e.box.x1)
                        mask[r * w + c] = 0.0;
                }
            }
        }
    const bool any = std::any_of(mask.values().begin(), mask.values().end(), [](double v) { return v != 0.0; });
    if (!any)
        return std::nullopt;
    return mask;
}

namespace {

template <class F>
auto in_stage(const char* stage, std::optional<std::size_t> frame, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(e.kind(), stage, frame, e.what());
    } catch (const std::exception& e) {
        throw StageError(ErrorKind::runtime, stage, frame, e.what());
    }
}

// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads. The
// exception of the lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
    const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::exception_ptr> errors(n);
    auto run = [&](std::size_t first) {
        for (std::size_t i = first; i < n; i += workers) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        run(0);
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < workers; ++t)
            threads.emplace_back(run, t);
        for (auto& t : threads)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

Tensor tile_frames(const Tensor& item, std::size_t n) {
    std::vector<Tensor> parts(n, item);
    return stack(parts);
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, const ProviderRegistry& registry) : m_config(std::move(config)) {
    m_providers = in_stage("providers", std::nullopt, [&] { return registry.resolve(m_config); });
}

InversionResult Pipeline::invert(const FrameSequence& frames, std::string_view source_prompt) const {
    Tensor clean = in_stage("encode", std::nullopt, [&] { return m_providers.latent_codec->encode(frames); });
    return invert_latents(clean, source_prompt);
}

InversionResult Pipeline::invert_latents(const Tensor& clean, std::string_view source_prompt) const {
    VGEDIT_CHECK(clean.rank() == 4 && clean.dim(0) >= 1, ErrorKind::invalid_argument,
                 "latents must be [N, h, w, c], got " + clean.shape_string());
    const NoiseSchedule schedule = m_config.schedule();
    const std::size_t n = clean.dim(0);
    const Tensor source = m_providers.text_encoder->encode(source_prompt);
    const Tensor null = m_providers.text_encoder->encode("");

    InversionResult r;
    r.clean = clean;
    r.trajectories.resize(n);
    r.null_opt.resize(n);
    parallel_for(n, [&](std::size_t i) {
        r.trajectories[i] = in_stage("inversion", i, [&] {
            return ddim_invert_frame(clean.slice_copy(i), *m_providers.denoiser, source, schedule);
        });
        r.null_opt[i] = in_stage("null_optimization", i, [&] {
            return optimize_null_embeddings(r.trajectories[i], *m_providers.denoiser, source, null,
                                            m_config.guidance_scale, schedule, m_config.null_opt);
        });
    });

    std::vector<Tensor> noise, nulls;
    for (std::size_t i = 0; i < n; ++i) {
        noise.push_back(r.trajectories[i].latents.back());
        nulls.push_back(r.null_opt[i].embeddings);
    }
    r.noise = stack(noise);
    r.nulls = stack(nulls);
    return r;
}

Tensor Pipeline::smooth_with_flow(const Tensor& latents, const Tensor& flow) const {
    return in_stage("smoothing", std::nullopt, [&] {
        VGEDIT_CHECK(latents.rank() == 4, ErrorKind::invalid_argument,
                     "latents must be [N, h, w, c], got " + latents.shape_string());
        if (latents.dim(0) < 2 || m_config.flow_threshold == 0.0)
            return latents;
        VGEDIT_CHECK(flow.rank() == 4 && flow.dim(0) + 1 == latents.dim(0), ErrorKind::validation,
                     "flow " + flow.shape_string() + " does not cover " + std::to_string(latents.dim(0)) + " frames");
        const StaticMasks masks =
            static_masks_from_flow(FlowField{flow}, m_config.flow_threshold, latents.dim(1), latents.dim(2));
        return smooth_latents(latents, masks);
    });
}

Tensor Pipeline::smooth(const Tensor& latents, const FrameSequence& frames) const {
    if (latents.rank() == 4 && (latents.dim(0) < 2 || m_config.flow_threshold == 0.0))
        return latents;
    VGEDIT_CHECK(latents.rank() == 4 && latents.dim(0) == frames.count(), ErrorKind::validation,
                 "latent frame count does not match the clip");
    const Tensor flow = in_stage("flow", std::nullopt, [&] { return m_providers.flow_estimator->estimate(frames); });
    return smooth_with_flow(latents, flow);
}

Tensor Pipeline::denoise(const DenoiseInputs& in) const {
    const NoiseSchedule schedule = m_config.schedule();
    const std::size_t steps = schedule.step_count();
    const Tensor& start = in.start;
    const std::size_t n = start.dim(0), frame_size = start.slice_size();
    VGEDIT_CHECK(in.inversion.trajectories.size() == n && in.inversion.nulls.rank() == 4 &&
                     in.inversion.nulls.dim(0) == n && in.inversion.nulls.dim(1) == steps,
                 ErrorKind::invalid_argument, "inversion result does not match the clip or the schedule");
    const double w = m_config.guidance_scale;
    const bool use_control = in.conditions != nullptr && m_providers.control_branch != nullptr;

    const Contexts cond{tile_frames(in.cond_context, n), ContextMode::cond};
    const std::size_t null_size = in.inversion.nulls.dim(2) * in.inversion.nulls.dim(3);

    Tensor z = start;
    for (std::size_t k = steps; k-- > 0;) {
        const int t = schedule.timesteps()[k];
        const int t_prev = schedule.previous_timestep(k);

        if (in.mask != nullptr) {
            const Tensor& m = *in.mask;
            const std::size_t cells = m.size(), channels = frame_size / cells;
            for (std::size_t i = 0; i < n; ++i) {
                const Tensor& anchor = in.inversion.trajectories[i].latents[k + 1];
                double* zi = z.data() + i * frame_size;
                for (std::size_t p = 0; p < cells; ++p)
                    for (std::size_t ch = 0; ch < channels; ++ch) {
                        const std::size_t j = p * channels + ch;
                        zi[j] = m[p] * anchor[j] + (1.0 - m[p]) * zi[j];
                    }
            }
        }

        Contexts uncond{Tensor({n, in.inversion.nulls.dim(2), in.inversion.nulls.dim(3)}), ContextMode::uncond};
        for (std::size_t i = 0; i < n; ++i) {
            const double* src = in.inversion.nulls.data() + (i * steps + k) * null_size;
            std::copy(src, src + null_size, uncond.embeddings.data() + i * null_size);
        }

        std::optional<ControlResiduals> cond_res, uncond_res;
        if (use_control) {
            in_stage("control", std::nullopt, [&] {
                cond_res = scale_residuals(
                    control_residuals(*m_providers.control_branch, z, t, cond, *in.conditions), m_config.control.scale);
                if (w != 1.0)
                    uncond_res = scale_residuals(
                        control_residuals(*m_providers.control_branch, z, t, uncond, *in.conditions),
                        m_config.control.scale);
            });
        }

        z = in_stage("denoising", std::nullopt, [&] {
            Tensor eps = m_providers.denoiser->predict(
                {z, t, cond, in.grounding, cond_res ? &*cond_res : nullptr});
            if (w != 1.0) {
                const Tensor eps_u = m_providers.denoiser->predict(
                    {z, t, uncond, in.grounding, uncond_res ? &*uncond_res : nullptr});
                eps = cfg_predict(eps, eps_u, w);
            }
            VGEDIT_CHECK(eps.all_finite(), ErrorKind::runtime,
                         "non-finite noise prediction at timestep " + std::to_string(t));
            return ddim_step(z, eps, t, t_prev, schedule);
        });
    }
    return z;
}

EditOutput Pipeline::edit(const EditRequest& req) const {
    const FrameSequence& frames = req.frames;
    const ConditionKind condition = m_config.control.condition;

    EditResult edited = in_stage("validation", std::nullopt, [&] {
        VGEDIT_CHECK(frames.count() >= 1, ErrorKind::validation, "the clip has no frames");
        req.spec.validate();
        auto problems = validate_grounding(req.grounding, frames);
        if (!problems.empty()) {
            std::string msg = problems.front();
            for (std::size_t i = 1; i < problems.size(); ++i)
                msg += "; " + problems[i];
            throw_error(ErrorKind::validation, msg);
        }
        if (req.depth != nullptr)
            VGEDIT_CHECK(req.depth->count() == frames.count(), ErrorKind::validation,
                         "depth has " + std::to_string(req.depth->count()) + " maps for " +
                             std::to_string(frames.count()) + " frames");
        if (condition == ConditionKind::pose) {
            VGEDIT_CHECK(req.condition_maps != nullptr, ErrorKind::validation,
                         "pose control needs condition maps");
            VGEDIT_CHECK(req.condition_maps->count() == frames.count(), ErrorKind::validation,
                         "condition maps count does not match the clip");
        }
        return apply_edit_spec(req.grounding, req.spec);
    });

    EditOutput out;
    out.warnings = std::move(edited.warnings);
    out.target_grounding = std::move(edited.grounding);

    const InversionResult inv = invert(frames, req.spec.source_prompt);
    const std::size_t h = inv.clean.dim(1), w = inv.clean.dim(2);
    out.smoothed_noise = smooth(inv.noise, frames);

    const Tensor grounding_tokens = in_stage("grounding", std::nullopt, [&] {
        return build_video_grounding_tokens(out.target_grounding, *m_providers.text_encoder,
                                            m_providers.grounding_mlp, m_config.fourier_freqs);
    });

    std::optional<Tensor> conditions;
    if (m_providers.control_branch != nullptr) {
        conditions = in_stage("control", std::nullopt, [&] {
            if (condition == ConditionKind::pose)
                return pose_condition_features(*req.condition_maps, h, w);
            if (req.depth != nullptr)
                return depth_condition_features(*req.depth, h, w);
            return depth_condition_features(m_providers.depth_estimator->estimate(frames), h, w);
        });
    }

    const bool has_entities = out.target_grounding.entity_count() > 0;
    if (m_config.inpainting == InpaintMode::on ||
        (m_config.inpainting == InpaintMode::automatic && has_entities)) {
        out.inpaint_mask = in_stage("inpainting", std::nullopt,
                                    [&] { return derive_inpaint_mask(out.target_grounding, h, w); });
    }

    const Tensor cond_context = m_providers.text_encoder->encode(req.spec.target_prompt);
    out.latents = denoise({inv, out.smoothed_noise, cond_context, has_entities ? &grounding_tokens : nullptr,
                           conditions ? &*conditions : nullptr, out.inpaint_mask ? &*out.inpaint_mask : nullptr});
    out.frames = in_stage("decode", std::nullopt, [&] { return m_providers.latent_codec->decode(out.latents); });
    return out;
}

EditOutput edit_video(const FrameSequence& frames, const VideoGrounding& grounding, const EditSpec& spec,
                      const DepthSequence* depth, const PipelineConfig& config) {
    const Pipeline pipeline(config);
    return pipeline.edit({frames, grounding, spec, depth, nullptr});
}

}  // namespace vgedit
