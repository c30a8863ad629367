// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/diffusion.hpp"

#include <cmath>
#include <limits>

#include "vgedit/error.hpp"

namespace vgedit {

NoiseSchedule::NoiseSchedule(int train_steps, double beta_start, double beta_end, int inference_steps)
    : m_train_steps(train_steps), m_beta_start(beta_start), m_beta_end(beta_end) {
    VGEDIT_CHECK(train_steps >= 1, ErrorKind::invalid_argument, "schedule needs at least one training timestep");
    VGEDIT_CHECK(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0, ErrorKind::invalid_argument,
                 "schedule requires 0 < beta_start < beta_end < 1");
    VGEDIT_CHECK(1 <= inference_steps && inference_steps <= train_steps, ErrorKind::invalid_argument,
                 "schedule requires 1 <= num_inference_steps <= T");

    m_betas.resize(static_cast<std::size_t>(train_steps));
    m_alpha_bars.resize(static_cast<std::size_t>(train_steps) + 1);
    m_alpha_bars[0] = 1.0;
    for (int t = 1; t <= train_steps; ++t) {
        const double frac = train_steps == 1 ? 0.0 : static_cast<double>(t - 1) / (train_steps - 1);
        const double beta = beta_start + (beta_end - beta_start) * frac;
        m_betas[static_cast<std::size_t>(t - 1)] = beta;
        m_alpha_bars[static_cast<std::size_t>(t)] = m_alpha_bars[static_cast<std::size_t>(t - 1)] * (1.0 - beta);
    }

    m_timesteps.reserve(static_cast<std::size_t>(inference_steps));
    for (long long k = 0; k < inference_steps; ++k)
        m_timesteps.push_back(1 + static_cast<int>(k * train_steps / inference_steps));
}

double NoiseSchedule::alpha_bar(int t) const {
    VGEDIT_CHECK(t >= 0 && t <= m_train_steps, ErrorKind::invalid_argument,
                 "timestep " + std::to_string(t) + " outside schedule [0, " + std::to_string(m_train_steps) + "]");
    return m_alpha_bars[static_cast<std::size_t>(t)];
}

NoiseSchedule make_schedule(int train_steps, double beta_start, double beta_end, int inference_steps) {
    return NoiseSchedule(train_steps, beta_start, beta_end, inference_steps);
}

DdimCoefficients ddim_coefficients(double alpha_bar_from, double alpha_bar_to) {
    const double ratio = std::sqrt(alpha_bar_to / alpha_bar_from);
    return {ratio, std::sqrt(1.0 - alpha_bar_to) - ratio * std::sqrt(1.0 - alpha_bar_from)};
}

namespace {

Tensor apply_coefficients(const Tensor& z, const Tensor& eps, DdimCoefficients c) {
    VGEDIT_CHECK(z.shape() == eps.shape(), ErrorKind::invalid_argument,
                 "latent " + z.shape_string() + " and noise " + eps.shape_string() + " shapes differ");
    Tensor out(z.shape());
    for (std::size_t i = 0; i < z.size(); ++i)
        out[i] = c.latent * z[i] + c.noise * eps[i];
    return out;
}

Tensor with_frame_axis(const Tensor& t) {
    std::vector<std::size_t> shape = t.shape();
    shape.insert(shape.begin(), 1);
    return Tensor(std::move(shape), std::vector<double>(t.values().begin(), t.values().end()));
}

Tensor drop_frame_axis(const Tensor& t) { return t.slice_copy(0); }

void require_finite(const Tensor& t, const char* what) {
    VGEDIT_CHECK(t.all_finite(), ErrorKind::runtime, std::string("non-finite ") + what);
}

}  // namespace

Tensor ddim_step(const Tensor& z_t, const Tensor& eps, int t, int t_prev, const NoiseSchedule& schedule) {
    VGEDIT_CHECK(t > t_prev && t_prev >= 0, ErrorKind::invalid_argument, "ddim_step requires t > t_prev >= 0");
    return apply_coefficients(z_t, eps, ddim_coefficients(schedule.alpha_bar(t), schedule.alpha_bar(t_prev)));
}

Tensor ddim_invert_step(const Tensor& z_t, const Tensor& eps, int t, int t_next, const NoiseSchedule& schedule) {
    VGEDIT_CHECK(t_next > t && t >= 0, ErrorKind::invalid_argument, "ddim_invert_step requires t_next > t >= 0");
    return apply_coefficients(z_t, eps, ddim_coefficients(schedule.alpha_bar(t), schedule.alpha_bar(t_next)));
}

Tensor cfg_predict(const Tensor& eps_cond, const Tensor& eps_uncond, double w) {
    VGEDIT_CHECK(eps_cond.shape() == eps_uncond.shape(), ErrorKind::invalid_argument,
                 "cfg_predict: shapes " + eps_cond.shape_string() + " and " + eps_uncond.shape_string() + " differ");
    if (w == 1.0)
        return eps_cond;
    Tensor out(eps_cond.shape());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = w * eps_cond[i] + (1.0 - w) * eps_uncond[i];
    return out;
}

InversionTrajectory ddim_invert_frame(const Tensor& z0, const Denoiser& denoiser, const Tensor& context,
                                      const NoiseSchedule& schedule) {
    const Contexts ctx{with_frame_axis(context), ContextMode::cond};
    InversionTrajectory traj;
    traj.latents.reserve(schedule.step_count() + 1);
    traj.latents.push_back(z0);
    Tensor z = with_frame_axis(z0);
    for (std::size_t k = 0; k < schedule.step_count(); ++k) {
        const int t = schedule.previous_timestep(k);
        const int t_next = schedule.timesteps()[k];
        const Tensor eps = denoiser.predict({z, t_next, ctx});
        require_finite(eps, "denoiser output during inversion");
        z = ddim_invert_step(z, eps, t, t_next, schedule);
        traj.latents.push_back(drop_frame_axis(z));
    }
    return traj;
}

NullLoss null_step_loss(const Tensor& z_bar, const Tensor& target, const Tensor& eps_cond, const Denoiser& denoiser,
                        const Tensor& null_context, double w, int t, int t_prev, const NoiseSchedule& schedule,
                        bool with_gradient) {
    const DdimCoefficients c = ddim_coefficients(schedule.alpha_bar(t), schedule.alpha_bar(t_prev));
    const Tensor z = with_frame_axis(z_bar);
    const Contexts uncond{with_frame_axis(null_context), ContextMode::uncond};
    const double du = c.noise * (1.0 - w);

    Tensor guided(z_bar.shape());
    long double loss = 0.0L;
    // Fills guided/loss from the unconditional prediction and returns the
    // adjoint d loss / d eps_uncond.
    auto evaluate = [&](const Tensor& eps_u) {
        require_finite(eps_u, "unconditional prediction");
        Tensor upstream(eps_u.shape());
        loss = 0.0L;
        for (std::size_t i = 0; i < guided.size(); ++i) {
            guided[i] = c.latent * z_bar[i] + c.noise * (w * eps_cond[i] + (1.0 - w) * eps_u[i]);
            const double diff = guided[i] - target[i];
            loss += static_cast<long double>(diff) * diff;
            upstream[i] = 2.0 * diff * du;
        }
        return upstream;
    };

    Tensor gradient(null_context.shape());
    if (with_gradient && du != 0.0) {
        auto vjp = denoiser.predict_with_context_vjp({z, t, uncond}, evaluate).second;
        require_finite(vjp, "null-embedding gradient");
        gradient = drop_frame_axis(vjp);
    } else {
        evaluate(denoiser.predict({z, t, uncond}));
    }
    return {static_cast<double>(loss), std::move(gradient), std::move(guided)};
}

NullOptResult optimize_null_embeddings(const InversionTrajectory& trajectory, const Denoiser& denoiser,
                                       const Tensor& cond_context, const Tensor& null_context, double w,
                                       const NoiseSchedule& schedule, const NullOptOptions& options) {
    const std::size_t steps = schedule.step_count();
    VGEDIT_CHECK(trajectory.latents.size() == steps + 1, ErrorKind::invalid_argument,
                 "inversion trajectory length does not match the schedule");
    VGEDIT_CHECK(options.inner_steps >= 0 && options.learning_rate > 0.0, ErrorKind::invalid_argument,
                 "null optimisation needs inner_steps >= 0 and learning_rate > 0");
    VGEDIT_CHECK(cond_context.shape() == null_context.shape(), ErrorKind::invalid_argument,
                 "conditional and null contexts differ in shape");

    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    const Contexts cond{with_frame_axis(cond_context), ContextMode::cond};
    NullOptResult result;
    std::vector<std::size_t> shape = null_context.shape();
    shape.insert(shape.begin(), steps);
    result.embeddings = Tensor(shape);
    result.initial_loss.assign(steps, 0.0);
    result.final_loss.assign(steps, 0.0);
    result.diverged.assign(steps, false);

    Tensor null = null_context;
    Tensor z_bar = trajectory.latents.back();
    for (std::size_t k = steps; k-- > 0;) {
        const int t = schedule.timesteps()[k];
        const int t_prev = schedule.previous_timestep(k);
        const Tensor& target = trajectory.latents[k];
        const Tensor eps_c = drop_frame_axis(denoiser.predict({with_frame_axis(z_bar), t, cond}));
        require_finite(eps_c, "conditional prediction");

        NullLoss current = null_step_loss(z_bar, target, eps_c, denoiser, null, w, t, t_prev, schedule,
                                          w != 1.0 && options.inner_steps > 0);
        result.initial_loss[k] = current.loss;
        Tensor best = null;
        NullLoss best_eval = current;
        bool any_improved = false;

        Tensor m(null.shape()), v(null.shape());
        for (int it = 0; it < options.inner_steps && w != 1.0; ++it) {
            if (best_eval.loss < options.early_stop_loss)
                break;
            const double bc1 = 1.0 - std::pow(beta1, it + 1);
            const double bc2 = 1.0 - std::pow(beta2, it + 1);
            for (std::size_t i = 0; i < null.size(); ++i) {
                const double g = current.gradient[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                null[i] -= options.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + adam_eps);
            }
            const bool more = it + 1 < options.inner_steps;
            current = null_step_loss(z_bar, target, eps_c, denoiser, null, w, t, t_prev, schedule, more);
            VGEDIT_CHECK(std::isfinite(current.loss), ErrorKind::runtime, "null optimisation loss became non-finite");
            if (current.loss < best_eval.loss) {
                best = null;
                best_eval = current;
                any_improved = true;
            }
        }
        result.diverged[k] = options.inner_steps > 0 && w != 1.0 && !any_improved &&
                             result.initial_loss[k] >= options.early_stop_loss;
        result.final_loss[k] = best_eval.loss;
        std::copy(best.values().begin(), best.values().end(), result.embeddings.slice(k).begin());
        z_bar = std::move(best_eval.guided);
        null = std::move(best);
    }
    result.final_latent = std::move(z_bar);
    return result;
}

Tensor sample_frame(const Tensor& z_T, const Denoiser& denoiser, const Tensor& cond_context,
                    const Tensor& null_embeddings, double w, const NoiseSchedule& schedule) {
    const std::size_t steps = schedule.step_count();
    const bool per_step = null_embeddings.rank() == cond_context.rank() + 1;
    VGEDIT_CHECK(!per_step || null_embeddings.dim(0) == steps, ErrorKind::invalid_argument,
                 "null embedding trajectory length does not match the schedule");
    const Contexts cond{with_frame_axis(cond_context), ContextMode::cond};
    Tensor z = with_frame_axis(z_T);
    for (std::size_t k = steps; k-- > 0;) {
        const int t = schedule.timesteps()[k];
        const int t_prev = schedule.previous_timestep(k);
        Tensor eps = denoiser.predict({z, t, cond});
        if (w != 1.0) {
            const Contexts uncond{with_frame_axis(per_step ? null_embeddings.slice_copy(k) : null_embeddings),
                                  ContextMode::uncond};
            eps = cfg_predict(eps, denoiser.predict({z, t, uncond}), w);
        }
        require_finite(eps, "noise prediction during sampling");
        z = ddim_step(z, eps, t, t_prev, schedule);
    }
    return drop_frame_axis(z);
}

}  // namespace vgedit
