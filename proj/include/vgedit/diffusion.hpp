// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vgedit/denoiser.hpp"
#include "vgedit/tensor.hpp"

namespace vgedit {

/// Linear beta schedule with cumulative alpha products and an evenly strided
/// inference subsequence.
class NoiseSchedule {
public:
    NoiseSchedule(int train_steps, double beta_start, double beta_end, int inference_steps);

    int train_steps() const noexcept { return m_train_steps; }
    const std::vector<double>& betas() const noexcept { return m_betas; }
    /// alpha_bar(t) for t in [0, T]; alpha_bar(0) is 1.
    double alpha_bar(int t) const;
    /// Inference timesteps in increasing order, a subsequence of [1, T].
    const std::vector<int>& timesteps() const noexcept { return m_timesteps; }
    std::size_t step_count() const noexcept { return m_timesteps.size(); }
    /// Timestep below inference step k (0 for k == 0).
    int previous_timestep(std::size_t k) const { return k == 0 ? 0 : m_timesteps[k - 1]; }

    double beta_start() const noexcept { return m_beta_start; }
    double beta_end() const noexcept { return m_beta_end; }

private:
    int m_train_steps;
    double m_beta_start;
    double m_beta_end;
    std::vector<double> m_betas;
    std::vector<double> m_alpha_bars;  // index t, with m_alpha_bars[0] = 1
    std::vector<int> m_timesteps;
};

NoiseSchedule make_schedule(int train_steps, double beta_start, double beta_end, int inference_steps);

/// z_to = a·z_from + b·eps for a deterministic DDIM move between noise
/// levels alpha_bar_from and alpha_bar_to (either direction).
struct DdimCoefficients {
    double latent;
    double noise;
};
DdimCoefficients ddim_coefficients(double alpha_bar_from, double alpha_bar_to);

/// Deterministic DDIM update from timestep t down to t_prev < t.
Tensor ddim_step(const Tensor& z_t, const Tensor& eps, int t, int t_prev, const NoiseSchedule& schedule);
/// Inverse move from t up to t_next > t.
Tensor ddim_invert_step(const Tensor& z_t, const Tensor& eps, int t, int t_next, const NoiseSchedule& schedule);

/// w·eps_cond + (1 - w)·eps_uncond
Tensor cfg_predict(const Tensor& eps_cond, const Tensor& eps_uncond, double w);

/// z*_0 .. z*_S for one frame. Entry 0 is the clean latent, entry k >= 1
/// sits at timesteps()[k - 1]. Each entry is [h, w, c].
struct InversionTrajectory {
    std::vector<Tensor> latents;
};

/// DDIM inversion of one frame latent [h, w, c] with guidance weight 1.
/// The move k -> k+1 evaluates the denoiser on z*_k at the destination
/// timestep.
InversionTrajectory ddim_invert_frame(const Tensor& z0, const Denoiser& denoiser, const Tensor& context,
                                      const NoiseSchedule& schedule);

struct NullOptOptions {
    int inner_steps = 10;
    double learning_rate = 1e-2;
    double early_stop_loss = 1e-5;
};

/// Per-frame result of null-embedding optimisation.
struct NullOptResult {
    Tensor embeddings;                 // [S, L, d_ctx], index k is used for the move t_k -> t_{k-1}
    std::vector<double> initial_loss;  // per inference step k, before the inner loop
    std::vector<double> final_loss;    // per inference step k, after the inner loop
    std::vector<bool> diverged;        // every inner iterate was worse than the starting point
    Tensor final_latent;               // guided reconstruction of z*_0
};

/// Tunes the unconditional embedding at every inference step, from the
/// largest timestep down, so that the guided DDIM step tracks the inversion
/// trajectory. The optimiser is Adam; the returned embedding at each step is
/// the best iterate seen, so final_loss[k] <= initial_loss[k].
NullOptResult optimize_null_embeddings(const InversionTrajectory& trajectory, const Denoiser& denoiser,
                                       const Tensor& cond_context, const Tensor& null_context, double w,
                                       const NoiseSchedule& schedule, const NullOptOptions& options = {});

/// Loss of the guided step at inference step k for a given unconditional
/// embedding, and its gradient with respect to that embedding.
struct NullLoss {
    double loss;
    Tensor gradient;  // [L, d_ctx]
    Tensor guided;    // z̄ after the step, [h, w, c]
};
NullLoss null_step_loss(const Tensor& z_bar, const Tensor& target, const Tensor& eps_cond, const Denoiser& denoiser,
                        const Tensor& null_context, double w, int t, int t_prev, const NoiseSchedule& schedule,
                        bool with_gradient = true);

/// Guided DDIM sampling of one frame from z_S using per-step unconditional
/// embeddings [S, L, d] (or one [L, d] embedding for every step).
Tensor sample_frame(const Tensor& z_T, const Denoiser& denoiser, const Tensor& cond_context,
                    const Tensor& null_embeddings, double w, const NoiseSchedule& schedule);

}  // namespace vgedit
