// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vgedit/providers.hpp"
#include "vgedit/video_model.hpp"

namespace vgedit {

struct MetricReport {
    double text_align = 0.0;
    double frame_consistency = 0.0;
    std::vector<double> per_frame_alignments;
};

/// Cosine similarity; 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Mean over frames of cos(prompt, frame).
double text_alignment(std::span<const std::vector<double>> frame_embeddings, std::span<const double> prompt_embedding,
                      std::vector<double>* per_frame = nullptr);
/// Mean over unordered pairs i < j of cos(frame_i, frame_j). Needs N >= 2.
double frame_consistency(std::span<const std::vector<double>> frame_embeddings);

double text_alignment(const FrameSequence& frames, std::string_view prompt, const Embedder& embedder,
                      std::vector<double>* per_frame = nullptr);
double frame_consistency(const FrameSequence& frames, const Embedder& embedder);

/// Both metrics; frame_consistency needs at least two frames.
MetricReport evaluate_metrics(const FrameSequence& frames, std::string_view prompt, const Embedder& embedder);
std::string report_to_json(const MetricReport& report);

}  // namespace vgedit
