// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/metrics.hpp"

#include <cmath>

#include <json.hpp>

#include "vgedit/error.hpp"

namespace vgedit {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    VGEDIT_CHECK(a.size() == b.size(), ErrorKind::invalid_argument,
                 "embedding widths differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    long double dot = 0.0L, na = 0.0L, nb = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    if (na == 0.0L || nb == 0.0L)
        return 0.0;
    return static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

double text_alignment(std::span<const std::vector<double>> frames, std::span<const double> prompt,
                      std::vector<double>* per_frame) {
    VGEDIT_CHECK(!frames.empty(), ErrorKind::invalid_argument, "text alignment needs at least one frame");
    long double sum = 0.0L;
    if (per_frame != nullptr)
        per_frame->clear();
    for (const auto& f : frames) {
        const double c = cosine_similarity(f, prompt);
        if (per_frame != nullptr)
            per_frame->push_back(c);
        sum += c;
    }
    return static_cast<double>(sum / static_cast<long double>(frames.size()));
}

double frame_consistency(std::span<const std::vector<double>> frames) {
    const std::size_t n = frames.size();
    VGEDIT_CHECK(n >= 2, ErrorKind::invalid_argument,
                 "frame consistency needs at least two frames, got " + std::to_string(n));
    long double sum = 0.0L;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            sum += cosine_similarity(frames[i], frames[j]);
    return static_cast<double>(sum / static_cast<long double>(n * (n - 1) / 2));
}

namespace {

std::vector<std::vector<double>> embed_all(const FrameSequence& frames, const Embedder& embedder) {
    std::vector<std::vector<double>> out;
    out.reserve(frames.count());
    for (std::size_t i = 0; i < frames.count(); ++i)
        out.push_back(embedder.embed_frame(frames.frame(i)));
    return out;
}

}  // namespace

double text_alignment(const FrameSequence& frames, std::string_view prompt, const Embedder& embedder,
                      std::vector<double>* per_frame) {
    return text_alignment(embed_all(frames, embedder), embedder.embed_text(prompt), per_frame);
}

double frame_consistency(const FrameSequence& frames, const Embedder& embedder) {
    return frame_consistency(embed_all(frames, embedder));
}

MetricReport evaluate_metrics(const FrameSequence& frames, std::string_view prompt, const Embedder& embedder) {
    const auto embeddings = embed_all(frames, embedder);
    MetricReport r;
    r.text_align = text_alignment(embeddings, embedder.embed_text(prompt), &r.per_frame_alignments);
    r.frame_consistency = frame_consistency(embeddings);
    return r;
}

std::string report_to_json(const MetricReport& r) {
    const nlohmann::json j{{"text_align", r.text_align},
                           {"frame_consistency", r.frame_consistency},
                           {"per_frame_alignments", r.per_frame_alignments}};
    return j.dump(2) + "\n";
}

}  // namespace vgedit
