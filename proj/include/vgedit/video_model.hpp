// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vgedit/tensor.hpp"

namespace vgedit {

/// N frames of shape [H, W, 3] with values in [0, 1], stored as one
/// [N, H, W, 3] tensor.
class FrameSequence {
public:
    FrameSequence() = default;
    /// Validates shape, finiteness and range.
    explicit FrameSequence(Tensor frames, std::optional<double> fps = std::nullopt);

    const Tensor& tensor() const noexcept { return m_frames; }
    std::size_t count() const noexcept { return m_frames.empty() ? 0 : m_frames.dim(0); }
    std::size_t height() const { return m_frames.dim(1); }
    std::size_t width() const { return m_frames.dim(2); }
    std::optional<double> fps() const noexcept { return m_fps; }
    Tensor frame(std::size_t i) const { return m_frames.slice_copy(i); }

private:
    Tensor m_frames;
    std::optional<double> m_fps;
};

/// Per-frame latents [N, h, w, c] at inference-step index `timestep_index`
/// (0 is the clean latent).
struct VideoLatents {
    Tensor data;
    int timestep_index = 0;

    std::size_t frames() const { return data.dim(0); }
    std::size_t height() const { return data.dim(1); }
    std::size_t width() const { return data.dim(2); }
    std::size_t channels() const { return data.dim(3); }
};

/// Box normalised to the frame extent; 0 <= x0 < x1 <= 1, 0 <= y0 < y1 <= 1.
struct BoundingBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 1.0;
    double y1 = 1.0;

    /// Empty when valid, otherwise a description of the violated constraint.
    std::optional<std::string> violation() const;
    bool valid() const { return !violation().has_value(); }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct GroundingEntity {
    std::string phrase;
    BoundingBox box;

    friend bool operator==(const GroundingEntity&, const GroundingEntity&) = default;
};

/// Per-frame entity lists. Entity j of every frame denotes the same tracked
/// object, so all frames carry the same number of entities.
struct VideoGrounding {
    std::vector<std::vector<GroundingEntity>> per_frame;

    std::size_t frame_count() const noexcept { return per_frame.size(); }
    std::size_t entity_count() const noexcept { return per_frame.empty() ? 0 : per_frame.front().size(); }

    friend bool operator==(const VideoGrounding&, const VideoGrounding&) = default;
};

struct EditSpec {
    std::vector<std::pair<std::string, std::string>> phrase_map;
    std::string source_prompt;
    std::string target_prompt;

    /// Throws when source phrases repeat or the target prompt is empty.
    void validate() const;
};

/// Depth maps [N, H, W] in [0, 1].
class DepthSequence {
public:
    DepthSequence() = default;
    explicit DepthSequence(Tensor maps);

    const Tensor& tensor() const noexcept { return m_maps; }
    std::size_t count() const noexcept { return m_maps.empty() ? 0 : m_maps.dim(0); }

private:
    Tensor m_maps;
};

/// Parses the groundings JSON document:
///   {"frames": [{"index": 0, "entities": [{"phrase": "...", "box": [x0, y0, x1, y1]}]}]}
/// Frame indices must cover 0..N-1 (any order); entities are aligned by list
/// position.
VideoGrounding parse_groundings(std::string_view text);

/// Canonical serialisation: frames in index order, boxes with 6 decimals.
std::string serialize_groundings(const VideoGrounding& grounding);

struct EditResult {
    VideoGrounding grounding;
    std::vector<std::string> warnings;
};

/// Replaces mapped phrases; boxes are copied untouched. Map entries whose
/// source phrase never occurs produce a warning.
EditResult apply_edit_spec(const VideoGrounding& grounding, const EditSpec& spec);

/// Lists every invariant violation of `grounding` and its frame-count
/// agreement with `frames`. Never throws.
std::vector<std::string> validate_grounding(const VideoGrounding& grounding, const FrameSequence& frames);
std::vector<std::string> validate_grounding(const VideoGrounding& grounding, std::size_t frame_count);

}  // namespace vgedit
