// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vgedit/tensor.hpp"
#include "vgedit/video_model.hpp"

namespace vgedit {

/// Reads one PNG / PPM (P6) / PGM (P5) image as [H, W, 3] in [0, 1].
/// Gray images are replicated to three channels; alpha is dropped.
Tensor read_image(const std::filesystem::path& path);

/// Writes [H, W, 3] (or [H, W] gray) values in [0, 1] as 8-bit PNG or PPM,
/// chosen by extension.
void write_image(const std::filesystem::path& path, const Tensor& image);

/// Loads a clip from
///   - a directory of numbered images (.png, .ppm, .pgm), ordered by the
///     last run of digits in the file name, or
///   - a single .vgt tensor container holding [N, H, W, 3].
FrameSequence load_frames(const std::filesystem::path& path);

/// Writes frame_0000.png, frame_0001.png, ... into `dir` and returns the
/// written paths.
std::vector<std::filesystem::path> save_frames(const std::filesystem::path& dir, const FrameSequence& frames);

}  // namespace vgedit
