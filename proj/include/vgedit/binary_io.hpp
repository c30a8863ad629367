// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary layouts (all little-endian):
//
//   tensor file (.vgt): latents [N, h, w, c], flow fields [N-1, H, W, 2],
//   frame containers [N, H, W, 3] and null trajectories [N, S, L, d]
//     u32 dim0, u32 dim1, u32 dim2, u32 dim3     (16-byte header)
//     f32 values, row-major, dim0*dim1*dim2*dim3 of them
//
//   weights archive (.vgw): a set of named matrices
//     char[4] "VGWT", u32 version (=1), u32 count
//     count times: u32 name_len, name bytes, u32 rows, u32 cols, f32 values

#include <filesystem>
#include <map>
#include <string>

#include "vgedit/autodiff.hpp"
#include "vgedit/tensor.hpp"

namespace vgedit {

void write_tensor_file(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor_file(const std::filesystem::path& path);

using WeightArchive = std::map<std::string, ad::Matrix>;

void write_weight_archive(const std::filesystem::path& path, const WeightArchive& weights);
WeightArchive read_weight_archive(const std::filesystem::path& path);

}  // namespace vgedit
