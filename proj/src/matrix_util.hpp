// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vgedit/autodiff.hpp"
#include "vgedit/error.hpp"
#include "vgedit/tensor.hpp"

namespace vgedit::detail {

/// Views a tensor as rows x (size / rows), copying the values.
inline ad::Matrix to_matrix(const Tensor& t, std::size_t rows) {
    VGEDIT_CHECK(rows > 0 && t.size() % rows == 0, ErrorKind::invalid_argument,
                 "cannot view " + t.shape_string() + " as " + std::to_string(rows) + " rows");
    return ad::Matrix(rows, t.size() / rows, std::vector<double>(t.values().begin(), t.values().end()));
}

inline Tensor to_tensor(const ad::Matrix& m, std::vector<std::size_t> shape) {
    return Tensor(std::move(shape), m.data);
}

}  // namespace vgedit::detail
