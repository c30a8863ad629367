// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vgedit {

/// Dense row-major array of doubles with an arbitrary shape.
///
/// Used for frames [H, W, 3], video latents [N, h, w, c], flow fields
/// [N-1, H, W, 2] and the like. The innermost axis is contiguous.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const noexcept { return m_shape; }
    std::size_t rank() const noexcept { return m_shape.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const noexcept { return m_data.size(); }
    bool empty() const noexcept { return m_data.empty(); }

    double* data() noexcept { return m_data.data(); }
    const double* data() const noexcept { return m_data.data(); }
    std::span<double> values() noexcept { return m_data; }
    std::span<const double> values() const noexcept { return m_data; }

    double& operator[](std::size_t i) noexcept { return m_data[i]; }
    double operator[](std::size_t i) const noexcept { return m_data[i]; }

    double& at(std::initializer_list<std::size_t> index);
    double at(std::initializer_list<std::size_t> index) const;

    /// Number of elements in one slice along axis 0.
    std::size_t slice_size() const;
    std::span<double> slice(std::size_t i);
    std::span<const double> slice(std::size_t i) const;
    /// Copy of slice i along axis 0, with the leading axis dropped.
    Tensor slice_copy(std::size_t i) const;

    bool all_finite() const noexcept;
    std::string shape_string() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t offset(std::initializer_list<std::size_t> index) const;

    std::vector<std::size_t> m_shape;
    std::vector<double> m_data;
};

std::string shape_string(const std::vector<std::size_t>& shape);

/// Stack equally-shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> parts);

double max_abs_diff(const Tensor& a, const Tensor& b);
double l2_norm(std::span<const double> v);
/// ||a - b|| / ||b||.
double relative_l2(const Tensor& a, const Tensor& b);

}  // namespace vgedit
