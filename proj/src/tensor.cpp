// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "vgedit/error.hpp"

namespace vgedit {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : m_shape(std::move(shape)), m_data(product(m_shape), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : m_shape(std::move(shape)), m_data(std::move(data)) {
    VGEDIT_CHECK(m_data.size() == product(m_shape), ErrorKind::invalid_argument,
                 "tensor data size " + std::to_string(m_data.size()) + " does not match shape " +
                     vgedit::shape_string(m_shape));
}

std::size_t Tensor::dim(std::size_t axis) const {
    VGEDIT_CHECK(axis < m_shape.size(), ErrorKind::invalid_argument,
                 "axis " + std::to_string(axis) + " out of range for shape " + shape_string());
    return m_shape[axis];
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
    VGEDIT_CHECK(index.size() == m_shape.size(), ErrorKind::invalid_argument,
                 "index rank does not match tensor rank");
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
        VGEDIT_CHECK(i < m_shape[axis], ErrorKind::invalid_argument, "tensor index out of range");
        off = off * m_shape[axis] + i;
        ++axis;
    }
    return off;
}

double& Tensor::at(std::initializer_list<std::size_t> index) { return m_data[offset(index)]; }
double Tensor::at(std::initializer_list<std::size_t> index) const { return m_data[offset(index)]; }

std::size_t Tensor::slice_size() const {
    if (m_shape.empty() || m_shape[0] == 0)
        return 0;
    return m_data.size() / m_shape[0];
}

std::span<double> Tensor::slice(std::size_t i) {
    const std::size_t n = slice_size();
    return std::span<double>(m_data).subspan(i * n, n);
}

std::span<const double> Tensor::slice(std::size_t i) const {
    const std::size_t n = slice_size();
    return std::span<const double>(m_data).subspan(i * n, n);
}

Tensor Tensor::slice_copy(std::size_t i) const {
    VGEDIT_CHECK(!m_shape.empty() && i < m_shape[0], ErrorKind::invalid_argument, "slice index out of range");
    auto s = slice(i);
    return Tensor(std::vector<std::size_t>(m_shape.begin() + 1, m_shape.end()),
                  std::vector<double>(s.begin(), s.end()));
}

bool Tensor::all_finite() const noexcept {
    for (double v : m_data)
        if (!std::isfinite(v))
            return false;
    return true;
}

std::string Tensor::shape_string() const { return vgedit::shape_string(m_shape); }

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i)
            s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor stack(std::span<const Tensor> parts) {
    VGEDIT_CHECK(!parts.empty(), ErrorKind::invalid_argument, "cannot stack zero tensors");
    std::vector<std::size_t> shape = parts.front().shape();
    std::vector<double> data;
    data.reserve(parts.size() * parts.front().size());
    for (const Tensor& p : parts) {
        VGEDIT_CHECK(p.shape() == shape, ErrorKind::invalid_argument,
                     "cannot stack tensors of shapes " + shape_string(shape) + " and " + p.shape_string());
        data.insert(data.end(), p.values().begin(), p.values().end());
    }
    shape.insert(shape.begin(), parts.size());
    return Tensor(std::move(shape), std::move(data));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    VGEDIT_CHECK(a.shape() == b.shape(), ErrorKind::invalid_argument,
                 "shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double l2_norm(std::span<const double> v) {
    long double s = 0.0L;
    for (double x : v)
        s += static_cast<long double>(x) * x;
    return static_cast<double>(std::sqrt(s));
}

double relative_l2(const Tensor& a, const Tensor& b) {
    VGEDIT_CHECK(a.shape() == b.shape(), ErrorKind::invalid_argument,
                 "shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    long double num = 0.0L;
    long double den = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const long double d = static_cast<long double>(a[i]) - b[i];
        num += d * d;
        den += static_cast<long double>(b[i]) * b[i];
    }
    if (den == 0.0L)
        return num == 0.0L ? 0.0 : INFINITY;
    return static_cast<double>(std::sqrt(num / den));
}

}  // namespace vgedit
