// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Minimal reverse-mode differentiation over row-major matrices.
//
// The toy denoiser is written once against this tape; plain forward passes
// record constants only (no backward closures), and the null-embedding
// optimizer marks the unconditional context as a variable to obtain
// vector-Jacobian products.

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace vgedit::ad {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values);

    double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const noexcept { return {data.data() + r * cols, cols}; }
    std::span<double> row(std::size_t r) noexcept { return {data.data() + r * cols, cols}; }
    bool empty() const noexcept { return data.empty(); }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

// Plain kernels, C = A·B, C = A·Bᵀ, C = Aᵀ·B (accumulating variants add into C).
Matrix matmul(const Matrix& a, const Matrix& b);
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_bt_acc(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_at_acc(const Matrix& a, const Matrix& b, Matrix& c);
/// Row-wise softmax with the row maximum subtracted before exponentiation.
void softmax_rows_inplace(Matrix& m);

class Tape;

class Var {
public:
    Var() = default;

    const Matrix& value() const;
    const Matrix& grad() const;
    std::size_t rows() const { return value().rows; }
    std::size_t cols() const { return value().cols; }
    bool requires_grad() const;
    Tape* tape() const noexcept { return m_tape; }
    std::size_t id() const noexcept { return m_id; }
    bool valid() const noexcept { return m_tape != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : m_tape(tape), m_id(id) {}

    Tape* m_tape = nullptr;
    std::size_t m_id = 0;
};

class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var variable(Matrix value);

    /// Seeds d(out)/d(out) = 1 for a 1x1 output and propagates to every
    /// variable reachable from it.
    void backward(Var scalar_output);
    /// Seeds an arbitrary upstream gradient (vector-Jacobian product).
    void backward(Var output, const Matrix& upstream);

    // Used by op implementations.
    Var record(Matrix value, std::span<const Var> parents, Backward backward);
    const Matrix& value(std::size_t id) const { return m_nodes[id].value; }
    const Matrix& grad(std::size_t id) const { return m_nodes[id].grad; }
    /// Gradient buffer of node id, zero-initialised on first access.
    Matrix& grad_buffer(std::size_t id);
    bool requires_grad(std::size_t id) const { return m_nodes[id].requires_grad; }
    std::size_t size() const noexcept { return m_nodes.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        Backward backward;
    };

    void propagate(std::size_t from);

    std::deque<Node> m_nodes;
};

Var matmul(Var a, Var b);
/// a · bᵀ
Var matmul_bt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Adds a 1 x cols row to every row of a.
Var add_row(Var a, Var row);
Var scale(Var a, double s);
/// alpha·a + beta·b
Var axpby(double alpha, Var a, double beta, Var b);
Var tanh(Var a);
Var silu(Var a);
Var softmax_rows(Var a);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
/// 1x1 sum of squared entries.
Var sum_squares(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace vgedit::ad
