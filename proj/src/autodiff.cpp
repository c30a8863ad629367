// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vgedit/error.hpp"

namespace vgedit::ad {

namespace {

void require_same_tape(Var a, Var b) {
    VGEDIT_CHECK(a.tape() != nullptr && a.tape() == b.tape(), ErrorKind::invalid_argument,
                 "operands belong to different tapes");
}

void require_shape(bool ok, const char* op, const Matrix& a, const Matrix& b) {
    VGEDIT_CHECK(ok, ErrorKind::invalid_argument,
                 std::string(op) + ": incompatible shapes " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                     " and " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
}

}  // namespace

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
    VGEDIT_CHECK(data.size() == r * c, ErrorKind::invalid_argument, "matrix data size does not match dimensions");
}

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    require_shape(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols, "matmul", a, b);
    const std::size_t n = b.cols;
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* crow = c.data.data() + i * n;
        const double* arow = a.data.data() + i * a.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0)
                continue;
            const double* brow = b.data.data() + k * n;
            for (std::size_t j = 0; j < n; ++j)
                crow[j] += aik * brow[j];
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    matmul_acc(a, b, c);
    return c;
}

void matmul_bt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    require_shape(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows, "matmul_bt", a, b);
    const std::size_t k = a.cols;
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * k;
        double* crow = c.data.data() + i * c.cols;
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.data.data() + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p)
                s += arow[p] * brow[p];
            crow[j] += s;
        }
    }
}

void matmul_at_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    require_shape(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols, "matmul_at", a, b);
    const std::size_t n = b.cols;
    for (std::size_t p = 0; p < a.rows; ++p) {
        const double* arow = a.data.data() + p * a.cols;
        const double* brow = b.data.data() + p * n;
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double api = arow[i];
            if (api == 0.0)
                continue;
            double* crow = c.data.data() + i * n;
            for (std::size_t j = 0; j < n; ++j)
                crow[j] += api * brow[j];
        }
    }
}

void softmax_rows_inplace(Matrix& m) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        auto row = m.row(r);
        if (row.empty())
            continue;
        const double mx = *std::max_element(row.begin(), row.end());
        long double sum = 0.0L;
        for (double& v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        const double inv = static_cast<double>(1.0L / sum);
        for (double& v : row)
            v *= inv;
    }
}

// ---------------------------------------------------------------------------

const Matrix& Var::value() const { return m_tape->value(m_id); }
const Matrix& Var::grad() const { return m_tape->grad(m_id); }
bool Var::requires_grad() const { return m_tape->requires_grad(m_id); }

Var Tape::constant(Matrix value) {
    m_nodes.push_back(Node{std::move(value), {}, false, {}});
    return Var(this, m_nodes.size() - 1);
}

Var Tape::variable(Matrix value) {
    m_nodes.push_back(Node{std::move(value), {}, true, {}});
    return Var(this, m_nodes.size() - 1);
}

Var Tape::record(Matrix value, std::span<const Var> parents, Backward backward) {
    bool needs = false;
    for (const Var& p : parents)
        needs = needs || m_nodes[p.id()].requires_grad;
    m_nodes.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : Backward{}});
    return Var(this, m_nodes.size() - 1);
}

Matrix& Tape::grad_buffer(std::size_t id) {
    Node& n = m_nodes[id];
    if (n.grad.data.size() != n.value.data.size())
        n.grad = Matrix(n.value.rows, n.value.cols);
    return n.grad;
}

void Tape::backward(Var scalar_output) {
    const Matrix& v = value(scalar_output.id());
    VGEDIT_CHECK(v.rows == 1 && v.cols == 1, ErrorKind::invalid_argument,
                 "backward() without an upstream gradient needs a 1x1 output");
    backward(scalar_output, Matrix(1, 1, 1.0));
}

void Tape::backward(Var output, const Matrix& upstream) {
    VGEDIT_CHECK(output.tape() == this, ErrorKind::invalid_argument, "output belongs to a different tape");
    const Matrix& v = value(output.id());
    VGEDIT_CHECK(upstream.rows == v.rows && upstream.cols == v.cols, ErrorKind::invalid_argument,
                 "upstream gradient shape does not match output");
    Matrix& g = grad_buffer(output.id());
    for (std::size_t i = 0; i < g.data.size(); ++i)
        g.data[i] += upstream.data[i];
    propagate(output.id());
}

void Tape::propagate(std::size_t from) {
    for (std::size_t id = from + 1; id-- > 0;) {
        Node& n = m_nodes[id];
        if (!n.requires_grad || !n.backward || n.grad.data.empty())
            continue;
        n.backward(*this, id);
    }
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
    require_same_tape(a, b);
    Tape& t = *a.tape();
    const Var parents[] = {a, b};
    return t.record(ad::matmul(a.value(), b.value()), parents, [ia = a.id(), ib = b.id()](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        if (tp.requires_grad(ia))
            matmul_bt_acc(g, tp.value(ib), tp.grad_buffer(ia));
        if (tp.requires_grad(ib))
            matmul_at_acc(tp.value(ia), g, tp.grad_buffer(ib));
    });
}

Var matmul_bt(Var a, Var b) {
    require_same_tape(a, b);
    Tape& t = *a.tape();
    Matrix out(a.rows(), b.rows());
    matmul_bt_acc(a.value(), b.value(), out);
    const Var parents[] = {a, b};
    return t.record(std::move(out), parents, [ia = a.id(), ib = b.id()](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        if (tp.requires_grad(ia))
            matmul_acc(g, tp.value(ib), tp.grad_buffer(ia));
        if (tp.requires_grad(ib))
            matmul_at_acc(g, tp.value(ia), tp.grad_buffer(ib));
    });
}

Var axpby(double alpha, Var a, double beta, Var b) {
    require_same_tape(a, b);
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    require_shape(av.rows == bv.rows && av.cols == bv.cols, "axpby", av, bv);
    Matrix out(av.rows, av.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = alpha * av.data[i] + beta * bv.data[i];
    const Var parents[] = {a, b};
    return a.tape()->record(std::move(out), parents,
                            [ia = a.id(), ib = b.id(), alpha, beta](Tape& tp, std::size_t self) {
                                const Matrix& g = tp.grad(self);
                                if (tp.requires_grad(ia)) {
                                    Matrix& ga = tp.grad_buffer(ia);
                                    for (std::size_t i = 0; i < g.data.size(); ++i)
                                        ga.data[i] += alpha * g.data[i];
                                }
                                if (tp.requires_grad(ib)) {
                                    Matrix& gb = tp.grad_buffer(ib);
                                    for (std::size_t i = 0; i < g.data.size(); ++i)
                                        gb.data[i] += beta * g.data[i];
                                }
                            });
}

Var add(Var a, Var b) {
    require_same_tape(a, b);
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    require_shape(av.rows == bv.rows && av.cols == bv.cols, "add", av, bv);
    Matrix out = av;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] += bv.data[i];
    const Var parents[] = {a, b};
    return a.tape()->record(std::move(out), parents, [ia = a.id(), ib = b.id()](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        for (std::size_t id : {ia, ib}) {
            if (!tp.requires_grad(id))
                continue;
            Matrix& gp = tp.grad_buffer(id);
            for (std::size_t i = 0; i < g.data.size(); ++i)
                gp.data[i] += g.data[i];
        }
    });
}

Var sub(Var a, Var b) { return axpby(1.0, a, -1.0, b); }

Var add_row(Var a, Var row) {
    require_same_tape(a, row);
    const Matrix& av = a.value();
    const Matrix& rv = row.value();
    require_shape(rv.rows == 1 && rv.cols == av.cols, "add_row", av, rv);
    Matrix out = av;
    for (std::size_t r = 0; r < out.rows; ++r)
        for (std::size_t c = 0; c < out.cols; ++c)
            out(r, c) += rv.data[c];
    const Var parents[] = {a, row};
    return a.tape()->record(std::move(out), parents, [ia = a.id(), ir = row.id()](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        if (tp.requires_grad(ia)) {
            Matrix& ga = tp.grad_buffer(ia);
            for (std::size_t i = 0; i < g.data.size(); ++i)
                ga.data[i] += g.data[i];
        }
        if (tp.requires_grad(ir)) {
            Matrix& gr = tp.grad_buffer(ir);
            for (std::size_t r = 0; r < g.rows; ++r)
                for (std::size_t c = 0; c < g.cols; ++c)
                    gr.data[c] += g(r, c);
        }
    });
}

Var scale(Var a, double s) {
    Matrix out = a.value();
    for (double& v : out.data)
        v *= s;
    const Var parents[] = {a};
    return a.tape()->record(std::move(out), parents, [ia = a.id(), s](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        Matrix& ga = tp.grad_buffer(ia);
        for (std::size_t i = 0; i < g.data.size(); ++i)
            ga.data[i] += s * g.data[i];
    });
}

Var tanh(Var a) {
    Matrix out = a.value();
    for (double& v : out.data)
        v = std::tanh(v);
    const Var parents[] = {a};
    return a.tape()->record(std::move(out), parents, [ia = a.id()](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        const Matrix& y = tp.value(self);
        Matrix& ga = tp.grad_buffer(ia);
        for (std::size_t i = 0; i < g.data.size(); ++i)
            ga.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
    });
}

Var silu(Var a) {
    Matrix out = a.value();
    for (double& v : out.data)
        v = v / (1.0 + std::exp(-v));
    const Var parents[] = {a};
    return a.tape()->record(std::move(out), parents, [ia = a.id()](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        const Matrix& x = tp.value(ia);
        Matrix& ga = tp.grad_buffer(ia);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            const double sig = 1.0 / (1.0 + std::exp(-x.data[i]));
            ga.data[i] += g.data[i] * sig * (1.0 + x.data[i] * (1.0 - sig));
        }
    });
}

Var softmax_rows(Var a) {
    Matrix out = a.value();
    softmax_rows_inplace(out);
    const Var parents[] = {a};
    return a.tape()->record(std::move(out), parents, [ia = a.id()](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        const Matrix& y = tp.value(self);
        Matrix& ga = tp.grad_buffer(ia);
        for (std::size_t r = 0; r < y.rows; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < y.cols; ++c)
                dot += g(r, c) * y(r, c);
            for (std::size_t c = 0; c < y.cols; ++c)
                ga(r, c) += y(r, c) * (g(r, c) - dot);
        }
    });
}

Var concat_rows(std::span<const Var> parts) {
    VGEDIT_CHECK(!parts.empty(), ErrorKind::invalid_argument, "concat_rows needs at least one part");
    const std::size_t cols = parts.front().cols();
    std::size_t rows = 0;
    for (const Var& p : parts) {
        require_same_tape(parts.front(), p);
        require_shape(p.cols() == cols, "concat_rows", parts.front().value(), p.value());
        rows += p.rows();
    }
    Matrix out(rows, cols);
    std::vector<std::size_t> ids;
    ids.reserve(parts.size());
    auto dst = out.data.begin();
    for (const Var& p : parts) {
        dst = std::copy(p.value().data.begin(), p.value().data.end(), dst);
        ids.push_back(p.id());
    }
    return parts.front().tape()->record(std::move(out), parts, [ids = std::move(ids)](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        std::size_t offset = 0;
        for (std::size_t id : ids) {
            const std::size_t n = tp.value(id).data.size();
            if (tp.requires_grad(id)) {
                Matrix& gp = tp.grad_buffer(id);
                for (std::size_t i = 0; i < n; ++i)
                    gp.data[i] += g.data[offset + i];
            }
            offset += n;
        }
    });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
    const Matrix& av = a.value();
    VGEDIT_CHECK(begin + count <= av.rows, ErrorKind::invalid_argument,
                 "slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") exceed " + std::to_string(av.rows));
    Matrix out(count, av.cols);
    std::copy(av.data.begin() + static_cast<std::ptrdiff_t>(begin * av.cols),
              av.data.begin() + static_cast<std::ptrdiff_t>((begin + count) * av.cols), out.data.begin());
    const Var parents[] = {a};
    return a.tape()->record(std::move(out), parents, [ia = a.id(), begin](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        Matrix& ga = tp.grad_buffer(ia);
        const std::size_t off = begin * ga.cols;
        for (std::size_t i = 0; i < g.data.size(); ++i)
            ga.data[off + i] += g.data[i];
    });
}

Var concat_cols(std::span<const Var> parts) {
    VGEDIT_CHECK(!parts.empty(), ErrorKind::invalid_argument, "concat_cols needs at least one part");
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const Var& p : parts) {
        require_same_tape(parts.front(), p);
        require_shape(p.rows() == rows, "concat_cols", parts.front().value(), p.value());
        cols += p.cols();
    }
    Matrix out(rows, cols);
    std::vector<std::size_t> ids;
    std::size_t c0 = 0;
    for (const Var& p : parts) {
        const Matrix& pv = p.value();
        for (std::size_t r = 0; r < rows; ++r)
            std::copy(pv.row(r).begin(), pv.row(r).end(), out.data.begin() + static_cast<std::ptrdiff_t>(r * cols + c0));
        c0 += pv.cols;
        ids.push_back(p.id());
    }
    return parts.front().tape()->record(std::move(out), parts, [ids = std::move(ids)](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        std::size_t col0 = 0;
        for (std::size_t id : ids) {
            const std::size_t pc = tp.value(id).cols;
            if (tp.requires_grad(id)) {
                Matrix& gp = tp.grad_buffer(id);
                for (std::size_t r = 0; r < g.rows; ++r)
                    for (std::size_t c = 0; c < pc; ++c)
                        gp(r, c) += g(r, col0 + c);
            }
            col0 += pc;
        }
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
    const Matrix& av = a.value();
    VGEDIT_CHECK(begin + count <= av.cols, ErrorKind::invalid_argument, "slice_cols: column range out of bounds");
    Matrix out(av.rows, count);
    for (std::size_t r = 0; r < av.rows; ++r)
        for (std::size_t c = 0; c < count; ++c)
            out(r, c) = av(r, begin + c);
    const Var parents[] = {a};
    return a.tape()->record(std::move(out), parents, [ia = a.id(), begin](Tape& tp, std::size_t self) {
        const Matrix& g = tp.grad(self);
        Matrix& ga = tp.grad_buffer(ia);
        for (std::size_t r = 0; r < g.rows; ++r)
            for (std::size_t c = 0; c < g.cols; ++c)
                ga(r, begin + c) += g(r, c);
    });
}

Var sum_squares(Var a) {
    long double s = 0.0L;
    for (double v : a.value().data)
        s += static_cast<long double>(v) * v;
    const Var parents[] = {a};
    return a.tape()->record(Matrix(1, 1, static_cast<double>(s)), parents, [ia = a.id()](Tape& tp, std::size_t self) {
        const double g = tp.grad(self).data[0];
        const Matrix& x = tp.value(ia);
        Matrix& ga = tp.grad_buffer(ia);
        for (std::size_t i = 0; i < x.data.size(); ++i)
            ga.data[i] += 2.0 * g * x.data[i];
    });
}

}  // namespace vgedit::ad
