// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/toy_providers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "matrix_util.hpp"
#include "vgedit/error.hpp"
#include "vgedit/rng.hpp"

namespace vgedit {

using detail::to_matrix;
using detail::to_tensor;

ad::Matrix seeded_matrix(std::uint64_t seed, std::string_view name, std::size_t rows, std::size_t cols, double lo,
                         double hi) {
    Rng rng(derive_seed(seed, name));
    ad::Matrix m(rows, cols);
    for (double& v : m.data)
        v = rng.uniform(lo, hi);
    return m;
}

std::vector<double> timestep_embedding(int timestep, std::size_t width) {
    VGEDIT_CHECK(width >= 2 && width % 2 == 0, ErrorKind::invalid_argument, "timestep embedding width must be even");
    const std::size_t half = width / 2;
    std::vector<double> emb(width);
    for (std::size_t k = 0; k < half; ++k) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
        emb[k] = std::sin(timestep * freq);
        emb[k + half] = std::cos(timestep * freq);
    }
    return emb;
}

namespace {

void normalize_in_place(std::vector<double>& v) {
    const double n = l2_norm(v);
    if (n > 0.0)
        for (double& x : v)
            x /= n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Text encoder

ToyTextEncoder::ToyTextEncoder(std::uint64_t seed, ToyDims dims) : m_seed(seed), m_dims(dims) {
    VGEDIT_CHECK(dims.context_length >= 2, ErrorKind::invalid_argument, "context length must hold <bos> and <eos>");
}

std::vector<std::string> ToyTextEncoder::tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty())
                tokens.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty())
        tokens.push_back(std::move(cur));
    return tokens;
}

std::vector<double> ToyTextEncoder::token_vector(std::string_view token) const {
    Rng rng(derive_seed(m_seed, std::string("token:") + std::string(token)));
    std::vector<double> v(m_dims.context_width);
    for (double& x : v)
        x = rng.uniform(-1.0, 1.0);
    normalize_in_place(v);
    return v;
}

Tensor ToyTextEncoder::encode(std::string_view text) const {
    const std::size_t L = m_dims.context_length;
    std::vector<std::string> rows{"<bos>"};
    for (auto& tok : tokenize(text)) {
        if (rows.size() + 1 >= L)
            break;
        rows.push_back(std::move(tok));
    }
    rows.emplace_back("<eos>");
    while (rows.size() < L)
        rows.emplace_back("<pad>");

    Tensor out({L, m_dims.context_width});
    for (std::size_t i = 0; i < L; ++i) {
        const auto v = token_vector(rows[i]);
        std::copy(v.begin(), v.end(), out.slice(i).begin());
    }
    return out;
}

std::vector<double> ToyTextEncoder::phrase_vector(std::string_view phrase) const {
    const auto tokens = tokenize(phrase);
    if (tokens.empty())
        return token_vector("<eos>");
    std::vector<double> mean(m_dims.context_width, 0.0);
    for (const auto& tok : tokens) {
        const auto v = token_vector(tok);
        for (std::size_t i = 0; i < mean.size(); ++i)
            mean[i] += v[i];
    }
    for (double& x : mean)
        x /= static_cast<double>(tokens.size());
    return mean;
}

// ---------------------------------------------------------------------------
// Flow, depth, embedder

Tensor ToyFlowEstimator::estimate(const FrameSequence& frames) const {
    VGEDIT_CHECK(frames.count() >= 2, ErrorKind::invalid_argument, "optical flow needs at least two frames");
    const std::size_t n = frames.count(), H = frames.height(), W = frames.width();
    const Tensor& f = frames.tensor();
    const std::size_t frame_size = H * W * 3;
    Tensor flow({n - 1, H, W, 2});
    const int r = m_radius;

    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double* a = f.data() + i * frame_size;
        const double* b = f.data() + (i + 1) * frame_size;
        for (std::size_t by = 0; by < H; by += m_block) {
            for (std::size_t bx = 0; bx < W; bx += m_block) {
                const std::size_t bh = std::min(m_block, H - by), bw = std::min(m_block, W - bx);
                double best_sad = std::numeric_limits<double>::infinity();
                int best_dy = 0, best_dx = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    for (int dx = -r; dx <= r; ++dx) {
                        const long y0 = static_cast<long>(by) + dy, x0 = static_cast<long>(bx) + dx;
                        if (y0 < 0 || x0 < 0 || y0 + static_cast<long>(bh) > static_cast<long>(H) ||
                            x0 + static_cast<long>(bw) > static_cast<long>(W))
                            continue;
                        double sad = 0.0;
                        for (std::size_t y = 0; y < bh; ++y)
                            for (std::size_t x = 0; x < bw * 3; ++x)
                                sad += std::abs(b[((static_cast<std::size_t>(y0) + y) * W + static_cast<std::size_t>(x0)) * 3 + x] -
                                                a[((by + y) * W + bx) * 3 + x]);
                        const int mag = dy * dy + dx * dx;
                        const int best_mag = best_dy * best_dy + best_dx * best_dx;
                        if (sad < best_sad || (sad == best_sad && mag < best_mag)) {
                            best_sad = sad;
                            best_dy = dy;
                            best_dx = dx;
                        }
                    }
                }
                for (std::size_t y = by; y < by + bh; ++y)
                    for (std::size_t x = bx; x < bx + bw; ++x) {
                        flow.at({i, y, x, 0}) = best_dy;
                        flow.at({i, y, x, 1}) = best_dx;
                    }
            }
        }
    }
    return flow;
}

DepthSequence DepthEstimator::estimate(const FrameSequence& frames) const {
    std::vector<Tensor> maps;
    maps.reserve(frames.count());
    for (std::size_t i = 0; i < frames.count(); ++i)
        maps.push_back(estimate_frame(frames.frame(i)));
    return DepthSequence(stack(maps));
}

Tensor ToyDepthEstimator::estimate_frame(const Tensor& frame) const {
    VGEDIT_CHECK(frame.rank() == 3 && frame.dim(2) == 3, ErrorKind::invalid_argument, "depth expects [H, W, 3]");
    const std::size_t H = frame.dim(0), W = frame.dim(1);
    Tensor lum({H, W});
    for (std::size_t p = 0; p < H * W; ++p)
        lum[p] = 0.299 * frame[3 * p] + 0.587 * frame[3 * p + 1] + 0.114 * frame[3 * p + 2];
    const auto [lo, hi] = std::minmax_element(lum.values().begin(), lum.values().end());
    const double range = *hi - *lo;
    Tensor depth({H, W});
    if (range > 0.0)
        for (std::size_t p = 0; p < H * W; ++p)
            depth[p] = (lum[p] - *lo) / range;
    return depth;
}

ToyEmbedder::ToyEmbedder(std::uint64_t seed, ToyDims dims)
    : m_text(derive_seed(seed, "embedder.text"), dims),
      m_pixel_projection(seeded_matrix(seed, "embedder.pixels", 8 * 8 * 3, dims.embed_width, -1.0, 1.0)),
      m_text_projection(seeded_matrix(seed, "embedder.text_projection", dims.context_width, dims.embed_width, -1.0,
                                      1.0)) {}

std::vector<double> ToyEmbedder::embed_frame(const Tensor& frame) const {
    VGEDIT_CHECK(frame.rank() == 3 && frame.dim(2) == 3, ErrorKind::invalid_argument, "embedder expects [H, W, 3]");
    const std::size_t H = frame.dim(0), W = frame.dim(1);
    ad::Matrix pooled(1, 8 * 8 * 3);
    for (std::size_t r = 0; r < 8; ++r) {
        const std::size_t y0 = r * H / 8, y1 = std::max(y0 + 1, (r + 1) * H / 8);
        for (std::size_t c = 0; c < 8; ++c) {
            const std::size_t x0 = c * W / 8, x1 = std::max(x0 + 1, (c + 1) * W / 8);
            const double inv = 1.0 / static_cast<double>((y1 - y0) * (x1 - x0));
            for (std::size_t y = y0; y < std::min(y1, H); ++y)
                for (std::size_t x = x0; x < std::min(x1, W); ++x)
                    for (std::size_t k = 0; k < 3; ++k)
                        pooled.data[(r * 8 + c) * 3 + k] += frame[(y * W + x) * 3 + k] * inv;
        }
    }
    auto v = ad::matmul(pooled, m_pixel_projection).data;
    normalize_in_place(v);
    return v;
}

std::vector<double> ToyEmbedder::embed_text(std::string_view text) const {
    const auto mean = m_text.phrase_vector(text);
    auto v = ad::matmul(ad::Matrix(1, mean.size(), mean), m_text_projection).data;
    normalize_in_place(v);
    return v;
}

// ---------------------------------------------------------------------------
// Latent codec

ToyLatentCodec::ToyLatentCodec(std::uint64_t seed, ToyDims dims) : m_dims(dims) {
    const std::size_t c = dims.latent_channels;
    VGEDIT_CHECK(c >= 3, ErrorKind::invalid_argument, "the toy codec needs at least 3 latent channels");
    m_lift = seeded_matrix(seed, "codec.lift", 3, c, -0.25, 0.25);
    for (std::size_t i = 0; i < 3; ++i)
        m_lift(i, i) += 1.0;

    // inverse = Aᵀ (A Aᵀ)^-1 for A = lift (3 x c).
    ad::Matrix gram(3, 3);
    ad::matmul_bt_acc(m_lift, m_lift, gram);
    const auto& g = gram;
    const double det = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) -
                       g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0)) +
                       g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
    VGEDIT_CHECK(std::abs(det) > 1e-9, ErrorKind::runtime, "codec lift is singular");
    ad::Matrix inv(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            const std::size_t r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
            inv(i, j) = (g(r0, c0) * g(r1, c1) - g(r0, c1) * g(r1, c0)) / det;
        }
    m_inverse = ad::Matrix(c, 3);
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t i = 0; i < 3; ++i)
                m_inverse(k, j) += m_lift(i, k) * inv(i, j);
}

Tensor ToyLatentCodec::encode(const FrameSequence& frames) const {
    const std::size_t n = frames.count(), H = frames.height(), W = frames.width(), s = m_dims.downsample;
    VGEDIT_CHECK(H % s == 0 && W % s == 0, ErrorKind::validation,
                 "frame size " + std::to_string(H) + "x" + std::to_string(W) + " is not divisible by the latent factor " +
                     std::to_string(s));
    const std::size_t h = H / s, w = W / s;
    ad::Matrix pooled(n * h * w, 3);
    const double inv = 1.0 / static_cast<double>(s * s);
    const Tensor& f = frames.tensor();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t k = 0; k < 3; ++k)
                    pooled(((i * h) + y / s) * w + x / s, k) += (2.0 * f[((i * H + y) * W + x) * 3 + k] - 1.0) * inv;
    return to_tensor(ad::matmul(pooled, m_lift), {n, h, w, m_dims.latent_channels});
}

FrameSequence ToyLatentCodec::decode(const Tensor& latents) const {
    VGEDIT_CHECK(latents.rank() == 4 && latents.dim(3) == m_dims.latent_channels, ErrorKind::invalid_argument,
                 "codec expects latents [N, h, w, " + std::to_string(m_dims.latent_channels) + "]");
    const std::size_t n = latents.dim(0), h = latents.dim(1), w = latents.dim(2), s = m_dims.downsample;
    const ad::Matrix rgb = ad::matmul(to_matrix(latents, n * h * w), m_inverse);
    const std::size_t H = h * s, W = w * s;

    // Bilinear weights along one axis: pixel centre p maps to cell coordinate
    // (p + 0.5) / s - 0.5, clamped to the grid.
    struct Tap {
        std::size_t lo, hi;
        double frac;
    };
    auto taps = [s](std::size_t pixels, std::size_t cells) {
        std::vector<Tap> out(pixels);
        for (std::size_t p = 0; p < pixels; ++p) {
            const double c = std::clamp((static_cast<double>(p) + 0.5) / static_cast<double>(s) - 0.5, 0.0,
                                        static_cast<double>(cells - 1));
            const auto lo = static_cast<std::size_t>(c);
            out[p] = {lo, std::min(lo + 1, cells - 1), c - static_cast<double>(lo)};
        }
        return out;
    };
    const auto ty = taps(H, h), tx = taps(W, w);

    Tensor out({n, H, W, 3});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x)
                for (std::size_t k = 0; k < 3; ++k) {
                    auto cell = [&](std::size_t r, std::size_t c) { return rgb((i * h + r) * w + c, k); };
                    const Tap& a = ty[y];
                    const Tap& b = tx[x];
                    const double v = (1.0 - a.frac) * ((1.0 - b.frac) * cell(a.lo, b.lo) + b.frac * cell(a.lo, b.hi)) +
                                     a.frac * ((1.0 - b.frac) * cell(a.hi, b.lo) + b.frac * cell(a.hi, b.hi));
                    out[((i * H + y) * W + x) * 3 + k] = std::isfinite(v) ? std::clamp((v + 1.0) / 2.0, 0.0, 1.0) : 0.0;
                }
    return FrameSequence(std::move(out));
}

// ---------------------------------------------------------------------------
// Weight construction and archives

namespace {

constexpr double weight_range = 0.05;
constexpr double input_range = 0.01;

ad::Matrix seeded_weight(std::uint64_t seed, const std::string& name, std::size_t rows, std::size_t cols,
                         double range = weight_range) {
    return seeded_matrix(seed, name, rows, cols, -range, range);
}

AttentionWeights seeded_attention(std::uint64_t seed, const std::string& name, std::size_t q_in, std::size_t kv_in,
                                  const ToyDims& d) {
    AttentionWeights w;
    w.query = seeded_weight(seed, name + ".q", q_in, d.model_width);
    w.key = seeded_weight(seed, name + ".k", kv_in, d.model_width);
    w.value = seeded_weight(seed, name + ".v", kv_in, d.model_width);
    w.output = seeded_weight(seed, name + ".o", d.model_width, d.model_width);
    w.heads = d.heads;
    return w;
}

MixWeights seeded_mix(std::uint64_t seed, const std::string& name, const ToyDims& d) {
    return {seeded_weight(seed, name + ".w1", d.model_width, d.model_width),
            seeded_weight(seed, name + ".b1", 1, d.model_width),
            seeded_weight(seed, name + ".w2", d.model_width, d.model_width),
            seeded_weight(seed, name + ".b2", 1, d.model_width)};
}

void put_attention(WeightArchive& a, const std::string& name, const AttentionWeights& w) {
    a[name + ".q"] = w.query;
    a[name + ".k"] = w.key;
    a[name + ".v"] = w.value;
    a[name + ".o"] = w.output;
}

void put_mix(WeightArchive& a, const std::string& name, const MixWeights& m) {
    a[name + ".w1"] = m.w1;
    a[name + ".b1"] = m.b1;
    a[name + ".w2"] = m.w2;
    a[name + ".b2"] = m.b2;
}

const ad::Matrix& get(const WeightArchive& a, const std::string& name, std::size_t rows, std::size_t cols) {
    auto it = a.find(name);
    VGEDIT_CHECK(it != a.end(), ErrorKind::validation, "weights archive is missing '" + name + "'");
    VGEDIT_CHECK(it->second.rows == rows && it->second.cols == cols, ErrorKind::validation,
                 "weights '" + name + "' have shape " + std::to_string(it->second.rows) + "x" +
                     std::to_string(it->second.cols) + ", expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
    return it->second;
}

AttentionWeights get_attention(const WeightArchive& a, const std::string& name, std::size_t q_in, std::size_t kv_in,
                               const ToyDims& d) {
    return {get(a, name + ".q", q_in, d.model_width), get(a, name + ".k", kv_in, d.model_width),
            get(a, name + ".v", kv_in, d.model_width), get(a, name + ".o", d.model_width, d.model_width), d.heads};
}

MixWeights get_mix(const WeightArchive& a, const std::string& name, const ToyDims& d) {
    return {get(a, name + ".w1", d.model_width, d.model_width), get(a, name + ".b1", 1, d.model_width),
            get(a, name + ".w2", d.model_width, d.model_width), get(a, name + ".b2", 1, d.model_width)};
}

std::string level_name(int l) { return "level" + std::to_string(l); }

}  // namespace

ToyDenoiserWeights ToyDenoiserWeights::seeded(std::uint64_t seed, ToyDims d, GateParams gate) {
    ToyDenoiserWeights w;
    w.dims = d;
    w.in_w = seeded_weight(seed, "in_w", d.latent_channels, d.model_width, input_range);
    w.in_b = seeded_weight(seed, "in_b", 1, d.model_width);
    w.time_w = seeded_weight(seed, "time_w", d.model_width, d.model_width);
    for (int l = 0; l < 2; ++l) {
        const std::string n = level_name(l);
        w.levels[l].self_attention = seeded_attention(seed, n + ".self", d.model_width, d.model_width, d);
        w.levels[l].gated_attention = seeded_attention(seed, n + ".gated", d.model_width, d.model_width, d);
        w.levels[l].gate = gate;
        w.levels[l].cross_attention = seeded_attention(seed, n + ".cross", d.model_width, d.context_width, d);
        w.levels[l].mix = seeded_mix(seed, n + ".mix", d);
    }
    w.middle = seeded_mix(seed, "middle", d);
    w.out_w = seeded_weight(seed, "out_w", d.model_width, d.latent_channels);
    w.out_b = seeded_weight(seed, "out_b", 1, d.latent_channels);
    return w;
}

ToyDenoiserWeights ToyDenoiserWeights::zeros(ToyDims d) {
    ToyDenoiserWeights w = seeded(0, d);
    WeightArchive a = w.to_archive();
    for (auto& [name, m] : a)
        std::fill(m.data.begin(), m.data.end(), 0.0);
    ToyDenoiserWeights z = from_archive(a, d);
    return z;
}

WeightArchive ToyDenoiserWeights::to_archive() const {
    WeightArchive a;
    a["in_w"] = in_w;
    a["in_b"] = in_b;
    a["time_w"] = time_w;
    for (int l = 0; l < 2; ++l) {
        const std::string n = level_name(l);
        put_attention(a, n + ".self", levels[l].self_attention);
        put_attention(a, n + ".gated", levels[l].gated_attention);
        a[n + ".gate"] = ad::Matrix(1, 2, {levels[l].gate.gamma, levels[l].gate.scale});
        put_attention(a, n + ".cross", levels[l].cross_attention);
        put_mix(a, n + ".mix", levels[l].mix);
    }
    put_mix(a, "middle", middle);
    a["out_w"] = out_w;
    a["out_b"] = out_b;
    return a;
}

ToyDenoiserWeights ToyDenoiserWeights::from_archive(const WeightArchive& a, ToyDims d) {
    ToyDenoiserWeights w;
    w.dims = d;
    w.in_w = get(a, "in_w", d.latent_channels, d.model_width);
    w.in_b = get(a, "in_b", 1, d.model_width);
    w.time_w = get(a, "time_w", d.model_width, d.model_width);
    for (int l = 0; l < 2; ++l) {
        const std::string n = level_name(l);
        w.levels[l].self_attention = get_attention(a, n + ".self", d.model_width, d.model_width, d);
        w.levels[l].gated_attention = get_attention(a, n + ".gated", d.model_width, d.model_width, d);
        const ad::Matrix& g = get(a, n + ".gate", 1, 2);
        w.levels[l].gate = {g.data[0], g.data[1]};
        w.levels[l].cross_attention = get_attention(a, n + ".cross", d.model_width, d.context_width, d);
        w.levels[l].mix = get_mix(a, n + ".mix", d);
    }
    w.middle = get_mix(a, "middle", d);
    w.out_w = get(a, "out_w", d.model_width, d.latent_channels);
    w.out_b = get(a, "out_b", 1, d.latent_channels);
    return w;
}

ToyControlWeights ToyControlWeights::seeded(std::uint64_t seed, std::size_t condition_channels, ToyDims d) {
    ToyControlWeights w;
    w.dims = d;
    w.condition_channels = condition_channels;
    w.in_w = seeded_weight(seed, "control.in_w", d.latent_channels, d.model_width, input_range);
    w.in_b = seeded_weight(seed, "control.in_b", 1, d.model_width);
    w.cond_w = seeded_weight(seed, "control.cond_w", condition_channels, d.model_width);
    w.time_w = seeded_weight(seed, "control.time_w", d.model_width, d.model_width);
    for (int l = 0; l < 2; ++l) {
        const std::string n = "control." + level_name(l);
        w.levels[l].self_attention = seeded_attention(seed, n + ".self", d.model_width, d.model_width, d);
        w.levels[l].cross_attention = seeded_attention(seed, n + ".cross", d.model_width, d.context_width, d);
        w.levels[l].mix = seeded_mix(seed, n + ".mix", d);
    }
    w.middle = seeded_mix(seed, "control.middle", d);
    for (int s = 0; s < 3; ++s)
        w.site_w[s] = seeded_weight(seed, "control.site" + std::to_string(s), d.model_width, d.model_width);
    return w;
}

WeightArchive ToyControlWeights::to_archive() const {
    WeightArchive a;
    a["control.in_w"] = in_w;
    a["control.in_b"] = in_b;
    a["control.cond_w"] = cond_w;
    a["control.time_w"] = time_w;
    for (int l = 0; l < 2; ++l) {
        const std::string n = "control." + level_name(l);
        put_attention(a, n + ".self", levels[l].self_attention);
        put_attention(a, n + ".cross", levels[l].cross_attention);
        put_mix(a, n + ".mix", levels[l].mix);
    }
    put_mix(a, "control.middle", middle);
    for (int s = 0; s < 3; ++s)
        a["control.site" + std::to_string(s)] = site_w[s];
    return a;
}

ToyControlWeights ToyControlWeights::from_archive(const WeightArchive& a, ToyDims d) {
    ToyControlWeights w;
    w.dims = d;
    auto it = a.find("control.cond_w");
    VGEDIT_CHECK(it != a.end(), ErrorKind::validation, "weights archive is missing 'control.cond_w'");
    w.condition_channels = it->second.rows;
    w.in_w = get(a, "control.in_w", d.latent_channels, d.model_width);
    w.in_b = get(a, "control.in_b", 1, d.model_width);
    w.cond_w = get(a, "control.cond_w", w.condition_channels, d.model_width);
    w.time_w = get(a, "control.time_w", d.model_width, d.model_width);
    for (int l = 0; l < 2; ++l) {
        const std::string n = "control." + level_name(l);
        w.levels[l].self_attention = get_attention(a, n + ".self", d.model_width, d.model_width, d);
        w.levels[l].cross_attention = get_attention(a, n + ".cross", d.model_width, d.context_width, d);
        w.levels[l].mix = get_mix(a, n + ".mix", d);
    }
    w.middle = get_mix(a, "control.middle", d);
    for (int s = 0; s < 3; ++s)
        w.site_w[s] = get(a, "control.site" + std::to_string(s), d.model_width, d.model_width);
    return w;
}

GroundingMLP seeded_grounding_mlp(std::uint64_t seed, std::size_t text_width, int num_freqs, ToyDims d) {
    VGEDIT_CHECK(num_freqs >= 1, ErrorKind::invalid_argument, "grounding MLP needs at least one Fourier frequency");
    const std::size_t in = text_width + 8 * static_cast<std::size_t>(num_freqs);
    const std::size_t hidden = 2 * d.model_width;
    return {seeded_matrix(seed, "grounding.w1", in, hidden), seeded_matrix(seed, "grounding.b1", 1, hidden),
            seeded_matrix(seed, "grounding.w2", hidden, d.model_width),
            seeded_matrix(seed, "grounding.b2", 1, d.model_width)};
}

// ---------------------------------------------------------------------------
// Shared graph pieces

namespace {

struct BoundMix {
    ad::Var w1, b1, w2, b2;
};

BoundMix bind_mix(ad::Tape& t, const MixWeights& m) {
    return {t.constant(m.w1), t.constant(m.b1), t.constant(m.w2), t.constant(m.b2)};
}

ad::Var apply_mix(ad::Var x, const BoundMix& m) {
    const ad::Var hidden = ad::silu(ad::add_row(ad::matmul(x, m.w1), m.b1));
    return x + ad::add_row(ad::matmul(hidden, m.w2), m.b2);
}

// 2x2 average pooling of an h x w token grid, as a [(h/2)(w/2) x hw] matrix.
ad::Matrix pool_matrix(std::size_t h, std::size_t w) {
    ad::Matrix p((h / 2) * (w / 2), h * w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            p((y / 2) * (w / 2) + x / 2, y * w + x) = 0.25;
    return p;
}

// Nearest-neighbour upsampling of an (h/2) x (w/2) grid back to h x w.
ad::Matrix upsample_matrix(std::size_t h, std::size_t w) {
    ad::Matrix u(h * w, (h / 2) * (w / 2));
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            u(y * w + x, (y / 2) * (w / 2) + x / 2) = 1.0;
    return u;
}

ad::Var per_frame(ad::Var tokens, std::size_t frames, ad::Var op) {
    const std::size_t rows = op.cols();
    if (frames == 1)
        return ad::matmul(op, tokens);
    std::vector<ad::Var> parts;
    parts.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f)
        parts.push_back(ad::matmul(op, ad::slice_rows(tokens, f * rows, rows)));
    return ad::concat_rows(parts);
}

ad::Var input_tokens(ad::Tape& tape, const Tensor& latents, int timestep, const ad::Matrix& in_w,
                     const ad::Matrix& in_b, const ad::Matrix& time_w) {
    const std::size_t rows = latents.dim(0) * latents.dim(1) * latents.dim(2);
    const ad::Var x = ad::matmul(tape.constant(to_matrix(latents, rows)), tape.constant(in_w));
    const std::size_t d = in_w.cols;
    const ad::Var temb = ad::matmul(tape.constant(ad::Matrix(1, d, timestep_embedding(timestep, d))),
                                    tape.constant(time_w));
    return ad::add_row(ad::add_row(x, tape.constant(in_b)), temb);
}

void check_latents(const Tensor& latents, const ToyDims& d) {
    VGEDIT_CHECK(latents.rank() == 4 && latents.dim(3) == d.latent_channels, ErrorKind::invalid_argument,
                 "toy model expects latents [N, h, w, " + std::to_string(d.latent_channels) + "], got " +
                     latents.shape_string());
    VGEDIT_CHECK(latents.dim(1) % 2 == 0 && latents.dim(2) % 2 == 0 && latents.dim(1) > 0 && latents.dim(2) > 0,
                 ErrorKind::invalid_argument, "toy model needs even latent height and width");
}

void check_contexts(const Contexts& c, std::size_t frames, const ToyDims& d) {
    VGEDIT_CHECK(c.embeddings.rank() == 3 && c.embeddings.dim(0) == frames && c.embeddings.dim(2) == d.context_width,
                 ErrorKind::invalid_argument,
                 "contexts must be [" + std::to_string(frames) + ", L, " + std::to_string(d.context_width) + "], got " +
                     c.embeddings.shape_string());
}

ad::Var residual_var(ad::Tape& tape, const Tensor& r, const std::vector<std::size_t>& shape) {
    VGEDIT_CHECK(r.shape() == shape, ErrorKind::invalid_argument,
                 "control residual shape " + r.shape_string() + " does not match site " + shape_string(shape));
    return tape.constant(to_matrix(r, shape[0] * shape[1] * shape[2]));
}

}  // namespace

// ---------------------------------------------------------------------------
// Denoiser

ToyDenoiser::ToyDenoiser(ToyDenoiserWeights weights) : m_weights(std::move(weights)) {}

std::vector<std::vector<std::size_t>> ToyDenoiser::residual_shapes(std::size_t frames, std::size_t h,
                                                                   std::size_t w) const {
    const std::size_t d = m_weights.dims.model_width;
    return {{frames, h, w, d}, {frames, h / 2, w / 2, d}, {frames, h / 2, w / 2, d}};
}

ad::Var ToyDenoiser::forward(ad::Tape& tape, const Tensor& latents, int timestep, ad::Var contexts, ContextMode mode,
                             const Tensor* grounding, const ControlResiduals* residuals) const {
    const ToyDims& d = m_weights.dims;
    check_latents(latents, d);
    const std::size_t n = latents.dim(0), h = latents.dim(1), w = latents.dim(2);

    std::size_t entities = 0;
    ad::Var ground;
    if (grounding != nullptr && grounding->size() > 0) {
        VGEDIT_CHECK(grounding->rank() == 3 && grounding->dim(0) == n && grounding->dim(2) == d.model_width,
                     ErrorKind::invalid_argument,
                     "grounding tokens must be [N, M, " + std::to_string(d.model_width) + "], got " +
                         grounding->shape_string());
        entities = grounding->dim(1);
        ground = tape.constant(to_matrix(*grounding, n * entities));
    }
    std::vector<ad::Var> res;
    if (residuals != nullptr) {
        const auto shapes = residual_shapes(n, h, w);
        VGEDIT_CHECK(residuals->levels.size() == shapes.size(), ErrorKind::invalid_argument,
                     "expected " + std::to_string(shapes.size()) + " control residual levels");
        for (std::size_t s = 0; s < shapes.size(); ++s)
            res.push_back(residual_var(tape, residuals->levels[s], shapes[s]));
    }

    auto level = [&](ad::Var x, const DenoiserLevel& lw) {
        x = x + graph::spatial_temporal_self_attention(x, graph::bind(tape, lw.self_attention));
        x = graph::cross_frame_gated_attention(x, n, ground, entities, lw.gate, graph::bind(tape, lw.gated_attention));
        x = x + graph::modulated_cross_attention(x, n, contexts, mode, graph::bind(tape, lw.cross_attention));
        return apply_mix(x, bind_mix(tape, lw.mix));
    };

    ad::Var h1 = level(input_tokens(tape, latents, timestep, m_weights.in_w, m_weights.in_b, m_weights.time_w),
                       m_weights.levels[0]);
    if (!res.empty())
        h1 = h1 + res[0];
    ad::Var h2 = level(per_frame(h1, n, tape.constant(pool_matrix(h, w))), m_weights.levels[1]);
    if (!res.empty())
        h2 = h2 + res[1];
    ad::Var mid = apply_mix(h2, bind_mix(tape, m_weights.middle));
    if (!res.empty())
        mid = mid + res[2];
    const ad::Var up = per_frame(mid, n, tape.constant(upsample_matrix(h, w))) + h1;
    return ad::add_row(ad::matmul(up, tape.constant(m_weights.out_w)), tape.constant(m_weights.out_b));
}

Tensor ToyDenoiser::predict(const DenoiseRequest& request) const {
    check_latents(request.latents, m_weights.dims);
    check_contexts(request.contexts, request.latents.dim(0), m_weights.dims);
    ad::Tape tape;
    const Tensor& c = request.contexts.embeddings;
    const ad::Var ctx = tape.constant(to_matrix(c, c.dim(0) * c.dim(1)));
    const ad::Var out = forward(tape, request.latents, request.timestep, ctx, request.contexts.mode, request.grounding,
                                request.residuals);
    return to_tensor(out.value(), request.latents.shape());
}

std::pair<Tensor, Tensor> ToyDenoiser::predict_with_context_vjp(const DenoiseRequest& request,
                                                                const UpstreamFn& upstream) const {
    check_latents(request.latents, m_weights.dims);
    check_contexts(request.contexts, request.latents.dim(0), m_weights.dims);
    ad::Tape tape;
    const Tensor& c = request.contexts.embeddings;
    const ad::Var ctx = tape.variable(to_matrix(c, c.dim(0) * c.dim(1)));
    const ad::Var out = forward(tape, request.latents, request.timestep, ctx, request.contexts.mode, request.grounding,
                                request.residuals);
    Tensor prediction = to_tensor(out.value(), request.latents.shape());
    const Tensor up = upstream(prediction);
    VGEDIT_CHECK(up.shape() == prediction.shape(), ErrorKind::invalid_argument,
                 "upstream gradient shape does not match the prediction");
    tape.backward(out, to_matrix(up, out.rows()));
    const ad::Matrix& g = ctx.grad();
    Tensor grad(c.shape());
    if (!g.empty())
        std::copy(g.data.begin(), g.data.end(), grad.values().begin());
    return {std::move(prediction), std::move(grad)};
}

// ---------------------------------------------------------------------------
// Control branch

ToyControlBranch::ToyControlBranch(ToyControlWeights weights) : m_weights(std::move(weights)) {}

ControlResiduals ToyControlBranch::residuals(const Tensor& latents, int timestep, const Contexts& contexts,
                                             const Tensor& conditions) const {
    const ToyDims& d = m_weights.dims;
    check_latents(latents, d);
    const std::size_t n = latents.dim(0), h = latents.dim(1), w = latents.dim(2);
    check_contexts(contexts, n, d);
    VGEDIT_CHECK(conditions.rank() == 4 && conditions.dim(0) == n && conditions.dim(1) == h && conditions.dim(2) == w &&
                     conditions.dim(3) == m_weights.condition_channels,
                 ErrorKind::invalid_argument,
                 "control conditions must be [N, h, w, " + std::to_string(m_weights.condition_channels) + "], got " +
                     conditions.shape_string());

    ad::Tape tape;
    const Tensor& c = contexts.embeddings;
    const ad::Var ctx = tape.constant(to_matrix(c, c.dim(0) * c.dim(1)));
    auto level = [&](ad::Var x, const ControlLevel& lw) {
        x = x + graph::spatial_temporal_self_attention(x, graph::bind(tape, lw.self_attention));
        x = x + graph::modulated_cross_attention(x, n, ctx, contexts.mode, graph::bind(tape, lw.cross_attention));
        return apply_mix(x, bind_mix(tape, lw.mix));
    };

    ad::Var x = input_tokens(tape, latents, timestep, m_weights.in_w, m_weights.in_b, m_weights.time_w);
    x = x + ad::matmul(tape.constant(to_matrix(conditions, n * h * w)), tape.constant(m_weights.cond_w));
    const ad::Var h1 = level(x, m_weights.levels[0]);
    const ad::Var h2 = level(per_frame(h1, n, tape.constant(pool_matrix(h, w))), m_weights.levels[1]);
    const ad::Var mid = apply_mix(h2, bind_mix(tape, m_weights.middle));

    const std::size_t dm = d.model_width;
    ControlResiduals r;
    r.levels.push_back(to_tensor(ad::matmul(h1, tape.constant(m_weights.site_w[0])).value(), {n, h, w, dm}));
    r.levels.push_back(to_tensor(ad::matmul(h2, tape.constant(m_weights.site_w[1])).value(), {n, h / 2, w / 2, dm}));
    r.levels.push_back(to_tensor(ad::matmul(mid, tape.constant(m_weights.site_w[2])).value(), {n, h / 2, w / 2, dm}));
    return r;
}

}  // namespace vgedit
