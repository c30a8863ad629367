// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/binary_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "vgedit/error.hpp"

namespace vgedit {

namespace fs = std::filesystem;

namespace {

static_assert(std::numeric_limits<float>::is_iec559, "32-bit IEEE floats required");

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const fs::path& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    VGEDIT_CHECK(in.gcount() == 4, ErrorKind::io, "truncated file " + path.string());
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

double get_f32(std::istream& in, const fs::path& path) {
    return static_cast<double>(std::bit_cast<float>(get_u32(in, path)));
}

std::uint32_t checked_u32(std::size_t v) {
    VGEDIT_CHECK(v <= std::numeric_limits<std::uint32_t>::max(), ErrorKind::invalid_argument,
                 "dimension too large for the binary layout");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_tensor_file(const fs::path& path, const Tensor& tensor) {
    VGEDIT_CHECK(tensor.rank() == 4, ErrorKind::invalid_argument,
                 "tensor files hold rank-4 arrays, got " + tensor.shape_string());
    std::ofstream out(path, std::ios::binary);
    VGEDIT_CHECK(out.good(), ErrorKind::io, "cannot write " + path.string());
    for (std::size_t d : tensor.shape())
        put_u32(out, checked_u32(d));
    for (double v : tensor.values())
        put_f32(out, v);
    VGEDIT_CHECK(out.good(), ErrorKind::io, "failed writing " + path.string());
}

Tensor read_tensor_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    VGEDIT_CHECK(in.good(), ErrorKind::io, "cannot open " + path.string());
    std::vector<std::size_t> shape(4);
    std::size_t count = 1;
    for (auto& d : shape) {
        d = get_u32(in, path);
        count *= d;
    }
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    VGEDIT_CHECK(bytes == 16 + 4 * count, ErrorKind::io,
                 "size of " + path.string() + " does not match its header " + shape_string(shape));
    in.seekg(16);
    std::vector<double> data(count);
    for (double& v : data)
        v = get_f32(in, path);
    return Tensor(std::move(shape), std::move(data));
}

void write_weight_archive(const fs::path& path, const WeightArchive& weights) {
    std::ofstream out(path, std::ios::binary);
    VGEDIT_CHECK(out.good(), ErrorKind::io, "cannot write " + path.string());
    out.write("VGWT", 4);
    put_u32(out, 1);
    put_u32(out, checked_u32(weights.size()));
    for (const auto& [name, m] : weights) {
        put_u32(out, checked_u32(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, checked_u32(m.rows));
        put_u32(out, checked_u32(m.cols));
        for (double v : m.data)
            put_f32(out, v);
    }
    VGEDIT_CHECK(out.good(), ErrorKind::io, "failed writing " + path.string());
}

WeightArchive read_weight_archive(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    VGEDIT_CHECK(in.good(), ErrorKind::io, "cannot open weights " + path.string());
    char magic[4];
    in.read(magic, 4);
    VGEDIT_CHECK(in.gcount() == 4 && std::memcmp(magic, "VGWT", 4) == 0, ErrorKind::io,
                 "not a weights archive: " + path.string());
    VGEDIT_CHECK(get_u32(in, path) == 1, ErrorKind::io, "unsupported weights archive version in " + path.string());
    const std::uint32_t count = get_u32(in, path);
    WeightArchive weights;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t len = get_u32(in, path);
        VGEDIT_CHECK(len < 4096, ErrorKind::io, "corrupt weights archive " + path.string());
        std::string name(len, '\0');
        in.read(name.data(), len);
        VGEDIT_CHECK(in.gcount() == static_cast<std::streamsize>(len), ErrorKind::io, "truncated file " + path.string());
        const std::uint32_t rows = get_u32(in, path);
        const std::uint32_t cols = get_u32(in, path);
        ad::Matrix m(rows, cols);
        for (double& v : m.data)
            v = get_f32(in, path);
        weights.emplace(std::move(name), std::move(m));
    }
    return weights;
}

}  // namespace vgedit
