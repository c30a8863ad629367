// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "vgedit/binary_io.hpp"
#include "vgedit/error.hpp"

namespace vgedit {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string lower_ext(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

Tensor read_png(const fs::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    VGEDIT_CHECK(fp != nullptr, ErrorKind::io, "cannot open image " + path.string());
    png_byte sig[8];
    VGEDIT_CHECK(std::fread(sig, 1, 8, fp.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0, ErrorKind::io,
                 "not a PNG file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    VGEDIT_CHECK(png && info, ErrorKind::runtime, "libpng initialisation failed");
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};

    std::vector<png_byte> pixels;
    png_uint_32 w = 0, h = 0;
    if (setjmp(png_jmpbuf(png)))
        throw_error(ErrorKind::io, "corrupt PNG file: " + path.string());

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    w = png_get_image_width(png, info);
    h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth == 16)
        png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png), png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    VGEDIT_CHECK(rowbytes == static_cast<std::size_t>(w) * 3, ErrorKind::io, "unsupported PNG layout: " + path.string());
    pixels.resize(rowbytes * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = pixels.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    Tensor img({h, w, 3});
    for (std::size_t i = 0; i < pixels.size(); ++i)
        img[i] = pixels[i] / 255.0;
    return img;
}

void write_png(const fs::path& path, const std::vector<unsigned char>& rgb, std::size_t h, std::size_t w) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    VGEDIT_CHECK(fp != nullptr, ErrorKind::io, "cannot write image " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    VGEDIT_CHECK(png && info, ErrorKind::runtime, "libpng initialisation failed");
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};
    if (setjmp(png_jmpbuf(png)))
        throw_error(ErrorKind::io, "failed writing PNG " + path.string());
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < h; ++y)
        png_write_row(png, const_cast<png_bytep>(rgb.data() + y * w * 3));
    png_write_end(png, nullptr);
}

// Netpbm header token, skipping whitespace and comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    char c;
    while (in.get(c)) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty())
                break;
            continue;
        }
        tok.push_back(c);
    }
    return tok;
}

Tensor read_pnm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    VGEDIT_CHECK(in.good(), ErrorKind::io, "cannot open image " + path.string());
    const std::string magic = pnm_token(in);
    VGEDIT_CHECK(magic == "P6" || magic == "P5", ErrorKind::io, "unsupported netpbm type in " + path.string());
    std::size_t w = 0, h = 0, maxval = 0;
    try {
        w = std::stoul(pnm_token(in));
        h = std::stoul(pnm_token(in));
        maxval = std::stoul(pnm_token(in));
    } catch (const std::exception&) {
        throw_error(ErrorKind::io, "malformed netpbm header in " + path.string());
    }
    VGEDIT_CHECK(maxval > 0 && maxval < 256, ErrorKind::io, "only 8-bit netpbm images are supported: " + path.string());
    const std::size_t channels = magic == "P6" ? 3 : 1;
    std::vector<unsigned char> raw(w * h * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    VGEDIT_CHECK(static_cast<std::size_t>(in.gcount()) == raw.size(), ErrorKind::io, "truncated image " + path.string());
    Tensor img({h, w, 3});
    for (std::size_t p = 0; p < w * h; ++p)
        for (std::size_t c = 0; c < 3; ++c)
            img[p * 3 + c] = raw[p * channels + (channels == 3 ? c : 0)] / static_cast<double>(maxval);
    return img;
}

bool is_image_file(const fs::path& p) {
    const std::string ext = lower_ext(p);
    return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

// Last run of digits in the stem, or nullopt.
std::optional<unsigned long long> frame_number(const fs::path& p) {
    const std::string stem = p.stem().string();
    auto end = stem.find_last_of("0123456789");
    if (end == std::string::npos)
        return std::nullopt;
    auto begin = end;
    while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1])))
        --begin;
    return std::stoull(stem.substr(begin, end - begin + 1));
}

}  // namespace

Tensor read_image(const fs::path& path) {
    VGEDIT_CHECK(fs::exists(path), ErrorKind::io, "missing image " + path.string());
    return lower_ext(path) == ".png" ? read_png(path) : read_pnm(path);
}

void write_image(const fs::path& path, const Tensor& image) {
    VGEDIT_CHECK((image.rank() == 3 && image.dim(2) == 3) || image.rank() == 2, ErrorKind::invalid_argument,
                 "write_image expects [H, W, 3] or [H, W], got " + image.shape_string());
    const std::size_t h = image.dim(0), w = image.dim(1);
    const std::size_t ch = image.rank() == 3 ? 3 : 1;
    std::vector<unsigned char> rgb(h * w * 3);
    for (std::size_t p = 0; p < h * w; ++p)
        for (std::size_t c = 0; c < 3; ++c) {
            const double v = std::clamp(image[p * ch + (ch == 3 ? c : 0)], 0.0, 1.0);
            rgb[p * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
    if (lower_ext(path) == ".png") {
        write_png(path, rgb, h, w);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    VGEDIT_CHECK(out.good(), ErrorKind::io, "cannot write image " + path.string());
    out << "P6\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    VGEDIT_CHECK(out.good(), ErrorKind::io, "failed writing image " + path.string());
}

FrameSequence load_frames(const fs::path& path) {
    VGEDIT_CHECK(fs::exists(path), ErrorKind::io, "frames path does not exist: " + path.string());
    if (fs::is_regular_file(path)) {
        VGEDIT_CHECK(lower_ext(path) == ".vgt", ErrorKind::io,
                     "a single-file clip must be a .vgt tensor container: " + path.string());
        Tensor t = read_tensor_file(path);
        VGEDIT_CHECK(t.rank() == 4 && t.dim(0) > 0, ErrorKind::validation, "zero frames in " + path.string());
        return FrameSequence(std::move(t));
    }

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
        if (entry.is_regular_file() && is_image_file(entry.path()))
            files.push_back(entry.path());
    VGEDIT_CHECK(!files.empty(), ErrorKind::validation, "zero frames: no images in " + path.string());
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        const auto na = frame_number(a), nb = frame_number(b);
        if (na && nb && *na != *nb)
            return *na < *nb;
        if (na.has_value() != nb.has_value())
            return na.has_value();
        return a.filename() < b.filename();
    });

    std::vector<Tensor> frames;
    frames.reserve(files.size());
    for (const auto& f : files) {
        frames.push_back(read_image(f));
        VGEDIT_CHECK(frames.back().shape() == frames.front().shape(), ErrorKind::validation,
                     "inconsistent resolutions: " + f.filename().string() + " is " + frames.back().shape_string() +
                         " but " + files.front().filename().string() + " is " + frames.front().shape_string());
    }
    return FrameSequence(stack(frames));
}

std::vector<fs::path> save_frames(const fs::path& dir, const FrameSequence& frames) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    VGEDIT_CHECK(!ec, ErrorKind::io, "cannot create output directory " + dir.string());
    std::vector<fs::path> written;
    for (std::size_t i = 0; i < frames.count(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04zu.png", i);
        written.push_back(dir / name);
        write_image(written.back(), frames.frame(i));
    }
    return written;
}

}  // namespace vgedit
