// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/vgedit.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "vgedit/binary_io.hpp"
#include "vgedit/config.hpp"
#include "vgedit/error.hpp"
#include "vgedit/image_io.hpp"
#include "vgedit/metrics.hpp"
#include "vgedit/pipeline.hpp"
#include "vgedit/rng.hpp"

struct vg_frames {
    vgedit::FrameSequence value;
};
struct vg_grounding {
    vgedit::VideoGrounding value;
};
struct vg_tensor {
    vgedit::Tensor value;
};
struct vg_pipeline {
    std::unique_ptr<vgedit::Pipeline> value;
};

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

thread_local std::string g_last_error;
thread_local std::string g_last_stage;

vg_status status_of(vgedit::ErrorKind kind) {
    switch (kind) {
    case vgedit::ErrorKind::invalid_argument:
        return VG_ERR_INVALID_ARGUMENT;
    case vgedit::ErrorKind::io:
        return VG_ERR_IO;
    case vgedit::ErrorKind::validation:
        return VG_ERR_VALIDATION;
    case vgedit::ErrorKind::runtime:
        return VG_ERR_RUNTIME;
    }
    return VG_ERR_RUNTIME;
}

template <class F>
vg_status guarded(F&& f) {
    g_last_error.clear();
    g_last_stage.clear();
    try {
        f();
        return VG_OK;
    } catch (const vgedit::StageError& e) {
        g_last_error = e.what();
        g_last_stage = e.stage();
        return status_of(e.kind());
    } catch (const vgedit::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const json::exception& e) {
        g_last_error = e.what();
        return VG_ERR_VALIDATION;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return VG_ERR_RUNTIME;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return VG_ERR_RUNTIME;
    }
}

void require(const void* p, const char* name) {
    VGEDIT_CHECK(p != nullptr, vgedit::ErrorKind::invalid_argument, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr)
        throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    VGEDIT_CHECK(in.good(), vgedit::ErrorKind::io, "cannot read '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

vgedit::EditSpec parse_edit_spec(const char* text) {
    vgedit::EditSpec spec;
    if (text == nullptr || *text == '\0')
        return spec;
    const json j = json::parse(text);
    VGEDIT_CHECK(j.is_object(), vgedit::ErrorKind::validation, "edit spec must be a JSON object");
    for (const auto& [key, value] : j.items())
        VGEDIT_CHECK(key == "source_prompt" || key == "target_prompt" || key == "phrase_map",
                     vgedit::ErrorKind::validation, "unknown edit spec key '" + key + "'");
    spec.source_prompt = j.value("source_prompt", "");
    spec.target_prompt = j.value("target_prompt", "");
    if (auto it = j.find("phrase_map"); it != j.end()) {
        if (it->is_object()) {
            for (const auto& [from, to] : it->items())
                spec.phrase_map.emplace_back(from, to.get<std::string>());
        } else {
            VGEDIT_CHECK(it->is_array(), vgedit::ErrorKind::validation, "phrase_map must be an array or object");
            for (const auto& pair : *it) {
                VGEDIT_CHECK(pair.is_array() && pair.size() == 2, vgedit::ErrorKind::validation,
                             "phrase_map entries must be [from, to] pairs");
                spec.phrase_map.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
            }
        }
    }
    return spec;
}

}  // namespace

extern "C" {

const char* vg_version(void) { return "0.1.0"; }

const char* vg_last_error(void) { return g_last_error.c_str(); }

const char* vg_last_error_stage(void) { return g_last_stage.c_str(); }

void vg_string_free(char* s) { std::free(s); }

vg_status vg_config_resolve(const char* base_json, const char* override_json, char** resolved_json) {
    return guarded([&] {
        require(resolved_json, "resolved_json");
        const std::string merged = vgedit::merge_config_json(base_json ? base_json : "", override_json ? override_json : "");
        *resolved_json = dup_string(vgedit::config_to_json(vgedit::parse_config(merged)));
    });
}

vg_status vg_path_digest(const char* path, uint64_t* digest) {
    return guarded([&] {
        require(path, "path");
        require(digest, "digest");
        const fs::path p(path);
        VGEDIT_CHECK(fs::exists(p), vgedit::ErrorKind::io, "'" + p.string() + "' does not exist");
        std::uint64_t h = 0xcbf29ce484222325ULL;
        if (fs::is_directory(p)) {
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.is_regular_file())
                    files.push_back(entry.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                h = vgedit::fnv1a64(f.filename().string(), h);
                h = vgedit::fnv1a64(read_text(f), h);
            }
        } else {
            h = vgedit::fnv1a64(read_text(p), h);
        }
        *digest = h;
    });
}

vg_status vg_frames_load(const char* path, vg_frames** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new vg_frames{vgedit::load_frames(path)};
    });
}

vg_status vg_frames_save(const vg_frames* frames, const char* dir) {
    return guarded([&] {
        require(frames, "frames");
        require(dir, "dir");
        vgedit::save_frames(dir, frames->value);
    });
}

vg_status vg_frames_shape(const vg_frames* frames, size_t* n, size_t* h, size_t* w) {
    return guarded([&] {
        require(frames, "frames");
        if (n)
            *n = frames->value.count();
        if (h)
            *h = frames->value.height();
        if (w)
            *w = frames->value.width();
    });
}

void vg_frames_free(vg_frames* frames) { delete frames; }

vg_status vg_grounding_load(const char* path, vg_grounding** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        const std::string text = read_text(path);
        try {
            *out = new vg_grounding{vgedit::parse_groundings(text)};
        } catch (const vgedit::Error& e) {
            throw vgedit::Error(e.kind(), std::string(path) + ": " + e.what());
        }
    });
}

vg_status vg_grounding_parse(const char* text, vg_grounding** out) {
    return guarded([&] {
        require(text, "json");
        require(out, "out");
        *out = new vg_grounding{vgedit::parse_groundings(text)};
    });
}

vg_status vg_grounding_frame_count(const vg_grounding* grounding, size_t* n) {
    return guarded([&] {
        require(grounding, "grounding");
        require(n, "n");
        *n = grounding->value.frame_count();
    });
}

void vg_grounding_free(vg_grounding* grounding) { delete grounding; }

vg_status vg_tensor_load(const char* path, vg_tensor** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new vg_tensor{vgedit::read_tensor_file(path)};
    });
}

vg_status vg_tensor_save(const vg_tensor* tensor, const char* path) {
    return guarded([&] {
        require(tensor, "tensor");
        require(path, "path");
        vgedit::write_tensor_file(path, tensor->value);
    });
}

vg_status vg_tensor_shape(const vg_tensor* tensor, size_t dims[4]) {
    return guarded([&] {
        require(tensor, "tensor");
        require(dims, "dims");
        for (std::size_t i = 0; i < 4; ++i)
            dims[i] = i < tensor->value.rank() ? tensor->value.dim(i) : 1;
    });
}

void vg_tensor_free(vg_tensor* tensor) { delete tensor; }

vg_status vg_pipeline_create(const char* config_json, vg_pipeline** out) {
    return guarded([&] {
        require(out, "out");
        auto config = vgedit::parse_config(config_json ? config_json : "{}");
        *out = new vg_pipeline{std::make_unique<vgedit::Pipeline>(std::move(config))};
    });
}

void vg_pipeline_free(vg_pipeline* pipeline) { delete pipeline; }

vg_status vg_invert(const vg_pipeline* pipeline, const vg_frames* frames, const char* source_prompt,
                    vg_tensor** noise, vg_tensor** nulls, char** report_json) {
    return guarded([&] {
        require(pipeline, "pipeline");
        require(frames, "frames");
        const auto r = pipeline->value->invert(frames->value, source_prompt ? source_prompt : "");
        json report = json::array();
        for (std::size_t i = 0; i < r.null_opt.size(); ++i) {
            const auto& n = r.null_opt[i];
            report.push_back({{"frame", i},
                              {"initial_loss", n.initial_loss},
                              {"final_loss", n.final_loss},
                              {"diverged_steps", std::count(n.diverged.begin(), n.diverged.end(), true)}});
        }
        std::unique_ptr<vg_tensor> z(noise ? new vg_tensor{r.noise} : nullptr);
        std::unique_ptr<vg_tensor> e(nulls ? new vg_tensor{r.nulls} : nullptr);
        if (report_json)
            *report_json = dup_string(json{{"frames", report}}.dump(2));
        if (noise)
            *noise = z.release();
        if (nulls)
            *nulls = e.release();
    });
}

vg_status vg_smooth(const vg_pipeline* pipeline, const vg_tensor* latents, const vg_tensor* flow,
                    const vg_frames* frames, vg_tensor** out) {
    return guarded([&] {
        require(pipeline, "pipeline");
        require(latents, "latents");
        require(out, "out");
        if (flow != nullptr) {
            *out = new vg_tensor{pipeline->value->smooth_with_flow(latents->value, flow->value)};
        } else {
            VGEDIT_CHECK(frames != nullptr || pipeline->value->config().flow_threshold == 0.0 ||
                             latents->value.dim(0) < 2,
                         vgedit::ErrorKind::invalid_argument, "smoothing needs either a flow field or the frames");
            if (frames == nullptr)
                *out = new vg_tensor{latents->value};
            else
                *out = new vg_tensor{pipeline->value->smooth(latents->value, frames->value)};
        }
    });
}

vg_status vg_edit(const vg_pipeline* pipeline, const vg_frames* frames, const vg_grounding* grounding,
                  const char* edit_json, const vg_frames* conditions, vg_frames** out, vg_tensor** latents,
                  char** report_json) {
    return guarded([&] {
        require(pipeline, "pipeline");
        require(frames, "frames");
        require(grounding, "grounding");
        const vgedit::EditSpec spec = parse_edit_spec(edit_json);
        const auto& config = pipeline->value->config();

        std::optional<vgedit::DepthSequence> depth;
        const vgedit::FrameSequence* maps = nullptr;
        if (conditions != nullptr) {
            if (config.control.condition == vgedit::ConditionKind::pose) {
                maps = &conditions->value;
            } else {
                const auto& c = conditions->value.tensor();
                vgedit::Tensor d({c.dim(0), c.dim(1), c.dim(2)});
                for (std::size_t p = 0; p < d.size(); ++p)
                    d[p] = c[3 * p];
                depth.emplace(std::move(d));
            }
        }

        auto r = pipeline->value->edit({frames->value, grounding->value, spec, depth ? &*depth : nullptr, maps});
        json report{{"warnings", r.warnings},
                    {"inpainting_applied", r.inpaint_mask.has_value()},
                    {"target_grounding", json::parse(vgedit::serialize_groundings(r.target_grounding))}};
        std::unique_ptr<vg_frames> f(out ? new vg_frames{std::move(r.frames)} : nullptr);
        std::unique_ptr<vg_tensor> l(latents ? new vg_tensor{std::move(r.latents)} : nullptr);
        if (report_json)
            *report_json = dup_string(report.dump(2));
        if (out)
            *out = f.release();
        if (latents)
            *latents = l.release();
    });
}

vg_status vg_eval(const vg_pipeline* pipeline, const vg_frames* frames, const char* prompt, char** report_json) {
    return guarded([&] {
        require(pipeline, "pipeline");
        require(frames, "frames");
        require(report_json, "report_json");
        const auto report =
            vgedit::evaluate_metrics(frames->value, prompt ? prompt : "", *pipeline->value->providers().embedder);
        *report_json = dup_string(vgedit::report_to_json(report));
    });
}

}  // extern "C"
