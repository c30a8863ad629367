// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

// vgedit command-line front end. Talks to the library only through the C
// interface in vgedit.h.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vgedit/vgedit.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 ok, 1 runtime failure, 2 input or validation failure.
constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_input = 2;

struct Failure {
    int code;
    std::string message;
};

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using FramesPtr = std::unique_ptr<vg_frames, Deleter<vg_frames, vg_frames_free>>;
using GroundingPtr = std::unique_ptr<vg_grounding, Deleter<vg_grounding, vg_grounding_free>>;
using TensorPtr = std::unique_ptr<vg_tensor, Deleter<vg_tensor, vg_tensor_free>>;
using PipelinePtr = std::unique_ptr<vg_pipeline, Deleter<vg_pipeline, vg_pipeline_free>>;

void check(vg_status status, const std::string& what) {
    if (status == VG_OK)
        return;
    std::string msg = what + ": " + vg_last_error();
    const std::string stage = vg_last_error_stage();
    if (!stage.empty() && msg.find("stage") == std::string::npos)
        msg += " (stage " + stage + ")";
    throw Failure{status == VG_ERR_RUNTIME ? exit_runtime : exit_input, msg};
}

std::string take_string(char* s) {
    std::string out = s ? s : "";
    vg_string_free(s);
    return out;
}

void require_path(const std::string& path, const std::string& role) {
    if (!fs::exists(path))
        throw Failure{exit_input, role + " '" + path + "' does not exist"};
}

std::string read_file(const std::string& path, const std::string& role) {
    require_path(path, role);
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Failure{exit_input, "cannot read " + role + " '" + path + "'"};
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out)
        throw Failure{exit_runtime, "cannot write '" + path.string() + "'"};
}

std::string hex_digest(const std::string& path) {
    uint64_t d = 0;
    check(vg_path_digest(path.c_str(), &d), "digest of '" + path + "'");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
    return buf;
}

// Flags shared by every subcommand that build a pipeline. Each one mirrors a
// config key; only flags given on the command line override the file.
struct ConfigFlags {
    std::string config_path;
    std::optional<int> steps;
    std::optional<double> guidance;
    std::optional<double> threshold;
    std::optional<double> control_scale;
    std::optional<std::string> condition;
    std::optional<std::string> inpainting;
    std::optional<int> fourier;
    std::optional<int> inner_steps;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> embedder;

    json overrides() const {
        json o = json::object();
        if (steps)
            o["diffusion"]["num_inference_steps"] = *steps;
        if (guidance)
            o["diffusion"]["guidance_scale"] = *guidance;
        if (inner_steps)
            o["diffusion"]["null_opt"]["inner_steps"] = *inner_steps;
        if (threshold)
            o["smoothing"]["flow_threshold"] = *threshold;
        if (control_scale)
            o["control"]["scale"] = *control_scale;
        if (condition)
            o["control"]["condition"] = *condition;
        if (inpainting)
            o["grounding"]["inpainting"] = *inpainting;
        if (fourier)
            o["grounding"]["fourier_freqs"] = *fourier;
        if (seed)
            o["seeds"]["base"] = *seed;
        if (embedder)
            o["providers"]["embedder"]["impl"] = *embedder;
        return o;
    }

    /// Resolved config JSON: base text (file or manifest), then flag overrides.
    json resolve(const std::string& base) const {
        std::string text = base;
        if (text.empty() && !config_path.empty())
            text = read_file(config_path, "config file");
        char* resolved = nullptr;
        check(vg_config_resolve(text.c_str(), overrides().dump().c_str(), &resolved), "config");
        return json::parse(take_string(resolved));
    }
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
    cmd->add_option("--config", f.config_path, "pipeline config JSON");
    cmd->add_option("--steps", f.steps, "diffusion.num_inference_steps");
    cmd->add_option("--guidance-scale", f.guidance, "diffusion.guidance_scale");
    cmd->add_option("--null-steps", f.inner_steps, "diffusion.null_opt.inner_steps");
    cmd->add_option("--threshold", f.threshold, "smoothing.flow_threshold");
    cmd->add_option("--controlnet-scale", f.control_scale, "control.scale");
    cmd->add_option("--condition", f.condition, "control.condition (depth, pose, none)");
    cmd->add_option("--inpainting", f.inpainting, "grounding.inpainting (auto, on, off)");
    cmd->add_option("--fourier-freqs", f.fourier, "grounding.fourier_freqs");
    cmd->add_option("--seed", f.seed, "seeds.base");
}

PipelinePtr make_pipeline(const json& config) {
    vg_pipeline* p = nullptr;
    check(vg_pipeline_create(config.dump().c_str(), &p), "pipeline");
    return PipelinePtr(p);
}

FramesPtr load_frames(const std::string& path, const std::string& role) {
    require_path(path, role);
    vg_frames* f = nullptr;
    check(vg_frames_load(path.c_str(), &f), "loading " + role + " '" + path + "'");
    return FramesPtr(f);
}

TensorPtr load_tensor(const std::string& path, const std::string& role) {
    require_path(path, role);
    vg_tensor* t = nullptr;
    check(vg_tensor_load(path.c_str(), &t), "loading " + role + " '" + path + "'");
    return TensorPtr(t);
}

json seeds_of(const json& config) {
    json s{{"base", config["seeds"]["base"]}};
    for (const auto& [role, entry] : config["providers"].items())
        s["providers"][role] = entry["seed"];
    return s;
}

void write_manifest(const fs::path& path, const std::string& command, const json& args, const json& config,
                    const json& inputs, const json& outputs) {
    const json m{{"tool", "vgedit"},     {"version", vg_version()}, {"command", command}, {"args", args},
                 {"config", config},     {"seeds", seeds_of(config)}, {"inputs", inputs}, {"outputs", outputs}};
    write_file(path, m.dump(2) + "\n");
}

json input_entry(const std::string& path) { return {{"path", path}, {"fnv1a64", hex_digest(path)}}; }

// ---------------------------------------------------------------------------

struct InvertArgs {
    ConfigFlags cfg;
    std::string frames, source_prompt, out;
};

int run_invert(const InvertArgs& a) {
    const json config = a.cfg.resolve("");
    auto frames = load_frames(a.frames, "frames");
    auto pipeline = make_pipeline(config);
    vg_tensor *noise = nullptr, *nulls = nullptr;
    char* report = nullptr;
    check(vg_invert(pipeline.get(), frames.get(), a.source_prompt.c_str(), &noise, &nulls, &report), "invert");
    TensorPtr n(noise), e(nulls);
    const fs::path out(a.out);
    fs::create_directories(out);
    check(vg_tensor_save(n.get(), (out / "noise.vgt").c_str()), "writing noise latents");
    check(vg_tensor_save(e.get(), (out / "nulls.vgt").c_str()), "writing null embeddings");
    write_file(out / "inversion.json", take_string(report) + "\n");
    write_manifest(out / "manifest.json", "invert", {{"frames", a.frames}, {"source_prompt", a.source_prompt}},
                   config, {{"frames", input_entry(a.frames)}},
                   {"noise.vgt", "nulls.vgt", "inversion.json"});
    return exit_ok;
}

struct SmoothArgs {
    ConfigFlags cfg;
    std::string latents, flow, frames, out;
};

int run_smooth(const SmoothArgs& a) {
    const json config = a.cfg.resolve("");
    auto latents = load_tensor(a.latents, "latents file");
    TensorPtr flow;
    FramesPtr frames;
    json inputs{{"latents", input_entry(a.latents)}};
    if (!a.flow.empty()) {
        flow = load_tensor(a.flow, "flow file");
        inputs["flow"] = input_entry(a.flow);
    } else if (!a.frames.empty()) {
        frames = load_frames(a.frames, "frames");
        inputs["frames"] = input_entry(a.frames);
    }
    auto pipeline = make_pipeline(config);
    vg_tensor* out = nullptr;
    check(vg_smooth(pipeline.get(), latents.get(), flow.get(), frames.get(), &out), "smooth");
    TensorPtr result(out);
    const fs::path out_path(a.out);
    if (out_path.has_parent_path())
        fs::create_directories(out_path.parent_path());
    check(vg_tensor_save(result.get(), out_path.c_str()), "writing smoothed latents");
    write_manifest(fs::path(a.out + ".manifest.json"), "smooth",
                   {{"latents", a.latents}, {"flow", a.flow}, {"frames", a.frames}}, config, inputs,
                   {out_path.filename().string()});
    return exit_ok;
}

struct EditArgs {
    ConfigFlags cfg;
    std::string frames, groundings, out, source_prompt, target_prompt, edit_file, conditions, from_manifest;
    std::vector<std::string> maps;
    bool save_latents = false;
};

json edit_spec_of(const EditArgs& a) {
    json spec = json::object();
    if (!a.edit_file.empty())
        spec = json::parse(read_file(a.edit_file, "edit spec file"));
    if (!a.source_prompt.empty())
        spec["source_prompt"] = a.source_prompt;
    if (!a.target_prompt.empty())
        spec["target_prompt"] = a.target_prompt;
    if (!a.maps.empty()) {
        json pairs = json::array();
        for (const auto& m : a.maps) {
            const auto eq = m.find('=');
            if (eq == std::string::npos)
                throw Failure{exit_input, "--map expects from=to, got '" + m + "'"};
            pairs.push_back({m.substr(0, eq), m.substr(eq + 1)});
        }
        spec["phrase_map"] = pairs;
    }
    if (!spec.contains("target_prompt") && spec.contains("source_prompt"))
        spec["target_prompt"] = spec["source_prompt"];
    return spec;
}

int run_edit(EditArgs a) {
    std::string base_config;
    json manifest_inputs;
    if (!a.from_manifest.empty()) {
        const json m = json::parse(read_file(a.from_manifest, "manifest"));
        if (m.value("command", "") != "edit")
            throw Failure{exit_input, "manifest '" + a.from_manifest + "' does not describe an edit run"};
        const json& args = m["args"];
        auto fill = [&](std::string& field, const char* key) {
            if (field.empty() && args.contains(key))
                field = args[key].get<std::string>();
        };
        fill(a.frames, "frames");
        fill(a.groundings, "groundings");
        fill(a.conditions, "conditions");
        if (a.edit_file.empty() && a.source_prompt.empty() && a.target_prompt.empty() && a.maps.empty()) {
            const json& spec = args["edit"];
            a.source_prompt = spec.value("source_prompt", "");
            a.target_prompt = spec.value("target_prompt", "");
            for (const auto& p : spec.value("phrase_map", json::array()))
                a.maps.push_back(p[0].get<std::string>() + "=" + p[1].get<std::string>());
        }
        a.save_latents = a.save_latents || args.value("save_latents", false);
        base_config = m["config"].dump();
        manifest_inputs = m["inputs"];
    }
    if (a.frames.empty() || a.groundings.empty() || a.out.empty())
        throw Failure{exit_input, "edit needs --frames, --groundings and --out (or --from-manifest)"};
    require_path(a.groundings, "groundings file");

    const json config = a.cfg.resolve(base_config);
    const json spec = edit_spec_of(a);

    json inputs{{"frames", input_entry(a.frames)}, {"groundings", input_entry(a.groundings)}};
    if (!a.conditions.empty())
        inputs["conditions"] = input_entry(a.conditions);
    for (const auto& [key, entry] : manifest_inputs.items()) {
        if (!inputs.contains(key) || inputs[key]["fnv1a64"] != entry["fnv1a64"])
            throw Failure{exit_input, "input '" + key + "' differs from the one recorded in the manifest"};
    }

    auto frames = load_frames(a.frames, "frames");
    vg_grounding* g = nullptr;
    check(vg_grounding_load(a.groundings.c_str(), &g), "loading groundings file '" + a.groundings + "'");
    GroundingPtr grounding(g);
    FramesPtr conditions;
    if (!a.conditions.empty())
        conditions = load_frames(a.conditions, "conditions");

    auto pipeline = make_pipeline(config);
    vg_frames* out = nullptr;
    vg_tensor* latents = nullptr;
    char* report = nullptr;
    check(vg_edit(pipeline.get(), frames.get(), grounding.get(), spec.dump().c_str(), conditions.get(), &out,
                  a.save_latents ? &latents : nullptr, &report),
          "edit");
    FramesPtr result(out);
    TensorPtr latent_result(latents);
    const json report_json = json::parse(take_string(report));
    for (const auto& w : report_json["warnings"])
        std::cerr << "warning: " << w.get<std::string>() << "\n";

    const fs::path dir(a.out);
    fs::create_directories(dir);
    check(vg_frames_save(result.get(), dir.c_str()), "writing frames");
    json outputs{"frame_*.png", "report.json"};
    if (latent_result) {
        check(vg_tensor_save(latent_result.get(), (dir / "latents.vgt").c_str()), "writing latents");
        outputs.push_back("latents.vgt");
    }
    write_file(dir / "report.json", report_json.dump(2) + "\n");
    json args{{"frames", a.frames}, {"groundings", a.groundings}, {"edit", spec}, {"save_latents", a.save_latents}};
    if (!a.conditions.empty())
        args["conditions"] = a.conditions;
    write_manifest(dir / "manifest.json", "edit", args, config, inputs, outputs);
    return exit_ok;
}

struct EvalArgs {
    ConfigFlags cfg;
    std::string frames, prompt, out;
};

int run_eval(const EvalArgs& a) {
    const json config = a.cfg.resolve("");
    auto frames = load_frames(a.frames, "frames");
    auto pipeline = make_pipeline(config);
    char* report = nullptr;
    check(vg_eval(pipeline.get(), frames.get(), a.prompt.c_str(), &report), "eval");
    const std::string text = take_string(report);
    if (a.out.empty()) {
        std::cout << text;
    } else {
        write_file(a.out, text);
        write_manifest(fs::path(a.out + ".manifest.json"), "eval", {{"frames", a.frames}, {"prompt", a.prompt}},
                       config, {{"frames", input_entry(a.frames)}}, {fs::path(a.out).filename().string()});
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vgedit: grounded, flow-smoothed video editing with toy or pluggable providers"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(vg_version()));

    InvertArgs inv;
    auto* invert = app.add_subcommand("invert", "DDIM-invert every frame and optimise null embeddings");
    add_config_flags(invert, inv.cfg);
    invert->add_option("--frames", inv.frames, "frame directory or .vgt container")->required();
    invert->add_option("--source-prompt", inv.source_prompt, "prompt describing the source clip");
    invert->add_option("--out", inv.out, "output directory")->required();

    SmoothArgs sm;
    auto* smooth = app.add_subcommand("smooth", "flow-guided smoothing of latents");
    add_config_flags(smooth, sm.cfg);
    smooth->add_option("--latents", sm.latents, "latents .vgt [N, h, w, c]")->required();
    auto* flow_opt = smooth->add_option("--flow", sm.flow, "flow field .vgt [N-1, H, W, 2]");
    smooth->add_option("--frames", sm.frames, "frames to estimate flow from")->excludes(flow_opt);
    smooth->add_option("--out", sm.out, "output latents .vgt")->required();

    EditArgs ed;
    auto* edit = app.add_subcommand("edit", "edit a clip");
    add_config_flags(edit, ed.cfg);
    edit->add_option("--frames", ed.frames, "frame directory or .vgt container");
    edit->add_option("--groundings", ed.groundings, "groundings JSON");
    edit->add_option("--out", ed.out, "output directory");
    edit->add_option("--source-prompt", ed.source_prompt, "prompt describing the source clip");
    edit->add_option("--target-prompt", ed.target_prompt, "prompt describing the edited clip");
    edit->add_option("--map", ed.maps, "phrase replacement from=to (repeatable)");
    edit->add_option("--edit", ed.edit_file, "edit spec JSON");
    edit->add_option("--conditions", ed.conditions, "condition maps (depth or pose images)");
    edit->add_flag("--save-latents", ed.save_latents, "also write latents.vgt");
    edit->add_option("--from-manifest", ed.from_manifest, "re-run from a previous run's manifest.json");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "text alignment and frame consistency");
    add_config_flags(eval, ev.cfg);
    eval->add_option("--frames", ev.frames, "frame directory or .vgt container")->required();
    eval->add_option("--prompt", ev.prompt, "target prompt")->required();
    eval->add_option("--embedder", ev.cfg.embedder, "providers.embedder.impl");
    eval->add_option("--out", ev.out, "report JSON (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    }

    try {
        if (*invert)
            return run_invert(inv);
        if (*smooth)
            return run_smooth(sm);
        if (*edit)
            return run_edit(ed);
        if (*eval)
            return run_eval(ev);
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_input;
}
