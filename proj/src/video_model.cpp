// Copyright (C) 2026 The vgedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgedit/video_model.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "vgedit/error.hpp"

namespace vgedit {

using nlohmann::json;

FrameSequence::FrameSequence(Tensor frames, std::optional<double> fps) : m_frames(std::move(frames)), m_fps(fps) {
    VGEDIT_CHECK(m_frames.rank() == 4 && m_frames.dim(3) == 3, ErrorKind::validation,
                 "frames must have shape [N, H, W, 3], got " + m_frames.shape_string());
    VGEDIT_CHECK(m_frames.dim(0) >= 1, ErrorKind::validation, "zero frames");
    VGEDIT_CHECK(m_frames.dim(1) >= 1 && m_frames.dim(2) >= 1, ErrorKind::validation, "empty frame resolution");
    for (double v : m_frames.values())
        VGEDIT_CHECK(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorKind::validation,
                     "frame values must be finite and within [0, 1]");
}

DepthSequence::DepthSequence(Tensor maps) : m_maps(std::move(maps)) {
    VGEDIT_CHECK(m_maps.rank() == 3, ErrorKind::validation, "depth maps must have shape [N, H, W]");
    for (double v : m_maps.values())
        VGEDIT_CHECK(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorKind::validation,
                     "depth values must be finite and within [0, 1]");
}

std::optional<std::string> BoundingBox::violation() const {
    for (double v : {x0, y0, x1, y1})
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            return "box coordinate outside [0, 1]";
    if (!(x0 < x1))
        return "degenerate box: x0 >= x1";
    if (!(y0 < y1))
        return "degenerate box: y0 >= y1";
    return std::nullopt;
}

void EditSpec::validate() const {
    VGEDIT_CHECK(!target_prompt.empty(), ErrorKind::validation, "edit spec: target prompt is empty");
    std::set<std::string> seen;
    for (const auto& [from, to] : phrase_map)
        VGEDIT_CHECK(seen.insert(from).second, ErrorKind::validation,
                     "edit spec: source phrase '" + from + "' mapped more than once");
}

namespace {

BoundingBox parse_box(const json& j, std::size_t frame, std::size_t entity) {
    const std::string where = "frame " + std::to_string(frame) + ", entity " + std::to_string(entity);
    VGEDIT_CHECK(j.is_array() && j.size() == 4, ErrorKind::validation, where + ": box must be [x0, y0, x1, y1]");
    for (const auto& v : j)
        VGEDIT_CHECK(v.is_number(), ErrorKind::validation, where + ": box coordinates must be numbers");
    BoundingBox box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (auto why = box.violation())
        throw_error(ErrorKind::validation, where + ": " + *why);
    return box;
}

std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

VideoGrounding parse_groundings(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw_error(ErrorKind::validation, std::string("malformed groundings document: ") + e.what());
    }
    VGEDIT_CHECK(doc.is_object() && doc.contains("frames") && doc["frames"].is_array(), ErrorKind::validation,
                 "malformed groundings document: expected an object with a \"frames\" array");

    const auto& frames = doc["frames"];
    std::map<std::size_t, std::vector<GroundingEntity>> by_index;
    for (const auto& f : frames) {
        VGEDIT_CHECK(f.is_object() && f.contains("index") && f["index"].is_number_integer(), ErrorKind::validation,
                     "malformed groundings document: every frame needs an integer \"index\"");
        const auto idx = f["index"].get<long long>();
        VGEDIT_CHECK(idx >= 0, ErrorKind::validation, "frame index must be non-negative");
        const auto index = static_cast<std::size_t>(idx);
        VGEDIT_CHECK(!by_index.contains(index), ErrorKind::validation,
                     "duplicate frame index " + std::to_string(index));
        VGEDIT_CHECK(f.contains("entities") && f["entities"].is_array(), ErrorKind::validation,
                     "frame " + std::to_string(index) + ": missing \"entities\" array");
        std::vector<GroundingEntity> entities;
        for (const auto& e : f["entities"]) {
            const std::size_t k = entities.size();
            VGEDIT_CHECK(e.is_object() && e.contains("phrase") && e["phrase"].is_string() && e.contains("box"),
                         ErrorKind::validation,
                         "frame " + std::to_string(index) + ", entity " + std::to_string(k) +
                             ": needs a string \"phrase\" and a \"box\"");
            GroundingEntity entity{e["phrase"].get<std::string>(), parse_box(e["box"], index, k)};
            VGEDIT_CHECK(!entity.phrase.empty(), ErrorKind::validation,
                         "frame " + std::to_string(index) + ", entity " + std::to_string(k) + ": empty phrase");
            entities.push_back(std::move(entity));
        }
        by_index.emplace(index, std::move(entities));
    }

    VideoGrounding g;
    std::size_t expected = 0;
    for (auto& [index, entities] : by_index) {
        VGEDIT_CHECK(index == expected, ErrorKind::validation,
                     "frame indices must be contiguous from 0; missing index " + std::to_string(expected));
        if (!g.per_frame.empty())
            VGEDIT_CHECK(entities.size() == g.per_frame.front().size(), ErrorKind::validation,
                         "entity counts differ between frames (frame 0 has " +
                             std::to_string(g.per_frame.front().size()) + ", frame " + std::to_string(index) +
                             " has " + std::to_string(entities.size()) + ")");
        g.per_frame.push_back(std::move(entities));
        ++expected;
    }
    return g;
}

std::string serialize_groundings(const VideoGrounding& grounding) {
    std::string out = "{\"frames\": [";
    for (std::size_t i = 0; i < grounding.per_frame.size(); ++i) {
        if (i)
            out += ", ";
        out += "{\"index\": " + std::to_string(i) + ", \"entities\": [";
        const auto& entities = grounding.per_frame[i];
        for (std::size_t k = 0; k < entities.size(); ++k) {
            if (k)
                out += ", ";
            const auto& b = entities[k].box;
            out += "{\"phrase\": " + json(entities[k].phrase).dump() + ", \"box\": [" + format_coord(b.x0) + ", " +
                   format_coord(b.y0) + ", " + format_coord(b.x1) + ", " + format_coord(b.y1) + "]}";
        }
        out += "]}";
    }
    out += "]}\n";
    return out;
}

EditResult apply_edit_spec(const VideoGrounding& grounding, const EditSpec& spec) {
    EditResult result{grounding, {}};
    for (const auto& [from, to] : spec.phrase_map) {
        bool matched = false;
        for (const auto& frame : grounding.per_frame)
            for (const auto& e : frame)
                matched = matched || e.phrase == from;
        if (!matched)
            result.warnings.push_back("edit spec phrase '" + from + "' does not occur in the grounding");
    }
    // Lookups go against the original phrase so chained maps (a->b, b->c) apply once.
    for (std::size_t f = 0; f < grounding.per_frame.size(); ++f) {
        for (std::size_t k = 0; k < grounding.per_frame[f].size(); ++k) {
            const std::string& phrase = grounding.per_frame[f][k].phrase;
            for (const auto& [from, to] : spec.phrase_map) {
                if (phrase == from) {
                    result.grounding.per_frame[f][k].phrase = to;
                    break;
                }
            }
        }
    }
    return result;
}

std::vector<std::string> validate_grounding(const VideoGrounding& grounding, std::size_t frame_count) {
    std::vector<std::string> report;
    if (grounding.frame_count() != frame_count)
        report.push_back("frame-count mismatch: grounding has " + std::to_string(grounding.frame_count()) +
                         " frames, video has " + std::to_string(frame_count));
    const std::size_t m = grounding.entity_count();
    for (std::size_t f = 0; f < grounding.per_frame.size(); ++f) {
        const auto& entities = grounding.per_frame[f];
        if (entities.size() != m)
            report.push_back("frame " + std::to_string(f) + ": entity count " + std::to_string(entities.size()) +
                             " differs from frame 0 (" + std::to_string(m) + ")");
        for (std::size_t k = 0; k < entities.size(); ++k) {
            const std::string where = "frame " + std::to_string(f) + ", entity " + std::to_string(k) + ": ";
            if (entities[k].phrase.empty())
                report.push_back(where + "empty phrase");
            if (auto why = entities[k].box.violation())
                report.push_back(where + *why);
        }
    }
    return report;
}

std::vector<std::string> validate_grounding(const VideoGrounding& grounding, const FrameSequence& frames) {
    return validate_grounding(grounding, frames.count());
}

}  // namespace vgedit
