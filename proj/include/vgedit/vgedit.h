/* Copyright (C) 2026 The vgedit Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the vgedit library. Objects are opaque handles released
 * with the matching *_free function; every call that can fail returns a
 * vg_status and leaves a message in vg_last_error() (per thread).
 * Strings returned through char** are released with vg_string_free.
 */
#ifndef VGEDIT_H
#define VGEDIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(VGEDIT_BUILDING_LIBRARY)
#define VG_API __attribute__((visibility("default")))
#else
#define VG_API
#endif

typedef enum vg_status {
    VG_OK = 0,
    VG_ERR_INVALID_ARGUMENT = 1,
    VG_ERR_IO = 2,
    VG_ERR_VALIDATION = 3,
    VG_ERR_RUNTIME = 4
} vg_status;

typedef struct vg_frames vg_frames;       /* clip [N, H, W, 3] */
typedef struct vg_grounding vg_grounding; /* per-frame phrase/box lists */
typedef struct vg_tensor vg_tensor;       /* rank-4 array: latents, flow, nulls */
typedef struct vg_pipeline vg_pipeline;   /* resolved config + providers */

VG_API const char* vg_version(void);
VG_API const char* vg_last_error(void);
/* Pipeline stage of the last error, or "" when the failure had none. */
VG_API const char* vg_last_error_stage(void);
VG_API void vg_string_free(char* s);

/* Merges override_json into base_json (either may be NULL), validates, and
 * returns the fully resolved configuration. */
VG_API vg_status vg_config_resolve(const char* base_json, const char* override_json, char** resolved_json);

/* FNV-1a 64 digest of a file, or of a directory's regular files in name order. */
VG_API vg_status vg_path_digest(const char* path, uint64_t* digest);

VG_API vg_status vg_frames_load(const char* path, vg_frames** out);
VG_API vg_status vg_frames_save(const vg_frames* frames, const char* dir);
VG_API vg_status vg_frames_shape(const vg_frames* frames, size_t* n, size_t* h, size_t* w);
VG_API void vg_frames_free(vg_frames* frames);

VG_API vg_status vg_grounding_load(const char* path, vg_grounding** out);
VG_API vg_status vg_grounding_parse(const char* json, vg_grounding** out);
VG_API vg_status vg_grounding_frame_count(const vg_grounding* grounding, size_t* n);
VG_API void vg_grounding_free(vg_grounding* grounding);

VG_API vg_status vg_tensor_load(const char* path, vg_tensor** out);
VG_API vg_status vg_tensor_save(const vg_tensor* tensor, const char* path);
VG_API vg_status vg_tensor_shape(const vg_tensor* tensor, size_t dims[4]);
VG_API void vg_tensor_free(vg_tensor* tensor);

VG_API vg_status vg_pipeline_create(const char* config_json, vg_pipeline** out);
VG_API void vg_pipeline_free(vg_pipeline* pipeline);

/* Encodes, inverts and optimises null embeddings per frame. noise is z_T
 * [N, h, w, c], nulls is [N, S, L, d]; report_json holds per-step losses.
 * Any output pointer may be NULL. */
VG_API vg_status vg_invert(const vg_pipeline* pipeline, const vg_frames* frames, const char* source_prompt,
                           vg_tensor** noise, vg_tensor** nulls, char** report_json);

/* Flow-guided smoothing at the configured threshold. The flow comes from
 * `flow` when given, otherwise it is estimated from `frames`. */
VG_API vg_status vg_smooth(const vg_pipeline* pipeline, const vg_tensor* latents, const vg_tensor* flow,
                           const vg_frames* frames, vg_tensor** out);

/* edit_json: {"source_prompt": "...", "target_prompt": "...",
 *             "phrase_map": [["from", "to"], ...]}  (an object map is accepted too)
 * conditions: depth maps (channel 0) or pose maps, matching the configured
 * control condition; NULL estimates depth from the frames. */
VG_API vg_status vg_edit(const vg_pipeline* pipeline, const vg_frames* frames, const vg_grounding* grounding,
                         const char* edit_json, const vg_frames* conditions, vg_frames** out,
                         vg_tensor** latents, char** report_json);

VG_API vg_status vg_eval(const vg_pipeline* pipeline, const vg_frames* frames, const char* prompt,
                         char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* VGEDIT_H */
