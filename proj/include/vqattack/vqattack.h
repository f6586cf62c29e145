// Copyright 2026 The vqattack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the vqattack library.
 *
 * Every object is an opaque handle owned by the caller and released with its
 * matching *_free function. Functions return VQA_OK or an error status; the
 * message of the most recent failure on the calling thread is available from
 * vqa_last_error(). Byte buffers returned by the library are released with
 * vqa_bytes_free().
 */
#ifndef VQATTACK_VQATTACK_H
#define VQATTACK_VQATTACK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(VQA_BUILDING_LIBRARY)
#    define VQA_API __declspec(dllexport)
#  else
#    define VQA_API __declspec(dllimport)
#  endif
#else
#  define VQA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vqa_status {
    VQA_OK = 0,
    VQA_ERR_INVALID_ARGUMENT = 1,
    VQA_ERR_MALFORMED_HEADER = 2,
    VQA_ERR_UNSUPPORTED_MAXVAL = 3,
    VQA_ERR_TRUNCATED_PAYLOAD = 4,
    VQA_ERR_BAD_MAGIC = 5,
    VQA_ERR_VERSION_MISMATCH = 6,
    VQA_ERR_LENGTH_MISMATCH = 7,
    VQA_ERR_DIMENSION_MISMATCH = 8,
    VQA_ERR_CODEBOOK_MISMATCH = 9,
    VQA_ERR_INDEX_OUT_OF_RANGE = 10,
    VQA_ERR_INSUFFICIENT_DATA = 11,
    VQA_ERR_NUMERIC = 12,
    VQA_ERR_SHAPE_MISMATCH = 13,
    VQA_ERR_ORACLE_TIMEOUT = 14,
    VQA_ERR_ORACLE_TRANSPORT = 15,
    VQA_ERR_ORACLE_PROTOCOL = 16,
    VQA_ERR_BUDGET_EXHAUSTED = 17,
    VQA_ERR_IO = 18,
    VQA_ERR_INTERNAL = 99
} vqa_status;

typedef struct vqa_image vqa_image;
typedef struct vqa_codebook vqa_codebook;
typedef struct vqa_indices vqa_indices;
typedef struct vqa_oracle vqa_oracle;
typedef struct vqa_attack_result vqa_attack_result;
typedef struct vqa_dataset vqa_dataset;
typedef struct vqa_report vqa_report;

typedef struct vqa_bytes {
    uint8_t* data;
    size_t size;
} vqa_bytes;

VQA_API const char* vqa_version(void);
VQA_API const char* vqa_status_name(vqa_status status);
/* Message of the last failure on this thread; empty if none. */
VQA_API const char* vqa_last_error(void);
VQA_API void vqa_bytes_free(vqa_bytes* bytes);
/* 1 for timeout, transport and protocol failures of an oracle. */
VQA_API int vqa_is_oracle_error(vqa_status status);

/* ---- images (binary PGM / PPM, maxval 255) ---- */
VQA_API vqa_status vqa_image_load(const uint8_t* data, size_t size, vqa_image** out);
VQA_API vqa_status vqa_image_read_file(const char* path, vqa_image** out);
VQA_API vqa_status vqa_image_save(const vqa_image* image, vqa_bytes* out);
VQA_API vqa_status vqa_image_write_file(const vqa_image* image, const char* path);
VQA_API size_t vqa_image_height(const vqa_image* image);
VQA_API size_t vqa_image_width(const vqa_image* image);
VQA_API size_t vqa_image_channels(const vqa_image* image);
VQA_API void vqa_image_free(vqa_image* image);

/* ---- codebooks ---- */
typedef struct vqa_lbg_params {
    size_t length;
    size_t block_w;
    size_t block_h;
    double epsilon;
    size_t max_iters;
    uint64_t seed;
} vqa_lbg_params;

VQA_API void vqa_lbg_params_default(vqa_lbg_params* params);
VQA_API vqa_status vqa_codebook_train(const vqa_image* const* images, size_t count,
                                      const vqa_lbg_params* params, vqa_codebook** out);
/* Sorts an unsorted codebook by first principal component. */
VQA_API vqa_status vqa_codebook_sort(const vqa_codebook* codebook, vqa_codebook** out);
VQA_API vqa_status vqa_codebook_load(const uint8_t* data, size_t size, vqa_codebook** out);
VQA_API vqa_status vqa_codebook_read_file(const char* path, vqa_codebook** out);
VQA_API vqa_status vqa_codebook_save(const vqa_codebook* codebook, vqa_bytes* out);
VQA_API vqa_status vqa_codebook_write_file(const vqa_codebook* codebook, const char* path);
VQA_API size_t vqa_codebook_length(const vqa_codebook* codebook);
VQA_API int vqa_codebook_is_sorted(const vqa_codebook* codebook);
/* Writes the Euclidean distance from codeword `reference` to every codeword
 * into out[0 .. length). */
VQA_API vqa_status vqa_codebook_distance_profile(const vqa_codebook* codebook, size_t reference,
                                                 double* out, size_t capacity);
VQA_API void vqa_codebook_free(vqa_codebook* codebook);

/* ---- index streams ---- */
VQA_API vqa_status vqa_encode(const vqa_image* image, const vqa_codebook* codebook, vqa_indices** out);
VQA_API vqa_status vqa_decode(const vqa_indices* indices, const vqa_codebook* codebook, vqa_image** out);
/* Rebinds a stream encoded with the unsorted codebook to its sorted form. */
VQA_API vqa_status vqa_indices_remap(const vqa_indices* indices, const vqa_codebook* sorted,
                                     vqa_indices** out);
/* 1 if the stream was encoded with (or remapped to) this codebook. */
VQA_API int vqa_indices_bound_to(const vqa_indices* indices, const vqa_codebook* codebook);
VQA_API vqa_status vqa_indices_load(const uint8_t* data, size_t size, vqa_indices** out);
VQA_API vqa_status vqa_indices_read_file(const char* path, vqa_indices** out);
VQA_API vqa_status vqa_indices_save(const vqa_indices* indices, vqa_bytes* out);
VQA_API vqa_status vqa_indices_write_file(const vqa_indices* indices, const char* path);
VQA_API size_t vqa_indices_rows(const vqa_indices* indices);
VQA_API size_t vqa_indices_cols(const vqa_indices* indices);
VQA_API size_t vqa_indices_channels(const vqa_indices* indices);
VQA_API void vqa_indices_free(vqa_indices* indices);

/* ---- oracles ---- */
VQA_API vqa_status vqa_oracle_load_fixture(const uint8_t* data, size_t size, vqa_oracle** out);
VQA_API vqa_status vqa_oracle_load_fixture_file(const char* path, vqa_oracle** out);
VQA_API vqa_status vqa_oracle_connect(const char* endpoint, uint32_t timeout_ms, vqa_oracle** out);
/* On success writes K probabilities to probs (capacity >= K) and K to *classes. */
VQA_API vqa_status vqa_oracle_classify(const vqa_oracle* oracle, const vqa_image* image,
                                       double* probs, size_t capacity, size_t* classes);
VQA_API size_t vqa_oracle_classes(const vqa_oracle* oracle);
VQA_API uint64_t vqa_oracle_query_count(const vqa_oracle* oracle);
VQA_API void vqa_oracle_free(vqa_oracle* oracle);

/* ---- single-image attacks ---- */
typedef struct vqa_de_params {
    size_t population;
    size_t generations;
    double scale;
    size_t budget; /* 0: population * (generations + 1) */
    int early_stop;
    int snapshots;
    uint64_t seed;
    size_t workers;
} vqa_de_params;

VQA_API void vqa_de_params_default(vqa_de_params* params);

/* If the oracle fails mid-run the status is an oracle error and, when `out`
 * is non-null, *out holds the partial result (trajectory so far). */
VQA_API vqa_status vqa_attack_de(const vqa_indices* indices, const vqa_codebook* codebook,
                                 const vqa_oracle* oracle, size_t true_label,
                                 const vqa_de_params* params, vqa_attack_result** out);
VQA_API vqa_status vqa_attack_random(const vqa_indices* indices, const vqa_codebook* codebook,
                                     const vqa_oracle* oracle, size_t true_label,
                                     size_t evaluations, uint64_t seed, vqa_attack_result** out);
VQA_API int vqa_attack_result_success(const vqa_attack_result* result);
VQA_API size_t vqa_attack_result_adversarial_label(const vqa_attack_result* result);
VQA_API double vqa_attack_result_confidence(const vqa_attack_result* result);
VQA_API double vqa_attack_result_fitness(const vqa_attack_result* result);
VQA_API size_t vqa_attack_result_evaluations(const vqa_attack_result* result);
/* Writes row, col and up to `capacity` channel values of the best perturbation;
 * returns the channel count. */
VQA_API size_t vqa_attack_result_perturbation(const vqa_attack_result* result, size_t* row,
                                              size_t* col, uint16_t* values, size_t capacity);
/* Applies the best perturbation to `indices`. */
VQA_API vqa_status vqa_attack_result_apply(const vqa_attack_result* result, const vqa_indices* indices,
                                           vqa_indices** out);

typedef enum vqa_result_format {
    VQA_RESULT_JSON = 0,
    VQA_RESULT_TRAJECTORY_CSV = 1,
    VQA_RESULT_SNAPSHOTS_CSV = 2
} vqa_result_format;

VQA_API vqa_status vqa_attack_result_export(const vqa_attack_result* result, vqa_result_format format,
                                            vqa_bytes* out);
VQA_API void vqa_attack_result_free(vqa_attack_result* result);

/* ---- batch campaigns ---- */
typedef enum vqa_method { VQA_METHOD_DE = 0, VQA_METHOD_DE_UNSORTED = 1, VQA_METHOD_RANDOM = 2 } vqa_method;

typedef struct vqa_batch_params {
    vqa_method method;
    vqa_de_params de;
    size_t random_evaluations; /* 0: matched to the DE budget */
    uint64_t seed;
    size_t workers;
} vqa_batch_params;

VQA_API void vqa_batch_params_default(vqa_batch_params* params);
VQA_API vqa_status vqa_dataset_load_manifest(const char* path, vqa_dataset** out);
VQA_API size_t vqa_dataset_size(const vqa_dataset* dataset);
VQA_API void vqa_dataset_free(vqa_dataset* dataset);

/* On an oracle failure *out (when non-null) holds the completed records. */
VQA_API vqa_status vqa_batch_run(const vqa_dataset* dataset, const vqa_codebook* codebook,
                                 const vqa_oracle* oracle, const vqa_batch_params* params,
                                 vqa_report** out);

typedef enum vqa_report_format {
    VQA_REPORT_JSON = 0,
    VQA_REPORT_CSV = 1,
    VQA_REPORT_HEATMAP_CSV = 2,
    VQA_REPORT_TRAJECTORIES_CSV = 3,
    VQA_REPORT_SUMMARY = 4
} vqa_report_format;

VQA_API vqa_status vqa_report_export(const vqa_report* report, vqa_report_format format, vqa_bytes* out);
VQA_API vqa_status vqa_report_load_json(const uint8_t* data, size_t size, vqa_report** out);
/* *has_confidence is 0 when no attack succeeded. */
VQA_API void vqa_report_summary(const vqa_report* report, size_t* attacked, size_t* excluded,
                                size_t* successes, double* success_rate, double* mean_confidence,
                                int* has_confidence);
VQA_API void vqa_report_free(vqa_report* report);

#ifdef __cplusplus
}
#endif

#endif /* VQATTACK_VQATTACK_H */
