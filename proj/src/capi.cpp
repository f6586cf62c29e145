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

#include "vqattack/vqattack.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "vqattack/attack.hpp"
#include "vqattack/codebook_sort.hpp"
#include "vqattack/error.hpp"
#include "vqattack/experiment.hpp"
#include "vqattack/image_io.hpp"
#include "vqattack/oracle.hpp"
#include "vqattack/vq_codec.hpp"

struct vqa_image {
    vqattack::ImageTensor value;
};
struct vqa_codebook {
    vqattack::Codebook value;
};
struct vqa_indices {
    vqattack::IndexTensor value;
};
struct vqa_oracle {
    std::unique_ptr<vqattack::Oracle> value;
};
struct vqa_attack_result {
    vqattack::AttackResult value;
};
struct vqa_dataset {
    std::vector<vqattack::DatasetEntry> value;
};
struct vqa_report {
    vqattack::BatchReport value;
};

namespace {

thread_local std::string last_error;

static_assert(static_cast<int>(vqattack::Errc::invalid_argument) == VQA_ERR_INVALID_ARGUMENT);
static_assert(static_cast<int>(vqattack::Errc::shape_mismatch) == VQA_ERR_SHAPE_MISMATCH);
static_assert(static_cast<int>(vqattack::Errc::oracle_protocol) == VQA_ERR_ORACLE_PROTOCOL);
static_assert(static_cast<int>(vqattack::Errc::io) == VQA_ERR_IO);

vqa_status to_status(vqattack::Errc code)
{
    return static_cast<vqa_status>(static_cast<int>(code));
}

vqa_status fail(vqa_status status, const std::string& message)
{
    last_error = message;
    return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
vqa_status guarded(Fn&& fn)
{
    try {
        last_error.clear();
        fn();
        return VQA_OK;
    } catch (const vqattack::Error& e) {
        return fail(to_status(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(VQA_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(VQA_ERR_INTERNAL, e.what());
    }
}

vqa_status require(bool ok, const char* what)
{
    return ok ? VQA_OK : fail(VQA_ERR_INVALID_ARGUMENT, what);
}

void to_bytes(const std::vector<std::uint8_t>& src, vqa_bytes* out)
{
    out->data = static_cast<uint8_t*>(std::malloc(src.size() ? src.size() : 1));
    if (!out->data)
        throw std::bad_alloc();
    std::memcpy(out->data, src.data(), src.size());
    out->size = src.size();
}

void to_bytes(const std::string& src, vqa_bytes* out)
{
    to_bytes(std::vector<std::uint8_t>(src.begin(), src.end()), out);
}

vqattack::DeConfig de_config(const vqa_de_params& p)
{
    vqattack::DeConfig c;
    c.population = p.population;
    c.generations = p.generations;
    c.scale = p.scale;
    c.budget = p.budget;
    c.early_stop = p.early_stop != 0;
    c.snapshots = p.snapshots != 0;
    c.seed = p.seed;
    c.workers = p.workers;
    return c;
}

}  // namespace

extern "C" {

const char* vqa_version(void) { return "0.1.0"; }

const char* vqa_status_name(vqa_status status)
{
    switch (status) {
    case VQA_OK: return "ok";
    case VQA_ERR_INTERNAL: return "internal";
    default:
        if (status >= VQA_ERR_INVALID_ARGUMENT && status <= VQA_ERR_IO)
            return vqattack::errc_name(static_cast<vqattack::Errc>(status));
        return "unknown";
    }
}

const char* vqa_last_error(void) { return last_error.c_str(); }

void vqa_bytes_free(vqa_bytes* bytes)
{
    if (!bytes)
        return;
    std::free(bytes->data);
    bytes->data = nullptr;
    bytes->size = 0;
}

int vqa_is_oracle_error(vqa_status status)
{
    return status == VQA_ERR_ORACLE_TIMEOUT || status == VQA_ERR_ORACLE_TRANSPORT ||
           status == VQA_ERR_ORACLE_PROTOCOL;
}

/* images */

vqa_status vqa_image_load(const uint8_t* data, size_t size, vqa_image** out)
{
    if (auto s = require(out && (data || size == 0), "vqa_image_load: null argument"))
        return s;
    return guarded([&] {
        *out = new vqa_image{vqattack::load_image(std::span<const std::uint8_t>(data, size))};
    });
}

vqa_status vqa_image_read_file(const char* path, vqa_image** out)
{
    if (auto s = require(path && out, "vqa_image_read_file: null argument"))
        return s;
    return guarded([&] { *out = new vqa_image{vqattack::read_image_file(path)}; });
}

vqa_status vqa_image_save(const vqa_image* image, vqa_bytes* out)
{
    if (auto s = require(image && out, "vqa_image_save: null argument"))
        return s;
    return guarded([&] { to_bytes(vqattack::save_image(image->value), out); });
}

vqa_status vqa_image_write_file(const vqa_image* image, const char* path)
{
    if (auto s = require(image && path, "vqa_image_write_file: null argument"))
        return s;
    return guarded([&] { vqattack::write_image_file(path, image->value); });
}

size_t vqa_image_height(const vqa_image* image) { return image ? image->value.height() : 0; }
size_t vqa_image_width(const vqa_image* image) { return image ? image->value.width() : 0; }
size_t vqa_image_channels(const vqa_image* image) { return image ? image->value.channels() : 0; }
void vqa_image_free(vqa_image* image) { delete image; }

/* codebooks */

void vqa_lbg_params_default(vqa_lbg_params* params)
{
    if (!params)
        return;
    const vqattack::LbgParams d;
    *params = {d.length, d.block_w, d.block_h, d.epsilon, d.max_iters, d.seed};
}

vqa_status vqa_codebook_train(const vqa_image* const* images, size_t count,
                              const vqa_lbg_params* params, vqa_codebook** out)
{
    if (auto s = require((images || count == 0) && params && out, "vqa_codebook_train: null argument"))
        return s;
    return guarded([&] {
        std::vector<vqattack::ImageTensor> set;
        set.reserve(count);
        for (size_t i = 0; i < count; ++i) {
            if (!images[i])
                throw vqattack::Error(vqattack::Errc::invalid_argument, "null image in training set");
            set.push_back(images[i]->value);
        }
        vqattack::LbgParams p;
        p.length = params->length;
        p.block_w = params->block_w;
        p.block_h = params->block_h;
        p.epsilon = params->epsilon;
        p.max_iters = params->max_iters;
        p.seed = params->seed;
        *out = new vqa_codebook{vqattack::train_codebook_lbg(set, p)};
    });
}

vqa_status vqa_codebook_sort(const vqa_codebook* codebook, vqa_codebook** out)
{
    if (auto s = require(codebook && out, "vqa_codebook_sort: null argument"))
        return s;
    return guarded([&] { *out = new vqa_codebook{vqattack::sort_codebook(codebook->value).codebook}; });
}

vqa_status vqa_codebook_load(const uint8_t* data, size_t size, vqa_codebook** out)
{
    if (auto s = require(out && (data || size == 0), "vqa_codebook_load: null argument"))
        return s;
    return guarded([&] {
        *out = new vqa_codebook{vqattack::read_codebook(std::span<const std::uint8_t>(data, size))};
    });
}

vqa_status vqa_codebook_read_file(const char* path, vqa_codebook** out)
{
    if (auto s = require(path && out, "vqa_codebook_read_file: null argument"))
        return s;
    return guarded([&] {
        *out = new vqa_codebook{vqattack::read_codebook(vqattack::read_file_bytes(path))};
    });
}

vqa_status vqa_codebook_save(const vqa_codebook* codebook, vqa_bytes* out)
{
    if (auto s = require(codebook && out, "vqa_codebook_save: null argument"))
        return s;
    return guarded([&] { to_bytes(vqattack::write_codebook(codebook->value), out); });
}

vqa_status vqa_codebook_write_file(const vqa_codebook* codebook, const char* path)
{
    if (auto s = require(codebook && path, "vqa_codebook_write_file: null argument"))
        return s;
    return guarded([&] { vqattack::write_file_bytes(path, vqattack::write_codebook(codebook->value)); });
}

size_t vqa_codebook_length(const vqa_codebook* codebook) { return codebook ? codebook->value.length() : 0; }
int vqa_codebook_is_sorted(const vqa_codebook* codebook) { return codebook && codebook->value.sorted(); }

vqa_status vqa_codebook_distance_profile(const vqa_codebook* codebook, size_t reference, double* out,
                                         size_t capacity)
{
    if (auto s = require(codebook && out, "vqa_codebook_distance_profile: null argument"))
        return s;
    if (capacity < codebook->value.length())
        return fail(VQA_ERR_LENGTH_MISMATCH, "output capacity is smaller than the codebook length");
    return guarded([&] {
        const auto profile = vqattack::distance_profile(codebook->value, reference);
        std::copy(profile.distances.begin(), profile.distances.end(), out);
    });
}

void vqa_codebook_free(vqa_codebook* codebook) { delete codebook; }

/* index streams */

vqa_status vqa_encode(const vqa_image* image, const vqa_codebook* codebook, vqa_indices** out)
{
    if (auto s = require(image && codebook && out, "vqa_encode: null argument"))
        return s;
    return guarded([&] { *out = new vqa_indices{vqattack::encode(image->value, codebook->value)}; });
}

vqa_status vqa_decode(const vqa_indices* indices, const vqa_codebook* codebook, vqa_image** out)
{
    if (auto s = require(indices && codebook && out, "vqa_decode: null argument"))
        return s;
    return guarded([&] { *out = new vqa_image{vqattack::decode(indices->value, codebook->value)}; });
}

vqa_status vqa_indices_remap(const vqa_indices* indices, const vqa_codebook* sorted, vqa_indices** out)
{
    if (auto s = require(indices && sorted && out, "vqa_indices_remap: null argument"))
        return s;
    if (!sorted->value.sorted())
        return fail(VQA_ERR_INVALID_ARGUMENT, "vqa_indices_remap: target codebook is not sorted");
    return guarded([&] {
        *out = new vqa_indices{
            vqattack::remap_indices(indices->value, sorted->value.permutation(), sorted->value)};
    });
}

int vqa_indices_bound_to(const vqa_indices* indices, const vqa_codebook* codebook)
{
    return indices && codebook && indices->value.codebook_id() == codebook->value.id() &&
           indices->value.codebook_length() == codebook->value.length();
}

vqa_status vqa_indices_load(const uint8_t* data, size_t size, vqa_indices** out)
{
    if (auto s = require(out && (data || size == 0), "vqa_indices_load: null argument"))
        return s;
    return guarded([&] {
        *out = new vqa_indices{vqattack::read_indices(std::span<const std::uint8_t>(data, size))};
    });
}

vqa_status vqa_indices_read_file(const char* path, vqa_indices** out)
{
    if (auto s = require(path && out, "vqa_indices_read_file: null argument"))
        return s;
    return guarded([&] {
        *out = new vqa_indices{vqattack::read_indices(vqattack::read_file_bytes(path))};
    });
}

vqa_status vqa_indices_save(const vqa_indices* indices, vqa_bytes* out)
{
    if (auto s = require(indices && out, "vqa_indices_save: null argument"))
        return s;
    return guarded([&] { to_bytes(vqattack::write_indices(indices->value), out); });
}

vqa_status vqa_indices_write_file(const vqa_indices* indices, const char* path)
{
    if (auto s = require(indices && path, "vqa_indices_write_file: null argument"))
        return s;
    return guarded([&] { vqattack::write_file_bytes(path, vqattack::write_indices(indices->value)); });
}

size_t vqa_indices_rows(const vqa_indices* indices) { return indices ? indices->value.rows() : 0; }
size_t vqa_indices_cols(const vqa_indices* indices) { return indices ? indices->value.cols() : 0; }
size_t vqa_indices_channels(const vqa_indices* indices) { return indices ? indices->value.channels() : 0; }
void vqa_indices_free(vqa_indices* indices) { delete indices; }

/* oracles */

vqa_status vqa_oracle_load_fixture(const uint8_t* data, size_t size, vqa_oracle** out)
{
    if (auto s = require(out && (data || size == 0), "vqa_oracle_load_fixture: null argument"))
        return s;
    return guarded([&] {
        *out = new vqa_oracle{vqattack::load_fixture(std::span<const std::uint8_t>(data, size))};
    });
}

vqa_status vqa_oracle_load_fixture_file(const char* path, vqa_oracle** out)
{
    if (auto s = require(path && out, "vqa_oracle_load_fixture_file: null argument"))
        return s;
    return guarded([&] { *out = new vqa_oracle{vqattack::load_fixture(vqattack::read_file_bytes(path))}; });
}

vqa_status vqa_oracle_connect(const char* endpoint, uint32_t timeout_ms, vqa_oracle** out)
{
    if (auto s = require(endpoint && out, "vqa_oracle_connect: null argument"))
        return s;
    return guarded([&] {
        *out = new vqa_oracle{vqattack::connect_remote(endpoint, std::chrono::milliseconds(timeout_ms))};
    });
}

vqa_status vqa_oracle_classify(const vqa_oracle* oracle, const vqa_image* image, double* probs,
                               size_t capacity, size_t* classes)
{
    if (auto s = require(oracle && image && probs, "vqa_oracle_classify: null argument"))
        return s;
    if (capacity < oracle->value->classes())
        return fail(VQA_ERR_LENGTH_MISMATCH, "output capacity is smaller than the class count");
    return guarded([&] {
        const auto p = oracle->value->classify(image->value);
        std::copy(p.values().begin(), p.values().end(), probs);
        if (classes)
            *classes = p.classes();
    });
}

size_t vqa_oracle_classes(const vqa_oracle* oracle) { return oracle ? oracle->value->classes() : 0; }
uint64_t vqa_oracle_query_count(const vqa_oracle* oracle) { return oracle ? oracle->value->query_count() : 0; }
void vqa_oracle_free(vqa_oracle* oracle) { delete oracle; }

/* attacks */

void vqa_de_params_default(vqa_de_params* params)
{
    if (!params)
        return;
    const vqattack::DeConfig d;
    *params = {d.population, d.generations, d.scale, d.budget, d.early_stop ? 1 : 0,
               d.snapshots ? 1 : 0, d.seed, d.workers};
}

vqa_status vqa_attack_de(const vqa_indices* indices, const vqa_codebook* codebook,
                         const vqa_oracle* oracle, size_t true_label, const vqa_de_params* params,
                         vqa_attack_result** out)
{
    if (auto s = require(indices && codebook && oracle && params, "vqa_attack_de: null argument"))
        return s;
    return guarded([&] {
        const auto config = de_config(*params);
        vqattack::AttackContext ctx(indices->value, codebook->value, *oracle->value, true_label,
                                    config.effective_budget());
        try {
            auto result = vqattack::de_attack(ctx, config);
            if (out)
                *out = new vqa_attack_result{std::move(result)};
        } catch (const vqattack::AttackAborted& e) {
            if (out)
                *out = new vqa_attack_result{e.partial()};
            throw;
        }
    });
}

vqa_status vqa_attack_random(const vqa_indices* indices, const vqa_codebook* codebook,
                             const vqa_oracle* oracle, size_t true_label, size_t evaluations,
                             uint64_t seed, vqa_attack_result** out)
{
    if (auto s = require(indices && codebook && oracle, "vqa_attack_random: null argument"))
        return s;
    return guarded([&] {
        vqattack::AttackContext ctx(indices->value, codebook->value, *oracle->value, true_label, evaluations);
        try {
            auto result = vqattack::random_search_attack(ctx, evaluations, seed);
            if (out)
                *out = new vqa_attack_result{std::move(result)};
        } catch (const vqattack::AttackAborted& e) {
            if (out)
                *out = new vqa_attack_result{e.partial()};
            throw;
        }
    });
}

int vqa_attack_result_success(const vqa_attack_result* r) { return r && r->value.success; }
size_t vqa_attack_result_adversarial_label(const vqa_attack_result* r) { return r ? r->value.adversarial_label : 0; }
double vqa_attack_result_confidence(const vqa_attack_result* r) { return r ? r->value.confidence : 0.0; }
double vqa_attack_result_fitness(const vqa_attack_result* r) { return r ? r->value.fitness : 1.0; }
size_t vqa_attack_result_evaluations(const vqa_attack_result* r) { return r ? r->value.evaluations : 0; }

size_t vqa_attack_result_perturbation(const vqa_attack_result* r, size_t* row, size_t* col,
                                      uint16_t* values, size_t capacity)
{
    if (!r)
        return 0;
    const auto& p = r->value.best;
    if (row)
        *row = p.row;
    if (col)
        *col = p.col;
    for (size_t ch = 0; values && ch < p.values.size() && ch < capacity; ++ch)
        values[ch] = p.values[ch];
    return p.values.size();
}

vqa_status vqa_attack_result_apply(const vqa_attack_result* result, const vqa_indices* indices,
                                   vqa_indices** out)
{
    if (auto s = require(result && indices && out, "vqa_attack_result_apply: null argument"))
        return s;
    return guarded([&] {
        *out = new vqa_indices{vqattack::apply_perturbation(indices->value, result->value.best)};
    });
}

vqa_status vqa_attack_result_export(const vqa_attack_result* result, vqa_result_format format,
                                    vqa_bytes* out)
{
    if (auto s = require(result && out, "vqa_attack_result_export: null argument"))
        return s;
    return guarded([&] {
        switch (format) {
        case VQA_RESULT_JSON: to_bytes(vqattack::attack_result_to_json(result->value), out); return;
        case VQA_RESULT_TRAJECTORY_CSV: to_bytes(vqattack::trajectory_to_csv(result->value), out); return;
        case VQA_RESULT_SNAPSHOTS_CSV: to_bytes(vqattack::snapshots_to_csv(result->value), out); return;
        }
        throw vqattack::Error(vqattack::Errc::invalid_argument, "unknown result format");
    });
}

void vqa_attack_result_free(vqa_attack_result* result) { delete result; }

/* batches */

void vqa_batch_params_default(vqa_batch_params* params)
{
    if (!params)
        return;
    params->method = VQA_METHOD_DE;
    vqa_de_params_default(&params->de);
    params->random_evaluations = 0;
    params->seed = 0;
    params->workers = 1;
}

vqa_status vqa_dataset_load_manifest(const char* path, vqa_dataset** out)
{
    if (auto s = require(path && out, "vqa_dataset_load_manifest: null argument"))
        return s;
    return guarded([&] { *out = new vqa_dataset{vqattack::load_manifest(path)}; });
}

size_t vqa_dataset_size(const vqa_dataset* dataset) { return dataset ? dataset->value.size() : 0; }
void vqa_dataset_free(vqa_dataset* dataset) { delete dataset; }

vqa_status vqa_batch_run(const vqa_dataset* dataset, const vqa_codebook* codebook,
                         const vqa_oracle* oracle, const vqa_batch_params* params, vqa_report** out)
{
    if (auto s = require(dataset && codebook && oracle && params, "vqa_batch_run: null argument"))
        return s;
    return guarded([&] {
        vqattack::BatchConfig config;
        switch (params->method) {
        case VQA_METHOD_DE: config.method = vqattack::AttackMethod::de; break;
        case VQA_METHOD_DE_UNSORTED: config.method = vqattack::AttackMethod::de_unsorted; break;
        case VQA_METHOD_RANDOM: config.method = vqattack::AttackMethod::random; break;
        default: throw vqattack::Error(vqattack::Errc::invalid_argument, "unknown attack method");
        }
        config.de = de_config(params->de);
        config.random_evaluations = params->random_evaluations;
        config.seed = params->seed;
        config.workers = params->workers;
        try {
            auto report = vqattack::run_batch(dataset->value, codebook->value, *oracle->value, config);
            if (out)
                *out = new vqa_report{std::move(report)};
        } catch (const vqattack::BatchAborted& e) {
            if (out)
                *out = new vqa_report{e.partial()};
            throw;
        }
    });
}

vqa_status vqa_report_export(const vqa_report* report, vqa_report_format format, vqa_bytes* out)
{
    if (auto s = require(report && out, "vqa_report_export: null argument"))
        return s;
    return guarded([&] {
        const auto& r = report->value;
        switch (format) {
        case VQA_REPORT_JSON: to_bytes(vqattack::report_to_json(r), out); return;
        case VQA_REPORT_CSV: to_bytes(vqattack::report_to_csv(r), out); return;
        case VQA_REPORT_HEATMAP_CSV: to_bytes(vqattack::heatmap_to_csv(r), out); return;
        case VQA_REPORT_TRAJECTORIES_CSV: to_bytes(vqattack::trajectories_to_csv(r), out); return;
        case VQA_REPORT_SUMMARY:
            to_bytes(vqattack::format_summary(vqattack::summarize(r)) + "\n", out);
            return;
        }
        throw vqattack::Error(vqattack::Errc::invalid_argument, "unknown report format");
    });
}

vqa_status vqa_report_load_json(const uint8_t* data, size_t size, vqa_report** out)
{
    if (auto s = require(out && (data || size == 0), "vqa_report_load_json: null argument"))
        return s;
    return guarded([&] {
        *out = new vqa_report{vqattack::report_from_json(
            std::string_view(reinterpret_cast<const char*>(data), size))};
    });
}

void vqa_report_summary(const vqa_report* report, size_t* attacked, size_t* excluded, size_t* successes,
                        double* success_rate, double* mean_confidence, int* has_confidence)
{
    if (!report)
        return;
    const auto& r = report->value;
    if (attacked)
        *attacked = r.attacked;
    if (excluded)
        *excluded = r.excluded;
    if (successes)
        *successes = r.successes;
    if (success_rate)
        *success_rate = r.success_rate;
    if (mean_confidence)
        *mean_confidence = r.mean_confidence.value_or(0.0);
    if (has_confidence)
        *has_confidence = r.mean_confidence.has_value();
}

void vqa_report_free(vqa_report* report) { delete report; }

}  // extern "C"
