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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vqattack/attack.hpp"
#include "vqattack/image_io.hpp"
#include "vqattack/oracle.hpp"
#include "vqattack/vq_codec.hpp"

namespace vqattack {

struct DatasetEntry {
    std::string id;
    ImageTensor image;
    std::size_t label = 0;
};

// Reads a manifest CSV of (filename, true label) rows; filenames resolve
// relative to the manifest's directory. A non-numeric first row is taken as
// a header and skipped.
std::vector<DatasetEntry> load_manifest(const std::string& path);

enum class AttackMethod { de, de_unsorted, random };

const char* method_name(AttackMethod method) noexcept;
std::optional<AttackMethod> parse_method(std::string_view name) noexcept;

struct BatchConfig {
    AttackMethod method = AttackMethod::de;
    DeConfig de;                         // de.seed is replaced by the per-image seed
    std::size_t random_evaluations = 0;  // 0: match de.effective_budget()
    std::uint64_t seed = 0;
    std::size_t workers = 1;             // images attacked concurrently
};

// Seed for image `index` of a campaign seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::size_t index) noexcept;

struct ImageRecord {
    std::size_t index = 0;
    std::string id;
    std::size_t true_label = 0;
    std::size_t label_before = 0;  // oracle label of the unperturbed decoded image
    bool excluded = false;         // misclassified before any perturbation
    std::uint64_t seed = 0;
    std::optional<AttackResult> attack;
};

struct BatchReport {
    AttackMethod method = AttackMethod::de;
    std::size_t classes = 0;
    std::vector<ImageRecord> records;  // ordered by index
    std::size_t attacked = 0;
    std::size_t excluded = 0;
    std::size_t successes = 0;
    double success_rate = 0.0;  // 0 when nothing was attacked
    std::optional<double> mean_confidence;             // over successes only
    std::vector<std::vector<std::size_t>> heatmap;     // [true][adversarial], successes only
    std::vector<std::size_t> before_counts;            // oracle labels of attacked images, before
    std::vector<std::size_t> after_counts;             // and after the attack
};

// Recomputes every aggregate of a report from its records.
BatchReport aggregate(AttackMethod method, std::size_t classes, std::vector<ImageRecord> records);

class BatchAborted : public Error {
public:
    BatchAborted(const Error& cause, BatchReport partial)
        : Error(cause.code(), cause.what()), partial_(std::move(partial))
    {
    }
    const BatchReport& partial() const noexcept { return partial_; }

private:
    BatchReport partial_;
};

// Attacks every correctly classified image of `dataset`. `de` runs against the
// PCA-sorted codebook, `de-unsorted` and `random` against the unsorted one;
// `codebook` may be given in either form.
BatchReport run_batch(const std::vector<DatasetEntry>& dataset, const Codebook& codebook,
                      const Oracle& oracle, const BatchConfig& config);

struct Summary {
    std::size_t attacked = 0;
    std::size_t successes = 0;
    double success_rate = 0.0;
    std::optional<double> mean_confidence;
};

Summary summarize(const BatchReport& report);

// "44.8%\t80.27%"; the confidence column reads "n/a" without successes.
std::string format_summary(const Summary& summary);

std::string report_to_json(const BatchReport& report);
BatchReport report_from_json(std::string_view json);
std::string report_to_csv(const BatchReport& report);
std::string heatmap_to_csv(const BatchReport& report);
std::string trajectories_to_csv(const BatchReport& report);

std::string attack_result_to_json(const AttackResult& result);
AttackResult attack_result_from_json(std::string_view json);
std::string trajectory_to_csv(const AttackResult& result);
std::string snapshots_to_csv(const AttackResult& result);

}  // namespace vqattack
