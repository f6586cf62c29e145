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

#include "vqattack/experiment.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include "parallel.hpp"
#include "vqattack/codebook_sort.hpp"

namespace vqattack {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::optional<std::size_t> parse_size(std::string_view s)
{
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        return std::nullopt;
    return v;
}

}  // namespace

std::vector<DatasetEntry> load_manifest(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io, "cannot open manifest " + path);
    const auto base = std::filesystem::path(path).parent_path();
    std::vector<DatasetEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw Error(Errc::invalid_argument, path + ":" + std::to_string(line_no) +
                                                    ": expected \"filename,label\"");
        const auto file = trim(std::string_view(line).substr(0, comma));
        const auto label = parse_size(trim(std::string_view(line).substr(comma + 1)));
        if (!label) {
            if (out.empty() && line_no == 1)
                continue;
            throw Error(Errc::invalid_argument, path + ":" + std::to_string(line_no) +
                                                    ": label is not a non-negative integer");
        }
        out.push_back({file, read_image_file((base / file).string()), *label});
    }
    return out;
}

const char* method_name(AttackMethod method) noexcept
{
    switch (method) {
    case AttackMethod::de: return "de";
    case AttackMethod::de_unsorted: return "de-unsorted";
    case AttackMethod::random: return "random";
    }
    return "de";
}

std::optional<AttackMethod> parse_method(std::string_view name) noexcept
{
    if (name == "de")
        return AttackMethod::de;
    if (name == "de-unsorted")
        return AttackMethod::de_unsorted;
    if (name == "random")
        return AttackMethod::random;
    return std::nullopt;
}

std::uint64_t derive_seed(std::uint64_t seed, std::size_t index) noexcept
{
    // splitmix64 over (seed, index)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

BatchReport aggregate(AttackMethod method, std::size_t classes, std::vector<ImageRecord> records)
{
    BatchReport r;
    r.method = method;
    r.classes = classes;
    r.heatmap.assign(classes, std::vector<std::size_t>(classes, 0));
    r.before_counts.assign(classes, 0);
    r.after_counts.assign(classes, 0);
    double confidence = 0.0;
    for (const auto& rec : records) {
        if (rec.excluded || !rec.attack) {
            r.excluded += rec.excluded ? 1 : 0;
            continue;
        }
        const auto& a = *rec.attack;
        if (rec.true_label >= classes || rec.label_before >= classes || a.adversarial_label >= classes)
            throw Error(Errc::invalid_argument, "record label outside [0, " + std::to_string(classes) + ")");
        ++r.attacked;
        ++r.before_counts[rec.label_before];
        ++r.after_counts[a.adversarial_label];
        if (a.success) {
            ++r.successes;
            ++r.heatmap[rec.true_label][a.adversarial_label];
            confidence += a.confidence;
        }
    }
    r.success_rate = r.attacked ? static_cast<double>(r.successes) / static_cast<double>(r.attacked) : 0.0;
    if (r.successes)
        r.mean_confidence = confidence / static_cast<double>(r.successes);
    r.records = std::move(records);
    return r;
}

BatchReport run_batch(const std::vector<DatasetEntry>& dataset, const Codebook& codebook,
                      const Oracle& oracle, const BatchConfig& config)
{
    for (const auto& entry : dataset)
        if (entry.label >= oracle.classes())
            throw Error(Errc::invalid_argument, "label of " + entry.id + " outside [0, " +
                                                    std::to_string(oracle.classes()) + ")");

    const Codebook unsorted = unsort_codebook(codebook);
    std::optional<Codebook> sorted;
    if (config.method == AttackMethod::de)
        sorted = codebook.sorted() ? codebook : sort_codebook(unsorted).codebook;
    const std::size_t budget = config.method == AttackMethod::random && config.random_evaluations != 0
                                   ? config.random_evaluations
                                   : config.de.effective_budget();

    std::vector<std::optional<ImageRecord>> slots(dataset.size());
    auto attack_one = [&](std::size_t i) {
        const auto& entry = dataset[i];
        ImageRecord rec;
        rec.index = i;
        rec.id = entry.id;
        rec.true_label = entry.label;
        rec.seed = derive_seed(config.seed, i);

        const auto indices = encode(entry.image, unsorted);
        rec.label_before = oracle.classify(decode(indices, unsorted)).argmax();
        rec.excluded = rec.label_before != entry.label;
        if (!rec.excluded) {
            if (config.method == AttackMethod::random) {
                AttackContext ctx(indices, unsorted, oracle, entry.label, budget);
                rec.attack = random_search_attack(ctx, budget, rec.seed);
            } else {
                DeConfig de = config.de;
                de.seed = rec.seed;
                de.workers = 1;
                if (sorted) {
                    AttackContext ctx(remap_indices(indices, sorted->permutation(), *sorted), *sorted,
                                      oracle, entry.label, budget);
                    rec.attack = de_attack(ctx, de);
                } else {
                    AttackContext ctx(indices, unsorted, oracle, entry.label, budget);
                    rec.attack = de_attack(ctx, de);
                }
            }
        }
        slots[i] = std::move(rec);
    };

    auto collect = [&] {
        std::vector<ImageRecord> done;
        for (auto& s : slots)
            if (s)
                done.push_back(std::move(*s));
        return aggregate(config.method, oracle.classes(), std::move(done));
    };

    try {
        detail::parallel_for(dataset.size(), config.workers, attack_one);
    } catch (const Error& e) {
        if (!is_oracle_error(e.code()))
            throw;
        throw BatchAborted(e, collect());
    }
    return collect();
}

Summary summarize(const BatchReport& report)
{
    return {report.attacked, report.successes, report.success_rate, report.mean_confidence};
}

std::string format_summary(const Summary& summary)
{
    char buf[64];
    if (summary.mean_confidence)
        std::snprintf(buf, sizeof buf, "%.1f%%\t%.2f%%", 100.0 * summary.success_rate,
                      100.0 * *summary.mean_confidence);
    else
        std::snprintf(buf, sizeof buf, "%.1f%%\tn/a", 100.0 * summary.success_rate);
    return buf;
}

}  // namespace vqattack
