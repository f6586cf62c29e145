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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "synthetic.hpp"
#include "vqattack/codebook_sort.hpp"
#include "vqattack/experiment.hpp"

using namespace vqattack;

namespace {

// Small campaign: 8x8 colour images, L=64 codebook and a nearest-mean oracle
// built from a separate training split.
struct Campaign {
    Codebook codebook;
    std::unique_ptr<LinearSoftmaxOracle> oracle;
    std::vector<DatasetEntry> dataset;
};

const Campaign& campaign()
{
    static const Campaign c = [] {
        const auto train = fixture::synthetic_dataset(100, 8, 3, 7);
        LbgParams p;
        p.seed = 1;
        auto cb = train_codebook_lbg(fixture::images_of(train), p);
        const auto w = fixture::prototype_weights(train, 10, 4.0);
        auto oracle = std::make_unique<LinearSoftmaxOracle>(w.classes, w.dim, w.weights, w.bias);
        std::vector<DatasetEntry> ds;
        const auto test = fixture::synthetic_dataset(12, 8, 3, 8);
        for (std::size_t i = 0; i < test.size(); ++i)
            ds.push_back({"img" + std::to_string(i), test[i].image, test[i].label});
        return Campaign{std::move(cb), std::move(oracle), std::move(ds)};
    }();
    return c;
}

BatchConfig small_config(AttackMethod method)
{
    BatchConfig cfg;
    cfg.method = method;
    cfg.de.population = 12;
    cfg.de.generations = 8;
    cfg.seed = 3;
    return cfg;
}

std::size_t count_lines(const std::string& text)
{
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

AttackResult with_outcome(bool success, std::size_t label, double confidence)
{
    AttackResult r;
    r.success = success;
    r.adversarial_label = label;
    r.confidence = confidence;
    return r;
}

double stddev(const std::vector<double>& v)
{
    double mean = 0.0;
    for (double x : v)
        mean += x;
    mean /= v.size();
    double acc = 0.0;
    for (double x : v)
        acc += (x - mean) * (x - mean);
    return std::sqrt(acc / v.size());
}

}  // namespace

TEST(Batch, EmptyDataset)
{
    const auto& c = campaign();
    const auto r = run_batch({}, c.codebook, *c.oracle, small_config(AttackMethod::de));
    EXPECT_EQ(r.attacked, 0u);
    EXPECT_EQ(r.success_rate, 0.0);
    EXPECT_FALSE(r.mean_confidence.has_value());
    EXPECT_EQ(format_summary(summarize(r)), "0.0%\tn/a");
}

TEST(Batch, MisclassifiedImagesAreExcluded)
{
    const auto& c = campaign();
    auto ds = c.dataset;
    for (auto& e : ds) {
        const auto before = c.oracle->classify(decode(encode(e.image, c.codebook), c.codebook)).argmax();
        e.label = (before + 1) % 10;
    }
    const auto r = run_batch(ds, c.codebook, *c.oracle, small_config(AttackMethod::de));
    EXPECT_EQ(r.attacked, 0u);
    EXPECT_EQ(r.excluded, ds.size());
    for (const auto& rec : r.records)
        EXPECT_FALSE(rec.attack.has_value());
}

TEST(Batch, RejectsLabelsOutsideOracle)
{
    const auto& c = campaign();
    auto ds = c.dataset;
    ds[0].label = 10;
    EXPECT_THROW(run_batch(ds, c.codebook, *c.oracle, small_config(AttackMethod::de)), Error);
}

TEST(Batch, AllMethodsProduceConsistentReports)
{
    const auto& c = campaign();
    for (auto method : {AttackMethod::de, AttackMethod::de_unsorted, AttackMethod::random}) {
        const auto r = run_batch(c.dataset, c.codebook, *c.oracle, small_config(method));
        EXPECT_EQ(r.attacked + r.excluded, c.dataset.size());
        EXPECT_GT(r.attacked, 0u);
        std::size_t diagonal = 0, total = 0;
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 10; ++j) {
                total += r.heatmap[i][j];
                diagonal += i == j ? r.heatmap[i][j] : 0;
            }
        EXPECT_EQ(diagonal, 0u);
        EXPECT_EQ(total, r.successes);
        for (const auto& rec : r.records) {
            if (rec.attack) {
                EXPECT_EQ(rec.attack->evaluations, 12u * 9u);
            }
        }
    }
}

TEST(Batch, SortedArmDecodesLikeUnsorted)
{
    // Every record's unperturbed decode is identical across arms.
    const auto& c = campaign();
    const auto a = run_batch(c.dataset, c.codebook, *c.oracle, small_config(AttackMethod::de));
    const auto b = run_batch(c.dataset, sort_codebook(c.codebook).codebook, *c.oracle,
                             small_config(AttackMethod::de));
    EXPECT_EQ(report_to_json(a), report_to_json(b));
}

TEST(Batch, DeterministicAcrossWorkerCounts)
{
    const auto& c = campaign();
    auto cfg = small_config(AttackMethod::de);
    const auto a = report_to_json(run_batch(c.dataset, c.codebook, *c.oracle, cfg));
    cfg.workers = 4;
    const auto b = report_to_json(run_batch(c.dataset, c.codebook, *c.oracle, cfg));
    EXPECT_EQ(a, b);
    cfg.seed = 4;
    EXPECT_NE(a, report_to_json(run_batch(c.dataset, c.codebook, *c.oracle, cfg)));
}

TEST(Batch, SeedsDifferPerImage)
{
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}

TEST(Summary, NoSuccessesHasNoConfidence)
{
    std::vector<ImageRecord> recs(3);
    for (std::size_t i = 0; i < 3; ++i) {
        recs[i].index = i;
        recs[i].true_label = 1;
        recs[i].label_before = 1;
        recs[i].attack = with_outcome(false, 1, 0.9);
    }
    const auto s = summarize(aggregate(AttackMethod::de, 3, recs));
    EXPECT_EQ(s.attacked, 3u);
    EXPECT_FALSE(s.mean_confidence.has_value());
    EXPECT_EQ(format_summary(s), "0.0%\tn/a");
}

TEST(Summary, TableStyleFormatting)
{
    std::vector<ImageRecord> recs(4);
    for (std::size_t i = 0; i < 4; ++i) {
        recs[i].index = i;
        recs[i].attack = with_outcome(i == 0, i == 0 ? 2 : 0, i == 0 ? 0.8027 : 0.7);
    }
    const auto s = summarize(aggregate(AttackMethod::de, 3, recs));
    EXPECT_EQ(s.successes, 1u);
    EXPECT_DOUBLE_EQ(s.success_rate, 0.25);
    EXPECT_EQ(format_summary(s), "25.0%\t80.27%");
    EXPECT_EQ(format_summary(Summary{500, 224, 0.448, 0.8027}), "44.8%\t80.27%");
}

TEST(Summary, MatchesIndependentAggregation)
{
    const auto& c = campaign();
    const auto r = run_batch(c.dataset, c.codebook, *c.oracle, small_config(AttackMethod::random));
    std::size_t attacked = 0, successes = 0;
    double conf = 0.0;
    for (const auto& rec : r.records) {
        if (rec.excluded)
            continue;
        ++attacked;
        if (rec.attack->success) {
            ++successes;
            conf += rec.attack->confidence;
        }
    }
    const auto s = summarize(r);
    EXPECT_EQ(s.attacked, attacked);
    EXPECT_EQ(s.successes, successes);
    if (successes) {
        EXPECT_NEAR(*s.mean_confidence, conf / successes, 1e-12);
    }
}

TEST(Report, JsonRoundTrip)
{
    const auto& c = campaign();
    const auto r = run_batch(c.dataset, c.codebook, *c.oracle, small_config(AttackMethod::de));
    const auto json = report_to_json(r);
    const auto back = report_from_json(json);
    EXPECT_EQ(report_to_json(back), json);
    EXPECT_EQ(back.successes, r.successes);
    EXPECT_EQ(back.heatmap, r.heatmap);
    EXPECT_THROW(report_from_json("{"), Error);
    EXPECT_THROW(report_from_json(R"({"method":"nope","classes":2,"records":[]})"), Error);
}

TEST(Report, CsvShapes)
{
    const auto& c = campaign();
    const auto r = run_batch(c.dataset, c.codebook, *c.oracle, small_config(AttackMethod::de));
    const auto csv = report_to_csv(r);
    EXPECT_EQ(count_lines(csv), 1 + r.attacked + r.excluded);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,true_label,attacked_label,success,confidence,evaluations,excluded");

    const auto heat = heatmap_to_csv(r);
    std::istringstream in(heat);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::istringstream cells(line);
        std::string cell;
        std::size_t cols = 0;
        while (std::getline(cells, cell, ',')) {
            ++cols;
            EXPECT_GE(std::stoll(cell), 0);
        }
        EXPECT_EQ(cols, 10u);
    }
    EXPECT_EQ(rows, 10u);

    const auto traj = trajectories_to_csv(r);
    EXPECT_EQ(count_lines(traj), 1 + r.attacked * 9);
}

TEST(Report, AttackResultJsonRoundTrip)
{
    const auto& c = campaign();
    const auto idx = encode(c.dataset[0].image, c.codebook);
    AttackContext ctx(idx, c.codebook, *c.oracle, c.dataset[0].label, 1000);
    DeConfig cfg;
    cfg.population = 8;
    cfg.generations = 5;
    cfg.snapshots = true;
    const auto r = de_attack(ctx, cfg);
    const auto json = attack_result_to_json(r);
    const auto back = attack_result_from_json(json);
    EXPECT_EQ(attack_result_to_json(back), json);
    EXPECT_EQ(back.fitness_log, r.fitness_log);
    EXPECT_EQ(back.best, r.best);
    EXPECT_EQ(count_lines(trajectory_to_csv(r)), 1 + 6u);
    EXPECT_EQ(count_lines(snapshots_to_csv(r)), 1 + 3u * 8u * 3u);
}

TEST(Snapshots, InitialMiddleFinal)
{
    const auto& c = campaign();
    const auto idx = encode(c.dataset[1].image, c.codebook);
    for (std::size_t gens : {7u, 8u}) {
        AttackContext ctx(idx, c.codebook, *c.oracle, c.dataset[1].label, 1u << 20);
        DeConfig cfg;
        cfg.population = 10;
        cfg.generations = gens;
        cfg.snapshots = true;
        const auto r = de_attack(ctx, cfg);
        ASSERT_EQ(r.snapshots.size(), 3u);
        EXPECT_EQ(r.snapshots[0].stage, "initial");
        EXPECT_EQ(r.snapshots[0].generation, 0u);
        EXPECT_EQ(r.snapshots[0].individuals.size(), 10u);
        EXPECT_EQ(r.snapshots[1].stage, "middle");
        EXPECT_EQ(r.snapshots[1].generation, (gens + 1) / 2);
        EXPECT_EQ(r.snapshots[2].stage, "final");
        EXPECT_EQ(r.snapshots[2].generation, gens);
    }
}

TEST(Snapshots, SortedPopulationConverges)
{
    const auto& c = campaign();
    const auto sorted = sort_codebook(c.codebook);
    std::size_t shrank = 0, runs = 0;
    for (std::size_t i = 0; i < c.dataset.size(); ++i) {
        const auto idx = remap_indices(encode(c.dataset[i].image, c.codebook), sorted.permutation, sorted.codebook);
        const auto truth = c.oracle->classify(decode(idx, sorted.codebook)).argmax();
        AttackContext ctx(idx, sorted.codebook, *c.oracle, truth, 1u << 20);
        DeConfig cfg;
        cfg.snapshots = true;
        cfg.seed = i;
        const auto r = de_attack(ctx, cfg);
        // Mean over channels of the per-channel spread across the population.
        auto spread = [](const PopulationSnapshot& s) {
            double total = 0.0;
            const std::size_t channels = s.individuals.front().perturbation.values.size();
            for (std::size_t ch = 0; ch < channels; ++ch) {
                std::vector<double> v;
                for (const auto& ind : s.individuals)
                    v.push_back(ind.perturbation.values[ch]);
                total += stddev(v);
            }
            return total / channels;
        };
        ++runs;
        shrank += spread(r.snapshots.back()) <= spread(r.snapshots.front());
    }
    EXPECT_EQ(shrank, runs);
}

TEST(Manifest, LoadsRelativePaths)
{
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "vqattack_manifest_test";
    fs::create_directories(dir / "imgs");
    const auto& c = campaign();
    write_image_file((dir / "imgs" / "a.ppm").string(), c.dataset[0].image);
    write_image_file((dir / "imgs" / "b.ppm").string(), c.dataset[1].image);
    {
        std::ofstream m(dir / "manifest.csv");
        m << "file,label\nimgs/a.ppm,3\n\nimgs/b.ppm, 7\n";
    }
    const auto ds = load_manifest((dir / "manifest.csv").string());
    ASSERT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds[0].label, 3u);
    EXPECT_EQ(ds[1].label, 7u);
    EXPECT_EQ(ds[1].image, c.dataset[1].image);
    {
        std::ofstream m(dir / "bad.csv");
        m << "imgs/a.ppm,3\nimgs/b.ppm,x\n";
    }
    EXPECT_THROW(load_manifest((dir / "bad.csv").string()), Error);
    EXPECT_THROW(load_manifest((dir / "missing.csv").string()), Error);
    fs::remove_all(dir);
}

TEST(Methods, NamesRoundTrip)
{
    for (auto m : {AttackMethod::de, AttackMethod::de_unsorted, AttackMethod::random})
        EXPECT_EQ(parse_method(method_name(m)), m);
    EXPECT_FALSE(parse_method("genetic").has_value());
}
