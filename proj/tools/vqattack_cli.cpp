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

// vqattack command-line driver. Everything goes through the C API.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vqattack/vqattack.h"

namespace {

namespace fs = std::filesystem;

constexpr int kExitValidation = 1;
constexpr int kExitOracle = 2;

// Failure carrying the flag it concerns and the exit code to use.
struct CliError {
    int exit_code;
    std::string message;
};

template <typename T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using ImagePtr = std::unique_ptr<vqa_image, Deleter<vqa_image, vqa_image_free>>;
using CodebookPtr = std::unique_ptr<vqa_codebook, Deleter<vqa_codebook, vqa_codebook_free>>;
using IndicesPtr = std::unique_ptr<vqa_indices, Deleter<vqa_indices, vqa_indices_free>>;
using OraclePtr = std::unique_ptr<vqa_oracle, Deleter<vqa_oracle, vqa_oracle_free>>;
using ResultPtr = std::unique_ptr<vqa_attack_result, Deleter<vqa_attack_result, vqa_attack_result_free>>;
using DatasetPtr = std::unique_ptr<vqa_dataset, Deleter<vqa_dataset, vqa_dataset_free>>;
using ReportPtr = std::unique_ptr<vqa_report, Deleter<vqa_report, vqa_report_free>>;

void check(vqa_status status, const std::string& flag)
{
    if (status == VQA_OK)
        return;
    const int code = vqa_is_oracle_error(status) ? kExitOracle : kExitValidation;
    throw CliError{code, flag + ": " + vqa_last_error() + " [" + vqa_status_name(status) + "]"};
}

[[noreturn]] void invalid(const std::string& flag, const std::string& message)
{
    throw CliError{kExitValidation, flag + ": " + message};
}

void write_text(const std::string& path, const std::string& flag, const std::uint8_t* data, std::size_t size)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        invalid(flag, "cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out)
        invalid(flag, "failed writing " + path);
}

void write_bytes(const std::string& path, const std::string& flag, vqa_bytes& bytes)
{
    write_text(path, flag, bytes.data, bytes.size);
    vqa_bytes_free(&bytes);
}

std::pair<std::size_t, std::size_t> parse_block(const std::string& text)
{
    const auto x = text.find_first_of("xX");
    if (x == std::string::npos)
        invalid("--block", "expected WxH, got \"" + text + "\"");
    try {
        std::size_t used_w = 0, used_h = 0;
        const auto w = std::stoul(text.substr(0, x), &used_w);
        const auto h = std::stoul(text.substr(x + 1), &used_h);
        if (used_w != x || used_h != text.size() - x - 1 || w == 0 || h == 0)
            throw std::invalid_argument(text);
        return {w, h};
    } catch (const std::exception&) {
        invalid("--block", "expected WxH with positive integers, got \"" + text + "\"");
    }
}

struct OracleFlags {
    std::string url;
    std::string fixture;
    std::uint32_t timeout_ms = 10000;
};

void add_oracle_flags(CLI::App* cmd, OracleFlags& flags)
{
    auto* url = cmd->add_option("--oracle", flags.url, "Oracle endpoint URL (fallback: VQATTACK_ORACLE_URL)");
    auto* fixture = cmd->add_option("--fixture", flags.fixture, "Linear-softmax fixture weight file");
    url->excludes(fixture);
    cmd->add_option("--timeout-ms", flags.timeout_ms, "Oracle request timeout in milliseconds")
        ->check(CLI::PositiveNumber);
}

OraclePtr open_oracle(const OracleFlags& flags)
{
    vqa_oracle* raw = nullptr;
    if (!flags.fixture.empty()) {
        check(vqa_oracle_load_fixture_file(flags.fixture.c_str(), &raw), "--fixture");
        return OraclePtr(raw);
    }
    std::string url = flags.url;
    if (url.empty())
        if (const char* env = std::getenv("VQATTACK_ORACLE_URL"))
            url = env;
    if (url.empty())
        invalid("--oracle", "no oracle given (use --oracle URL, --fixture FILE or VQATTACK_ORACLE_URL)");
    check(vqa_oracle_connect(url.c_str(), flags.timeout_ms, &raw), "--oracle");
    return OraclePtr(raw);
}

void add_de_flags(CLI::App* cmd, vqa_de_params& de)
{
    cmd->add_option("--population", de.population, "DE population size")->capture_default_str();
    cmd->add_option("--generations", de.generations, "DE generations")->capture_default_str();
    cmd->add_option("--scale", de.scale, "DE mutation scale factor")->capture_default_str();
    cmd->add_option("--budget", de.budget, "Evaluation budget (0: population * (generations + 1))")
        ->capture_default_str();
    cmd->add_flag("--early-stop", de.early_stop, "Stop at the first misclassifying candidate");
    cmd->add_option("--seed", de.seed, "RNG seed")->capture_default_str();
}

void validate_de(const vqa_de_params& de)
{
    if (de.population < 4)
        invalid("--population", "must be at least 4");
    if (!(de.scale > 0.0 && de.scale <= 2.0))
        invalid("--scale", "must be in (0, 2]");
    const std::size_t budget = de.budget ? de.budget : de.population * (de.generations + 1);
    if (budget < de.population)
        invalid("--budget", "must be at least the population size");
}

std::vector<fs::path> image_files(const std::string& dir)
{
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        invalid("--images", dir + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm"))
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        invalid("--images", "no .pgm/.ppm files in " + dir);
    return files;
}

// A stream encoded with the unsorted codebook is rebound to the sorted one.
IndicesPtr bind_indices(IndicesPtr indices, const vqa_codebook* codebook)
{
    if (vqa_indices_bound_to(indices.get(), codebook) || !vqa_codebook_is_sorted(codebook))
        return indices;
    vqa_indices* remapped = nullptr;
    check(vqa_indices_remap(indices.get(), codebook, &remapped), "--indices");
    return IndicesPtr(remapped);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"One-index adversarial attacks on vector-quantized images"};
    app.require_subcommand(1);
    app.set_version_flag("--version", vqa_version());

    // train-codebook
    vqa_lbg_params lbg;
    vqa_lbg_params_default(&lbg);
    std::string images_dir, block = "2x2", train_out;
    auto* train = app.add_subcommand("train-codebook", "Train an LBG codebook from a directory of images");
    train->add_option("--images", images_dir, "Directory of PGM/PPM training images")->required();
    train->add_option("--L", lbg.length, "Codebook length")->capture_default_str();
    train->add_option("--block", block, "Block size WxH")->capture_default_str();
    train->add_option("--epsilon", lbg.epsilon, "Relative distortion threshold")->capture_default_str();
    train->add_option("--max-iters", lbg.max_iters, "Lloyd iterations per splitting stage")->capture_default_str();
    train->add_option("--seed", lbg.seed, "RNG seed")->capture_default_str();
    train->add_option("--out", train_out, "Output codebook file")->required();

    // sort-codebook
    std::string sort_in, sort_out;
    auto* sort = app.add_subcommand("sort-codebook", "Sort codewords by first principal component");
    sort->add_option("--in", sort_in, "Unsorted codebook file")->required();
    sort->add_option("--out", sort_out, "Sorted codebook file")->required();

    // encode / decode
    std::string enc_image, enc_codebook, enc_out;
    auto* enc = app.add_subcommand("encode", "Encode an image into a VQ index file");
    enc->add_option("--image", enc_image, "PGM/PPM image")->required();
    enc->add_option("--codebook", enc_codebook, "Codebook file")->required();
    enc->add_option("--out", enc_out, "Output index file")->required();

    std::string dec_indices, dec_codebook, dec_out;
    auto* dec = app.add_subcommand("decode", "Decode a VQ index file into an image");
    dec->add_option("--indices", dec_indices, "Index file")->required();
    dec->add_option("--codebook", dec_codebook, "Codebook file")->required();
    dec->add_option("--out", dec_out, "Output PGM/PPM image")->required();

    // attack
    vqa_de_params de;
    vqa_de_params_default(&de);
    OracleFlags attack_oracle;
    std::string atk_indices, atk_codebook, atk_report, atk_trajectory, atk_snapshots, atk_adversarial;
    std::size_t true_label = 0;
    auto* attack = app.add_subcommand("attack", "Run the one-index DE attack on a single index file");
    attack->add_option("--indices", atk_indices, "Index file to attack")->required();
    attack->add_option("--codebook", atk_codebook, "Codebook file")->required();
    add_oracle_flags(attack, attack_oracle);
    attack->add_option("--true-label", true_label, "True class of the image")->required();
    add_de_flags(attack, de);
    attack->add_option("--report", atk_report, "Output JSON report")->required();
    attack->add_option("--trajectory", atk_trajectory, "Output CSV of (generation, best fitness)");
    attack->add_option("--snapshots", atk_snapshots, "Output CSV of initial/middle/final populations");
    attack->add_option("--adversarial", atk_adversarial, "Output index file with the best perturbation applied");

    // batch
    vqa_batch_params batch_params;
    vqa_batch_params_default(&batch_params);
    OracleFlags batch_oracle;
    std::string manifest, batch_codebook, batch_dir, method = "de";
    auto* batch = app.add_subcommand("batch", "Attack every image of a manifest and write a report directory");
    batch->add_option("--manifest", manifest, "Manifest CSV (filename, true label)")->required();
    batch->add_option("--codebook", batch_codebook, "Codebook file (sorted or unsorted)")->required();
    add_oracle_flags(batch, batch_oracle);
    batch->add_option("--method", method, "de | de-unsorted | random")
        ->check(CLI::IsMember({"de", "de-unsorted", "random"}))
        ->capture_default_str();
    add_de_flags(batch, batch_params.de);
    batch->add_option("--random-evaluations", batch_params.random_evaluations,
                      "Random-search draws (0: match the DE budget)");
    batch->add_option("--workers", batch_params.workers, "Images attacked concurrently")->capture_default_str();
    batch->add_option("--report", batch_dir, "Output report directory")->required();

    // distance-profile
    std::string prof_codebook, prof_out;
    std::size_t reference = 0;
    auto* profile = app.add_subcommand("distance-profile", "Distances from one codeword to all others");
    profile->add_option("--codebook", prof_codebook, "Codebook file")->required();
    profile->add_option("--ref", reference, "Reference codeword index")->required();
    profile->add_option("--out", prof_out, "Output CSV (index, distance)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        if (*train) {
            const auto [bw, bh] = parse_block(block);
            lbg.block_w = bw;
            lbg.block_h = bh;
            if (lbg.length < 2)
                invalid("--L", "must be at least 2");
            if (lbg.length > 65536)
                invalid("--L", "must be at most 65536");
            if (!(lbg.epsilon >= 0.0))
                invalid("--epsilon", "must be non-negative");
            std::vector<ImagePtr> owned;
            std::vector<const vqa_image*> images;
            for (const auto& file : image_files(images_dir)) {
                vqa_image* img = nullptr;
                check(vqa_image_read_file(file.string().c_str(), &img), "--images");
                owned.emplace_back(img);
                images.push_back(img);
            }
            std::cerr << "training L=" << lbg.length << " on " << images.size() << " images\n";
            vqa_codebook* cb = nullptr;
            check(vqa_codebook_train(images.data(), images.size(), &lbg, &cb), "--images");
            CodebookPtr codebook(cb);
            check(vqa_codebook_write_file(codebook.get(), train_out.c_str()), "--out");
        } else if (*sort) {
            vqa_codebook* cb = nullptr;
            check(vqa_codebook_read_file(sort_in.c_str(), &cb), "--in");
            CodebookPtr in(cb);
            vqa_codebook* sorted = nullptr;
            check(vqa_codebook_sort(in.get(), &sorted), "--in");
            CodebookPtr out(sorted);
            check(vqa_codebook_write_file(out.get(), sort_out.c_str()), "--out");
        } else if (*enc) {
            vqa_image* img = nullptr;
            check(vqa_image_read_file(enc_image.c_str(), &img), "--image");
            ImagePtr image(img);
            vqa_codebook* cb = nullptr;
            check(vqa_codebook_read_file(enc_codebook.c_str(), &cb), "--codebook");
            CodebookPtr codebook(cb);
            vqa_indices* idx = nullptr;
            check(vqa_encode(image.get(), codebook.get(), &idx), "--image");
            IndicesPtr indices(idx);
            check(vqa_indices_write_file(indices.get(), enc_out.c_str()), "--out");
        } else if (*dec) {
            vqa_indices* idx = nullptr;
            check(vqa_indices_read_file(dec_indices.c_str(), &idx), "--indices");
            vqa_codebook* cb = nullptr;
            check(vqa_codebook_read_file(dec_codebook.c_str(), &cb), "--codebook");
            CodebookPtr codebook(cb);
            IndicesPtr indices = bind_indices(IndicesPtr(idx), codebook.get());
            vqa_image* img = nullptr;
            check(vqa_decode(indices.get(), codebook.get(), &img), "--codebook");
            ImagePtr image(img);
            check(vqa_image_write_file(image.get(), dec_out.c_str()), "--out");
        } else if (*attack) {
            validate_de(de);
            de.snapshots = atk_snapshots.empty() ? 0 : 1;
            vqa_codebook* cb = nullptr;
            check(vqa_codebook_read_file(atk_codebook.c_str(), &cb), "--codebook");
            CodebookPtr codebook(cb);
            vqa_indices* idx = nullptr;
            check(vqa_indices_read_file(atk_indices.c_str(), &idx), "--indices");
            IndicesPtr indices = bind_indices(IndicesPtr(idx), codebook.get());
            OraclePtr oracle = open_oracle(attack_oracle);
            if (true_label >= vqa_oracle_classes(oracle.get()))
                invalid("--true-label", "must be below the oracle's class count " +
                                            std::to_string(vqa_oracle_classes(oracle.get())));

            vqa_attack_result* res = nullptr;
            const auto status = vqa_attack_de(indices.get(), codebook.get(), oracle.get(), true_label, &de, &res);
            ResultPtr result(res);
            if (status != VQA_OK && result) {
                vqa_bytes partial{};
                if (vqa_attack_result_export(result.get(), VQA_RESULT_JSON, &partial) == VQA_OK)
                    write_bytes(atk_report, "--report", partial);
            }
            check(status, "--oracle");

            vqa_bytes bytes{};
            check(vqa_attack_result_export(result.get(), VQA_RESULT_JSON, &bytes), "--report");
            write_bytes(atk_report, "--report", bytes);
            if (!atk_trajectory.empty()) {
                check(vqa_attack_result_export(result.get(), VQA_RESULT_TRAJECTORY_CSV, &bytes), "--trajectory");
                write_bytes(atk_trajectory, "--trajectory", bytes);
            }
            if (!atk_snapshots.empty()) {
                check(vqa_attack_result_export(result.get(), VQA_RESULT_SNAPSHOTS_CSV, &bytes), "--snapshots");
                write_bytes(atk_snapshots, "--snapshots", bytes);
            }
            if (!atk_adversarial.empty()) {
                vqa_indices* adv = nullptr;
                check(vqa_attack_result_apply(result.get(), indices.get(), &adv), "--adversarial");
                IndicesPtr adversarial(adv);
                check(vqa_indices_write_file(adversarial.get(), atk_adversarial.c_str()), "--adversarial");
            }
            std::printf("success=%d label=%zu confidence=%.4f fitness=%.6f evaluations=%zu\n",
                        vqa_attack_result_success(result.get()),
                        vqa_attack_result_adversarial_label(result.get()),
                        vqa_attack_result_confidence(result.get()), vqa_attack_result_fitness(result.get()),
                        vqa_attack_result_evaluations(result.get()));
        } else if (*batch) {
            validate_de(batch_params.de);
            batch_params.method = method == "de"            ? VQA_METHOD_DE
                                  : method == "de-unsorted" ? VQA_METHOD_DE_UNSORTED
                                                            : VQA_METHOD_RANDOM;
            if (batch_params.workers == 0)
                invalid("--workers", "must be at least 1");
            vqa_dataset* ds = nullptr;
            check(vqa_dataset_load_manifest(manifest.c_str(), &ds), "--manifest");
            DatasetPtr dataset(ds);
            vqa_codebook* cb = nullptr;
            check(vqa_codebook_read_file(batch_codebook.c_str(), &cb), "--codebook");
            CodebookPtr codebook(cb);
            OraclePtr oracle = open_oracle(batch_oracle);

            std::error_code ec;
            fs::create_directories(batch_dir, ec);
            if (ec)
                invalid("--report", "cannot create " + batch_dir + ": " + ec.message());
            std::cerr << "attacking " << vqa_dataset_size(dataset.get()) << " images with " << method << "\n";

            vqa_report* rep = nullptr;
            const auto status = vqa_batch_run(dataset.get(), codebook.get(), oracle.get(), &batch_params, &rep);
            ReportPtr report(rep);
            if (report) {
                const std::pair<vqa_report_format, const char*> outputs[] = {
                    {VQA_REPORT_JSON, "report.json"},
                    {VQA_REPORT_CSV, "records.csv"},
                    {VQA_REPORT_HEATMAP_CSV, "heatmap.csv"},
                    {VQA_REPORT_TRAJECTORIES_CSV, "trajectories.csv"},
                    {VQA_REPORT_SUMMARY, "summary.txt"},
                };
                for (const auto& [format, name] : outputs) {
                    vqa_bytes bytes{};
                    check(vqa_report_export(report.get(), format, &bytes), "--report");
                    write_bytes((fs::path(batch_dir) / name).string(), "--report", bytes);
                }
            }
            check(status, "--oracle");
            vqa_bytes summary{};
            check(vqa_report_export(report.get(), VQA_REPORT_SUMMARY, &summary), "--report");
            std::fwrite(summary.data, 1, summary.size, stdout);
            vqa_bytes_free(&summary);
        } else if (*profile) {
            vqa_codebook* cb = nullptr;
            check(vqa_codebook_read_file(prof_codebook.c_str(), &cb), "--codebook");
            CodebookPtr codebook(cb);
            std::vector<double> distances(vqa_codebook_length(codebook.get()));
            check(vqa_codebook_distance_profile(codebook.get(), reference, distances.data(), distances.size()),
                  "--ref");
            std::string csv = "index,distance\n";
            char line[64];
            for (std::size_t j = 0; j < distances.size(); ++j) {
                std::snprintf(line, sizeof line, "%zu,%.9g\n", j, distances[j]);
                csv += line;
            }
            write_text(prof_out, "--out", reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size());
        }
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.exit_code;
    }
    return 0;
}
