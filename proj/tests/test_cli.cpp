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
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "vqattack/codebook_sort.hpp"
#include "vqattack/experiment.hpp"

namespace fs = std::filesystem;
using namespace vqattack;

namespace {

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        dir_ = fs::temp_directory_path() / "vqattack_cli_test";
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        ASSERT_EQ(run_raw(std::string(VQATTACK_FIXTURES) + " --out " + (dir_ / "data").string() +
                          " --count 12 --size 8 --seed 7"),
                  0);
        ASSERT_EQ(run({"train-codebook", "--images", (dir_ / "data" / "images").string(), "--L", "32",
                       "--seed", "1", "--out", path("cb.vqcb")}),
                  0);
    }

    static void TearDownTestSuite() { fs::remove_all(dir_); }

    static int run_raw(const std::string& cmd)
    {
        const int status = std::system((cmd + " >" + (dir_ / "stdout.txt").string() + " 2>" +
                                        (dir_ / "stderr.txt").string())
                                           .c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    static int run(std::initializer_list<std::string> args, const std::string& env = "")
    {
        std::string cmd = env.empty() ? "" : env + " ";
        cmd += VQATTACK_CLI;
        for (const auto& a : args)
            cmd += " '" + a + "'";
        return run_raw(cmd);
    }

    static std::string path(const std::string& name) { return (dir_ / name).string(); }

    static std::string slurp(const std::string& p)
    {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    static std::string err() { return slurp((dir_ / "stderr.txt").string()); }

    static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, EncodeDecodeMatchesLibrary)
{
    const auto image = (dir_ / "data" / "images" / "img_0003.ppm").string();
    ASSERT_EQ(run({"encode", "--image", image, "--codebook", path("cb.vqcb"), "--out", path("i.vqix")}), 0) << err();
    ASSERT_EQ(run({"decode", "--indices", path("i.vqix"), "--codebook", path("cb.vqcb"), "--out", path("d.ppm")}), 0)
        << err();
    const auto cb = read_codebook(read_file_bytes(path("cb.vqcb")));
    const auto expected = save_image(decode(encode(read_image_file(image), cb), cb));
    const auto got = read_file_bytes(path("d.ppm"));
    EXPECT_EQ(got, expected);

    // Sorted codebook: the unsorted stream is remapped on the fly.
    ASSERT_EQ(run({"sort-codebook", "--in", path("cb.vqcb"), "--out", path("sorted.vqcb")}), 0) << err();
    ASSERT_EQ(run({"decode", "--indices", path("i.vqix"), "--codebook", path("sorted.vqcb"), "--out", path("d2.ppm")}), 0)
        << err();
    EXPECT_EQ(read_file_bytes(path("d2.ppm")), expected);
}

TEST_F(Cli, TrainingIsReproducible)
{
    ASSERT_EQ(run({"train-codebook", "--images", (dir_ / "data" / "images").string(), "--L", "32", "--seed", "1",
                   "--out", path("cb2.vqcb")}),
              0);
    EXPECT_EQ(slurp(path("cb.vqcb")), slurp(path("cb2.vqcb")));
}

TEST_F(Cli, BatchReportsAreByteIdentical)
{
    for (const char* out : {"r1", "r2"}) {
        ASSERT_EQ(run({"batch", "--manifest", (dir_ / "data" / "manifest.csv").string(), "--codebook",
                       path("cb.vqcb"), "--fixture", (dir_ / "data" / "weights.lsmw").string(), "--population",
                       "10", "--generations", "5", "--seed", "11", "--report", path(out)}),
                  0)
            << err();
    }
    for (const char* f : {"report.json", "records.csv", "heatmap.csv", "trajectories.csv", "summary.txt"}) {
        const auto a = slurp(path(std::string("r1/") + f));
        EXPECT_FALSE(a.empty()) << f;
        EXPECT_EQ(a, slurp(path(std::string("r2/") + f))) << f;
    }
    const auto report = report_from_json(slurp(path("r1/report.json")));
    EXPECT_EQ(report.attacked + report.excluded, 12u);
    EXPECT_EQ(slurp(path("stdout.txt")), slurp(path("r1/summary.txt")));
}

TEST_F(Cli, SingleAttackWritesOutputs)
{
    const auto image = (dir_ / "data" / "images" / "img_0000.ppm").string();
    ASSERT_EQ(run({"encode", "--image", image, "--codebook", path("cb.vqcb"), "--out", path("a.vqix")}), 0);
    ASSERT_EQ(run({"attack", "--indices", path("a.vqix"), "--codebook", path("cb.vqcb"), "--fixture",
                   (dir_ / "data" / "weights.lsmw").string(), "--true-label", "0", "--population", "8",
                   "--generations", "4", "--report", path("a.json"), "--trajectory", path("a_traj.csv"),
                   "--snapshots", path("a_snap.csv"), "--adversarial", path("adv.vqix")}),
              0)
        << err();
    const auto result = attack_result_from_json(slurp(path("a.json")));
    EXPECT_EQ(result.evaluations, 40u);
    EXPECT_EQ(result.trajectory.size(), 5u);
    EXPECT_TRUE(fs::exists(path("a_snap.csv")));
    const auto adv = read_indices(read_file_bytes(path("adv.vqix")));
    const auto clean = read_indices(read_file_bytes(path("a.vqix")));
    std::size_t diff = 0;
    for (std::size_t k = 0; k < adv.indices().size(); ++k)
        diff += adv.indices()[k] != clean.indices()[k];
    EXPECT_LE(diff, 3u);
}

TEST_F(Cli, DistanceProfile)
{
    ASSERT_EQ(run({"distance-profile", "--codebook", path("cb.vqcb"), "--ref", "0", "--out", path("p.csv")}), 0);
    const auto text = slurp(path("p.csv"));
    EXPECT_EQ(text.rfind("index,distance\n0,0\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 33);
    EXPECT_EQ(run({"distance-profile", "--codebook", path("cb.vqcb"), "--ref", "32", "--out", path("p.csv")}), 1);
    EXPECT_NE(err().find("--ref"), std::string::npos);
}

TEST_F(Cli, ValidationErrorsExitOne)
{
    EXPECT_EQ(run({"encode", "--image", "x.ppm"}), 1);
    EXPECT_EQ(run({"train-codebook", "--images", (dir_ / "data" / "images").string(), "--block", "2by2", "--out",
                   path("x.vqcb")}),
              1);
    EXPECT_NE(err().find("--block"), std::string::npos);
    EXPECT_EQ(run({"train-codebook", "--images", (dir_ / "data" / "images").string(), "--L", "1", "--out",
                   path("x.vqcb")}),
              1);
    EXPECT_NE(err().find("--L"), std::string::npos);
    EXPECT_EQ(run({"decode", "--indices", path("cb.vqcb"), "--codebook", path("cb.vqcb"), "--out", path("x.ppm")}), 1);
    EXPECT_NE(err().find("--indices"), std::string::npos);
    EXPECT_EQ(run({"batch", "--manifest", (dir_ / "data" / "manifest.csv").string(), "--codebook", path("cb.vqcb"),
                   "--fixture", (dir_ / "data" / "weights.lsmw").string(), "--method", "genetic", "--report",
                   path("rx")}),
              1);
    EXPECT_EQ(run({"batch", "--manifest", (dir_ / "data" / "manifest.csv").string(), "--codebook", path("cb.vqcb"),
                   "--fixture", (dir_ / "data" / "weights.lsmw").string(), "--population", "3", "--report",
                   path("rx")}),
              1);
    EXPECT_NE(err().find("--population"), std::string::npos);
}

TEST_F(Cli, OracleErrorsExitTwo)
{
    const auto image = (dir_ / "data" / "images" / "img_0001.ppm").string();
    ASSERT_EQ(run({"encode", "--image", image, "--codebook", path("cb.vqcb"), "--out", path("o.vqix")}), 0);
    EXPECT_EQ(run({"attack", "--indices", path("o.vqix"), "--codebook", path("cb.vqcb"), "--oracle",
                   "http://127.0.0.1:9", "--timeout-ms", "300", "--true-label", "1", "--report", path("o.json")}),
              2);
    EXPECT_NE(err().find("--oracle"), std::string::npos);
    EXPECT_EQ(run({"attack", "--indices", path("o.vqix"), "--codebook", path("cb.vqcb"), "--timeout-ms", "300",
                   "--true-label", "1", "--report", path("o.json")},
                  "VQATTACK_ORACLE_URL=http://127.0.0.1:9"),
              2);
    EXPECT_EQ(run({"attack", "--indices", path("o.vqix"), "--codebook", path("cb.vqcb"), "--true-label", "1",
                   "--report", path("o.json")},
                  "env -u VQATTACK_ORACLE_URL"),
              1);
}
