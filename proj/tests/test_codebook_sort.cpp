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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "synthetic.hpp"
#include "vqattack/codebook_sort.hpp"

using namespace vqattack;

namespace {

Codebook random_codebook(std::mt19937_64& rng, std::size_t length, std::size_t dim = 4)
{
    std::uniform_real_distribution<float> comp(0.0f, 255.0f);
    std::vector<float> cw(length * dim);
    for (auto& v : cw)
        v = comp(rng);
    return Codebook(dim == 4 ? 2 : dim, dim == 4 ? 2 : 1, std::move(cw));
}

std::vector<float> sorted_multiset(const Codebook& cb)
{
    std::vector<std::vector<float>> rows;
    for (std::size_t i = 0; i < cb.length(); ++i)
        rows.emplace_back(cb.codeword(i).begin(), cb.codeword(i).end());
    std::sort(rows.begin(), rows.end());
    std::vector<float> flat;
    for (const auto& r : rows)
        flat.insert(flat.end(), r.begin(), r.end());
    return flat;
}

// Dominant eigenvector by plain power iteration.
std::vector<double> power_iteration(const Matrix& a, int iterations)
{
    std::vector<double> v(a.rows, 1.0);
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] += 0.1 * double(k);
    for (int it = 0; it < iterations; ++it) {
        std::vector<double> w(a.rows, 0.0);
        for (std::size_t i = 0; i < a.rows; ++i)
            for (std::size_t j = 0; j < a.cols; ++j)
                w[i] += a(i, j) * v[j];
        const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        for (std::size_t i = 0; i < w.size(); ++i)
            v[i] = w[i] / norm;
    }
    return v;
}

Codebook fixture_codebook()
{
    static const Codebook cb = [] {
        const auto images = fixture::images_of(fixture::synthetic_dataset(100, 32, 3, 7));
        LbgParams p;
        p.seed = 1;
        return train_codebook_lbg(images, p);
    }();
    return cb;
}

}  // namespace

TEST(Centering, Examples)
{
    const Codebook cb(2, 2, {5, 5, 5, 5, 0, 10, 0, 10});
    const auto p = center_codewords(cb);
    for (std::size_t j = 0; j < 4; ++j)
        EXPECT_EQ(p(0, j), 0.0);
    EXPECT_EQ(p(1, 0), -5.0);
    EXPECT_EQ(p(1, 1), 5.0);
}

TEST(Centering, RowsSumToZero)
{
    std::mt19937_64 rng(1);
    for (int n = 0; n < 20; ++n) {
        const auto p = center_codewords(random_codebook(rng, 32));
        for (std::size_t i = 0; i < p.rows; ++i) {
            const auto r = p.row(i);
            EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0), 0.0, 1e-9);
        }
    }
}

TEST(Jacobi, ReconstructsMatrix)
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    Matrix a(6, 6);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = i; j < 6; ++j)
            a(i, j) = a(j, i) = g(rng);
    const auto eig = symmetric_eigen(a);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < 6; ++k)
                v += eig.vectors(i, k) * eig.values[k] * eig.vectors(j, k);
            EXPECT_NEAR(v, a(i, j), 1e-9);
        }
}

TEST(Jacobi, ReportsNonConvergence)
{
    Matrix a(3, 3);
    a(0, 1) = a(1, 0) = 1.0;
    a(1, 2) = a(2, 1) = 2.0;
    JacobiOptions opts;
    opts.max_sweeps = 0;
    try {
        symmetric_eigen(a, opts);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::numeric_failure);
    }
}

TEST(FirstPc, RankOneDataScoresFollowCoordinates)
{
    const std::vector<double> t{3.0, -1.0, 7.5, 0.0, 2.0, -4.0};
    const std::vector<double> dir{1.0, 2.0, -1.0, 0.5};
    Matrix m(t.size(), 4);
    for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = 0; j < 4; ++j)
            m(i, j) = 10.0 + t[i] * dir[j];
    const auto pc = first_pc_scores(m);
    // scores = a * t + b for a nonzero a
    const double a = (pc.scores[0] - pc.scores[1]) / (t[0] - t[1]);
    const double b = pc.scores[0] - a * t[0];
    ASSERT_GT(std::abs(a), 1e-6);
    for (std::size_t i = 0; i < t.size(); ++i)
        EXPECT_NEAR(pc.scores[i], a * t[i] + b, 1e-9);
}

TEST(FirstPc, CollinearCodewordsSortByCoordinate)
{
    // Points 10 + t*(1,2,3,4) scattered in index order.
    const std::vector<float> t{5, 1, 9, 3, 0, 7};
    std::vector<float> cw;
    for (float v : t)
        for (int j = 1; j <= 4; ++j)
            cw.push_back(10.0f + v * float(j));
    const auto sorted = sort_codebook(Codebook(2, 2, cw));
    std::vector<float> first;
    for (std::size_t i = 0; i < sorted.codebook.length(); ++i)
        first.push_back(sorted.codebook.codeword(i)[0]);
    EXPECT_TRUE(std::is_sorted(first.begin(), first.end()) || std::is_sorted(first.rbegin(), first.rend()));
}

TEST(FirstPc, DuplicateCodewordsScoreEqually)
{
    const Codebook cb(2, 2, {1, 2, 3, 4, 50, 60, 70, 80, 1, 2, 3, 4, 200, 100, 0, 30});
    const auto pc = first_pc_scores(codeword_matrix(cb));
    EXPECT_EQ(pc.scores[0], pc.scores[2]);
    const auto pcc = first_pc_scores(center_codewords(cb));
    EXPECT_EQ(pcc.scores[0], pcc.scores[2]);
}

TEST(FirstPc, MatchesPowerIteration)
{
    std::mt19937_64 rng(3);
    for (int n = 0; n < 10; ++n) {
        const auto cb = random_codebook(rng, 64);
        for (const auto& m : {codeword_matrix(cb), center_codewords(cb)}) {
            const auto pc = first_pc_scores(m);
            const auto v = power_iteration(sample_covariance(m), 10000);
            const double sign = std::inner_product(v.begin(), v.end(), pc.axis.begin(), 0.0) < 0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < v.size(); ++j)
                EXPECT_NEAR(pc.axis[j], sign * v[j], 1e-6);
        }
    }
}

TEST(FirstPc, AxisSignIsCanonical)
{
    std::mt19937_64 rng(4);
    const auto pc = first_pc_scores(codeword_matrix(random_codebook(rng, 16)));
    const auto it = std::max_element(pc.axis.begin(), pc.axis.end(),
                                     [](double a, double b) { return std::abs(a) < std::abs(b); });
    EXPECT_GT(*it, 0.0);
    EXPECT_NEAR(std::inner_product(pc.axis.begin(), pc.axis.end(), pc.axis.begin(), 0.0), 1.0, 1e-12);
}

TEST(Sort, AlreadySortedGivesIdentity)
{
    std::mt19937_64 rng(5);
    const auto once = sort_codebook(random_codebook(rng, 32));
    const Codebook plain(2, 2, {once.codebook.codewords().begin(), once.codebook.codewords().end()});
    const auto twice = sort_codebook(plain);
    std::vector<std::uint32_t> identity(32);
    std::iota(identity.begin(), identity.end(), 0u);
    EXPECT_EQ(twice.permutation, identity);
}

TEST(Sort, ReversedSortedIsRestored)
{
    std::mt19937_64 rng(6);
    const auto sorted = sort_codebook(random_codebook(rng, 32)).codebook;
    std::vector<float> reversed;
    for (std::size_t i = sorted.length(); i-- > 0;)
        reversed.insert(reversed.end(), sorted.codeword(i).begin(), sorted.codeword(i).end());
    const auto again = sort_codebook(Codebook(2, 2, reversed)).codebook;
    EXPECT_TRUE(std::equal(again.codewords().begin(), again.codewords().end(), sorted.codewords().begin()));
}

TEST(Sort, PreservesMultisetAndScoreOrder)
{
    std::mt19937_64 rng(7);
    for (int n = 0; n < 20; ++n) {
        const auto cb = random_codebook(rng, 8 + n * 3);
        const auto s = sort_codebook(cb);
        EXPECT_EQ(sorted_multiset(s.codebook), sorted_multiset(cb));
        const auto pc = first_pc_scores(codeword_matrix(cb));
        for (std::size_t i = 0; i < cb.length(); ++i)
            EXPECT_TRUE(std::equal(cb.codeword(i).begin(), cb.codeword(i).end(),
                                   s.codebook.codeword(s.permutation[i]).begin()));
        for (std::size_t i = 0; i < cb.length(); ++i)
            for (std::size_t j = 0; j < cb.length(); ++j)
                if (pc.scores[i] < pc.scores[j]) {
                    EXPECT_LT(s.permutation[i], s.permutation[j]);
                }
    }
}

TEST(Sort, RejectsSortedInputAndUnsorts)
{
    std::mt19937_64 rng(8);
    const auto cb = random_codebook(rng, 16);
    const auto s = sort_codebook(cb);
    EXPECT_THROW(sort_codebook(s.codebook), Error);
    EXPECT_EQ(unsort_codebook(s.codebook), cb);
    EXPECT_EQ(unsort_codebook(s.codebook).id(), cb.id());
}

TEST(Remap, IdentityAndInverse)
{
    std::mt19937_64 rng(9);
    const auto cb = random_codebook(rng, 16);
    std::uniform_int_distribution<int> idx(0, 15);
    std::vector<std::uint16_t> values(4 * 5 * 3);
    for (auto& v : values)
        v = static_cast<std::uint16_t>(idx(rng));
    const IndexTensor t(4, 5, 3, 16, cb.id(), values);

    std::vector<std::uint32_t> identity(16);
    std::iota(identity.begin(), identity.end(), 0u);
    EXPECT_EQ(remap_indices(t, identity, cb), t);

    std::vector<std::uint32_t> perm = identity;
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto there = remap_indices(t, perm, cb);
    EXPECT_EQ(remap_indices(there, invert_permutation(perm), cb), t);
}

TEST(Remap, DecodeIsUnchangedBySorting)
{
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<int> px(0, 255);
    const auto cb = random_codebook(rng, 64);
    const auto s = sort_codebook(cb);
    for (int n = 0; n < 20; ++n) {
        ImageTensor img(16, 16, n % 2 ? 3 : 1);
        for (auto& v : img.data())
            v = static_cast<std::uint8_t>(px(rng));
        const auto idx = encode(img, cb);
        const auto moved = remap_indices(idx, s.permutation, s.codebook);
        EXPECT_EQ(save_image(decode(moved, s.codebook)), save_image(decode(idx, cb)));
        EXPECT_EQ(encode(img, s.codebook), moved);
    }
}

TEST(DistanceProfile, Properties)
{
    const Codebook flat(2, 2, std::vector<float>(5 * 4, 42.0f));
    for (double d : distance_profile(flat, 2).distances)
        EXPECT_EQ(d, 0.0);

    std::mt19937_64 rng(11);
    const auto cb = random_codebook(rng, 20);
    for (std::size_t i = 0; i < 20; ++i) {
        const auto pi = distance_profile(cb, i);
        for (std::size_t j = 0; j < 20; ++j) {
            EXPECT_EQ(pi.distances[j], distance_profile(cb, j).distances[i]);
            double acc = 0.0;
            for (std::size_t n = 0; n < 4; ++n)
                acc += std::pow(double(cb.codeword(i)[n]) - double(cb.codeword(j)[n]), 2.0);
            EXPECT_NEAR(pi.distances[j], std::sqrt(acc), 1e-9);
        }
    }
    EXPECT_THROW(distance_profile(cb, 20), Error);
}

TEST(Spearman, KnownValues)
{
    const std::vector<double> x{1, 2, 3, 4, 5};
    EXPECT_NEAR(spearman_correlation(x, std::vector<double>{2, 4, 6, 8, 10}), 1.0, 1e-12);
    EXPECT_NEAR(spearman_correlation(x, std::vector<double>{5, 4, 3, 2, 1}), -1.0, 1e-12);
    EXPECT_NEAR(spearman_correlation(x, std::vector<double>{1, 3, 2, 5, 4}), 0.8, 1e-12);
}

TEST(FixtureCodebook, SortingMakesIndexGapTrackDistance)
{
    const auto cb = fixture_codebook();
    const double before = index_distance_correlation(cb);
    const double after = index_distance_correlation(sort_codebook(cb).codebook);
    EXPECT_LE(before, 0.4);
    EXPECT_GE(after, 0.8);
}
