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

#include "vqattack/codebook_sort.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vqattack/error.hpp"

namespace vqattack {

Matrix center_codewords(const Codebook& cb)
{
    Matrix p(cb.length(), cb.dim());
    for (std::size_t i = 0; i < cb.length(); ++i) {
        const auto y = cb.codeword(i);
        double mean = 0.0;
        for (float v : y)
            mean += v;
        mean /= static_cast<double>(y.size());
        for (std::size_t j = 0; j < y.size(); ++j)
            p(i, j) = static_cast<double>(y[j]) - mean;
    }
    return p;
}

Matrix codeword_matrix(const Codebook& cb)
{
    Matrix y(cb.length(), cb.dim());
    for (std::size_t i = 0; i < cb.length(); ++i) {
        const auto row = cb.codeword(i);
        std::copy(row.begin(), row.end(), y.values.begin() + static_cast<std::ptrdiff_t>(i * cb.dim()));
    }
    return y;
}

Matrix sample_covariance(const Matrix& samples)
{
    if (samples.rows < 2)
        throw Error(Errc::invalid_argument, "covariance needs at least two samples");
    const std::size_t n = samples.rows;
    const std::size_t d = samples.cols;
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            mean[j] += samples(i, j);
    for (auto& m : mean)
        m /= static_cast<double>(n);

    Matrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double dj = samples(i, j) - mean[j];
            for (std::size_t k = j; k < d; ++k)
                cov(j, k) += dj * (samples(i, k) - mean[k]);
        }
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j; k < d; ++k) {
            cov(j, k) /= static_cast<double>(n - 1);
            cov(k, j) = cov(j, k);
        }
    return cov;
}

namespace {

double off_diagonal_norm(const Matrix& a)
{
    double acc = 0.0;
    for (std::size_t r = 0; r < a.rows; ++r)
        for (std::size_t c = 0; c < a.cols; ++c)
            if (r != c)
                acc += a(r, c) * a(r, c);
    return std::sqrt(acc);
}

double frobenius_norm(const Matrix& a)
{
    double acc = 0.0;
    for (double v : a.values)
        acc += v * v;
    return std::sqrt(acc);
}

// Index of the largest-magnitude entry; the first one wins ties.
std::size_t dominant_component(std::span<const double> v)
{
    std::size_t best = 0;
    for (std::size_t j = 1; j < v.size(); ++j)
        if (std::abs(v[j]) > std::abs(v[best]))
            best = j;
    return best;
}

}  // namespace

EigenDecomposition symmetric_eigen(const Matrix& input, const JacobiOptions& options)
{
    if (input.rows != input.cols)
        throw Error(Errc::dimension_mismatch, "eigendecomposition needs a square matrix");
    const std::size_t n = input.rows;
    Matrix a = input;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i)
        v(i, i) = 1.0;

    const double scale = frobenius_norm(a);
    const double threshold = options.tolerance * (scale > 0.0 ? scale : 1.0);

    EigenDecomposition out;
    while (off_diagonal_norm(a) > threshold) {
        if (out.sweeps == options.max_sweeps)
            throw Error(Errc::numeric_failure,
                        "Jacobi eigensolver did not converge in " +
                            std::to_string(options.max_sweeps) + " sweeps");
        ++out.sweeps;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0)
                    continue;
                // Rotation angle that annihilates a(p, q).
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.values[i] = a(i, i);
    out.vectors = std::move(v);
    return out;
}

PrincipalComponent first_pc_scores(const Matrix& centered)
{
    if (centered.rows < 2)
        throw Error(Errc::invalid_argument, "principal components need at least two codewords");
    const Matrix cov = sample_covariance(centered);
    const auto eig = symmetric_eigen(cov);
    const std::size_t d = cov.rows;

    auto column = [&](std::size_t k) {
        std::vector<double> col(d);
        for (std::size_t j = 0; j < d; ++j)
            col[j] = eig.vectors(j, k);
        return col;
    };

    const double top = *std::max_element(eig.values.begin(), eig.values.end());
    const double tie_tolerance = 1e-9 * std::max(1.0, std::abs(top));
    std::size_t chosen = d;
    std::size_t chosen_component = d;
    for (std::size_t k = 0; k < d; ++k) {
        if (top - eig.values[k] > tie_tolerance)
            continue;
        const std::size_t comp = dominant_component(column(k));
        if (chosen == d || comp < chosen_component) {
            chosen = k;
            chosen_component = comp;
        }
    }

    PrincipalComponent pc;
    pc.axis = column(chosen);
    pc.variance = eig.values[chosen];
    if (pc.axis[dominant_component(pc.axis)] < 0.0)
        for (auto& x : pc.axis)
            x = -x;

    pc.scores.resize(centered.rows);
    for (std::size_t i = 0; i < centered.rows; ++i) {
        const auto row = centered.row(i);
        pc.scores[i] = std::inner_product(row.begin(), row.end(), pc.axis.begin(), 0.0);
    }
    return pc;
}

SortedCodebook sort_codebook(const Codebook& cb, SortCentering centering)
{
    if (cb.sorted())
        throw Error(Errc::invalid_argument, "codebook is already sorted");
    const auto pc = first_pc_scores(centering == SortCentering::per_codeword ? center_codewords(cb)
                                                                             : codeword_matrix(cb));

    std::vector<std::size_t> order(cb.length());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pc.scores[a] < pc.scores[b]; });

    std::vector<float> codewords;
    codewords.reserve(cb.codewords().size());
    std::vector<std::uint32_t> permutation(cb.length());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const auto y = cb.codeword(order[pos]);
        codewords.insert(codewords.end(), y.begin(), y.end());
        permutation[order[pos]] = static_cast<std::uint32_t>(pos);
    }
    Codebook sorted(cb.block_w(), cb.block_h(), std::move(codewords), permutation);
    return {std::move(sorted), std::move(permutation)};
}

std::vector<std::uint32_t> invert_permutation(std::span<const std::uint32_t> permutation)
{
    std::vector<std::uint32_t> inverse(permutation.size());
    std::vector<bool> seen(permutation.size(), false);
    for (std::size_t i = 0; i < permutation.size(); ++i) {
        const auto p = permutation[i];
        if (p >= permutation.size() || seen[p])
            throw Error(Errc::invalid_argument, "permutation is not a bijection");
        seen[p] = true;
        inverse[p] = static_cast<std::uint32_t>(i);
    }
    return inverse;
}

Codebook unsort_codebook(const Codebook& sorted)
{
    if (!sorted.sorted())
        return sorted;
    const auto perm = sorted.permutation();
    std::vector<float> codewords(sorted.codewords().size());
    for (std::size_t old = 0; old < perm.size(); ++old) {
        const auto y = sorted.codeword(perm[old]);
        std::copy(y.begin(), y.end(), codewords.begin() + static_cast<std::ptrdiff_t>(old * sorted.dim()));
    }
    return Codebook(sorted.block_w(), sorted.block_h(), std::move(codewords));
}

IndexTensor remap_indices(const IndexTensor& idx, std::span<const std::uint32_t> permutation,
                          const Codebook& target)
{
    if (permutation.size() != idx.codebook_length() || target.length() != permutation.size())
        throw Error(Errc::length_mismatch, "permutation length differs from the codebook length");
    invert_permutation(permutation);  // validates bijectivity
    std::vector<std::uint16_t> out(idx.indices().size());
    std::transform(idx.indices().begin(), idx.indices().end(), out.begin(),
                   [&](std::uint16_t i) { return static_cast<std::uint16_t>(permutation[i]); });
    return idx.rebound(target.length(), target.id(), std::move(out));
}

DistanceProfile distance_profile(const Codebook& cb, std::size_t reference)
{
    if (reference >= cb.length())
        throw Error(Errc::index_out_of_range, "reference index " + std::to_string(reference) +
                                                  " outside [0, " + std::to_string(cb.length()) + ")");
    DistanceProfile profile{reference, std::vector<double>(cb.length(), 0.0)};
    const auto ref = cb.codeword(reference);
    for (std::size_t j = 0; j < cb.length(); ++j) {
        const auto y = cb.codeword(j);
        double acc = 0.0;
        for (std::size_t n = 0; n < y.size(); ++n) {
            const double d = static_cast<double>(ref[n]) - static_cast<double>(y[n]);
            acc += d * d;
        }
        profile.distances[j] = std::sqrt(acc);
    }
    return profile;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x)
{
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]])
            ++j;
        const double rank = 0.5 * static_cast<double>(i + j);
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_correlation(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw Error(Errc::invalid_argument, "rank correlation needs two equal-length series");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double index_distance_correlation(const Codebook& cb, std::size_t reference)
{
    const auto profile = distance_profile(cb, reference);
    std::vector<double> gap(cb.length());
    for (std::size_t j = 0; j < gap.size(); ++j)
        gap[j] = std::abs(static_cast<double>(j) - static_cast<double>(reference));
    return spearman_correlation(gap, profile.distances);
}

}  // namespace vqattack
