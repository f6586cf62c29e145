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
#include <span>
#include <vector>

#include "vqattack/vq_codec.hpp"

namespace vqattack {

// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::span<const double> row(std::size_t r) const
    {
        return std::span<const double>(values).subspan(r * cols, cols);
    }
};

// Row-centering: p_i = Y_i - mean(Y_i). One row per codeword.
Matrix center_codewords(const Codebook& cb);

// The codewords as-is, one row per codeword.
Matrix codeword_matrix(const Codebook& cb);

// Sample covariance (denominator n - 1) of the rows of `samples`; the result
// is cols x cols.
Matrix sample_covariance(const Matrix& samples);

struct EigenDecomposition {
    std::vector<double> values;  // unordered, one per column of `vectors`
    Matrix vectors;              // column k is the eigenvector of values[k]
    std::size_t sweeps = 0;
};

struct JacobiOptions {
    double tolerance = 1e-10;  // off-diagonal Frobenius norm, relative to ||A||_F
    std::size_t max_sweeps = 100;
};

// Cyclic Jacobi rotations for a symmetric matrix. Throws
// Error{numeric_failure} if the off-diagonal norm does not reach tolerance.
EigenDecomposition symmetric_eigen(const Matrix& a, const JacobiOptions& options = {});

struct PrincipalComponent {
    std::vector<double> axis;    // unit length, largest-magnitude component positive
    double variance = 0.0;       // its eigenvalue
    std::vector<double> scores;  // axis . p_i for every row
};

// Dominant eigenvector of the sample covariance of `centered` and the
// projection of each row onto it. Ties among the largest eigenvalues resolve
// to the eigenvector whose largest-magnitude component comes first.
PrincipalComponent first_pc_scores(const Matrix& centered);

struct SortedCodebook {
    Codebook codebook;
    std::vector<std::uint32_t> permutation;  // old index -> new index
};

enum class SortCentering {
    // Plain sample PCA of the codewords. Block brightness stays in the data,
    // so PC1 is the brightness axis and neighbouring indices decode to
    // similar blocks.
    none,
    // Subtract each codeword's own mean first. For small blocks this removes
    // the dominant brightness axis and PC1 degenerates to a texture pattern.
    per_codeword,
};

// Reorders codewords by ascending first-PC score (stable on ties).
SortedCodebook sort_codebook(const Codebook& cb, SortCentering centering = SortCentering::none);

// Recovers the unsorted codebook a sorted one was built from.
Codebook unsort_codebook(const Codebook& sorted);

// Rewrites every index i as permutation[i] and binds the result to `target`.
IndexTensor remap_indices(const IndexTensor& idx, std::span<const std::uint32_t> permutation,
                          const Codebook& target);

std::vector<std::uint32_t> invert_permutation(std::span<const std::uint32_t> permutation);

struct DistanceProfile {
    std::size_t reference = 0;
    std::vector<double> distances;  // Euclidean distance from codeword[reference]
};

DistanceProfile distance_profile(const Codebook& cb, std::size_t reference);

// Spearman rank correlation with average ranks for ties.
double spearman_correlation(std::span<const double> x, std::span<const double> y);

// Rank correlation between index gap |j - ref| and distance to codeword[ref].
double index_distance_correlation(const Codebook& cb, std::size_t reference = 0);

}  // namespace vqattack
