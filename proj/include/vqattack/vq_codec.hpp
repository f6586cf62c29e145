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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vqattack/image_io.hpp"

namespace vqattack {

using CodebookId = std::array<std::uint8_t, 32>;

// L codewords of dimension block_w * block_h, components in [0, 255]. One
// codebook is shared by every channel of an image. Immutable once built.
class Codebook {
public:
    Codebook(std::size_t block_w, std::size_t block_h, std::vector<float> codewords);
    // A sorted codebook also records the old-index -> new-index permutation
    // that produced it.
    Codebook(std::size_t block_w, std::size_t block_h, std::vector<float> codewords,
             std::vector<std::uint32_t> permutation);

    std::size_t length() const noexcept { return length_; }
    std::size_t block_w() const noexcept { return block_w_; }
    std::size_t block_h() const noexcept { return block_h_; }
    std::size_t dim() const noexcept { return block_w_ * block_h_; }

    std::span<const float> codeword(std::size_t i) const
    {
        return std::span<const float>(codewords_).subspan(i * dim(), dim());
    }
    std::span<const float> codewords() const noexcept { return codewords_; }

    bool sorted() const noexcept { return !permutation_.empty(); }
    std::span<const std::uint32_t> permutation() const noexcept { return permutation_; }

    // SHA-256 over (L, block dims, codeword bits). Sort metadata is excluded,
    // so the id names exactly what decoding depends on.
    const CodebookId& id() const noexcept { return id_; }

    friend bool operator==(const Codebook& a, const Codebook& b)
    {
        return a.block_w_ == b.block_w_ && a.block_h_ == b.block_h_ &&
               a.codewords_ == b.codewords_ && a.permutation_ == b.permutation_;
    }

private:
    std::size_t length_ = 0;
    std::size_t block_w_ = 0;
    std::size_t block_h_ = 0;
    std::vector<float> codewords_;
    std::vector<std::uint32_t> permutation_;
    CodebookId id_{};
};

// The compressed stream: an s x t grid of cells with C channel indices each,
// stored in (row, col, channel) order.
class IndexTensor {
public:
    IndexTensor(std::size_t rows, std::size_t cols, std::size_t channels, std::size_t codebook_length,
                const CodebookId& codebook_id, std::vector<std::uint16_t> indices);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t codebook_length() const noexcept { return codebook_length_; }
    const CodebookId& codebook_id() const noexcept { return codebook_id_; }

    std::uint16_t at(std::size_t row, std::size_t col, std::size_t ch) const
    {
        return indices_[(row * cols_ + col) * channels_ + ch];
    }
    std::span<const std::uint16_t> indices() const noexcept { return indices_; }

    IndexTensor with_cell(std::size_t row, std::size_t col, std::span<const std::uint16_t> values) const;
    IndexTensor rebound(std::size_t codebook_length, const CodebookId& codebook_id,
                        std::vector<std::uint16_t> indices) const;

    friend bool operator==(const IndexTensor&, const IndexTensor&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t channels_ = 0;
    std::size_t codebook_length_ = 0;
    CodebookId codebook_id_{};
    std::vector<std::uint16_t> indices_;
};

struct LbgParams {
    std::size_t length = 64;
    std::size_t block_w = 2;
    std::size_t block_h = 2;
    double epsilon = 1e-3;  // stop a stage when relative improvement drops below this
    std::size_t max_iters = 50;  // Lloyd iterations per splitting stage
    std::uint64_t seed = 0;
};

struct LbgIteration {
    std::size_t stage_size;  // codewords in play during this stage
    std::size_t iteration;
    double mean_distortion;  // per component
};

using LbgTrace = std::vector<LbgIteration>;

// Splitting LBG: start at the global centroid, split c -> c(1 +/- 0.01), and
// refine with Lloyd iterations until L codewords exist. Returns an unsorted
// codebook. Mean distortion never increases within a stage.
Codebook train_codebook_lbg(std::span<const ImageTensor> images, const LbgParams& params,
                            LbgTrace* trace = nullptr);

// Every block vector of every channel, in image/row/col/channel order.
std::vector<float> extract_blocks(const ImageTensor& img, std::size_t block_w, std::size_t block_h);

// Index of the Euclidean-nearest codeword; ties go to the smallest index.
std::size_t nearest_codeword(const Codebook& cb, std::span<const float> block);

IndexTensor encode(const ImageTensor& img, const Codebook& cb);
ImageTensor decode(const IndexTensor& idx, const Codebook& cb);

// Mean squared error over every pixel and channel.
double distortion(const ImageTensor& a, const ImageTensor& b);

std::vector<std::uint8_t> write_codebook(const Codebook& cb);
Codebook read_codebook(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_indices(const IndexTensor& idx);
IndexTensor read_indices(std::span<const std::uint8_t> bytes);

}  // namespace vqattack
