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
#include <string>
#include <vector>

#include "vqattack/error.hpp"

namespace vqattack {

// An 8-bit raster, row-major with interleaved channels. Grayscale images use
// one channel, color images three.
class ImageTensor {
public:
    ImageTensor() = default;
    ImageTensor(std::size_t height, std::size_t width, std::size_t channels);
    ImageTensor(std::size_t height, std::size_t width, std::size_t channels,
                std::vector<std::uint8_t> data);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::uint8_t at(std::size_t row, std::size_t col, std::size_t ch) const
    {
        return data_[(row * width_ + col) * channels_ + ch];
    }
    std::uint8_t& at(std::size_t row, std::size_t col, std::size_t ch)
    {
        return data_[(row * width_ + col) * channels_ + ch];
    }

    std::span<const std::uint8_t> data() const noexcept { return data_; }
    std::span<std::uint8_t> data() noexcept { return data_; }

    bool same_shape(const ImageTensor& other) const noexcept
    {
        return height_ == other.height_ && width_ == other.width_ &&
               channels_ == other.channels_;
    }

    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 1;
    std::vector<std::uint8_t> data_;
};

// Parses binary PGM (P5) or PPM (P6) with maxval 255. Header comments are
// skipped. Throws Error{malformed_header | unsupported_maxval |
// truncated_payload}.
ImageTensor load_image(std::span<const std::uint8_t> bytes);

// Canonical encoding: "P5\n<w> <h>\n255\n" (or P6) followed by the payload.
std::vector<std::uint8_t> save_image(const ImageTensor& img);

ImageTensor read_image_file(const std::string& path);
void write_image_file(const std::string& path, const ImageTensor& img);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace vqattack
