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

#include "vqattack/image_io.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "vqattack/error.hpp"

namespace vqattack {

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::size_t channels)
    : ImageTensor(height, width, channels, std::vector<std::uint8_t>(height * width * channels, 0))
{
}

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::size_t channels,
                         std::vector<std::uint8_t> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data))
{
    if (channels != 1 && channels != 3)
        throw Error(Errc::invalid_argument, "image channels must be 1 or 3");
    if (data_.size() != height * width * channels)
        throw Error(Errc::length_mismatch, "image data length does not match its shape");
}

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_whitespace_and_comments()
    {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r')
                    ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                return;
            }
        }
    }

    std::size_t read_uint(const char* field)
    {
        skip_whitespace_and_comments();
        const std::size_t start = pos_;
        std::size_t value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            if (value > std::numeric_limits<std::size_t>::max() / 16)
                throw Error(Errc::malformed_header, std::string("header ") + field + " overflows");
            value = value * 10 + (bytes_[pos_] - '0');
            ++pos_;
        }
        if (pos_ == start)
            throw Error(Errc::malformed_header, std::string("header ") + field + " is not a number");
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void expect_single_whitespace()
    {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw Error(Errc::malformed_header, "missing whitespace after maxval");
        ++pos_;
    }

    std::size_t pos() const noexcept { return pos_; }
    void advance(std::size_t n) noexcept { pos_ += n; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

ImageTensor load_image(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw Error(Errc::malformed_header, "not a binary PGM/PPM file (expected P5 or P6)");
    const std::size_t channels = bytes[1] == '5' ? 1 : 3;

    HeaderReader reader(bytes);
    reader.advance(2);
    if (reader.pos() >= bytes.size() || !std::isspace(bytes[reader.pos()]))
        throw Error(Errc::malformed_header, "missing whitespace after magic");
    const std::size_t width = reader.read_uint("width");
    const std::size_t height = reader.read_uint("height");
    const std::size_t maxval = reader.read_uint("maxval");
    if (width == 0 || height == 0)
        throw Error(Errc::malformed_header, "image dimensions must be positive");
    if (maxval != 255)
        throw Error(Errc::unsupported_maxval,
                    "unsupported maxval " + std::to_string(maxval) + " (only 255 is accepted)");
    reader.expect_single_whitespace();

    const std::size_t payload = height * width * channels;
    if (payload / channels / width != height)
        throw Error(Errc::malformed_header, "image dimensions overflow");
    if (bytes.size() - reader.pos() < payload)
        throw Error(Errc::truncated_payload, "payload holds " +
                                                 std::to_string(bytes.size() - reader.pos()) +
                                                 " bytes, header declares " + std::to_string(payload));

    const auto first = bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos());
    return ImageTensor(height, width, channels,
                       std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(payload)));
}

std::vector<std::uint8_t> save_image(const ImageTensor& img)
{
    const std::string header = std::string(img.channels() == 1 ? "P5" : "P6") + "\n" +
                               std::to_string(img.width()) + " " + std::to_string(img.height()) +
                               "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data().begin(), img.data().end());
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io, "cannot open " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::io, "cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(Errc::io, "failed writing " + path);
}

ImageTensor read_image_file(const std::string& path)
{
    return load_image(read_file_bytes(path));
}

void write_image_file(const std::string& path, const ImageTensor& img)
{
    write_file_bytes(path, save_image(img));
}

}  // namespace vqattack
