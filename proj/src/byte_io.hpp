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

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqattack/error.hpp"

namespace vqattack::detail {

// Little-endian encoders for the binary file formats.
class ByteWriter {
public:
    void magic(std::string_view m) { out_.insert(out_.end(), m.begin(), m.end()); }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
    void raw(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }

    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void put(std::uint64_t v, int n)
    {
        for (int i = 0; i < n; ++i)
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> bytes, const char* what) : bytes_(bytes), what_(what) {}

    void expect_magic(std::string_view m)
    {
        if (bytes_.size() < m.size() || std::memcmp(bytes_.data(), m.data(), m.size()) != 0)
            throw Error(Errc::bad_magic, std::string(what_) + ": bad magic (expected \"" +
                                             std::string(m) + "\")");
        pos_ = m.size();
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    float f32() { return std::bit_cast<float>(u32()); }
    void raw(std::span<std::uint8_t> out)
    {
        need(out.size());
        std::memcpy(out.data(), bytes_.data() + pos_, out.size());
        pos_ += out.size();
    }

    // Rejects both short and over-long inputs.
    void need(std::size_t n) const
    {
        if (bytes_.size() - pos_ < n)
            throw Error(Errc::length_mismatch, std::string(what_) + ": file is truncated");
    }
    void expect_end() const
    {
        if (pos_ != bytes_.size())
            throw Error(Errc::length_mismatch, std::string(what_) + ": " +
                                                   std::to_string(bytes_.size() - pos_) +
                                                   " trailing bytes");
    }

private:
    std::uint64_t get(int n)
    {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    const char* what_;
    std::size_t pos_ = 0;
};

}  // namespace vqattack::detail
