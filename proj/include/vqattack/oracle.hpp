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

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqattack/image_io.hpp"

namespace vqattack {

// K class probabilities. Construction enforces each entry in [0, 1] and a sum
// within 1e-6 of one; violations throw Error{oracle_protocol}.
class ProbabilityVector {
public:
    explicit ProbabilityVector(std::vector<double> probs);

    std::size_t classes() const noexcept { return probs_.size(); }
    double operator[](std::size_t k) const { return probs_[k]; }
    std::span<const double> values() const noexcept { return probs_; }
    // First index of the maximum.
    std::size_t argmax() const noexcept;

    friend bool operator==(const ProbabilityVector&, const ProbabilityVector&) = default;

private:
    std::vector<double> probs_;
};

struct ImageShape {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;

    friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

// A classifier seen only through its output probabilities. classify() is
// safe to call concurrently; the query counter is atomic.
class Oracle {
public:
    virtual ~Oracle() = default;
    Oracle(const Oracle&) = delete;
    Oracle& operator=(const Oracle&) = delete;

    std::size_t classes() const noexcept { return classes_; }
    // Unset when the oracle only constrains the flattened size.
    const std::optional<ImageShape>& shape() const noexcept { return shape_; }
    std::uint64_t query_count() const noexcept { return queries_.load(); }

    ProbabilityVector classify(const ImageTensor& img) const;

    virtual std::string kind() const = 0;

protected:
    Oracle(std::size_t classes, std::optional<ImageShape> shape, std::size_t flat_size);

    virtual std::vector<double> raw_classify(const ImageTensor& img) const = 0;

private:
    std::size_t classes_;
    std::optional<ImageShape> shape_;
    std::size_t flat_size_;
    mutable std::atomic<std::uint64_t> queries_{0};
};

// logits = W . (flatten(img) / 255) + b, probs = softmax(logits).
class LinearSoftmaxOracle final : public Oracle {
public:
    LinearSoftmaxOracle(std::size_t classes, std::size_t dim, std::vector<float> weights,
                        std::vector<float> bias, std::optional<ImageShape> shape = std::nullopt);

    std::size_t dim() const noexcept { return dim_; }
    std::span<const float> weights() const noexcept { return weights_; }
    std::span<const float> bias() const noexcept { return bias_; }
    std::vector<double> logits(const ImageTensor& img) const;

    std::string kind() const override { return "fixture"; }

protected:
    std::vector<double> raw_classify(const ImageTensor& img) const override;

private:
    std::size_t dim_;
    std::vector<float> weights_;
    std::vector<float> bias_;
};

// Parses an LSMW weight file: "LSMW", u8 version 1, u32 K, u32 D, K*D f32
// weights, K f32 biases, all little-endian.
std::unique_ptr<LinearSoftmaxOracle> load_fixture(std::span<const std::uint8_t> bytes,
                                                  std::optional<ImageShape> shape = std::nullopt);
std::vector<std::uint8_t> write_fixture(const LinearSoftmaxOracle& oracle);

// HTTP oracle: GET /meta at connect time, then POST /classify with the
// canonical PGM/PPM bytes for every query.
class RemoteOracle final : public Oracle {
public:
    RemoteOracle(std::string endpoint, std::chrono::milliseconds timeout, std::size_t classes,
                 ImageShape shape);

    const std::string& endpoint() const noexcept { return endpoint_; }
    std::string kind() const override { return "remote"; }

protected:
    std::vector<double> raw_classify(const ImageTensor& img) const override;

private:
    std::string endpoint_;
    std::chrono::milliseconds timeout_;
};

std::unique_ptr<RemoteOracle> connect_remote(const std::string& endpoint,
                                             std::chrono::milliseconds timeout);

// Parses a {"probs": [...]} body. Throws Error{oracle_protocol}.
ProbabilityVector parse_probability_response(const std::string& body, std::size_t expected_classes);

}  // namespace vqattack
