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

#include "vqattack/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "byte_io.hpp"
#include "vqattack/error.hpp"

namespace vqattack {

namespace {
constexpr double kSumTolerance = 1e-6;
}

ProbabilityVector::ProbabilityVector(std::vector<double> probs) : probs_(std::move(probs))
{
    if (probs_.empty())
        throw Error(Errc::oracle_protocol, "probability vector is empty");
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0 && p <= 1.0))
            throw Error(Errc::oracle_protocol, "probability outside [0, 1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw Error(Errc::oracle_protocol,
                    "probabilities sum to " + std::to_string(sum) + ", expected 1");
}

std::size_t ProbabilityVector::argmax() const noexcept
{
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

Oracle::Oracle(std::size_t classes, std::optional<ImageShape> shape, std::size_t flat_size)
    : classes_(classes), shape_(shape), flat_size_(flat_size)
{
    if (classes < 2)
        throw Error(Errc::invalid_argument, "an oracle needs at least two classes");
}

ProbabilityVector Oracle::classify(const ImageTensor& img) const
{
    if (shape_) {
        if (img.height() != shape_->height || img.width() != shape_->width ||
            img.channels() != shape_->channels)
            throw Error(Errc::shape_mismatch,
                        "oracle expects " + std::to_string(shape_->height) + "x" +
                            std::to_string(shape_->width) + "x" + std::to_string(shape_->channels) +
                            " images");
    } else if (img.size() != flat_size_) {
        throw Error(Errc::shape_mismatch, "oracle expects images with " + std::to_string(flat_size_) +
                                              " values, got " + std::to_string(img.size()));
    }
    ProbabilityVector out(raw_classify(img));
    if (out.classes() != classes_)
        throw Error(Errc::oracle_protocol, "oracle returned " + std::to_string(out.classes()) +
                                               " probabilities, expected " + std::to_string(classes_));
    queries_.fetch_add(1);
    return out;
}

LinearSoftmaxOracle::LinearSoftmaxOracle(std::size_t classes, std::size_t dim,
                                         std::vector<float> weights, std::vector<float> bias,
                                         std::optional<ImageShape> shape)
    : Oracle(classes, shape, dim), dim_(dim), weights_(std::move(weights)), bias_(std::move(bias))
{
    if (dim == 0)
        throw Error(Errc::invalid_argument, "fixture input dimension must be positive");
    if (shape && shape->height * shape->width * shape->channels != dim)
        throw Error(Errc::dimension_mismatch, "fixture shape does not match its input dimension");
    if (weights_.size() != classes * dim || bias_.size() != classes)
        throw Error(Errc::dimension_mismatch, "fixture weight/bias sizes do not match K and D");
    for (float v : weights_)
        if (!std::isfinite(v))
            throw Error(Errc::invalid_argument, "fixture weights must be finite");
    for (float v : bias_)
        if (!std::isfinite(v))
            throw Error(Errc::invalid_argument, "fixture biases must be finite");
}

std::vector<double> LinearSoftmaxOracle::logits(const ImageTensor& img) const
{
    const auto x = img.data();
    std::vector<double> out(classes());
    for (std::size_t k = 0; k < classes(); ++k) {
        const float* w = weights_.data() + k * dim_;
        double acc = 0.0;
        for (std::size_t j = 0; j < dim_; ++j)
            acc += static_cast<double>(w[j]) * (static_cast<double>(x[j]) / 255.0);
        out[k] = acc + static_cast<double>(bias_[k]);
    }
    return out;
}

std::vector<double> LinearSoftmaxOracle::raw_classify(const ImageTensor& img) const
{
    auto z = logits(img);
    const double top = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
        v = std::exp(v - top);
        sum += v;
    }
    for (auto& v : z)
        v /= sum;
    return z;
}

std::unique_ptr<LinearSoftmaxOracle> load_fixture(std::span<const std::uint8_t> bytes,
                                                  std::optional<ImageShape> shape)
{
    detail::ByteReader r(bytes, "fixture weights");
    r.expect_magic("LSMW");
    if (const auto version = r.u8(); version != 1)
        throw Error(Errc::version_mismatch,
                    "fixture weights: unsupported version " + std::to_string(version));
    const std::size_t classes = r.u32();
    const std::size_t dim = r.u32();
    r.need((classes * dim + classes) * 4);
    std::vector<float> weights(classes * dim);
    for (auto& v : weights)
        v = r.f32();
    std::vector<float> bias(classes);
    for (auto& v : bias)
        v = r.f32();
    r.expect_end();
    return std::make_unique<LinearSoftmaxOracle>(classes, dim, std::move(weights), std::move(bias),
                                                 shape);
}

std::vector<std::uint8_t> write_fixture(const LinearSoftmaxOracle& oracle)
{
    detail::ByteWriter w;
    w.magic("LSMW");
    w.u8(1);
    w.u32(static_cast<std::uint32_t>(oracle.classes()));
    w.u32(static_cast<std::uint32_t>(oracle.dim()));
    for (float v : oracle.weights())
        w.f32(v);
    for (float v : oracle.bias())
        w.f32(v);
    return w.take();
}

}  // namespace vqattack
