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
#include <vector>

#include "vqattack/image_io.hpp"

namespace vqattack::fixture {

struct LabeledImage {
    ImageTensor image;
    std::size_t label = 0;
};

// Deterministic toy dataset: each class has its own palette and shape; every
// image is a two-color gradient background, one filled shape, and pixel noise.
std::vector<LabeledImage> synthetic_dataset(std::size_t count, std::size_t size,
                                            std::size_t channels, std::uint64_t seed,
                                            std::size_t classes = 10);

std::vector<ImageTensor> images_of(const std::vector<LabeledImage>& data);

// Weights of a nearest-class-mean linear classifier over pixel/255 inputs,
// laid out as the fixture weight file expects: K x D weights then K biases.
struct LinearWeights {
    std::size_t classes = 0;
    std::size_t dim = 0;
    std::vector<float> weights;
    std::vector<float> bias;
};

LinearWeights prototype_weights(const std::vector<LabeledImage>& data, std::size_t classes,
                                double gain);

std::vector<std::uint8_t> weight_file_bytes(const LinearWeights& w);

}  // namespace vqattack::fixture
