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

#include "vqattack/vq_codec.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "byte_io.hpp"
#include "vqattack/error.hpp"

namespace vqattack {

namespace {

constexpr std::uint8_t kFormatVersion = 1;
constexpr double kSplitDelta = 0.01;

CodebookId content_hash(std::size_t length, std::size_t block_w, std::size_t block_h,
                        std::span<const float> codewords)
{
    detail::ByteWriter w;
    w.u32(static_cast<std::uint32_t>(length));
    w.u16(static_cast<std::uint16_t>(block_w));
    w.u16(static_cast<std::uint16_t>(block_h));
    for (float v : codewords)
        w.f32(v);
    const auto bytes = w.take();

    CodebookId id{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), id.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != id.size())
        throw Error(Errc::numeric_failure, "SHA-256 digest failed");
    return id;
}

void check_block_geometry(const ImageTensor& img, std::size_t block_w, std::size_t block_h)
{
    if (block_w == 0 || block_h == 0 || img.width() % block_w != 0 || img.height() % block_h != 0)
        throw Error(Errc::dimension_mismatch,
                    "image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                        " is not divisible into " + std::to_string(block_w) + "x" +
                        std::to_string(block_h) + " blocks");
}

}  // namespace

Codebook::Codebook(std::size_t block_w, std::size_t block_h, std::vector<float> codewords)
    : Codebook(block_w, block_h, std::move(codewords), {})
{
}

Codebook::Codebook(std::size_t block_w, std::size_t block_h, std::vector<float> codewords,
                   std::vector<std::uint32_t> permutation)
    : block_w_(block_w), block_h_(block_h), codewords_(std::move(codewords)),
      permutation_(std::move(permutation))
{
    if (block_w == 0 || block_h == 0 || block_w > 0xFFFF || block_h > 0xFFFF)
        throw Error(Errc::invalid_argument, "block dimensions must be in [1, 65535]");
    if (codewords_.size() % dim() != 0)
        throw Error(Errc::length_mismatch, "codeword storage is not a multiple of the block size");
    length_ = codewords_.size() / dim();
    if (length_ < 2)
        throw Error(Errc::invalid_argument, "a codebook needs at least 2 codewords");
    if (length_ > 0x10000)
        throw Error(Errc::invalid_argument, "a codebook holds at most 65536 codewords");
    for (float v : codewords_) {
        if (!(v >= 0.0f && v <= 255.0f))
            throw Error(Errc::invalid_argument, "codeword component outside [0, 255]");
    }
    if (!permutation_.empty()) {
        if (permutation_.size() != length_)
            throw Error(Errc::length_mismatch, "permutation length differs from codebook length");
        std::vector<bool> seen(length_, false);
        for (auto p : permutation_) {
            if (p >= length_ || seen[p])
                throw Error(Errc::invalid_argument, "permutation is not a bijection");
            seen[p] = true;
        }
    }
    id_ = content_hash(length_, block_w_, block_h_, codewords_);
}

IndexTensor::IndexTensor(std::size_t rows, std::size_t cols, std::size_t channels,
                         std::size_t codebook_length, const CodebookId& codebook_id,
                         std::vector<std::uint16_t> indices)
    : rows_(rows), cols_(cols), channels_(channels), codebook_length_(codebook_length),
      codebook_id_(codebook_id), indices_(std::move(indices))
{
    if (channels != 1 && channels != 3)
        throw Error(Errc::invalid_argument, "index tensor channels must be 1 or 3");
    if (rows == 0 || cols == 0 || rows > 0xFFFF || cols > 0xFFFF)
        throw Error(Errc::invalid_argument, "index grid dimensions must be in [1, 65535]");
    if (indices_.size() != rows * cols * channels)
        throw Error(Errc::length_mismatch, "index count does not match the grid shape");
    if (codebook_length < 2 || codebook_length > 0x10000)
        throw Error(Errc::invalid_argument, "codebook length must be in [2, 65536]");
    for (auto i : indices_) {
        if (i >= codebook_length)
            throw Error(Errc::index_out_of_range,
                        "index " + std::to_string(i) + " outside [0, " +
                            std::to_string(codebook_length) + ")");
    }
}

IndexTensor IndexTensor::with_cell(std::size_t row, std::size_t col,
                                   std::span<const std::uint16_t> values) const
{
    if (row >= rows_ || col >= cols_)
        throw Error(Errc::index_out_of_range, "cell (" + std::to_string(row) + ", " +
                                                  std::to_string(col) + ") outside the grid");
    if (values.size() != channels_)
        throw Error(Errc::length_mismatch, "replacement must carry one index per channel");
    auto copy = *this;
    for (std::size_t ch = 0; ch < channels_; ++ch) {
        if (values[ch] >= codebook_length_)
            throw Error(Errc::index_out_of_range, "replacement index outside the codebook");
        copy.indices_[(row * cols_ + col) * channels_ + ch] = values[ch];
    }
    return copy;
}

IndexTensor IndexTensor::rebound(std::size_t codebook_length, const CodebookId& codebook_id,
                                 std::vector<std::uint16_t> indices) const
{
    return IndexTensor(rows_, cols_, channels_, codebook_length, codebook_id, std::move(indices));
}

std::vector<float> extract_blocks(const ImageTensor& img, std::size_t block_w, std::size_t block_h)
{
    check_block_geometry(img, block_w, block_h);
    const std::size_t rows = img.height() / block_h;
    const std::size_t cols = img.width() / block_w;
    std::vector<float> out;
    out.reserve(img.size());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            for (std::size_t ch = 0; ch < img.channels(); ++ch)
                for (std::size_t by = 0; by < block_h; ++by)
                    for (std::size_t bx = 0; bx < block_w; ++bx)
                        out.push_back(img.at(r * block_h + by, c * block_w + bx, ch));
    return out;
}

namespace {

double squared_distance(std::span<const float> a, std::span<const float> b)
{
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = static_cast<double>(a[j]) - static_cast<double>(b[j]);
        acc += d * d;
    }
    return acc;
}

// Lloyd state over double-precision codewords.
struct Quantizer {
    std::size_t dim;
    std::vector<double> codewords;  // size() * dim

    std::size_t size() const { return codewords.size() / dim; }
    double* at(std::size_t i) { return codewords.data() + i * dim; }
    const double* at(std::size_t i) const { return codewords.data() + i * dim; }
};

struct Assignment {
    std::vector<std::uint32_t> cell;  // per training vector
    std::vector<double> cell_sse;     // per codeword
    double total_sse = 0.0;
};

Assignment assign(const Quantizer& q, const std::vector<double>& data)
{
    const std::size_t dim = q.dim;
    const std::size_t n = data.size() / dim;
    Assignment a;
    a.cell.resize(n);
    a.cell_sse.assign(q.size(), 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        const double* x = data.data() + v * dim;
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t best_i = 0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double* c = q.at(i);
            double d = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double t = x[j] - c[j];
                d += t * t;
            }
            if (d < best) {
                best = d;
                best_i = static_cast<std::uint32_t>(i);
            }
        }
        a.cell[v] = best_i;
        a.cell_sse[best_i] += best;
        a.total_sse += best;
    }
    return a;
}

std::size_t worst_cell(const std::vector<double>& cell_sse)
{
    return static_cast<std::size_t>(std::max_element(cell_sse.begin(), cell_sse.end()) -
                                    cell_sse.begin());
}

// Moves every codeword to its cell centroid. Empty cells are re-seeded with a
// random member of the currently worst cell.
void update_centroids(Quantizer& q, const std::vector<double>& data, const Assignment& a,
                      std::mt19937_64& rng)
{
    const std::size_t dim = q.dim;
    const std::size_t n = data.size() / dim;
    std::vector<double> sums(q.codewords.size(), 0.0);
    std::vector<std::size_t> counts(q.size(), 0);
    for (std::size_t v = 0; v < n; ++v) {
        const auto c = a.cell[v];
        ++counts[c];
        for (std::size_t j = 0; j < dim; ++j)
            sums[c * dim + j] += data[v * dim + j];
    }
    std::vector<std::vector<std::size_t>> members;
    auto sse = a.cell_sse;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (counts[i] > 0) {
            for (std::size_t j = 0; j < dim; ++j)
                q.at(i)[j] = sums[i * dim + j] / static_cast<double>(counts[i]);
            continue;
        }
        if (members.empty()) {
            members.resize(q.size());
            for (std::size_t v = 0; v < n; ++v)
                members[a.cell[v]].push_back(v);
        }
        const std::size_t donor = worst_cell(sse);
        const auto& pool = members[donor];
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const std::size_t v = pool[pick(rng)];
        std::copy_n(data.data() + v * dim, dim, q.at(i));
        // Spread further re-seeds over other cells.
        sse[donor] = 0.0;
    }
}

}  // namespace

Codebook train_codebook_lbg(std::span<const ImageTensor> images, const LbgParams& params,
                            LbgTrace* trace)
{
    if (params.length < 2)
        throw Error(Errc::invalid_argument, "codebook length must be at least 2");
    if (params.length > 0x10000)
        throw Error(Errc::invalid_argument, "codebook length must be at most 65536");
    if (!(params.epsilon >= 0.0) || !std::isfinite(params.epsilon))
        throw Error(Errc::invalid_argument, "epsilon must be a finite non-negative number");

    const std::size_t dim = params.block_w * params.block_h;
    std::vector<double> data;
    for (const auto& img : images) {
        const auto blocks = extract_blocks(img, params.block_w, params.block_h);
        data.insert(data.end(), blocks.begin(), blocks.end());
    }
    const std::size_t n = dim == 0 ? 0 : data.size() / dim;
    if (n < params.length)
        throw Error(Errc::insufficient_data, "training set has " + std::to_string(n) +
                                                 " block vectors, need at least " +
                                                 std::to_string(params.length));

    std::mt19937_64 rng(params.seed);
    const double norm = static_cast<double>(n * dim);

    Quantizer q{dim, std::vector<double>(dim, 0.0)};
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t j = 0; j < dim; ++j)
            q.codewords[j] += data[v * dim + j];
    for (auto& c : q.codewords)
        c /= static_cast<double>(n);
    Assignment current = assign(q, data);

    while (q.size() < params.length) {
        const std::size_t m = q.size();
        std::vector<std::size_t> to_split(m);
        for (std::size_t i = 0; i < m; ++i)
            to_split[i] = i;
        if (2 * m > params.length) {
            std::stable_sort(to_split.begin(), to_split.end(), [&](std::size_t a, std::size_t b) {
                return current.cell_sse[a] > current.cell_sse[b];
            });
            to_split.resize(params.length - m);
            std::sort(to_split.begin(), to_split.end());
        }
        for (std::size_t i : to_split) {
            std::vector<double> lower(q.at(i), q.at(i) + dim);
            for (std::size_t j = 0; j < dim; ++j) {
                q.at(i)[j] = std::min(255.0, q.at(i)[j] * (1.0 + kSplitDelta));
                lower[j] = std::max(0.0, lower[j] * (1.0 - kSplitDelta));
            }
            q.codewords.insert(q.codewords.end(), lower.begin(), lower.end());
        }

        const std::size_t stage = q.size();
        current = assign(q, data);
        double previous = current.total_sse;
        if (trace)
            trace->push_back({stage, 0, current.total_sse / norm});
        for (std::size_t it = 1; it <= params.max_iters; ++it) {
            const auto saved = q.codewords;
            update_centroids(q, data, current, rng);
            auto next = assign(q, data);
            if (next.total_sse > previous) {
                // Only reachable through rounding once the stage has settled.
                q.codewords = saved;
                break;
            }
            current = std::move(next);
            if (trace)
                trace->push_back({stage, it, current.total_sse / norm});
            const bool settled = previous == 0.0 ||
                                 (previous - current.total_sse) <= params.epsilon * previous;
            previous = current.total_sse;
            if (settled)
                break;
        }
    }

    std::vector<float> out(q.codewords.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = static_cast<float>(std::clamp(q.codewords[k], 0.0, 255.0));
    return Codebook(params.block_w, params.block_h, std::move(out));
}

std::size_t nearest_codeword(const Codebook& cb, std::span<const float> block)
{
    std::size_t best_i = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cb.length(); ++i) {
        const double d = squared_distance(block, cb.codeword(i));
        if (d < best) {
            best = d;
            best_i = i;
        }
    }
    return best_i;
}

IndexTensor encode(const ImageTensor& img, const Codebook& cb)
{
    const auto blocks = extract_blocks(img, cb.block_w(), cb.block_h());
    const std::size_t count = blocks.size() / cb.dim();
    std::vector<std::uint16_t> indices(count);
    for (std::size_t k = 0; k < count; ++k)
        indices[k] = static_cast<std::uint16_t>(
            nearest_codeword(cb, std::span<const float>(blocks).subspan(k * cb.dim(), cb.dim())));
    return IndexTensor(img.height() / cb.block_h(), img.width() / cb.block_w(), img.channels(),
                       cb.length(), cb.id(), std::move(indices));
}

ImageTensor decode(const IndexTensor& idx, const Codebook& cb)
{
    if (idx.codebook_id() != cb.id() || idx.codebook_length() != cb.length())
        throw Error(Errc::codebook_mismatch, "index stream was not produced with this codebook");

    // Rounded pixel values per codeword, computed once.
    std::vector<std::uint8_t> pixels(cb.codewords().size());
    for (std::size_t k = 0; k < pixels.size(); ++k)
        pixels[k] = static_cast<std::uint8_t>(
            std::clamp(std::floor(static_cast<double>(cb.codewords()[k]) + 0.5), 0.0, 255.0));

    ImageTensor img(idx.rows() * cb.block_h(), idx.cols() * cb.block_w(), idx.channels());
    for (std::size_t r = 0; r < idx.rows(); ++r)
        for (std::size_t c = 0; c < idx.cols(); ++c)
            for (std::size_t ch = 0; ch < idx.channels(); ++ch) {
                const std::size_t code = idx.at(r, c, ch);
                if (code >= cb.length())
                    throw Error(Errc::index_out_of_range, "index outside the codebook");
                const std::uint8_t* src = pixels.data() + code * cb.dim();
                for (std::size_t by = 0; by < cb.block_h(); ++by)
                    for (std::size_t bx = 0; bx < cb.block_w(); ++bx)
                        img.at(r * cb.block_h() + by, c * cb.block_w() + bx, ch) =
                            src[by * cb.block_w() + bx];
            }
    return img;
}

double distortion(const ImageTensor& a, const ImageTensor& b)
{
    if (!a.same_shape(b))
        throw Error(Errc::dimension_mismatch, "images differ in shape");
    if (a.size() == 0)
        return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = static_cast<double>(a.data()[k]) - static_cast<double>(b.data()[k]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

std::vector<std::uint8_t> write_codebook(const Codebook& cb)
{
    detail::ByteWriter w;
    w.magic("VQCB");
    w.u8(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(cb.length()));
    w.u16(static_cast<std::uint16_t>(cb.block_w()));
    w.u16(static_cast<std::uint16_t>(cb.block_h()));
    w.u8(cb.sorted() ? 1 : 0);
    for (float v : cb.codewords())
        w.f32(v);
    for (auto p : cb.permutation())
        w.u32(p);
    return w.take();
}

Codebook read_codebook(std::span<const std::uint8_t> bytes)
{
    detail::ByteReader r(bytes, "codebook");
    r.expect_magic("VQCB");
    if (const auto version = r.u8(); version != kFormatVersion)
        throw Error(Errc::version_mismatch,
                    "codebook: unsupported version " + std::to_string(version));
    const std::size_t length = r.u32();
    const std::size_t block_w = r.u16();
    const std::size_t block_h = r.u16();
    const auto sorted = r.u8();
    if (sorted > 1)
        throw Error(Errc::invalid_argument, "codebook: sorted flag must be 0 or 1");
    const std::size_t values = length * block_w * block_h;
    r.need(values * 4 + (sorted ? length * 4 : 0));
    std::vector<float> codewords(values);
    for (auto& v : codewords)
        v = r.f32();
    std::vector<std::uint32_t> permutation(sorted ? length : 0);
    for (auto& p : permutation)
        p = r.u32();
    r.expect_end();
    if (sorted && length == 0)
        throw Error(Errc::invalid_argument, "codebook: empty");
    return Codebook(block_w, block_h, std::move(codewords), std::move(permutation));
}

std::vector<std::uint8_t> write_indices(const IndexTensor& idx)
{
    detail::ByteWriter w;
    w.magic("VQIX");
    w.u8(kFormatVersion);
    w.u16(static_cast<std::uint16_t>(idx.rows()));
    w.u16(static_cast<std::uint16_t>(idx.cols()));
    w.u8(static_cast<std::uint8_t>(idx.channels()));
    w.u32(static_cast<std::uint32_t>(idx.codebook_length()));
    w.raw(idx.codebook_id());
    for (auto i : idx.indices())
        w.u16(i);
    return w.take();
}

IndexTensor read_indices(std::span<const std::uint8_t> bytes)
{
    detail::ByteReader r(bytes, "index file");
    r.expect_magic("VQIX");
    if (const auto version = r.u8(); version != kFormatVersion)
        throw Error(Errc::version_mismatch,
                    "index file: unsupported version " + std::to_string(version));
    const std::size_t rows = r.u16();
    const std::size_t cols = r.u16();
    const std::size_t channels = r.u8();
    const std::size_t length = r.u32();
    CodebookId id{};
    r.raw(id);
    const std::size_t count = rows * cols * channels;
    r.need(count * 2);
    std::vector<std::uint16_t> indices(count);
    for (auto& i : indices)
        i = r.u16();
    r.expect_end();
    return IndexTensor(rows, cols, channels, length, id, std::move(indices));
}

}  // namespace vqattack
