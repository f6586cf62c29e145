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
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqattack/error.hpp"
#include "vqattack/oracle.hpp"
#include "vqattack/vq_codec.hpp"

namespace vqattack {

// One grid cell and its C replacement indices.
struct Perturbation {
    std::size_t row = 0;
    std::size_t col = 0;
    std::vector<std::uint16_t> values;

    friend auto operator<=>(const Perturbation&, const Perturbation&) = default;
};

// Continuous search box: row in [0, rows-1], col in [0, cols-1], every value
// in [0, codebook_length-1].
struct SearchBounds {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t codebook_length = 0;
    std::size_t channels = 0;

    std::size_t genotype_size() const noexcept { return 2 + channels; }
    double upper(std::size_t coordinate) const noexcept;
};

SearchBounds bounds_of(const IndexTensor& idx);

// The original stream with cell (row, col) replaced. Throws
// Error{index_out_of_range} if p does not fit.
IndexTensor apply_perturbation(const IndexTensor& idx, const Perturbation& p);

// Clamp each coordinate to its bound, then round half-up.
Perturbation genotype_to_perturbation(std::span<const double> genotype, const SearchBounds& bounds);
std::vector<double> perturbation_to_genotype(const Perturbation& p);

struct Evaluation {
    double fitness = 1.0;      // probability of the true label
    std::size_t label = 0;     // argmax label of the decoded image
    double confidence = 0.0;   // probability of `label`
};

// Test hooks. on_candidate sees every decoded stream before it reaches the
// oracle; on_donors sees each mutation's (target, xi, phi, eta).
struct AttackObserver {
    std::function<void(const IndexTensor&)> on_candidate;
    std::function<void(std::size_t, std::size_t, std::size_t, std::size_t)> on_donors;
};

// Everything one attack needs, plus its evaluation bookkeeping. Identical
// perturbations are answered from a cache but still count as one evaluation.
class AttackContext {
public:
    AttackContext(IndexTensor original, Codebook codebook, const Oracle& oracle,
                  std::size_t true_label, std::size_t budget);

    const IndexTensor& original() const noexcept { return original_; }
    const Codebook& codebook() const noexcept { return codebook_; }
    const Oracle& oracle() const noexcept { return oracle_; }
    std::size_t true_label() const noexcept { return true_label_; }
    std::size_t budget() const noexcept { return budget_; }
    SearchBounds bounds() const { return bounds_of(original_); }

    std::size_t evaluations() const noexcept { return evaluations_; }
    std::size_t remaining() const noexcept { return budget_ - evaluations_; }
    std::uint64_t oracle_queries() const noexcept { return oracle_queries_; }

    void set_observer(AttackObserver observer) { observer_ = std::move(observer); }
    const AttackObserver& observer() const noexcept { return observer_; }
    void set_workers(std::size_t workers) { workers_ = workers == 0 ? 1 : workers; }

    // One evaluation. Throws Error{budget_exhausted} once the budget is spent.
    Evaluation evaluate(const Perturbation& p);

    // Evaluates every candidate, counting one evaluation each. Uncached
    // candidates may hit the oracle concurrently; results come back in input
    // order and are identical to sequential evaluation.
    std::vector<Evaluation> evaluate_all(std::span<const Perturbation> candidates);

private:
    Evaluation query(const Perturbation& p) const;

    IndexTensor original_;
    Codebook codebook_;
    const Oracle& oracle_;
    std::size_t true_label_;
    std::size_t budget_;
    std::size_t evaluations_ = 0;
    std::uint64_t oracle_queries_ = 0;
    std::size_t workers_ = 1;
    std::map<Perturbation, Evaluation> cache_;
    AttackObserver observer_;
};

// F_t of the perturbed, decoded stream. Counts one evaluation.
double fitness(AttackContext& ctx, const Perturbation& p);

struct DeConfig {
    std::size_t population = 50;
    std::size_t generations = 50;
    double scale = 0.5;            // mutation scale factor
    std::size_t budget = 0;        // 0: population * (generations + 1)
    bool early_stop = false;       // stop once any candidate is misclassified
    bool snapshots = false;
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    std::size_t effective_budget() const noexcept
    {
        return budget != 0 ? budget : population * (generations + 1);
    }
};

struct Individual {
    Perturbation perturbation;
    double fitness = 1.0;
};

struct PopulationSnapshot {
    std::string stage;  // "initial", "middle" or "final"
    std::size_t generation = 0;
    std::vector<Individual> individuals;
};

struct AttackResult {
    Perturbation best;
    bool success = false;
    std::size_t true_label = 0;
    std::size_t adversarial_label = 0;
    double confidence = 0.0;      // probability of adversarial_label
    double fitness = 1.0;         // probability of true_label
    std::size_t evaluations = 0;  // evaluation sites executed, cache hits included
    std::uint64_t oracle_queries = 0;
    std::size_t generations = 0;  // completed generations (DE only)
    std::vector<double> trajectory;   // population-best fitness; [0] is the initial population
    std::vector<double> fitness_log;  // every evaluation, in order
    std::vector<PopulationSnapshot> snapshots;
};

// Raised when the oracle fails part-way; carries what the run had so far.
class AttackAborted : public Error {
public:
    AttackAborted(const Error& cause, AttackResult partial)
        : Error(cause.code(), cause.what()), partial_(std::move(partial))
    {
    }
    const AttackResult& partial() const noexcept { return partial_; }

private:
    AttackResult partial_;
};

// Mutation-only differential evolution over (row, col, values): trial =
// M_xi + scale * (M_phi - M_eta) with distinct donors, kept iff strictly
// fitter than its parent.
AttackResult de_attack(AttackContext& ctx, const DeConfig& config);

// n uniform single-cell perturbations; keeps the lowest-fitness draw. The run
// succeeds if any draw is misclassified, and then reports the label and
// confidence of the lowest-fitness such draw.
AttackResult random_search_attack(AttackContext& ctx, std::size_t n, std::uint64_t seed);

}  // namespace vqattack
