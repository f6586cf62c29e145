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

#include "vqattack/attack.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <string>

#include "parallel.hpp"

namespace vqattack {

double SearchBounds::upper(std::size_t coordinate) const noexcept
{
    if (coordinate == 0)
        return static_cast<double>(rows - 1);
    if (coordinate == 1)
        return static_cast<double>(cols - 1);
    return static_cast<double>(codebook_length - 1);
}

SearchBounds bounds_of(const IndexTensor& idx)
{
    return {idx.rows(), idx.cols(), idx.codebook_length(), idx.channels()};
}

IndexTensor apply_perturbation(const IndexTensor& idx, const Perturbation& p)
{
    return idx.with_cell(p.row, p.col, p.values);
}

Perturbation genotype_to_perturbation(std::span<const double> genotype, const SearchBounds& bounds)
{
    if (genotype.size() != bounds.genotype_size())
        throw Error(Errc::length_mismatch, "genotype has " + std::to_string(genotype.size()) +
                                               " coordinates, expected " +
                                               std::to_string(bounds.genotype_size()));
    auto discrete = [&](std::size_t k) {
        if (!std::isfinite(genotype[k]))
            throw Error(Errc::invalid_argument, "genotype coordinate is not finite");
        const double v = std::clamp(genotype[k], 0.0, bounds.upper(k));
        return static_cast<std::size_t>(std::floor(v + 0.5));
    };
    Perturbation p;
    p.row = discrete(0);
    p.col = discrete(1);
    p.values.resize(bounds.channels);
    for (std::size_t ch = 0; ch < bounds.channels; ++ch)
        p.values[ch] = static_cast<std::uint16_t>(discrete(2 + ch));
    return p;
}

std::vector<double> perturbation_to_genotype(const Perturbation& p)
{
    std::vector<double> g{static_cast<double>(p.row), static_cast<double>(p.col)};
    for (auto v : p.values)
        g.push_back(static_cast<double>(v));
    return g;
}

namespace {

[[maybe_unused]] std::size_t changed_cells(const IndexTensor& a, const IndexTensor& b)
{
    std::size_t cells = 0;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            for (std::size_t ch = 0; ch < a.channels(); ++ch)
                if (a.at(r, c, ch) != b.at(r, c, ch)) {
                    ++cells;
                    break;
                }
    return cells;
}

}  // namespace

AttackContext::AttackContext(IndexTensor original, Codebook codebook, const Oracle& oracle,
                             std::size_t true_label, std::size_t budget)
    : original_(std::move(original)), codebook_(std::move(codebook)), oracle_(oracle),
      true_label_(true_label), budget_(budget)
{
    if (original_.codebook_id() != codebook_.id())
        throw Error(Errc::codebook_mismatch, "index stream was not produced with this codebook");
    if (true_label >= oracle.classes())
        throw Error(Errc::invalid_argument, "true label " + std::to_string(true_label) +
                                                " outside [0, " + std::to_string(oracle.classes()) + ")");
}

Evaluation AttackContext::query(const Perturbation& p) const
{
    const auto probs = oracle_.classify(decode(apply_perturbation(original_, p), codebook_));
    Evaluation e;
    e.fitness = probs[true_label_];
    e.label = probs.argmax();
    e.confidence = probs[e.label];
    return e;
}

Evaluation AttackContext::evaluate(const Perturbation& p)
{
    return evaluate_all(std::span<const Perturbation>(&p, 1)).front();
}

std::vector<Evaluation> AttackContext::evaluate_all(std::span<const Perturbation> candidates)
{
    if (candidates.size() > remaining())
        throw Error(Errc::budget_exhausted, "evaluation budget of " + std::to_string(budget_) +
                                                " exhausted");

    std::vector<const Perturbation*> pending;
    for (const auto& p : candidates) {
        const auto candidate = apply_perturbation(original_, p);
        assert(changed_cells(original_, candidate) <= 1);
        if (observer_.on_candidate)
            observer_.on_candidate(candidate);
        if (cache_.contains(p))
            continue;
        if (std::none_of(pending.begin(), pending.end(), [&](const Perturbation* q) { return *q == p; }))
            pending.push_back(&p);
    }

    std::vector<std::optional<Evaluation>> answers(pending.size());
    std::exception_ptr failure;
    try {
        detail::parallel_for(pending.size(), workers_,
                             [&](std::size_t k) { answers[k] = query(*pending[k]); });
    } catch (...) {
        failure = std::current_exception();
    }
    for (std::size_t k = 0; k < pending.size(); ++k) {
        if (!answers[k])
            continue;
        cache_.emplace(*pending[k], *answers[k]);
        ++oracle_queries_;
    }
    if (failure)
        std::rethrow_exception(failure);

    evaluations_ += candidates.size();
    std::vector<Evaluation> out;
    out.reserve(candidates.size());
    for (const auto& p : candidates)
        out.push_back(cache_.at(p));
    return out;
}

double fitness(AttackContext& ctx, const Perturbation& p)
{
    return ctx.evaluate(p).fitness;
}

namespace {

struct Member {
    std::vector<double> genotype;
    Perturbation phenotype;
    Evaluation eval;
};

PopulationSnapshot snapshot(const char* stage, std::size_t generation,
                            const std::vector<Member>& population)
{
    PopulationSnapshot s{stage, generation, {}};
    s.individuals.reserve(population.size());
    for (const auto& m : population)
        s.individuals.push_back({m.phenotype, m.eval.fitness});
    return s;
}

std::size_t best_member(const std::vector<Member>& population)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < population.size(); ++i)
        if (population[i].eval.fitness < population[best].eval.fitness)
            best = i;
    return best;
}

void fill_outcome(AttackResult& r, const Perturbation& p, const Evaluation& e, std::size_t true_label)
{
    r.best = p;
    r.true_label = true_label;
    r.fitness = e.fitness;
    r.adversarial_label = e.label;
    r.confidence = e.confidence;
    r.success = e.label != true_label;
}

}  // namespace

AttackResult de_attack(AttackContext& ctx, const DeConfig& config)
{
    if (config.population < 4)
        throw Error(Errc::invalid_argument, "population must be at least 4");
    if (!(config.scale > 0.0 && config.scale <= 2.0))
        throw Error(Errc::invalid_argument, "scale factor must be in (0, 2]");
    const std::size_t budget = std::min(config.effective_budget(), ctx.remaining());
    if (budget < config.population)
        throw Error(Errc::invalid_argument, "budget " + std::to_string(budget) +
                                                " is smaller than the population " +
                                                std::to_string(config.population));

    const auto bounds = ctx.bounds();
    const std::size_t dims = bounds.genotype_size();
    const std::size_t pop = config.population;
    const std::size_t start_evaluations = ctx.evaluations();
    const std::uint64_t start_queries = ctx.oracle_queries();
    ctx.set_workers(config.workers);

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, pop - 1);

    AttackResult result;
    result.true_label = ctx.true_label();
    std::vector<Member> population(pop);

    auto used = [&] { return ctx.evaluations() - start_evaluations; };
    auto finish = [&]() -> AttackResult& {
        result.evaluations = used();
        result.oracle_queries = ctx.oracle_queries() - start_queries;
        return result;
    };
    auto evaluate = [&](const std::vector<Perturbation>& batch) {
        try {
            auto evals = ctx.evaluate_all(batch);
            for (const auto& e : evals)
                result.fitness_log.push_back(e.fitness);
            return evals;
        } catch (const Error& e) {
            if (!is_oracle_error(e.code()))
                throw;
            auto& partial = finish();
            if (!result.trajectory.empty()) {
                const auto b = best_member(population);
                fill_outcome(partial, population[b].phenotype, population[b].eval, ctx.true_label());
            }
            throw AttackAborted(e, partial);
        }
    };

    // Uniform initialisation inside the search box.
    std::vector<Perturbation> batch(pop);
    for (std::size_t i = 0; i < pop; ++i) {
        auto& m = population[i];
        m.genotype.resize(dims);
        for (std::size_t j = 0; j < dims; ++j)
            m.genotype[j] = unit(rng) * bounds.upper(j);
        m.phenotype = genotype_to_perturbation(m.genotype, bounds);
        batch[i] = m.phenotype;
    }
    auto evals = evaluate(batch);
    bool misclassified = false;
    for (std::size_t i = 0; i < pop; ++i) {
        population[i].eval = evals[i];
        misclassified |= evals[i].label != ctx.true_label();
    }
    result.trajectory.push_back(population[best_member(population)].eval.fitness);
    if (config.snapshots)
        result.snapshots.push_back(snapshot("initial", 0, population));

    const std::size_t middle = (config.generations + 1) / 2;
    std::vector<std::vector<double>> trials(pop, std::vector<double>(dims));
    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        if (config.early_stop && misclassified)
            break;
        const std::size_t room = budget - used();
        if (room == 0)
            break;

        for (std::size_t i = 0; i < pop; ++i) {
            std::size_t xi, phi, eta;
            do { xi = pick(rng); } while (xi == i);
            do { phi = pick(rng); } while (phi == i || phi == xi);
            do { eta = pick(rng); } while (eta == i || eta == xi || eta == phi);
            if (const auto& hook = ctx.observer().on_donors)
                hook(i, xi, phi, eta);
            for (std::size_t j = 0; j < dims; ++j) {
                const double v = population[xi].genotype[j] +
                                 config.scale * (population[phi].genotype[j] - population[eta].genotype[j]);
                trials[i][j] = std::clamp(v, 0.0, bounds.upper(j));
            }
        }
        const std::size_t count = std::min(pop, room);
        batch.resize(count);
        for (std::size_t i = 0; i < count; ++i)
            batch[i] = genotype_to_perturbation(trials[i], bounds);
        evals = evaluate(batch);

        // Selection happens only after the whole generation is evaluated.
        for (std::size_t i = 0; i < count; ++i) {
            misclassified |= evals[i].label != ctx.true_label();
            if (evals[i].fitness < population[i].eval.fitness) {
                population[i].genotype = trials[i];
                population[i].phenotype = batch[i];
                population[i].eval = evals[i];
            }
        }
        result.generations = gen;
        result.trajectory.push_back(population[best_member(population)].eval.fitness);
        if (config.snapshots && gen == middle)
            result.snapshots.push_back(snapshot("middle", gen, population));
        if (count < pop)
            break;
    }
    if (config.snapshots)
        result.snapshots.push_back(snapshot("final", result.generations, population));

    const auto b = best_member(population);
    fill_outcome(result, population[b].phenotype, population[b].eval, ctx.true_label());
    return finish();
}

AttackResult random_search_attack(AttackContext& ctx, std::size_t n, std::uint64_t seed)
{
    if (n == 0)
        throw Error(Errc::invalid_argument, "random search needs at least one evaluation");
    if (n > ctx.remaining())
        throw Error(Errc::invalid_argument, "random search budget exceeds the remaining " +
                                                std::to_string(ctx.remaining()) + " evaluations");
    const auto bounds = ctx.bounds();
    const std::size_t start_evaluations = ctx.evaluations();
    const std::uint64_t start_queries = ctx.oracle_queries();

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> row(0, bounds.rows - 1);
    std::uniform_int_distribution<std::size_t> col(0, bounds.cols - 1);
    std::uniform_int_distribution<std::size_t> value(0, bounds.codebook_length - 1);
    std::vector<Perturbation> draws(n);
    for (auto& p : draws) {
        p.row = row(rng);
        p.col = col(rng);
        p.values.resize(bounds.channels);
        for (auto& v : p.values)
            v = static_cast<std::uint16_t>(value(rng));
    }

    AttackResult result;
    result.true_label = ctx.true_label();
    std::optional<std::size_t> best;
    Evaluation best_eval;
    std::optional<Evaluation> best_wrong;  // lowest-fitness misclassified draw
    auto settle = [&] {
        fill_outcome(result, draws[*best], best_eval, ctx.true_label());
        if (best_wrong) {
            result.success = true;
            result.adversarial_label = best_wrong->label;
            result.confidence = best_wrong->confidence;
        }
    };
    constexpr std::size_t kChunk = 64;
    for (std::size_t first = 0; first < n; first += kChunk) {
        const auto chunk = std::span<const Perturbation>(draws).subspan(first, std::min(kChunk, n - first));
        std::vector<Evaluation> evals;
        try {
            evals = ctx.evaluate_all(chunk);
        } catch (const Error& e) {
            if (!is_oracle_error(e.code()))
                throw;
            result.evaluations = ctx.evaluations() - start_evaluations;
            result.oracle_queries = ctx.oracle_queries() - start_queries;
            if (best)
                settle();
            throw AttackAborted(e, result);
        }
        for (std::size_t k = 0; k < evals.size(); ++k) {
            result.fitness_log.push_back(evals[k].fitness);
            if (!best || evals[k].fitness < best_eval.fitness) {
                best = first + k;
                best_eval = evals[k];
            }
            if (evals[k].label != ctx.true_label() && (!best_wrong || evals[k].fitness < best_wrong->fitness))
                best_wrong = evals[k];
            result.trajectory.push_back(best_eval.fitness);
        }
    }
    settle();
    result.evaluations = ctx.evaluations() - start_evaluations;
    result.oracle_queries = ctx.oracle_queries() - start_queries;
    return result;
}

}  // namespace vqattack
