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

#include <json.hpp>

#include <cstdio>
#include <string>

#include "vqattack/error.hpp"
#include "vqattack/experiment.hpp"

namespace vqattack {

using nlohmann::json;

namespace {

json perturbation_json(const Perturbation& p)
{
    return {{"row", p.row}, {"col", p.col}, {"values", p.values}};
}

Perturbation perturbation_from(const json& j)
{
    Perturbation p;
    p.row = j.at("row").get<std::size_t>();
    p.col = j.at("col").get<std::size_t>();
    p.values = j.at("values").get<std::vector<std::uint16_t>>();
    return p;
}

json result_json(const AttackResult& r, bool with_log)
{
    json j = {
        {"best", perturbation_json(r.best)},
        {"success", r.success},
        {"true_label", r.true_label},
        {"adversarial_label", r.adversarial_label},
        {"confidence", r.confidence},
        {"fitness", r.fitness},
        {"evaluations", r.evaluations},
        {"oracle_queries", r.oracle_queries},
        {"generations", r.generations},
        {"trajectory", r.trajectory},
    };
    if (with_log)
        j["fitness_log"] = r.fitness_log;
    if (!r.snapshots.empty()) {
        json snaps = json::array();
        for (const auto& s : r.snapshots) {
            json individuals = json::array();
            for (const auto& ind : s.individuals) {
                auto e = perturbation_json(ind.perturbation);
                e["fitness"] = ind.fitness;
                individuals.push_back(std::move(e));
            }
            snaps.push_back({{"stage", s.stage}, {"generation", s.generation}, {"individuals", individuals}});
        }
        j["snapshots"] = std::move(snaps);
    }
    return j;
}

AttackResult result_from(const json& j)
{
    AttackResult r;
    r.best = perturbation_from(j.at("best"));
    r.success = j.at("success").get<bool>();
    r.true_label = j.at("true_label").get<std::size_t>();
    r.adversarial_label = j.at("adversarial_label").get<std::size_t>();
    r.confidence = j.at("confidence").get<double>();
    r.fitness = j.at("fitness").get<double>();
    r.evaluations = j.at("evaluations").get<std::size_t>();
    r.oracle_queries = j.at("oracle_queries").get<std::uint64_t>();
    r.generations = j.at("generations").get<std::size_t>();
    r.trajectory = j.at("trajectory").get<std::vector<double>>();
    if (j.contains("fitness_log"))
        r.fitness_log = j["fitness_log"].get<std::vector<double>>();
    if (j.contains("snapshots")) {
        for (const auto& s : j["snapshots"]) {
            PopulationSnapshot snap;
            snap.stage = s.at("stage").get<std::string>();
            snap.generation = s.at("generation").get<std::size_t>();
            for (const auto& ind : s.at("individuals"))
                snap.individuals.push_back({perturbation_from(ind), ind.at("fitness").get<double>()});
            r.snapshots.push_back(std::move(snap));
        }
    }
    return r;
}

std::string number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json parse_or_throw(std::string_view text, const char* what)
{
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::invalid_argument, std::string(what) + ": " + e.what());
    }
}

}  // namespace

std::string report_to_json(const BatchReport& report)
{
    json records = json::array();
    for (const auto& rec : report.records) {
        records.push_back({
            {"index", rec.index},
            {"id", rec.id},
            {"true_label", rec.true_label},
            {"label_before", rec.label_before},
            {"excluded", rec.excluded},
            {"seed", rec.seed},
            {"attack", rec.attack ? result_json(*rec.attack, false) : json(nullptr)},
        });
    }
    json doc = {
        {"method", method_name(report.method)},
        {"classes", report.classes},
        {"summary",
         {{"attacked", report.attacked},
          {"excluded", report.excluded},
          {"successes", report.successes},
          {"success_rate", report.success_rate},
          {"mean_confidence", report.mean_confidence ? json(*report.mean_confidence) : json(nullptr)}}},
        {"heatmap", report.heatmap},
        {"before_counts", report.before_counts},
        {"after_counts", report.after_counts},
        {"records", std::move(records)},
    };
    return doc.dump(2) + "\n";
}

BatchReport report_from_json(std::string_view text)
{
    const auto doc = parse_or_throw(text, "report JSON");
    try {
        const auto method = parse_method(doc.at("method").get<std::string>());
        if (!method)
            throw Error(Errc::invalid_argument, "report JSON: unknown method");
        std::vector<ImageRecord> records;
        for (const auto& j : doc.at("records")) {
            ImageRecord rec;
            rec.index = j.at("index").get<std::size_t>();
            rec.id = j.at("id").get<std::string>();
            rec.true_label = j.at("true_label").get<std::size_t>();
            rec.label_before = j.at("label_before").get<std::size_t>();
            rec.excluded = j.at("excluded").get<bool>();
            rec.seed = j.at("seed").get<std::uint64_t>();
            if (!j.at("attack").is_null())
                rec.attack = result_from(j["attack"]);
            records.push_back(std::move(rec));
        }
        return aggregate(*method, doc.at("classes").get<std::size_t>(), std::move(records));
    } catch (const json::exception& e) {
        throw Error(Errc::invalid_argument, std::string("report JSON: ") + e.what());
    }
}

std::string report_to_csv(const BatchReport& report)
{
    std::string out = "id,true_label,attacked_label,success,confidence,evaluations,excluded\n";
    for (const auto& rec : report.records) {
        out += rec.id + "," + std::to_string(rec.true_label) + ",";
        if (rec.attack) {
            const auto& a = *rec.attack;
            out += std::to_string(a.adversarial_label) + "," + (a.success ? "1" : "0") + "," +
                   number(a.confidence) + "," + std::to_string(a.evaluations);
        } else {
            out += std::to_string(rec.label_before) + ",0,,0";
        }
        out += rec.excluded ? ",1\n" : ",0\n";
    }
    return out;
}

std::string heatmap_to_csv(const BatchReport& report)
{
    std::string out;
    for (const auto& row : report.heatmap) {
        for (std::size_t j = 0; j < row.size(); ++j)
            out += (j ? "," : "") + std::to_string(row[j]);
        out += "\n";
    }
    return out;
}

std::string trajectories_to_csv(const BatchReport& report)
{
    std::string out = "id,generation,best_fitness\n";
    for (const auto& rec : report.records) {
        if (!rec.attack)
            continue;
        const auto& t = rec.attack->trajectory;
        for (std::size_t g = 0; g < t.size(); ++g)
            out += rec.id + "," + std::to_string(g) + "," + number(t[g]) + "\n";
    }
    return out;
}

std::string attack_result_to_json(const AttackResult& result)
{
    return result_json(result, true).dump(2) + "\n";
}

AttackResult attack_result_from_json(std::string_view text)
{
    const auto doc = parse_or_throw(text, "attack JSON");
    try {
        return result_from(doc);
    } catch (const json::exception& e) {
        throw Error(Errc::invalid_argument, std::string("attack JSON: ") + e.what());
    }
}

std::string trajectory_to_csv(const AttackResult& result)
{
    std::string out = "generation,best_fitness\n";
    for (std::size_t g = 0; g < result.trajectory.size(); ++g)
        out += std::to_string(g) + "," + number(result.trajectory[g]) + "\n";
    return out;
}

std::string snapshots_to_csv(const AttackResult& result)
{
    std::string out = "stage,generation,individual,row,col,channel,value,fitness\n";
    for (const auto& s : result.snapshots)
        for (std::size_t i = 0; i < s.individuals.size(); ++i) {
            const auto& ind = s.individuals[i];
            for (std::size_t ch = 0; ch < ind.perturbation.values.size(); ++ch)
                out += s.stage + "," + std::to_string(s.generation) + "," + std::to_string(i) + "," +
                       std::to_string(ind.perturbation.row) + "," + std::to_string(ind.perturbation.col) +
                       "," + std::to_string(ch) + "," + std::to_string(ind.perturbation.values[ch]) +
                       "," + number(ind.fitness) + "\n";
        }
    return out;
}

}  // namespace vqattack
