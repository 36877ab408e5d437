#include "figret/triplet.hpp"

#include <unordered_set>

#include "figret/error.hpp"

namespace figret {

std::string_view to_string(Origin o) {
    return o == Origin::guidance ? "guidance" : "preference";
}

std::string_view to_string(Objective o) {
    switch (o) {
        case Objective::relevance: return "relevance";
        case Objective::comprehensiveness: return "comprehensiveness";
        case Objective::purity: return "purity";
        case Objective::none: return "none";
    }
    return "none";
}

Origin origin_from_string(std::string_view s) {
    if (s == "guidance") return Origin::guidance;
    if (s == "preference") return Origin::preference;
    throw ParseError("unknown origin '" + std::string(s) + "'");
}

Objective objective_from_string(std::string_view s) {
    if (s == "relevance") return Objective::relevance;
    if (s == "comprehensiveness") return Objective::comprehensiveness;
    if (s == "purity") return Objective::purity;
    if (s == "none") return Objective::none;
    throw ParseError("unknown objective '" + std::string(s) + "'");
}

void GuidanceTriplet::validate() const {
    if (positives.empty()) throw PreconditionError("triplet " + id + ": empty positive set");
    if (negatives.empty()) throw PreconditionError("triplet " + id + ": empty negative set");
    if (!(difficulty >= 0.0 && difficulty <= 1.0))
        throw PreconditionError("triplet " + id + ": difficulty outside [0, 1]");
    std::unordered_set<std::string> pos;
    for (const auto& d : positives) pos.insert(d.id);
    for (const auto& d : negatives)
        if (pos.contains(d.id)) throw PreconditionError("triplet " + id + ": document " + d.id + " is both positive and negative");
}

namespace {

json docs_to_json(const std::vector<Document>& docs) {
    json arr = json::array();
    for (const auto& d : docs) {
        json j{{"id", d.id}, {"text", d.text}};
        if (d.unit_ids) j["unit_ids"] = *d.unit_ids;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<Document> docs_from_json(const json& arr) {
    std::vector<Document> docs;
    for (const auto& j : arr) docs.push_back(document_from_json(j));
    return docs;
}

}  // namespace

json to_json(const GuidanceTriplet& t) {
    json q{{"id", t.query.id}, {"text", t.query.text}};
    if (t.query.has_ground_truth()) {
        q["gold_unit_ids"] = t.query.gold_unit_ids;
        q["answer_unit_id"] = t.query.answer_unit_id;
    }
    return json{{"id", t.id},
                {"entry_id", t.entry_id},
                {"query", std::move(q)},
                {"positives", docs_to_json(t.positives)},
                {"negatives", docs_to_json(t.negatives)},
                {"origin", to_string(t.origin)},
                {"objective", to_string(t.objective)},
                {"s", t.difficulty},
                {"y", t.label()}};
}

GuidanceTriplet triplet_from_json(const json& j) {
    GuidanceTriplet t;
    t.id = j.at("id").get<std::string>();
    t.entry_id = j.value("entry_id", std::string{});
    t.query = query_from_json(j.at("query"));
    t.positives = docs_from_json(j.at("positives"));
    t.negatives = docs_from_json(j.at("negatives"));
    t.origin = origin_from_string(j.at("origin").get<std::string>());
    t.objective = objective_from_string(j.at("objective").get<std::string>());
    t.difficulty = j.at("s").get<double>();
    if (j.contains("y") && j.at("y").get<int>() != t.label())
        throw ParseError("triplet " + t.id + ": label y disagrees with origin");
    return t;
}

void write_triplets(const std::vector<GuidanceTriplet>& triplets, const std::filesystem::path& path) {
    atomic_write(path, to_jsonl(triplets, [](const GuidanceTriplet& t) { return to_json(t); }));
}

std::vector<GuidanceTriplet> read_triplets(const std::filesystem::path& path) {
    std::vector<GuidanceTriplet> out;
    for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(triplet_from_json(j)); });
    return out;
}

}  // namespace figret
