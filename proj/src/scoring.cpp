#include "figret/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <spdlog/spdlog.h>

#include "figret/error.hpp"

namespace figret {

std::string_view to_string(EntryStatus s) {
    switch (s) {
        case EntryStatus::unscored: return "unscored";
        case EntryStatus::scored: return "scored";
        case EntryStatus::selected: return "selected";
        case EntryStatus::well_learned: return "well_learned";
        case EntryStatus::regressed: return "regressed";
    }
    return "unscored";
}

EntryStatus entry_status_from_string(std::string_view s) {
    if (s == "unscored") return EntryStatus::unscored;
    if (s == "scored") return EntryStatus::scored;
    if (s == "selected") return EntryStatus::selected;
    if (s == "well_learned") return EntryStatus::well_learned;
    if (s == "regressed") return EntryStatus::regressed;
    throw ParseError("unknown entry status '" + std::string(s) + "'");
}

bool SamplePoolEntry::top1_matches() const {
    if (scores.empty()) return false;
    return scores.front() == *std::max_element(scores.begin(), scores.end());
}

namespace {

double dcg(std::span<const double> gains) {
    double s = 0.0;
    for (std::size_t i = 0; i < gains.size(); ++i)
        s += (std::exp2(gains[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    return s;
}

}  // namespace

double ndcg(std::span<const double> gains) {
    if (gains.empty()) throw DomainError("ndcg of an empty list");
    for (double g : gains)
        if (!(g >= 0.0)) throw DomainError("ndcg gains must be non-negative");
    std::vector<double> ideal(gains.begin(), gains.end());
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    const double idcg = dcg(ideal);
    if (idcg == 0.0) return 1.0;
    return std::min(1.0, dcg(gains) / idcg);
}

double ndcg(std::span<const int> scores) {
    std::vector<double> g(scores.begin(), scores.end());
    return ndcg(g);
}

void apply_scores(SamplePoolEntry& entry, const ScoresVerdict& verdict) {
    std::vector<int> scores;
    scores.reserve(entry.doc_ids.size());
    for (const auto& id : entry.doc_ids) {
        const auto it = verdict.scores.find(id);
        if (it == verdict.scores.end()) throw TeacherProtocolError("teacher response is missing document " + id);
        scores.push_back(it->second);
    }
    const double value = ndcg(scores);
    entry.scores = std::move(scores);
    entry.ndcg = value;
    entry.status = EntryStatus::scored;
}

void score_entry(SamplePoolEntry& entry, Teacher& teacher, const Corpus& corpus) {
    if (entry.status != EntryStatus::unscored) throw PreconditionError("entry " + entry.id + " is already scored");
    if (entry.doc_ids.empty()) throw PreconditionError("entry " + entry.id + " has no retrieved documents");
    std::vector<Document> docs;
    docs.reserve(entry.doc_ids.size());
    for (const auto& id : entry.doc_ids) docs.push_back(corpus.document(id));
    const auto verdict = teacher.score_documents(entry.query, docs, {});
    check_scores(verdict, docs);
    apply_scores(entry, verdict);
}

ThresholdResult select_threshold(std::vector<SamplePoolEntry>& pool) {
    if (pool.empty()) throw PreconditionError("select_threshold on an empty pool");
    for (const auto& e : pool)
        if (!e.ndcg) throw PreconditionError("entry " + e.id + " is not scored");

    ThresholdResult r;
    std::optional<double> best;
    for (const auto& e : pool)
        if (e.top1_matches()) best = best ? std::min(*best, *e.ndcg) : *e.ndcg;

    if (best) {
        r.threshold = *best;
    } else {
        std::vector<double> values;
        for (const auto& e : pool) values.push_back(*e.ndcg);
        std::sort(values.begin(), values.end());
        r.threshold = values[(values.size() - 1) / 2];
        r.fallback = true;
        spdlog::warn("no pool entry has a teacher-matching top-1; falling back to median NDCG {:.4f} as threshold",
                     r.threshold);
    }
    for (auto& e : pool) {
        if (*e.ndcg < r.threshold) {
            e.status = EntryStatus::selected;
            ++r.selected;
        }
    }
    return r;
}

json to_json(const SamplePoolEntry& e) {
    json j{{"id", e.id},
           {"query", to_json(e.query)},
           {"doc_ids", e.doc_ids},
           {"scores", e.scores},
           {"status", to_string(e.status)}};
    j["ndcg"] = e.ndcg ? json(*e.ndcg) : json(nullptr);
    j["baseline_ndcg"] = e.baseline_ndcg ? json(*e.baseline_ndcg) : json(nullptr);
    return j;
}

SamplePoolEntry pool_entry_from_json(const json& j) {
    SamplePoolEntry e;
    e.id = j.at("id").get<std::string>();
    e.query = query_from_json(j.at("query"));
    e.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
    e.scores = j.value("scores", std::vector<int>{});
    if (j.contains("ndcg") && !j.at("ndcg").is_null()) e.ndcg = j.at("ndcg").get<double>();
    if (j.contains("baseline_ndcg") && !j.at("baseline_ndcg").is_null())
        e.baseline_ndcg = j.at("baseline_ndcg").get<double>();
    e.status = entry_status_from_string(j.at("status").get<std::string>());
    return e;
}

void write_pool(const std::vector<SamplePoolEntry>& pool, const std::filesystem::path& path) {
    atomic_write(path, to_jsonl(pool, [](const SamplePoolEntry& e) { return to_json(e); }));
}

std::vector<SamplePoolEntry> read_pool(const std::filesystem::path& path) {
    std::vector<SamplePoolEntry> pool;
    for_each_jsonl(path, [&](const json& j, std::size_t) { pool.push_back(pool_entry_from_json(j)); });
    return pool;
}

}  // namespace figret
