#include "figret/teacher.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "figret/error.hpp"

namespace figret {

void TeacherRequest::validate() const {
    if (conversation.empty()) throw PreconditionError("teacher request has an empty conversation");
    for (const auto& m : conversation)
        if (m.role != "system" && m.role != "user" && m.role != "assistant")
            throw PreconditionError("invalid message role '" + m.role + "'");
    if (max_retries < 1) throw ConfigError("max_retries must be >= 1");
}

void check_scores(const ScoresVerdict& v, std::span<const Document> submitted) {
    if (v.scores.size() != submitted.size())
        throw TeacherProtocolError("teacher scored " + std::to_string(v.scores.size()) + " documents, expected " +
                                   std::to_string(submitted.size()));
    for (const auto& d : submitted) {
        auto it = v.scores.find(d.id);
        if (it == v.scores.end()) throw TeacherProtocolError("teacher response is missing document " + d.id);
        if (it->second < 0 || it->second > 10)
            throw TeacherProtocolError("score for " + d.id + " outside 0-10");
    }
}

void check_new_queries(const NewQueriesVerdict& v, std::span<const Document> submitted) {
    std::set<std::string> ids;
    for (const auto& d : submitted) ids.insert(d.id);
    for (const auto& nq : v.queries) {
        if (nq.query.text.empty()) throw TeacherProtocolError("rewritten query is empty");
        std::set<std::string> seen;
        for (const auto* list : {&nq.positive_ids, &nq.negative_ids})
            for (const auto& id : *list) {
                if (!ids.contains(id)) throw TeacherProtocolError("rewritten query references unknown document " + id);
                if (!seen.insert(id).second)
                    throw TeacherProtocolError("document " + id + " listed twice for one rewritten query");
            }
        if (seen != ids) throw TeacherProtocolError("rewritten query does not partition the submitted documents");
    }
}

json to_json(const ScoresVerdict& v) {
    json arr = json::array();
    for (const auto& [id, s] : v.scores) arr.push_back({{"id", id}, {"score", s}});
    return json{{"scores", std::move(arr)}};
}

json to_json(const Exemplar& e) {
    json docs = json::array();
    for (const auto& d : e.docs) {
        json j{{"id", d.id}, {"text", d.text}};
        if (d.unit_ids) j["unit_ids"] = *d.unit_ids;
        docs.push_back(std::move(j));
    }
    return json{{"query", to_json(e.query)}, {"docs", std::move(docs)}, {"verdict", to_json(e.verdict)}};
}

Exemplar exemplar_from_json(const json& j) {
    Exemplar e;
    e.query = query_from_json(j.at("query"));
    for (const auto& d : j.at("docs")) e.docs.push_back(document_from_json(d));
    for (const auto& s : j.at("verdict").at("scores"))
        e.verdict.scores[s.at("id").get<std::string>()] = s.at("score").get<int>();
    return e;
}

void ExemplarStore::insert(Exemplar exemplar) {
    exemplars_.push_back(std::move(exemplar));
    built_for_.reset();
}

void ExemplarStore::refresh(const EncoderModel& model) {
    const auto key = std::make_pair(model.seed(), model.version());
    if (built_for_ && *built_for_ == key && embeddings_.size() == exemplars_.size()) return;
    embeddings_.clear();
    embeddings_.reserve(exemplars_.size());
    for (const auto& e : exemplars_) embeddings_.push_back(model.embed(e.query.text));
    built_for_ = key;
}

std::vector<Exemplar> ExemplarStore::nearest(const EncoderModel& model, std::string_view query_text, std::size_t n) {
    if (exemplars_.empty() || n == 0) return {};
    refresh(model);
    const auto q = model.embed(query_text);
    std::vector<std::size_t> order(exemplars_.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> sims(exemplars_.size());
    for (std::size_t i = 0; i < exemplars_.size(); ++i) sims[i] = similarity(q, embeddings_[i]);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });
    order.resize(std::min(n, order.size()));
    std::vector<Exemplar> out;
    for (auto i : order) out.push_back(exemplars_[i]);
    return out;
}

void ExemplarStore::save(const std::filesystem::path& path) const {
    atomic_write(path, to_jsonl(exemplars_, [](const Exemplar& e) { return to_json(e); }));
}

ExemplarStore ExemplarStore::load(const std::filesystem::path& path) {
    ExemplarStore store;
    if (!std::filesystem::exists(path)) return store;
    for_each_jsonl(path, [&](const json& j, std::size_t) { store.insert(exemplar_from_json(j)); });
    return store;
}

}  // namespace figret
