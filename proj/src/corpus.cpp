#include "figret/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "figret/error.hpp"
#include "figret/rng.hpp"

namespace figret {

namespace {

template <typename T>
void index_ids(const std::vector<T>& items, std::unordered_map<std::string, std::size_t>& pos,
               const char* what) {
    pos.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].id.empty()) throw ParseError(std::string(what) + " with empty id");
        if (!pos.emplace(items[i].id, i).second)
            throw ParseError(std::string("duplicate ") + what + " id '" + items[i].id + "'");
    }
}

}  // namespace

Corpus::Corpus(std::vector<InfoUnit> units, std::vector<Document> documents, std::vector<Query> queries)
    : units_(std::move(units)), documents_(std::move(documents)), queries_(std::move(queries)) {
    index_ids(units_, unit_pos_, "unit");
    index_ids(documents_, doc_pos_, "document");
    index_ids(queries_, query_pos_, "query");

    for (const auto& u : units_)
        if (u.text.empty()) throw ParseError("unit '" + u.id + "' has empty text");
    for (const auto& d : documents_) {
        if (!d.unit_ids) continue;
        std::unordered_set<std::string> seen;
        for (const auto& uid : *d.unit_ids) {
            if (!unit_pos_.contains(uid))
                throw ParseError("document '" + d.id + "' references unknown unit '" + uid + "'");
            if (!seen.insert(uid).second)
                throw ParseError("document '" + d.id + "' repeats unit '" + uid + "'");
        }
    }
    for (const auto& q : queries_) {
        for (const auto& uid : q.gold_unit_ids)
            if (!unit_pos_.contains(uid))
                throw ParseError("query '" + q.id + "' references unknown unit '" + uid + "'");
        if (q.has_ground_truth() &&
            std::find(q.gold_unit_ids.begin(), q.gold_unit_ids.end(), q.answer_unit_id) ==
                q.gold_unit_ids.end())
            throw ParseError("query '" + q.id + "' answer unit is not among its gold units");
    }
}

const InfoUnit* Corpus::find_unit(const std::string& id) const {
    auto it = unit_pos_.find(id);
    return it == unit_pos_.end() ? nullptr : &units_[it->second];
}

const Document* Corpus::find_document(const std::string& id) const {
    auto it = doc_pos_.find(id);
    return it == doc_pos_.end() ? nullptr : &documents_[it->second];
}

const Query* Corpus::find_query(const std::string& id) const {
    auto it = query_pos_.find(id);
    return it == query_pos_.end() ? nullptr : &queries_[it->second];
}

const Document& Corpus::document(const std::string& id) const {
    if (const auto* d = find_document(id)) return *d;
    throw PreconditionError("unknown document '" + id + "'");
}

const Query& Corpus::query(const std::string& id) const {
    if (const auto* q = find_query(id)) return *q;
    throw PreconditionError("unknown query '" + id + "'");
}

std::string Corpus::render(std::span<const std::string> unit_ids) const {
    std::string out;
    for (const auto& uid : unit_ids) {
        const auto* u = find_unit(uid);
        if (!u) throw PreconditionError("cannot render unknown unit '" + uid + "'");
        if (!out.empty()) out += ' ';
        out += u->text;
    }
    return out;
}

void GenerationProfile::validate() const {
    if (units_per_doc.min < 1 || units_per_doc.min > units_per_doc.max)
        throw ConfigError("units_per_doc range is invalid");
    if (noise_fraction.min < 0.0 || noise_fraction.max >= 1.0 || noise_fraction.min > noise_fraction.max)
        throw ConfigError("noise_fraction range must satisfy 0 <= min <= max < 1");
    if (gold_per_query.min < 2 || gold_per_query.min > gold_per_query.max)
        throw ConfigError("gold_per_query range must satisfy 2 <= min <= max");
    if (units_per_subject < gold_per_query.max)
        throw ConfigError("units_per_subject must be >= gold_per_query.max");
    if (n_relations < 1 || n_objects < 1) throw ConfigError("vocabulary sizes must be positive");
    if (answer_spread < 0.0 || answer_spread > 1.0) throw ConfigError("answer_spread must lie in [0, 1]");
}

namespace {

class WordMaker {
public:
    explicit WordMaker(Rng& rng) : rng_(rng) {}

    std::vector<std::string> make(int n) {
        static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p",
                                                       "r", "s", "t", "v", "z", "br", "dr", "kl",
                                                       "st", "tr", "sh"};
        static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
        std::vector<std::string> words;
        words.reserve(static_cast<std::size_t>(n));
        while (static_cast<int>(words.size()) < n) {
            std::string w;
            const int syllables = static_cast<int>(rng_.between(2, 3));
            for (int s = 0; s < syllables; ++s) {
                w += kOnsets[rng_.below(std::size(kOnsets))];
                w += kVowels[rng_.below(std::size(kVowels))];
            }
            if (used_.insert(w).second) words.push_back(std::move(w));
        }
        return words;
    }

private:
    Rng& rng_;
    std::unordered_set<std::string> used_;
};

std::vector<std::size_t> sample_without_replacement(Rng& rng, std::vector<std::size_t> pool, std::size_t k) {
    k = std::min(k, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace

Corpus generate_synthetic(std::uint64_t seed, int n_units, int n_docs, int n_queries,
                          const GenerationProfile& profile) {
    profile.validate();
    if (n_units < 10) throw ConfigError("n_units must be >= 10");
    if (n_docs < 2) throw ConfigError("n_docs must be >= 2");
    if (n_queries < 1) throw ConfigError("n_queries must be >= 1");
    if (n_docs < 2 * n_queries)
        throw ConfigError("n_docs must be >= 2 * n_queries so every query spans two documents");
    if (n_units < profile.units_per_subject + profile.units_per_doc.max)
        throw ConfigError("n_units too small for the profile");

    Rng rng(derive_seed(seed, {0x636f72707573ULL}));
    WordMaker words(rng);

    const int n_subjects = n_units / profile.units_per_subject;
    const auto subjects = words.make(n_subjects);
    const auto relations = words.make(profile.n_relations);
    const auto objects = words.make(profile.n_objects);

    // Unit i belongs to subject i / units_per_subject; the tail spills into
    // the last subject.
    std::vector<InfoUnit> units;
    std::vector<std::size_t> unit_relation(static_cast<std::size_t>(n_units));
    std::vector<std::vector<std::size_t>> subject_units(static_cast<std::size_t>(n_subjects));
    units.reserve(static_cast<std::size_t>(n_units));
    for (int i = 0; i < n_units; ++i) {
        const auto subj = static_cast<std::size_t>(std::min(i / profile.units_per_subject, n_subjects - 1));
        const auto rel = rng.below(relations.size());
        const auto obj = rng.below(objects.size());
        unit_relation[static_cast<std::size_t>(i)] = rel;
        subject_units[subj].push_back(static_cast<std::size_t>(i));
        std::string id = "u" + std::to_string(i);
        std::string text = "fact " + id + ": " + subjects[subj] + " " + relations[rel] + " " + objects[obj] + ".";
        units.push_back({std::move(id), std::move(text)});
    }

    std::vector<std::size_t> subject_order(static_cast<std::size_t>(n_subjects));
    for (std::size_t i = 0; i < subject_order.size(); ++i) subject_order[i] = i;
    rng.shuffle(subject_order.begin(), subject_order.end());

    // Each subject has a fixed core of gold units shared by every query on
    // that subject; its remaining units are same-subject distractors. Queries
    // on one subject differ in their answer unit.
    std::vector<std::vector<std::size_t>> subject_core(static_cast<std::size_t>(n_subjects));
    std::vector<std::size_t> subject_visits(static_cast<std::size_t>(n_subjects), 0);

    std::vector<Query> queries;
    std::vector<std::vector<std::size_t>> query_gold;
    std::vector<std::size_t> query_answer;
    for (int qi = 0; qi < n_queries; ++qi) {
        const auto subj = subject_order[static_cast<std::size_t>(qi) % subject_order.size()];
        auto& core = subject_core[subj];
        if (core.empty()) {
            const auto g = static_cast<std::size_t>(rng.between(profile.gold_per_query.min, profile.gold_per_query.max));
            core = sample_without_replacement(rng, subject_units[subj], g);
        }
        const auto answer = core[subject_visits[subj]++ % core.size()];
        auto gold = core;
        std::sort(gold.begin(), gold.end());

        Query q;
        q.id = "q" + std::to_string(qi);
        q.text = "what about " + subjects[subj] + " " + relations[unit_relation[answer]];
        for (auto u : gold) q.gold_unit_ids.push_back(units[u].id);
        q.answer_unit_id = units[answer].id;
        queries.push_back(std::move(q));
        query_gold.push_back(std::move(gold));
        query_answer.push_back(answer);
    }

    std::vector<std::size_t> all_units(static_cast<std::size_t>(n_units));
    for (std::size_t i = 0; i < all_units.size(); ++i) all_units[i] = i;

    std::vector<std::vector<std::size_t>> doc_units;
    doc_units.reserve(static_cast<std::size_t>(n_docs));
    std::vector<int> anchored(static_cast<std::size_t>(n_queries), 0);
    for (int di = 0; di < n_docs; ++di) {
        const auto qi = static_cast<std::size_t>(di % n_queries);
        const auto& gold = query_gold[qi];
        const bool leading = anchored[qi]++ == 0;

        const int n = static_cast<int>(rng.between(profile.units_per_doc.min, profile.units_per_doc.max));
        const double frac = profile.noise_fraction.min +
                            rng.uniform() * (profile.noise_fraction.max - profile.noise_fraction.min);
        int noise = static_cast<int>(std::lround(frac * n));
        int gold_count = std::clamp(n - noise, 1, static_cast<int>(gold.size()) - 1);

        const bool with_answer = leading || rng.uniform() < profile.answer_spread;
        std::vector<std::size_t> others;
        for (auto u : gold)
            if (u != query_answer[qi]) others.push_back(u);
        std::vector<std::size_t> chosen;
        if (with_answer) {
            chosen.push_back(query_answer[qi]);
            auto rest = sample_without_replacement(rng, others, static_cast<std::size_t>(gold_count - 1));
            chosen.insert(chosen.end(), rest.begin(), rest.end());
        } else {
            chosen = sample_without_replacement(rng, others, static_cast<std::size_t>(gold_count));
        }

        std::unordered_set<std::size_t> gold_set(gold.begin(), gold.end());
        std::unordered_set<std::size_t> picked;
        while (static_cast<int>(picked.size()) < noise) {
            const auto u = rng.below(all_units.size());
            if (!gold_set.contains(u)) picked.insert(u);
        }
        std::vector<std::size_t> noise_units(picked.begin(), picked.end());
        std::sort(noise_units.begin(), noise_units.end());
        chosen.insert(chosen.end(), noise_units.begin(), noise_units.end());
        rng.shuffle(chosen.begin(), chosen.end());
        doc_units.push_back(std::move(chosen));
    }
    rng.shuffle(doc_units.begin(), doc_units.end());

    std::vector<Document> docs;
    docs.reserve(doc_units.size());
    for (std::size_t di = 0; di < doc_units.size(); ++di) {
        Document d;
        d.id = "d" + std::to_string(di);
        std::vector<std::string> ids;
        std::string text;
        for (auto u : doc_units[di]) {
            ids.push_back(units[u].id);
            if (!text.empty()) text += ' ';
            text += units[u].text;
        }
        d.text = std::move(text);
        d.unit_ids = std::move(ids);
        docs.push_back(std::move(d));
    }

    return Corpus(std::move(units), std::move(docs), std::move(queries));
}

ObjectiveMetrics objective_metrics(std::span<const std::string> doc_units,
                                   std::span<const std::string> gold_units) {
    if (gold_units.empty()) throw UnsupportedCorpusError("query has no gold units");
    std::unordered_set<std::string_view> gold(gold_units.begin(), gold_units.end());
    int hits = 0;
    for (const auto& u : doc_units)
        if (gold.contains(u)) ++hits;
    ObjectiveMetrics m;
    m.relevance_count = hits;
    m.comprehensiveness = static_cast<double>(hits) / static_cast<double>(gold.size());
    m.purity = doc_units.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(doc_units.size());
    return m;
}

ObjectiveMetrics objective_metrics(const Document& doc, const Query& query) {
    if (!doc.unit_ids) throw UnsupportedCorpusError("document '" + doc.id + "' has no ground-truth units");
    return objective_metrics(*doc.unit_ids, query.gold_unit_ids);
}

json to_json(const InfoUnit& u) {
    return json{{"kind", "unit"}, {"id", u.id}, {"text", u.text}};
}

json to_json(const Document& d) {
    json j{{"kind", "document"}, {"id", d.id}, {"text", d.text}};
    if (d.unit_ids) j["unit_ids"] = *d.unit_ids;
    return j;
}

json to_json(const Query& q) {
    return json{{"kind", "query"},
                {"id", q.id},
                {"text", q.text},
                {"gold_unit_ids", q.gold_unit_ids},
                {"answer_unit_id", q.answer_unit_id}};
}

Document document_from_json(const json& j) {
    Document d;
    d.id = j.at("id").get<std::string>();
    d.text = j.at("text").get<std::string>();
    if (j.contains("unit_ids") && !j.at("unit_ids").is_null())
        d.unit_ids = j.at("unit_ids").get<std::vector<std::string>>();
    return d;
}

Query query_from_json(const json& j) {
    Query q;
    q.id = j.at("id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    if (j.contains("gold_unit_ids")) q.gold_unit_ids = j.at("gold_unit_ids").get<std::vector<std::string>>();
    if (j.contains("answer_unit_id") && !j.at("answer_unit_id").is_null())
        q.answer_unit_id = j.at("answer_unit_id").get<std::string>();
    return q;
}

void write_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::string out;
    for (const auto& u : corpus.units()) out += to_json(u).dump() + '\n';
    for (const auto& d : corpus.documents()) out += to_json(d).dump() + '\n';
    for (const auto& q : corpus.queries()) out += to_json(q).dump() + '\n';
    atomic_write(path, out);
}

Corpus read_jsonl(const std::filesystem::path& path) {
    std::vector<InfoUnit> units;
    std::vector<Document> docs;
    std::vector<Query> queries;
    for_each_jsonl(path, [&](const json& j, std::size_t line) {
        if (!j.is_object()) throw ParseError(path.string() + ": line " + std::to_string(line) + ": not an object");
        std::string kind;
        if (j.contains("kind")) {
            kind = j.at("kind").get<std::string>();
        } else if (j.contains("gold_unit_ids")) {
            kind = "query";
        } else if (j.contains("unit_ids")) {
            kind = "document";
        } else {
            kind = "unit";
        }
        if (kind == "unit") {
            units.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>()});
        } else if (kind == "document") {
            docs.push_back(document_from_json(j));
        } else if (kind == "query") {
            queries.push_back(query_from_json(j));
        } else {
            throw ParseError(path.string() + ": line " + std::to_string(line) + ": unknown kind '" + kind + "'");
        }
    });
    return Corpus(std::move(units), std::move(docs), std::move(queries));
}

}  // namespace figret
