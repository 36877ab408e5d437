#include "figret/mock_teacher.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "figret/error.hpp"

namespace figret {

void MockTeacherConfig::validate() const {
    if (extra_units < 0) throw ConfigError("extra_units must be >= 0");
    if (rho_dense < 0.0 || rho_dense > 1.0 || rho_sparse < 0.0 || rho_sparse > 1.0)
        throw ConfigError("rho_dense and rho_sparse must lie in [0, 1]");
    if (jaccard_threshold < 0.0 || jaccard_threshold > 1.0) throw ConfigError("jaccard_threshold must lie in [0, 1]");
}

MockTeacher::MockTeacher(const Corpus& corpus, MockTeacherConfig config) : corpus_(corpus), config_(config) {
    config_.validate();
}

namespace {

const std::vector<std::string>& units_of(const Document& d) {
    if (!d.unit_ids) throw UnsupportedCorpusError("mock teacher needs ground-truth units for document " + d.id);
    return *d.unit_ids;
}

void require_gold(const Query& q) {
    if (!q.has_ground_truth()) throw UnsupportedCorpusError("mock teacher needs gold units for query " + q.id);
}

std::set<std::string> union_units(std::span<const Document> docs) {
    std::set<std::string> out;
    for (const auto& d : docs) {
        const auto& u = units_of(d);
        out.insert(u.begin(), u.end());
    }
    return out;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (const auto& x : sa) inter += sb.count(x);
    const std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// "fact u1: subject relation object." -> "subject relation"
std::string unit_topic(const std::string& text) {
    const auto tokens = tokenize(text);
    if (tokens.size() >= 4 && tokens[0] == "fact") return tokens[2] + " " + tokens[3];
    return text;
}

}  // namespace

int MockTeacher::score(const Document& doc, const Query& query) {
    require_gold(query);
    const auto& units = units_of(doc);
    const auto m = objective_metrics(units, query.gold_unit_ids);
    int lo = 0;
    if (std::find(units.begin(), units.end(), query.answer_unit_id) != units.end())
        lo = 8;
    else if (m.relevance_count >= 1)
        lo = 4;
    return lo + static_cast<int>(std::lround(2.0 * (0.5 * m.comprehensiveness + 0.5 * m.purity)));
}

ScoresVerdict MockTeacher::score_documents(const Query& query, std::span<const Document> docs,
                                           std::span<const Exemplar>) {
    if (docs.empty()) throw PreconditionError("score_documents needs at least one document");
    ScoresVerdict v;
    for (const auto& d : docs) v.scores[d.id] = score(d, query);
    return v;
}

InfoDeltasVerdict MockTeacher::extract_info_deltas(const Query& query, std::span<const Document>,
                                                   const ScoresVerdict&, std::span<const Document> positives,
                                                   std::span<const Document> negatives, std::span<const Exemplar>) {
    require_gold(query);
    if (positives.empty() || negatives.empty())
        throw PreconditionError("extract_info_deltas needs non-empty positive and negative sets");
    const auto helpful = union_units(positives);

    // Only negatives holding something the helpful set lacks take part.
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        const auto& u = units_of(negatives[i]);
        if (std::any_of(u.begin(), u.end(), [&](const std::string& x) { return !helpful.contains(x); }))
            candidates.push_back(i);
    }

    // Single-linkage clustering via union-find over the Jaccard graph.
    std::vector<std::size_t> parent(candidates.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    const auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t a = 0; a < candidates.size(); ++a)
        for (std::size_t b = a + 1; b < candidates.size(); ++b)
            if (jaccard(units_of(negatives[candidates[a]]), units_of(negatives[candidates[b]])) >=
                config_.jaccard_threshold) {
                const auto ra = find(a), rb = find(b);
                if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
            }

    InfoDeltasVerdict v;
    std::vector<std::size_t> group_of_root(candidates.size(), SIZE_MAX);
    for (std::size_t a = 0; a < candidates.size(); ++a) {
        const auto r = find(a);
        if (group_of_root[r] == SIZE_MAX) {
            group_of_root[r] = v.deltas.size();
            v.deltas.emplace_back();
        }
        auto& delta = v.deltas[group_of_root[r]];
        const auto& doc = negatives[candidates[a]];
        delta.doc_ids.push_back(doc.id);
        for (const auto& u : units_of(doc))
            if (!helpful.contains(u) && std::find(delta.unit_ids.begin(), delta.unit_ids.end(), u) == delta.unit_ids.end())
                delta.unit_ids.push_back(u);
    }
    for (auto& delta : v.deltas) {
        for (const auto& u : delta.unit_ids) {
            if (!delta.summary.empty()) delta.summary += ' ';
            delta.summary += corpus_.render(std::span<const std::string>(&u, 1));
        }
    }
    return v;
}

NewQueriesVerdict MockTeacher::make_new_queries(const Query& query, std::span<const Document> retrieved,
                                                const ScoresVerdict&, const InfoDeltasVerdict& deltas,
                                                std::span<const Exemplar>) {
    require_gold(query);
    NewQueriesVerdict v;
    for (std::size_t i = 0; i < deltas.deltas.size(); ++i) {
        const auto& delta = deltas.deltas[i];
        const std::set<std::string> group(delta.doc_ids.begin(), delta.doc_ids.end());

        // Sharpen the delta so the new query matches nothing outside its group.
        std::set<std::string> outside;
        for (const auto& d : retrieved)
            if (!group.contains(d.id)) {
                const auto& u = units_of(d);
                outside.insert(u.begin(), u.end());
            }
        std::vector<std::string> gold;
        for (const auto& u : delta.unit_ids)
            if (!outside.contains(u)) gold.push_back(u);
        if (gold.empty()) continue;

        NewQuery nq;
        const std::unordered_set<std::string> gold_set(gold.begin(), gold.end());
        for (const auto& d : retrieved) {
            const auto& u = units_of(d);
            const bool hit = group.contains(d.id) &&
                             std::any_of(u.begin(), u.end(), [&](const std::string& x) { return gold_set.contains(x); });
            (hit ? nq.positive_ids : nq.negative_ids).push_back(d.id);
        }
        if (nq.positive_ids.empty() || nq.negative_ids.empty()) continue;

        const auto* anchor = corpus_.find_unit(gold.front());
        if (!anchor) throw UnsupportedCorpusError("unknown unit " + gold.front());
        std::string text = "what about " + unit_topic(anchor->text);
        if (text == query.text) text = "what about " + anchor->text;
        nq.query.id = query.id + "/rel" + std::to_string(i);
        nq.query.text = std::move(text);
        nq.query.gold_unit_ids = std::move(gold);
        nq.query.answer_unit_id = anchor->id;
        v.queries.push_back(std::move(nq));
    }
    return v;
}

std::optional<CompDocVerdict> MockTeacher::make_comprehensive_doc(const Query& query,
                                                                  std::span<const Document> positives,
                                                                  std::span<const Exemplar>) {
    require_gold(query);
    if (positives.empty()) return std::nullopt;
    const auto have = union_units(positives);
    std::vector<std::string> units;
    int extra = 0;
    for (const auto& g : query.gold_unit_ids) {
        if (have.contains(g)) {
            units.push_back(g);
        } else if (extra < config_.extra_units) {
            units.push_back(g);
            ++extra;
        }
    }
    if (units.empty()) return std::nullopt;
    CompDocVerdict v;
    v.document.id = "comp:" + query.id;
    v.document.text = corpus_.render(units);
    v.document.unit_ids = std::move(units);
    return v;
}

std::optional<PurityDocsVerdict> MockTeacher::make_purity_docs(const Query& query, const Document& positive,
                                                               std::span<const Exemplar>) {
    require_gold(query);
    const auto& units = units_of(positive);
    const std::unordered_set<std::string> gold(query.gold_unit_ids.begin(), query.gold_unit_ids.end());
    const auto n_gold = static_cast<std::size_t>(std::count_if(units.begin(), units.end(),
                                                               [&](const std::string& u) { return gold.contains(u); }));
    const auto n_noise = units.size() - n_gold;

    // Removes the first `count` units matching `is_target`, in document order.
    const auto remove = [&](std::size_t count, bool target_gold) {
        std::vector<std::string> kept;
        std::size_t removed = 0;
        for (const auto& u : units) {
            if (gold.contains(u) == target_gold && removed < count) {
                ++removed;
                continue;
            }
            kept.push_back(u);
        }
        return kept;
    };

    PurityDocsVerdict v;
    const auto drop_noise = static_cast<std::size_t>(std::ceil(config_.rho_dense * static_cast<double>(n_noise)));
    if (drop_noise > 0) {
        auto kept = remove(drop_noise, false);
        if (!kept.empty()) {
            Document d;
            d.id = "dense:" + query.id + ":" + positive.id;
            d.text = corpus_.render(kept);
            d.unit_ids = std::move(kept);
            v.dense = std::move(d);
        }
    }
    const auto drop_gold = static_cast<std::size_t>(std::ceil(config_.rho_sparse * static_cast<double>(n_gold)));
    if (drop_gold > 0) {
        auto kept = remove(drop_gold, true);
        if (!kept.empty()) {
            Document d;
            d.id = "sparse:" + query.id + ":" + positive.id;
            d.text = corpus_.render(kept);
            d.unit_ids = std::move(kept);
            v.sparse = std::move(d);
        }
    }
    if (!v.dense && !v.sparse) return std::nullopt;
    return v;
}

}  // namespace figret
