#include "figret/guidance.hpp"

#include <algorithm>
#include <set>

#include "figret/error.hpp"

namespace figret {

namespace {

std::vector<Document> retrieved_docs(const SamplePoolEntry& e, const Corpus& corpus) {
    std::vector<Document> docs;
    docs.reserve(e.doc_ids.size());
    for (const auto& id : e.doc_ids) docs.push_back(corpus.document(id));
    return docs;
}

void require_scored(const SamplePoolEntry& e) {
    if (!e.ndcg || e.scores.size() != e.doc_ids.size())
        throw PreconditionError("entry " + e.id + " must be scored before guidance construction");
}

ScoresVerdict verdict_of(const SamplePoolEntry& e) {
    ScoresVerdict v;
    for (std::size_t i = 0; i < e.doc_ids.size(); ++i) v.scores[e.doc_ids[i]] = e.scores[i];
    return v;
}

GuidanceTriplet make_triplet(const SamplePoolEntry& e, std::string suffix, Query query, std::vector<Document> pos,
                             std::vector<Document> neg, Origin origin, Objective objective) {
    GuidanceTriplet t;
    t.id = e.id + "/" + std::move(suffix);
    t.entry_id = e.id;
    t.query = std::move(query);
    t.positives = std::move(pos);
    t.negatives = std::move(neg);
    t.origin = origin;
    t.objective = objective;
    t.difficulty = std::clamp(*e.ndcg, 0.0, 1.0);
    return t;
}

}  // namespace

PosNeg split_pos_neg(const SamplePoolEntry& entry, const Corpus& corpus) {
    require_scored(entry);
    PosNeg out;
    for (std::size_t i = 0; i < entry.doc_ids.size(); ++i) {
        if (entry.scores[i] >= 8) out.positives.push_back(corpus.document(entry.doc_ids[i]));
        else if (entry.scores[i] <= 3) out.negatives.push_back(corpus.document(entry.doc_ids[i]));
    }
    return out;
}

std::vector<GuidanceTriplet> build_relevance(const GuidanceContext& ctx) {
    const auto& e = ctx.entry;
    auto split = split_pos_neg(e, ctx.corpus);
    if (split.positives.empty() || split.negatives.empty()) return {};

    std::vector<GuidanceTriplet> out;
    out.push_back(make_triplet(e, "rel/base", e.query, split.positives, split.negatives, Origin::guidance,
                               Objective::relevance));

    const auto retrieved = retrieved_docs(e, ctx.corpus);
    const auto scores = verdict_of(e);
    const auto deltas =
        ctx.teacher.extract_info_deltas(e.query, retrieved, scores, split.positives, split.negatives, ctx.exemplars);
    if (deltas.deltas.empty()) return out;

    const auto rewritten = ctx.teacher.make_new_queries(e.query, retrieved, scores, deltas, ctx.exemplars);
    check_new_queries(rewritten, retrieved);
    std::size_t n = 0;
    for (const auto& nq : rewritten.queries) {
        const std::set<std::string> pos_ids(nq.positive_ids.begin(), nq.positive_ids.end());
        std::vector<Document> pos, neg;
        for (const auto& d : retrieved) (pos_ids.contains(d.id) ? pos : neg).push_back(d);
        if (pos.empty() || neg.empty()) continue;
        out.push_back(make_triplet(e, "rel/rev" + std::to_string(n++), nq.query, std::move(pos), std::move(neg),
                                   Origin::guidance, Objective::relevance));
    }
    return out;
}

std::optional<GuidanceTriplet> build_comprehensiveness(const GuidanceContext& ctx) {
    const auto& e = ctx.entry;
    auto split = split_pos_neg(e, ctx.corpus);
    if (split.positives.empty()) return std::nullopt;
    auto comp = ctx.teacher.make_comprehensive_doc(e.query, split.positives, ctx.exemplars);
    if (!comp || comp->document.text.empty()) return std::nullopt;
    for (const auto& d : split.positives)
        if (d.text == comp->document.text || d.id == comp->document.id) return std::nullopt;
    return make_triplet(e, "comp", e.query, {std::move(comp->document)}, std::move(split.positives), Origin::guidance,
                        Objective::comprehensiveness);
}

std::vector<GuidanceTriplet> build_purity(const GuidanceContext& ctx) {
    const auto& e = ctx.entry;
    auto split = split_pos_neg(e, ctx.corpus);
    std::vector<GuidanceTriplet> out;
    for (std::size_t i = 0; i < split.positives.size(); ++i) {
        const auto& pos = split.positives[i];
        auto docs = ctx.teacher.make_purity_docs(e.query, pos, ctx.exemplars);
        if (!docs) continue;
        if (docs->dense && docs->dense->text != pos.text)
            out.push_back(make_triplet(e, "pur/dense" + std::to_string(i), e.query, {*docs->dense}, {pos},
                                       Origin::guidance, Objective::purity));
        if (docs->sparse && docs->sparse->text != pos.text)
            out.push_back(make_triplet(e, "pur/sparse" + std::to_string(i), e.query, {pos}, {*docs->sparse},
                                       Origin::guidance, Objective::purity));
    }
    return out;
}

std::vector<GuidanceTriplet> build_preference(const SamplePoolEntry& entry, const Corpus& corpus) {
    require_scored(entry);
    const auto [lo, hi] = std::minmax_element(entry.scores.begin(), entry.scores.end());
    if (*lo == *hi) return {};
    std::vector<Document> pos, neg;
    for (std::size_t i = 0; i < entry.doc_ids.size(); ++i) {
        if (entry.scores[i] == *hi) pos.push_back(corpus.document(entry.doc_ids[i]));
        else if (entry.scores[i] == *lo) neg.push_back(corpus.document(entry.doc_ids[i]));
    }
    std::vector<GuidanceTriplet> out;
    out.push_back(make_triplet(entry, "pref", entry.query, std::move(pos), std::move(neg), Origin::preference,
                               Objective::none));
    return out;
}

std::vector<GuidanceTriplet> build_all(const GuidanceContext& ctx) {
    std::vector<GuidanceTriplet> out;
    const auto split = split_pos_neg(ctx.entry, ctx.corpus);
    if (!split.positives.empty()) {
        auto rel = build_relevance(ctx);
        out.insert(out.end(), std::make_move_iterator(rel.begin()), std::make_move_iterator(rel.end()));
        if (auto comp = build_comprehensiveness(ctx)) out.push_back(std::move(*comp));
        auto pur = build_purity(ctx);
        out.insert(out.end(), std::make_move_iterator(pur.begin()), std::make_move_iterator(pur.end()));
    }
    auto pref = build_preference(ctx.entry, ctx.corpus);
    out.insert(out.end(), std::make_move_iterator(pref.begin()), std::make_move_iterator(pref.end()));
    for (const auto& t : out) t.validate();
    return out;
}

bool metrically_consistent(const GuidanceTriplet& t) {
    const auto metric = [&](const Document& d) {
        const auto m = objective_metrics(d, t.query);
        switch (t.objective) {
            case Objective::comprehensiveness: return m.comprehensiveness;
            case Objective::purity: return m.purity;
            case Objective::relevance:
            case Objective::none: return static_cast<double>(m.relevance_count);
        }
        return 0.0;
    };
    bool strict = false;
    for (const auto& p : t.positives) {
        const double mp = metric(p);
        for (const auto& n : t.negatives) {
            const double mn = metric(n);
            if (mp < mn) return false;
            if (mp > mn) strict = true;
        }
    }
    return strict;
}

}  // namespace figret
