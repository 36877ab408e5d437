#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "figret/error.hpp"
#include "figret/guidance.hpp"
#include "figret/index.hpp"
#include "figret/mock_teacher.hpp"
#include "figret/pipeline.hpp"
#include "support.hpp"

using namespace figret;

namespace {

SamplePoolEntry entry_with(const Corpus& c, std::vector<std::string> ids, std::vector<int> scores) {
    SamplePoolEntry e;
    e.id = "e";
    e.query = c.queries()[0];
    e.doc_ids = std::move(ids);
    e.scores = std::move(scores);
    e.ndcg = ndcg(e.scores);
    e.status = EntryStatus::selected;
    return e;
}

/// Tiny corpus retrieval d1 d2 d3 d4 d5, scored by the mock: [9, 6, 0, 0, 5].
SamplePoolEntry tiny_entry(const Corpus& c, Teacher& t) {
    SamplePoolEntry e;
    e.id = "e";
    e.query = c.queries()[0];
    e.doc_ids = {"d1", "d2", "d3", "d4", "d5"};
    score_entry(e, t, c);
    return e;
}

std::set<std::string> ids(const std::vector<Document>& docs) {
    std::set<std::string> out;
    for (const auto& d : docs) out.insert(d.id);
    return out;
}

}  // namespace

TEST(Split, BandsAndMidBandExclusion) {
    const auto c = test::tiny_corpus();
    const auto pn = split_pos_neg(entry_with(c, {"d1", "d2", "d3"}, {9, 2, 5}), c);
    EXPECT_EQ(ids(pn.positives), (std::set<std::string>{"d1"}));
    EXPECT_EQ(ids(pn.negatives), (std::set<std::string>{"d2"}));
}

TEST(Split, BoundaryScores) {
    const auto c = test::tiny_corpus();
    const auto pn = split_pos_neg(entry_with(c, {"d1", "d2", "d3", "d4"}, {8, 3, 7, 4}), c);
    EXPECT_EQ(ids(pn.positives), (std::set<std::string>{"d1"}));
    EXPECT_EQ(ids(pn.negatives), (std::set<std::string>{"d2"}));
}

TEST(Split, UnscoredEntryIsPrecondition) {
    const auto c = test::tiny_corpus();
    SamplePoolEntry e;
    e.query = c.queries()[0];
    e.doc_ids = {"d1"};
    EXPECT_THROW(split_pos_neg(e, c), PreconditionError);
}

TEST(Relevance, TwoDisjointNegativeTopicsGiveThreeTriplets) {
    const auto c = test::tiny_corpus();
    MockTeacher t(c);
    const auto e = tiny_entry(c, t);
    ASSERT_EQ(e.scores, (std::vector<int>{9, 6, 0, 0, 5}));
    const auto out = build_relevance({e, c, t});
    ASSERT_EQ(out.size(), 3u);

    EXPECT_EQ(out[0].query, e.query);
    EXPECT_EQ(ids(out[0].positives), (std::set<std::string>{"d1"}));
    EXPECT_EQ(ids(out[0].negatives), (std::set<std::string>{"d3", "d4"}));

    const std::set<std::string> retrieved(e.doc_ids.begin(), e.doc_ids.end());
    std::set<std::string> seen_pos;
    for (std::size_t i = 1; i < out.size(); ++i) {
        const auto& r = out[i];
        ASSERT_EQ(r.positives.size(), 1u);
        const auto& flipped = r.positives[0];
        seen_pos.insert(flipped.id);
        // Reversed negatives are exactly the rest of the retrieved list, D+ included.
        auto expect_neg = retrieved;
        expect_neg.erase(flipped.id);
        EXPECT_EQ(ids(r.negatives), expect_neg);
        EXPECT_TRUE(ids(r.negatives).count("d1"));
        // The rewritten query asks only about what the flipped doc carries beyond D+.
        const auto& units = *flipped.unit_ids;
        std::set<std::string> delta(units.begin(), units.end());
        delta.erase("n1");
        for (const auto& g : r.query.gold_unit_ids) EXPECT_TRUE(delta.count(g)) << g;
        EXPECT_FALSE(r.query.gold_unit_ids.empty());
    }
    EXPECT_EQ(seen_pos, (std::set<std::string>{"d3", "d4"}));
    for (const auto& r : out) {
        EXPECT_EQ(r.origin, Origin::guidance);
        EXPECT_EQ(r.objective, Objective::relevance);
        EXPECT_DOUBLE_EQ(r.difficulty, *e.ndcg);
        EXPECT_NO_THROW(r.validate());
        EXPECT_TRUE(metrically_consistent(r)) << r.id;
    }
}

TEST(Relevance, NoNegativesMeansNothing) {
    const auto c = test::tiny_corpus();
    MockTeacher t(c);
    EXPECT_TRUE(build_relevance({entry_with(c, {"d1", "d2"}, {9, 8}), c, t}).empty());
    EXPECT_TRUE(build_relevance({entry_with(c, {"d3", "d4"}, {1, 0}), c, t}).empty());
}

TEST(Comprehensiveness, DocDominatesPositives) {
    const auto c = test::tiny_corpus();
    MockTeacher t(c);
    const auto e = tiny_entry(c, t);
    const auto out = build_comprehensiveness({e, c, t});
    ASSERT_TRUE(out);
    ASSERT_EQ(out->positives.size(), 1u);
    EXPECT_EQ(ids(out->negatives), (std::set<std::string>{"d1"}));
    const auto& comp = out->positives[0];
    EXPECT_FALSE(comp.text.empty());
    for (const auto& d : out->negatives) {
        EXPECT_NE(comp.text, d.text);
        EXPECT_GT(objective_metrics(comp, e.query).comprehensiveness, objective_metrics(d, e.query).comprehensiveness);
    }
    EXPECT_EQ(out->objective, Objective::comprehensiveness);
    EXPECT_TRUE(metrically_consistent(*out));
}

TEST(Comprehensiveness, NoPositivesMeansNone) {
    const auto c = test::tiny_corpus();
    MockTeacher t(c);
    EXPECT_FALSE(build_comprehensiveness({entry_with(c, {"d2", "d3"}, {6, 0}), c, t}));
}

TEST(Purity, TwoPerConstructiblePositive) {
    const auto c = test::tiny_corpus();
    MockTeacher t(c);
    // d1 {g1 g2 n1} and d5 {g4 n5 n6} both mix gold and noise.
    const auto e = entry_with(c, {"d1", "d5", "d3"}, {9, 8, 0});
    const auto out = build_purity({e, c, t});
    ASSERT_EQ(out.size(), 4u);
    for (const auto& tr : out) {
        EXPECT_EQ(tr.objective, Objective::purity);
        ASSERT_EQ(tr.positives.size(), 1u);
        ASSERT_EQ(tr.negatives.size(), 1u);
        EXPECT_GT(objective_metrics(tr.positives[0], e.query).purity,
                  objective_metrics(tr.negatives[0], e.query).purity);
        EXPECT_TRUE(metrically_consistent(tr));
    }
    EXPECT_DOUBLE_EQ(objective_metrics(out[0].positives[0], e.query).purity, 1.0);
}

TEST(Purity, PurePositiveIsSkipped) {
    const auto c = test::tiny_corpus();
    MockTeacher t(c);
    // d2 {g2 g3} carries no noise: neither side can be built.
    EXPECT_TRUE(build_purity({entry_with(c, {"d2", "d3"}, {8, 0}), c, t}).empty());
}

TEST(Preference, ArgmaxAgainstArgmin) {
    const auto c = test::tiny_corpus();
    const auto out = build_preference(entry_with(c, {"d1", "d2", "d3"}, {9, 9, 2}), c);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(ids(out[0].positives), (std::set<std::string>{"d1", "d2"}));
    EXPECT_EQ(ids(out[0].negatives), (std::set<std::string>{"d3"}));
    EXPECT_EQ(out[0].origin, Origin::preference);
    EXPECT_EQ(out[0].label(), 0);
    EXPECT_EQ(out[0].objective, Objective::none);
}

TEST(Preference, UniformScoresGiveNothing) {
    const auto c = test::tiny_corpus();
    EXPECT_TRUE(build_preference(entry_with(c, {"d1", "d2"}, {5, 5}), c).empty());
}

TEST(BuildAll, CountsLabelsAndIdempotence) {
    const auto c = test::tiny_corpus();
    MockTeacher t(c);
    const auto e = tiny_entry(c, t);
    const auto a = build_all({e, c, t});
    const auto b = build_all({e, c, t});
    EXPECT_EQ(a, b);
    std::size_t guidance = 0, preference = 0;
    std::set<std::string> tids;
    for (const auto& tr : a) {
        (tr.origin == Origin::guidance ? guidance : preference)++;
        EXPECT_EQ(tr.label(), tr.origin == Origin::guidance ? 1 : 0);
        EXPECT_EQ(tr.entry_id, "e");
        tids.insert(tr.id);
    }
    // 3 relevance + 1 comprehensiveness + 2 purity (d1 only) + 1 preference.
    EXPECT_EQ(guidance, 6u);
    EXPECT_EQ(preference, 1u);
    EXPECT_EQ(tids.size(), a.size());
}

TEST(BuildAll, LowScoresArePreferenceOnly) {
    const auto c = test::tiny_corpus();
    MockTeacher t(c);
    const auto out = build_all({entry_with(c, {"d2", "d3", "d4"}, {6, 1, 0}), c, t});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].origin, Origin::preference);
}

TEST(Consistency, RejectsViolations) {
    const auto c = test::tiny_corpus();
    GuidanceTriplet tr;
    tr.id = "t";
    tr.query = c.queries()[0];
    tr.objective = Objective::purity;
    tr.positives = {c.document("d3")};
    tr.negatives = {c.document("d2")};
    EXPECT_FALSE(metrically_consistent(tr));
    tr.positives = {c.document("d2")};
    tr.negatives = {c.document("d2")};
    tr.negatives[0].id = "copy";
    EXPECT_FALSE(metrically_consistent(tr)) << "ties everywhere are not strict";
}

TEST(Consistency, HoldsOnGeneratedCorpus) {
    CorpusSpec spec;
    spec.n_units = 800;
    spec.n_docs = 300;
    spec.n_queries = 80;
    const auto c = generate_synthetic(11, spec.n_units, spec.n_docs, spec.n_queries, spec.profile);
    PipelineConfig cfg;
    cfg.pool_size = 80;
    auto model = EncoderModel::initialize(cfg.encoder, 11);
    const auto index = RetrievalIndex::build(model, c);
    MockTeacher t(c);
    auto pool = collect(c, model, index, c.queries(), cfg);
    score_pool(pool, t, c, 2);
    std::size_t guidance = 0;
    std::set<Objective> objectives;
    for (const auto& e : pool) {
        for (const auto& tr : build_all({e, c, t})) {
            ASSERT_NO_THROW(tr.validate());
            if (tr.origin != Origin::guidance) continue;
            ++guidance;
            objectives.insert(tr.objective);
            ASSERT_TRUE(metrically_consistent(tr)) << tr.id;
        }
    }
    EXPECT_GT(guidance, 50u);
    EXPECT_EQ(objectives.size(), 3u);
}
