#include <gtest/gtest.h>

#include <cmath>

#include "figret/error.hpp"
#include "figret/mock_teacher.hpp"
#include "figret/rng.hpp"
#include "figret/scoring.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace figret;

namespace {

SamplePoolEntry scored(const std::string& id, std::vector<int> scores) {
    SamplePoolEntry e;
    e.id = id;
    e.query = Query{"q" + id, "x", {}, ""};
    for (std::size_t i = 0; i < scores.size(); ++i) e.doc_ids.push_back(id + "-d" + std::to_string(i));
    e.scores = std::move(scores);
    e.ndcg = ndcg(e.scores);
    e.status = EntryStatus::scored;
    return e;
}

/// An entry with a forced NDCG and top-1 match flag.
SamplePoolEntry fixture(const std::string& id, bool match, double value) {
    auto e = scored(id, match ? std::vector<int>{9, 3} : std::vector<int>{3, 9});
    e.ndcg = value;
    return e;
}

}  // namespace

TEST(Ndcg, IdealOrderIsOne) {
    std::vector<int> s{10, 8, 8, 3, 0};
    EXPECT_DOUBLE_EQ(ndcg(s), 1.0);
}

TEST(Ndcg, AllZeroIsOne) {
    std::vector<int> s{0, 0, 0};
    EXPECT_DOUBLE_EQ(ndcg(s), 1.0);
}

TEST(Ndcg, WorkedTwoElementExample) {
    std::vector<double> g{1.0, 3.0};
    const double dcg = 1.0 + 7.0 / std::log2(3.0);
    const double idcg = 7.0 + 1.0 / std::log2(3.0);
    EXPECT_NEAR(ndcg(g), dcg / idcg, 1e-15);
    EXPECT_NEAR(ndcg(g), 0.7098, 1e-4);
}

TEST(Ndcg, DomainErrors) {
    std::vector<double> empty, negative{1.0, -0.5};
    EXPECT_THROW(ndcg(empty), DomainError);
    EXPECT_THROW(ndcg(negative), DomainError);
}

TEST(Ndcg, MatchesSortOracleAndStaysInRange) {
    Rng rng(77);
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> g(static_cast<std::size_t>(rng.between(1, 8)));
        for (auto& x : g) x = static_cast<double>(rng.between(0, 10));
        const double v = ndcg(g);
        ASSERT_NEAR(v, oracle::ndcg(g), 1e-12);
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
        const bool sorted = std::is_sorted(g.begin(), g.end(), std::greater<>());
        ASSERT_EQ(v == 1.0, sorted || std::all_of(g.begin(), g.end(), [](double x) { return x == 0; }))
            << "sorted=" << sorted;
    }
}

TEST(Ndcg, InvariantUnderSwappingEqualScores) {
    std::vector<double> a{3, 7, 3, 0, 7}, b{3, 7, 3, 0, 7};
    std::swap(b[1], b[4]);
    std::swap(b[0], b[2]);
    EXPECT_DOUBLE_EQ(ndcg(a), ndcg(b));
}

TEST(ScoreEntry, PerfectRetrievalIsOne) {
    const auto c = test::tiny_corpus();
    MockTeacher t(c);
    SamplePoolEntry e;
    e.id = "e";
    e.query = c.queries()[0];
    e.doc_ids = {"d1", "d2", "d5", "d3"};
    score_entry(e, t, c);
    EXPECT_EQ(e.status, EntryStatus::scored);
    EXPECT_EQ(e.scores, (std::vector<int>{9, 6, 5, 0}));
    EXPECT_DOUBLE_EQ(*e.ndcg, 1.0);
}

TEST(ScoreEntry, ReversedListIsBelowOne) {
    const auto c = test::tiny_corpus();
    MockTeacher t(c);
    SamplePoolEntry e;
    e.id = "e";
    e.query = c.queries()[0];
    e.doc_ids = {"d3", "d5", "d2", "d1"};
    score_entry(e, t, c);
    std::vector<double> g(e.scores.begin(), e.scores.end());
    EXPECT_LT(*e.ndcg, 1.0);
    EXPECT_NEAR(*e.ndcg, oracle::ndcg(g), 1e-12);
}

TEST(ScoreEntry, RescoringIsPrecondition) {
    const auto c = test::tiny_corpus();
    MockTeacher t(c);
    SamplePoolEntry e;
    e.query = c.queries()[0];
    e.doc_ids = {"d1"};
    score_entry(e, t, c);
    EXPECT_THROW(score_entry(e, t, c), PreconditionError);
}

TEST(ScoreEntry, TeacherErrorLeavesEntryUnscored) {
    const auto c = test::tiny_corpus();
    test::ScriptedTeacher t(c);
    t.fail_scoring.insert("q1");
    SamplePoolEntry e;
    e.query = c.queries()[0];
    e.doc_ids = {"d1"};
    EXPECT_THROW(score_entry(e, t, c), TeacherProtocolError);
    EXPECT_EQ(e.status, EntryStatus::unscored);
    EXPECT_TRUE(e.scores.empty());
    EXPECT_FALSE(e.ndcg);
}

TEST(Threshold, ThreeEntryFixture) {
    std::vector<SamplePoolEntry> pool{fixture("A", true, 0.9), fixture("B", true, 0.7), fixture("C", false, 0.6)};
    const auto r = select_threshold(pool);
    EXPECT_DOUBLE_EQ(r.threshold, 0.7);
    EXPECT_FALSE(r.fallback);
    EXPECT_EQ(r.selected, 1u);
    EXPECT_EQ(pool[0].status, EntryStatus::scored);
    EXPECT_EQ(pool[1].status, EntryStatus::scored);
    EXPECT_EQ(pool[2].status, EntryStatus::selected);
}

TEST(Threshold, AllMatchingSelectsNothing) {
    std::vector<SamplePoolEntry> pool{fixture("A", true, 0.9), fixture("B", true, 0.4), fixture("C", true, 0.6)};
    const auto r = select_threshold(pool);
    EXPECT_DOUBLE_EQ(r.threshold, 0.4);
    EXPECT_EQ(r.selected, 0u);
}

TEST(Threshold, TiesAtTopCountAsMatch) {
    auto e = scored("T", {9, 9, 2});
    std::swap(e.scores[0], e.scores[1]);
    EXPECT_TRUE(e.top1_matches());
    EXPECT_FALSE(scored("U", {5, 9}).top1_matches());
}

TEST(Threshold, FallbackUsesLowerMedian) {
    std::vector<SamplePoolEntry> pool{fixture("A", false, 0.9), fixture("B", false, 0.5), fixture("C", false, 0.3),
                                      fixture("D", false, 0.7)};
    const auto r = select_threshold(pool);
    EXPECT_TRUE(r.fallback);
    EXPECT_DOUBLE_EQ(r.threshold, 0.5);
    EXPECT_EQ(r.selected, 1u);
    EXPECT_EQ(pool[2].status, EntryStatus::selected);
}

TEST(Threshold, EmptyOrUnscoredPoolIsPrecondition) {
    std::vector<SamplePoolEntry> empty;
    EXPECT_THROW(select_threshold(empty), PreconditionError);
    std::vector<SamplePoolEntry> unscored{SamplePoolEntry{}};
    EXPECT_THROW(select_threshold(unscored), PreconditionError);
}

TEST(Threshold, IsTheNdcgOfSomeQualifyingEntry) {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<SamplePoolEntry> pool;
        for (int i = 0; i < 20; ++i) {
            std::vector<int> s(8);
            for (auto& x : s) x = static_cast<int>(rng.between(0, 10));
            pool.push_back(scored(std::to_string(i), s));
        }
        const auto r = select_threshold(pool);
        if (r.fallback) continue;
        bool found = false;
        for (const auto& e : pool) {
            if (e.top1_matches() && *e.ndcg == r.threshold) found = true;
            ASSERT_EQ(e.status == EntryStatus::selected, *e.ndcg < r.threshold);
        }
        ASSERT_TRUE(found);
    }
}

TEST(Pool, JsonlRoundTrip) {
    test::TempDir dir("pool");
    auto a = scored("A", {9, 3, 0});
    a.baseline_ndcg = 0.5;
    a.status = EntryStatus::regressed;
    SamplePoolEntry b;
    b.id = "B";
    b.query = Query{"qB", "text", {"u1"}, "u1"};
    b.doc_ids = {"d1"};
    std::vector<SamplePoolEntry> pool{a, b};
    write_pool(pool, dir / "pool.jsonl");
    EXPECT_EQ(read_pool(dir / "pool.jsonl"), pool);
}
