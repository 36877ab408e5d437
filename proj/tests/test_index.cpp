#include <gtest/gtest.h>

#include "figret/error.hpp"
#include "figret/index.hpp"
#include "oracles.hpp"

using namespace figret;

namespace {

EncoderModel model(std::uint64_t seed, SimilarityKind kind = SimilarityKind::dot) {
    EncoderConfig c;
    c.feature_dim = 1u << 12;
    c.embed_dim = 24;
    c.kind = kind;
    return EncoderModel::initialize(c, seed);
}

std::vector<Document> docs_from(const Corpus& c) { return c.documents(); }

}  // namespace

TEST(Index, OneDocOneRow) {
    const auto m = model(1);
    const auto idx = RetrievalIndex::build(m, std::vector<Document>{{"d", "alpha beta", std::nullopt}});
    EXPECT_EQ(idx.size(), 1u);
    EXPECT_EQ(idx.dim(), 24u);
}

TEST(Index, EmptyIsPrecondition) {
    EXPECT_THROW(RetrievalIndex::build(model(1), std::vector<Document>{}), PreconditionError);
}

TEST(Index, RowsAreDocumentEmbeddings) {
    const auto c = generate_synthetic(2, 400, 60, 20, GenerationProfile{{4, 10}, {0.2, 0.6}, {3, 6}, 16});
    const auto m = model(2, SimilarityKind::cosine);
    const auto idx = RetrievalIndex::build(m, c);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto e = m.embed(c.document(idx.doc_ids()[i]).text);
        for (std::size_t r = 0; r < e.size(); ++r) ASSERT_DOUBLE_EQ(idx.row(i)[r], e[r]);
    }
}

TEST(Index, StaleModelIsRejected) {
    auto m = model(3);
    const auto idx = RetrievalIndex::build(m, std::vector<Document>{{"d", "alpha", std::nullopt}});
    SparseGradient g;
    g[m.features("alpha").entries.front().first] = std::vector<double>(m.embed_dim(), 0.1);
    m.apply_gradient(g, 0.1);
    EXPECT_THROW(idx.retrieve(m, "alpha", 1), StaleIndexError);
    const auto rebuilt = RetrievalIndex::build(m, std::vector<Document>{{"d", "alpha", std::nullopt}});
    EXPECT_NE(rebuilt.encoder_version(), idx.encoder_version());
    EXPECT_NO_THROW(rebuilt.retrieve(m, "alpha", 1));
}

TEST(Index, ZeroKIsPrecondition) {
    const auto m = model(1);
    const auto idx = RetrievalIndex::build(m, std::vector<Document>{{"d", "alpha", std::nullopt}});
    EXPECT_THROW(idx.retrieve(m, "alpha", 0), PreconditionError);
}

TEST(Index, LargeKReturnsEverythingSorted) {
    const auto c = generate_synthetic(4, 400, 60, 20, GenerationProfile{{4, 10}, {0.2, 0.6}, {3, 6}, 16});
    const auto m = model(4);
    const auto idx = RetrievalIndex::build(m, c);
    const auto hits = idx.retrieve(m, c.queries()[0].text, 1000);
    ASSERT_EQ(hits.size(), c.documents().size());
    for (std::size_t i = 1; i < hits.size(); ++i) ASSERT_GE(hits[i - 1].score, hits[i].score);
}

TEST(Index, TiesBreakByAscendingId) {
    EncoderModel zero(1024, 4, SimilarityKind::dot, 1.0);
    const auto idx = RetrievalIndex::build(
        zero, std::vector<Document>{{"d3", "x", std::nullopt}, {"d1", "y", std::nullopt}, {"d2", "z", std::nullopt}});
    const auto hits = idx.retrieve(zero, "q", 3);
    EXPECT_EQ(hits[0].doc_id, "d1");
    EXPECT_EQ(hits[1].doc_id, "d2");
    EXPECT_EQ(hits[2].doc_id, "d3");
}

TEST(Index, MatchesBruteForceOracle) {
    const auto c = generate_synthetic(6, 600, 150, 50, GenerationProfile{{4, 10}, {0.2, 0.6}, {3, 6}, 16});
    std::vector<std::pair<std::string, std::string>> texts;
    for (const auto& d : c.documents()) texts.emplace_back(d.id, d.text);
    for (int draw = 0; draw < 500; ++draw) {
        // A fresh model every 50 draws, queries cycling through the corpus.
        static std::optional<EncoderModel> m;
        static std::optional<RetrievalIndex> idx;
        if (draw % 50 == 0) {
            m = model(1000 + draw, draw % 100 == 0 ? SimilarityKind::dot : SimilarityKind::cosine);
            idx = RetrievalIndex::build(*m, c);
        }
        const auto& q = c.queries()[static_cast<std::size_t>(draw) % c.queries().size()];
        const auto got = idx->retrieve(*m, q.text, 8);
        const auto want = oracle::brute_force_topk(*m, texts, q.text, 8);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            ASSERT_EQ(got[i].doc_id, want[i].first) << "draw " << draw << " rank " << i;
            ASSERT_NEAR(got[i].score, want[i].second, 1e-12);
        }
    }
}

TEST(Index, SmallerKIsPrefix) {
    const auto c = generate_synthetic(7, 400, 60, 20, GenerationProfile{{4, 10}, {0.2, 0.6}, {3, 6}, 16});
    const auto m = model(7);
    const auto idx = RetrievalIndex::build(m, c);
    for (const auto& q : c.queries()) {
        const auto big = idx.retrieve(m, q.text, 12);
        for (std::size_t k = 1; k <= 12; ++k) {
            const auto small = idx.retrieve(m, q.text, k);
            ASSERT_TRUE(std::equal(small.begin(), small.end(), big.begin()));
        }
    }
}

TEST(Index, DocumentOrderDoesNotMatter) {
    const auto c = generate_synthetic(8, 400, 60, 20, GenerationProfile{{4, 10}, {0.2, 0.6}, {3, 6}, 16});
    const auto m = model(8);
    auto docs = docs_from(c);
    const auto a = RetrievalIndex::build(m, docs);
    std::reverse(docs.begin(), docs.end());
    const auto b = RetrievalIndex::build(m, docs);
    for (const auto& q : c.queries()) EXPECT_EQ(a.retrieve(m, q.text, 8), b.retrieve(m, q.text, 8));
}
