#pragma once

#include "figret/teacher.hpp"

namespace figret {

struct MockTeacherConfig {
    /// Gold units the mock may add to a comprehensive document beyond what
    /// the helpful documents contain (stands in for the LLM's own knowledge).
    int extra_units = 2;
    /// Fraction of noise units removed for the dense variant.
    double rho_dense = 1.0;
    /// Fraction of gold units removed for the sparse variant.
    double rho_sparse = 1.0;
    /// Single-linkage threshold for grouping content-similar negatives.
    double jaccard_threshold = 0.5;

    void validate() const;
};

/// Deterministic teacher that answers every prompt from the synthetic
/// corpus's ground truth. Documents passed in must carry unit ids and queries
/// must carry gold units. Stateless apart from the corpus reference, so it is
/// safe to share between threads.
class MockTeacher final : public Teacher {
public:
    explicit MockTeacher(const Corpus& corpus, MockTeacherConfig config = {});

    /// Band 8-10 with the answer unit, 4-7 with any gold unit, else 0-3;
    /// within a band, lo + round(2 * (comprehensiveness + purity) / 2).
    static int score(const Document& doc, const Query& query);

    ScoresVerdict score_documents(const Query& query, std::span<const Document> docs,
                                  std::span<const Exemplar> exemplars) override;
    InfoDeltasVerdict extract_info_deltas(const Query& query, std::span<const Document> retrieved,
                                          const ScoresVerdict& scores, std::span<const Document> positives,
                                          std::span<const Document> negatives,
                                          std::span<const Exemplar> exemplars) override;
    NewQueriesVerdict make_new_queries(const Query& query, std::span<const Document> retrieved,
                                       const ScoresVerdict& scores, const InfoDeltasVerdict& deltas,
                                       std::span<const Exemplar> exemplars) override;
    std::optional<CompDocVerdict> make_comprehensive_doc(const Query& query, std::span<const Document> positives,
                                                         std::span<const Exemplar> exemplars) override;
    std::optional<PurityDocsVerdict> make_purity_docs(const Query& query, const Document& positive,
                                                      std::span<const Exemplar> exemplars) override;

    const MockTeacherConfig& config() const { return config_; }

private:
    const Corpus& corpus_;
    MockTeacherConfig config_;
};

}  // namespace figret
