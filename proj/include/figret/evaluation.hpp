#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>

#include "figret/corpus.hpp"
#include "figret/encoder.hpp"
#include "figret/index.hpp"
#include "figret/teacher.hpp"
#include "figret/triplet.hpp"

namespace figret {

/// Mean over queries of NDCG of the teacher's scores in retriever order.
double alignment_ndcg(const EncoderModel& model, const RetrievalIndex& index, Teacher& teacher,
                      std::span<const Query> queries, const Corpus& corpus, std::size_t k);

struct WinTieLoss {
    int win = 0;
    int tie = 0;
    int loss = 0;

    int total() const { return win + tie + loss; }
    bool operator==(const WinTieLoss&) const = default;
};

/// Indexed by Objective::relevance, comprehensiveness, purity.
struct ObjectiveWinRates {
    std::array<WinTieLoss, 3> per_objective{};
    /// Queries whose top-1 differed between the two models.
    int compared = 0;

    const WinTieLoss& operator[](Objective o) const { return per_objective.at(static_cast<std::size_t>(o)); }
    WinTieLoss& operator[](Objective o) { return per_objective.at(static_cast<std::size_t>(o)); }
    bool operator==(const ObjectiveWinRates&) const = default;
};

/// Outcome of comparing two top-1 documents on every objective.
void tally(ObjectiveWinRates& rates, const ObjectiveMetrics& before, const ObjectiveMetrics& after);

/// Compares the top-1 documents of two models on ground-truth objective
/// metrics; queries where both models agree on top-1 are dropped.
ObjectiveWinRates objective_winrates(const EncoderModel& before, const RetrievalIndex& before_index,
                                     const EncoderModel& after, const RetrievalIndex& after_index,
                                     std::span<const Query> queries, const Corpus& corpus);

json to_json(const ObjectiveWinRates& r);
ObjectiveWinRates winrates_from_json(const json& j);

struct Report {
    json summary;
    std::string text;
};

/// Builds report.json content and a plain-text summary from metrics.jsonl in
/// `run_dir`, and writes both (report.json, report.txt). A missing or empty
/// metrics log yields an empty report.
Report report(const std::filesystem::path& run_dir);

}  // namespace figret
