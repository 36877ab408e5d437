#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "figret/corpus.hpp"
#include "figret/teacher.hpp"

namespace figret {

enum class EntryStatus { unscored, scored, selected, well_learned, regressed };

std::string_view to_string(EntryStatus s);
EntryStatus entry_status_from_string(std::string_view s);

/// A query with the retriever's top-k and, once scored, the teacher's view.
struct SamplePoolEntry {
    std::string id;
    Query query;
    std::vector<std::string> doc_ids;  // retriever order
    std::vector<int> scores;           // aligned with doc_ids once scored
    std::optional<double> ndcg;
    /// NDCG before the latest training pass; the regression baseline.
    std::optional<double> baseline_ndcg;
    EntryStatus status = EntryStatus::unscored;

    /// Retriever's rank-1 document attains the maximum teacher score.
    bool top1_matches() const;

    bool operator==(const SamplePoolEntry&) const = default;
};

/// NDCG of `gains` (teacher scores in retriever order) with gain 2^g - 1 and
/// log2(rank + 1) discount. All-zero gains give 1.0. Throws DomainError for an
/// empty list or a negative gain.
double ndcg(std::span<const double> gains);
double ndcg(std::span<const int> scores);

/// Fills scores and ndcg, status -> scored. Throws PreconditionError unless
/// the entry is unscored; teacher errors propagate with the entry untouched.
void score_entry(SamplePoolEntry& entry, Teacher& teacher, const Corpus& corpus);

/// Writes teacher scores into an entry whose doc list is already set.
void apply_scores(SamplePoolEntry& entry, const ScoresVerdict& verdict);

struct ThresholdResult {
    double threshold = 0.0;
    bool fallback = false;
    std::size_t selected = 0;
};

/// Threshold = minimum NDCG over entries whose top-1 matches the teacher;
/// entries strictly below it become `selected`. With no qualifying entry the
/// lower median of pool NDCGs is used and `fallback` is set.
ThresholdResult select_threshold(std::vector<SamplePoolEntry>& pool);

json to_json(const SamplePoolEntry& e);
SamplePoolEntry pool_entry_from_json(const json& j);
void write_pool(const std::vector<SamplePoolEntry>& pool, const std::filesystem::path& path);
std::vector<SamplePoolEntry> read_pool(const std::filesystem::path& path);

}  // namespace figret
