#pragma once

#include <optional>
#include <span>
#include <vector>

#include "figret/corpus.hpp"
#include "figret/scoring.hpp"
#include "figret/teacher.hpp"
#include "figret/triplet.hpp"

namespace figret {

struct PosNeg {
    std::vector<Document> positives;  // scored >= 8
    std::vector<Document> negatives;  // scored <= 3
};

/// Mid-band (4-7) documents go to neither side.
PosNeg split_pos_neg(const SamplePoolEntry& entry, const Corpus& corpus);

/// Everything guidance construction needs for one scored entry.
struct GuidanceContext {
    const SamplePoolEntry& entry;
    const Corpus& corpus;
    Teacher& teacher;
    std::span<const Exemplar> exemplars = {};
};

/// Base (x, D+, D-) plus one reversed triplet per rewritten query. Empty when
/// D+ or D- is empty.
std::vector<GuidanceTriplet> build_relevance(const GuidanceContext& ctx);

/// (x, d_comp, D+), or nothing when D+ is empty or no new document results.
std::optional<GuidanceTriplet> build_comprehensiveness(const GuidanceContext& ctx);

/// (x, d_dense, d+) and (x, d+, d_sparse) per positive, skipping sides the
/// teacher cannot build.
std::vector<GuidanceTriplet> build_purity(const GuidanceContext& ctx);

/// (x, argmax-score docs, argmin-score docs); empty when all scores tie.
std::vector<GuidanceTriplet> build_preference(const SamplePoolEntry& entry, const Corpus& corpus);

/// All of the above for one entry. Entries without positives only yield
/// preference data.
std::vector<GuidanceTriplet> build_all(const GuidanceContext& ctx);

/// Ground-truth check: on the triplet's objective metric every positive is
/// >= every negative and at least one pair is strict. Requires unit ids on
/// all documents and gold units on the query. Preference triplets use the
/// relevance count.
bool metrically_consistent(const GuidanceTriplet& t);

}  // namespace figret
