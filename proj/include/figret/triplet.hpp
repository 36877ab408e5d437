#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "figret/corpus.hpp"
#include "figret/io.hpp"

namespace figret {

enum class Origin { guidance, preference };
enum class Objective { relevance, comprehensiveness, purity, none };

std::string_view to_string(Origin o);
std::string_view to_string(Objective o);
Origin origin_from_string(std::string_view s);
Objective objective_from_string(std::string_view s);

/// A training example: query, positive set, negative set. Documents carry
/// their own text so teacher-synthesized documents need no corpus entry.
struct GuidanceTriplet {
    std::string id;
    std::string entry_id;
    Query query;
    std::vector<Document> positives;
    std::vector<Document> negatives;
    Origin origin = Origin::guidance;
    Objective objective = Objective::none;
    /// Parent sample's NDCG.
    double difficulty = 0.0;

    int label() const { return origin == Origin::guidance ? 1 : 0; }

    /// Throws PreconditionError if a set is empty, the sets share a document
    /// id, or difficulty is outside [0, 1].
    void validate() const;

    bool operator==(const GuidanceTriplet&) const = default;
};

json to_json(const GuidanceTriplet& t);
GuidanceTriplet triplet_from_json(const json& j);

void write_triplets(const std::vector<GuidanceTriplet>& triplets, const std::filesystem::path& path);
std::vector<GuidanceTriplet> read_triplets(const std::filesystem::path& path);

}  // namespace figret
