#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "figret/io.hpp"

namespace figret {

/// One atomic fact. Documents are ordered collections of these.
struct InfoUnit {
    std::string id;
    std::string text;

    bool operator==(const InfoUnit&) const = default;
};

struct Document {
    std::string id;
    std::string text;
    /// Ground-truth units; only synthetic corpora carry them.
    std::optional<std::vector<std::string>> unit_ids;

    bool operator==(const Document&) const = default;
};

struct Query {
    std::string id;
    std::string text;
    std::vector<std::string> gold_unit_ids;
    std::string answer_unit_id;

    bool has_ground_truth() const { return !gold_unit_ids.empty(); }

    bool operator==(const Query&) const = default;
};

/// Immutable after construction. The constructor validates that every
/// referenced unit id resolves and that ids are unique.
class Corpus {
public:
    Corpus() = default;
    Corpus(std::vector<InfoUnit> units, std::vector<Document> documents, std::vector<Query> queries);

    const std::vector<InfoUnit>& units() const { return units_; }
    const std::vector<Document>& documents() const { return documents_; }
    const std::vector<Query>& queries() const { return queries_; }

    const InfoUnit* find_unit(const std::string& id) const;
    const Document* find_document(const std::string& id) const;
    const Query* find_query(const std::string& id) const;

    /// Throws PreconditionError on unknown id.
    const Document& document(const std::string& id) const;
    const Query& query(const std::string& id) const;

    /// Deterministic text for a unit-id list: unit texts joined by spaces.
    std::string render(std::span<const std::string> unit_ids) const;

    bool empty() const { return units_.empty() && documents_.empty() && queries_.empty(); }

    bool operator==(const Corpus& o) const {
        return units_ == o.units_ && documents_ == o.documents_ && queries_ == o.queries_;
    }

private:
    std::vector<InfoUnit> units_;
    std::vector<Document> documents_;
    std::vector<Query> queries_;
    std::unordered_map<std::string, std::size_t> unit_pos_;
    std::unordered_map<std::string, std::size_t> doc_pos_;
    std::unordered_map<std::string, std::size_t> query_pos_;
};

struct IntRange {
    int min = 0;
    int max = 0;
};

struct RealRange {
    double min = 0.0;
    double max = 0.0;
};

/// Knobs for the synthetic generator.
struct GenerationProfile {
    IntRange units_per_doc{4, 10};
    RealRange noise_fraction{0.3, 0.7};
    IntRange gold_per_query{3, 6};
    /// Units sharing one subject word; a query's gold set is drawn from one subject.
    int units_per_subject = 64;
    int n_relations = 40;
    int n_objects = 400;
    /// Probability that a non-leading document anchored on a query also
    /// carries the query's answer unit.
    double answer_spread = 0.5;

    void validate() const;
};

/// Builds a corpus whose queries have gold units scattered over at least two
/// documents each, mixed with noise units. Deterministic in (seed, profile).
Corpus generate_synthetic(std::uint64_t seed, int n_units, int n_docs, int n_queries,
                          const GenerationProfile& profile = {});

struct ObjectiveMetrics {
    int relevance_count = 0;
    double comprehensiveness = 0.0;
    double purity = 0.0;

    bool operator==(const ObjectiveMetrics&) const = default;
};

/// Accuracy/recall/precision of a document's units against the query's gold set.
ObjectiveMetrics objective_metrics(const Document& doc, const Query& query);
ObjectiveMetrics objective_metrics(std::span<const std::string> doc_units,
                                   std::span<const std::string> gold_units);

json to_json(const InfoUnit& u);
json to_json(const Document& d);
json to_json(const Query& q);
Document document_from_json(const json& j);
Query query_from_json(const json& j);

void write_jsonl(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_jsonl(const std::filesystem::path& path);

}  // namespace figret
