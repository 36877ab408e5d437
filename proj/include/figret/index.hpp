#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "figret/corpus.hpp"
#include "figret/encoder.hpp"

namespace figret {

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Exact dot-product index over document embeddings. Immutable once built;
/// tied to the encoder version it was built with.
class RetrievalIndex {
public:
    static RetrievalIndex build(const EncoderModel& model, const Corpus& corpus);
    static RetrievalIndex build(const EncoderModel& model, const std::vector<Document>& docs);

    std::size_t size() const { return doc_ids_.size(); }
    std::size_t dim() const { return dim_; }
    std::uint64_t encoder_version() const { return version_; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    std::span<const double> row(std::size_t i) const { return {rows_.data() + i * dim_, dim_}; }

    /// Top min(k, n) documents, scores non-increasing, ties by ascending id.
    /// Throws StaleIndexError if the model version moved on.
    std::vector<ScoredDoc> retrieve(const EncoderModel& model, std::string_view query_text, std::size_t k) const;
    std::vector<ScoredDoc> retrieve(const EncoderModel& model, const Embedding& query, std::size_t k) const;

private:
    std::vector<std::string> doc_ids_;
    std::vector<double> rows_;
    std::size_t dim_ = 0;
    std::uint64_t version_ = 0;
    std::uint64_t model_seed_ = 0;
};

}  // namespace figret
