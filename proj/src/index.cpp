#include "figret/index.hpp"

#include <algorithm>

#include "figret/error.hpp"

namespace figret {

RetrievalIndex RetrievalIndex::build(const EncoderModel& model, const std::vector<Document>& docs) {
    if (docs.empty()) throw PreconditionError("cannot build an index over an empty corpus");
    RetrievalIndex idx;
    idx.dim_ = model.embed_dim();
    idx.version_ = model.version();
    idx.model_seed_ = model.seed();
    idx.doc_ids_.reserve(docs.size());
    idx.rows_.reserve(docs.size() * idx.dim_);
    for (const auto& d : docs) {
        idx.doc_ids_.push_back(d.id);
        const auto e = model.embed(d.text);
        idx.rows_.insert(idx.rows_.end(), e.begin(), e.end());
    }
    return idx;
}

RetrievalIndex RetrievalIndex::build(const EncoderModel& model, const Corpus& corpus) {
    return build(model, corpus.documents());
}

std::vector<ScoredDoc> RetrievalIndex::retrieve(const EncoderModel& model, std::string_view query_text,
                                                std::size_t k) const {
    return retrieve(model, model.embed(query_text), k);
}

std::vector<ScoredDoc> RetrievalIndex::retrieve(const EncoderModel& model, const Embedding& query,
                                                std::size_t k) const {
    if (model.version() != version_ || model.seed() != model_seed_)
        throw StaleIndexError("index built with encoder version " + std::to_string(version_) +
                              ", model is at version " + std::to_string(model.version()));
    if (k == 0) throw PreconditionError("k must be >= 1");
    if (query.size() != dim_) throw DimensionError("query embedding length does not match index");

    std::vector<ScoredDoc> all;
    all.reserve(doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) all.push_back({doc_ids_[i], similarity(query, row(i))});

    const auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    };
    const auto top = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(top), all.end(), better);
    all.resize(top);
    return all;
}

}  // namespace figret
