#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "figret/corpus.hpp"
#include "figret/encoder.hpp"

namespace figret {

struct Message {
    std::string role;
    std::string content;

    bool operator==(const Message&) const = default;
};

struct TeacherRequest {
    std::vector<Message> conversation;
    double temperature = 0.0;
    int max_retries = 3;

    /// Non-empty conversation, roles in {system, user, assistant}.
    void validate() const;
};

// Verdicts, one per teacher operation.

struct ScoresVerdict {
    std::map<std::string, int> scores;

    bool operator==(const ScoresVerdict&) const = default;
};

struct InfoDelta {
    std::string summary;
    std::vector<std::string> doc_ids;
    /// Ground-truth delta units; filled by the mock teacher only.
    std::vector<std::string> unit_ids;

    bool operator==(const InfoDelta&) const = default;
};

struct InfoDeltasVerdict {
    std::vector<InfoDelta> deltas;

    bool operator==(const InfoDeltasVerdict&) const = default;
};

struct NewQuery {
    /// Text always; gold/answer units only from the mock teacher.
    Query query;
    std::vector<std::string> positive_ids;
    std::vector<std::string> negative_ids;

    bool operator==(const NewQuery&) const = default;
};

struct NewQueriesVerdict {
    std::vector<NewQuery> queries;

    bool operator==(const NewQueriesVerdict&) const = default;
};

struct CompDocVerdict {
    Document document;

    bool operator==(const CompDocVerdict&) const = default;
};

/// Either side may be absent when it cannot be built (nothing to remove, or
/// nothing left after removal).
struct PurityDocsVerdict {
    std::optional<Document> dense;
    std::optional<Document> sparse;

    bool operator==(const PurityDocsVerdict&) const = default;
};

using TeacherVerdict =
    std::variant<ScoresVerdict, InfoDeltasVerdict, NewQueriesVerdict, CompDocVerdict, PurityDocsVerdict>;

/// Structural checks shared by every backend. Throw TeacherProtocolError.
void check_scores(const ScoresVerdict& v, std::span<const Document> submitted);
void check_new_queries(const NewQueriesVerdict& v, std::span<const Document> submitted);

/// A well-learned sample shown to the teacher as a worked example.
struct Exemplar {
    Query query;
    std::vector<Document> docs;
    ScoresVerdict verdict;

    bool operator==(const Exemplar&) const = default;
};

json to_json(const ScoresVerdict& v);
json to_json(const Exemplar& e);
Exemplar exemplar_from_json(const json& j);

/// Exemplars with cached query embeddings. Embeddings are recomputed lazily
/// whenever the encoder version differs from the one they were built with.
class ExemplarStore {
public:
    void insert(Exemplar exemplar);
    std::size_t size() const { return exemplars_.size(); }
    const std::vector<Exemplar>& exemplars() const { return exemplars_; }

    /// Up to `n` exemplars most similar to `query_text`, most similar first,
    /// ties by insertion order.
    std::vector<Exemplar> nearest(const EncoderModel& model, std::string_view query_text, std::size_t n);

    void save(const std::filesystem::path& path) const;
    static ExemplarStore load(const std::filesystem::path& path);

private:
    void refresh(const EncoderModel& model);

    std::vector<Exemplar> exemplars_;
    std::vector<Embedding> embeddings_;
    std::optional<std::pair<std::uint64_t, std::uint64_t>> built_for_;  // (seed, version)
};

/// The guidance-constructing LLM. Implementations must be safe to call from
/// several threads at once.
class Teacher {
public:
    virtual ~Teacher() = default;

    /// Integer 0-10 per submitted document.
    virtual ScoresVerdict score_documents(const Query& query, std::span<const Document> docs,
                                          std::span<const Exemplar> exemplars) = 0;

    /// Content present in groups of less helpful documents and absent from
    /// the helpful ones. `retrieved`/`scores` replay the scoring turn.
    virtual InfoDeltasVerdict extract_info_deltas(const Query& query, std::span<const Document> retrieved,
                                                  const ScoresVerdict& scores, std::span<const Document> positives,
                                                  std::span<const Document> negatives,
                                                  std::span<const Exemplar> exemplars) = 0;

    /// One rewritten query per delta, with a positive/negative partition of
    /// `retrieved`.
    virtual NewQueriesVerdict make_new_queries(const Query& query, std::span<const Document> retrieved,
                                               const ScoresVerdict& scores, const InfoDeltasVerdict& deltas,
                                               std::span<const Exemplar> exemplars) = 0;

    /// nullopt when no document can be composed.
    virtual std::optional<CompDocVerdict> make_comprehensive_doc(const Query& query,
                                                                 std::span<const Document> positives,
                                                                 std::span<const Exemplar> exemplars) = 0;

    /// nullopt when neither a dense nor a sparse variant exists.
    virtual std::optional<PurityDocsVerdict> make_purity_docs(const Query& query, const Document& positive,
                                                              std::span<const Exemplar> exemplars) = 0;
};

}  // namespace figret
