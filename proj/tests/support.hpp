#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <functional>
#include <mutex>
#include <set>

#include "figret/corpus.hpp"
#include "figret/error.hpp"
#include "figret/mock_teacher.hpp"

namespace figret::test {

/// Fresh directory under the build tree, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::path(FIGRET_TEST_TMP) / (tag + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Document doc(const std::string& id, std::vector<std::string> units, const Corpus& c) {
    return Document{id, c.render(units), units};
}

/// Hand-built corpus: subject "alpha" has gold units g1..g4 (answer g1),
/// everything else is noise about other subjects.
inline Corpus tiny_corpus() {
    std::vector<InfoUnit> units{
        {"g1", "fact g1: alpha colour red."},     {"g2", "fact g2: alpha size large."},
        {"g3", "fact g3: alpha weight heavy."},   {"g4", "fact g4: alpha origin north."},
        {"n1", "fact n1: beta colour blue."},     {"n2", "fact n2: gamma size small."},
        {"n3", "fact n3: delta taste sweet."},    {"n4", "fact n4: epsilon sound loud."},
        {"n5", "fact n5: zeta shape round."},     {"n6", "fact n6: eta smell fresh."},
    };
    Corpus base(units, {}, {});
    std::vector<Document> docs{
        doc("d1", {"g1", "g2", "n1"}, base),
        doc("d2", {"g2", "g3"}, base),
        doc("d3", {"n1", "n2"}, base),
        doc("d4", {"n3", "n4"}, base),
        doc("d5", {"g4", "n5", "n6"}, base),
    };
    Query q{"q1", "what about alpha colour", {"g1", "g2", "g3", "g4"}, "g1"};
    return Corpus(units, docs, {q});
}

/// Mock teacher with hooks: queries listed in `fail_scoring` raise a
/// protocol error, and `score_override` may rewrite scores per query id.
class ScriptedTeacher final : public Teacher {
public:
    explicit ScriptedTeacher(const Corpus& c, MockTeacherConfig cfg = {}) : inner_(c, cfg) {}

    std::set<std::string> fail_scoring;
    std::function<void(const Query&, std::span<const Document>, ScoresVerdict&)> score_override;

    int score_calls() const { return score_calls_.load(); }

    ScoresVerdict score_documents(const Query& q, std::span<const Document> docs,
                                  std::span<const Exemplar> ex) override {
        ++score_calls_;
        if (fail_scoring.count(q.id)) throw TeacherProtocolError("scripted failure for " + q.id);
        auto v = inner_.score_documents(q, docs, ex);
        if (score_override) score_override(q, docs, v);
        return v;
    }
    InfoDeltasVerdict extract_info_deltas(const Query& q, std::span<const Document> r, const ScoresVerdict& s,
                                          std::span<const Document> p, std::span<const Document> n,
                                          std::span<const Exemplar> ex) override {
        return inner_.extract_info_deltas(q, r, s, p, n, ex);
    }
    NewQueriesVerdict make_new_queries(const Query& q, std::span<const Document> r, const ScoresVerdict& s,
                                       const InfoDeltasVerdict& d, std::span<const Exemplar> ex) override {
        return inner_.make_new_queries(q, r, s, d, ex);
    }
    std::optional<CompDocVerdict> make_comprehensive_doc(const Query& q, std::span<const Document> p,
                                                         std::span<const Exemplar> ex) override {
        return inner_.make_comprehensive_doc(q, p, ex);
    }
    std::optional<PurityDocsVerdict> make_purity_docs(const Query& q, const Document& p,
                                                      std::span<const Exemplar> ex) override {
        return inner_.make_purity_docs(q, p, ex);
    }

private:
    MockTeacher inner_;
    std::atomic<int> score_calls_{0};
};

}  // namespace figret::test
