#include "figret/evaluation.hpp"

#include <fmt/format.h>

#include <map>

#include "figret/error.hpp"
#include "figret/scoring.hpp"

namespace figret {

double alignment_ndcg(const EncoderModel& model, const RetrievalIndex& index, Teacher& teacher,
                      std::span<const Query> queries, const Corpus& corpus, std::size_t k) {
    if (queries.empty()) throw PreconditionError("alignment_ndcg needs at least one query");
    double sum = 0.0;
    for (const auto& q : queries) {
        const auto hits = index.retrieve(model, q.text, k);
        std::vector<Document> docs;
        for (const auto& h : hits) docs.push_back(corpus.document(h.doc_id));
        const auto verdict = teacher.score_documents(q, docs, {});
        check_scores(verdict, docs);
        std::vector<int> scores;
        for (const auto& d : docs) scores.push_back(verdict.scores.at(d.id));
        sum += ndcg(scores);
    }
    return sum / static_cast<double>(queries.size());
}

namespace {

void compare(WinTieLoss& w, double before, double after) {
    if (after > before) ++w.win;
    else if (after < before) ++w.loss;
    else ++w.tie;
}

}  // namespace

void tally(ObjectiveWinRates& rates, const ObjectiveMetrics& before, const ObjectiveMetrics& after) {
    compare(rates[Objective::relevance], before.relevance_count, after.relevance_count);
    compare(rates[Objective::comprehensiveness], before.comprehensiveness, after.comprehensiveness);
    compare(rates[Objective::purity], before.purity, after.purity);
    ++rates.compared;
}

ObjectiveWinRates objective_winrates(const EncoderModel& before, const RetrievalIndex& before_index,
                                     const EncoderModel& after, const RetrievalIndex& after_index,
                                     std::span<const Query> queries, const Corpus& corpus) {
    ObjectiveWinRates rates;
    for (const auto& q : queries) {
        const auto b = before_index.retrieve(before, q.text, 1);
        const auto a = after_index.retrieve(after, q.text, 1);
        if (b.empty() || a.empty() || b.front().doc_id == a.front().doc_id) continue;
        tally(rates, objective_metrics(corpus.document(b.front().doc_id), q),
              objective_metrics(corpus.document(a.front().doc_id), q));
    }
    return rates;
}

json to_json(const ObjectiveWinRates& r) {
    json j{{"compared", r.compared}};
    for (auto o : {Objective::relevance, Objective::comprehensiveness, Objective::purity}) {
        const auto& w = r[o];
        j[std::string(to_string(o))] = {{"win", w.win}, {"tie", w.tie}, {"loss", w.loss}};
    }
    return j;
}

ObjectiveWinRates winrates_from_json(const json& j) {
    ObjectiveWinRates r;
    r.compared = j.at("compared").get<int>();
    for (auto o : {Objective::relevance, Objective::comprehensiveness, Objective::purity}) {
        const auto& w = j.at(std::string(to_string(o)));
        r[o] = {w.at("win").get<int>(), w.at("tie").get<int>(), w.at("loss").get<int>()};
    }
    return r;
}

Report report(const std::filesystem::path& run_dir) {
    const auto metrics_path = run_dir / "metrics.jsonl";
    std::vector<json> events;
    if (std::filesystem::exists(metrics_path))
        for_each_jsonl(metrics_path, [&](const json& j, std::size_t) { events.push_back(j); });

    Report r;
    r.summary = json::object();
    if (!events.empty()) {
        json alignment = json::array(), thresholds = json::array(), losses = json::array();
        json winrates = nullptr;
        std::map<std::string, json> assess_by_iter;
        for (const auto& e : events) {
            const auto stage = e.at("stage").get<std::string>();
            const auto key = e.at("key").get<std::string>();
            const auto iter = e.at("iteration").get<int>();
            const auto& value = e.at("value");
            if (stage == "eval" && key == "alignment_ndcg")
                alignment.push_back({{"iteration", iter}, {"value", value}});
            else if (stage == "eval" && key == "objective_winrates")
                winrates = {{"iteration", iter}, {"counts", value}};
            else if (stage == "score" && key == "threshold")
                thresholds.push_back({{"iteration", iter}, {"value", value}});
            else if (stage == "train" && key == "mean_loss")
                losses.push_back({{"iteration", iter}, {"value", value}});
            else if (stage == "assess")
                assess_by_iter[std::to_string(iter)][key] = value;
        }
        r.summary["alignment"] = alignment;
        r.summary["thresholds"] = thresholds;
        r.summary["train_loss"] = losses;
        r.summary["assess"] = assess_by_iter;
        r.summary["winrates"] = winrates;
    }

    std::string text;
    if (r.summary.contains("alignment")) {
        text += "alignment NDCG by iteration\n";
        for (const auto& a : r.summary["alignment"])
            text += fmt::format("  iteration {}: {:.4f}\n", a["iteration"].get<int>(), a["value"].get<double>());
        text += "guidance threshold by iteration\n";
        for (const auto& t : r.summary["thresholds"])
            text += fmt::format("  iteration {}: {:.4f}\n", t["iteration"].get<int>(), t["value"].get<double>());
        if (!r.summary["winrates"].is_null()) {
            const auto& c = r.summary["winrates"]["counts"];
            text += fmt::format("objective win/tie/loss over {} changed top-1 queries\n", c["compared"].get<int>());
            for (const char* o : {"relevance", "comprehensiveness", "purity"})
                text += fmt::format("  {:<18} {:>4} {:>4} {:>4}\n", o, c[o]["win"].get<int>(), c[o]["tie"].get<int>(),
                                    c[o]["loss"].get<int>());
        }
    }
    r.text = text;
    atomic_write(run_dir / "report.json", r.summary.dump(2) + "\n");
    atomic_write(run_dir / "report.txt", r.text);
    return r;
}

}  // namespace figret
