#include "figret/http_teacher.hpp"

#include <cstdlib>
#include <set>

#include "figret/error.hpp"
#include "httplib.h"

namespace figret {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path before /v1/..., without trailing slash
};

SplitUrl split_base_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

}  // namespace

HttpTransport::HttpTransport(ChatConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("teacher base URL is not configured");
    split_base_url(config_.base_url);
}

HttpResponse HttpTransport::post(const std::string& body) {
    const auto url = split_base_url(config_.base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    auto res = client.Post(url.prefix + "/v1/chat/completions", headers, body, "application/json");
    if (!res) throw TransportError("request to " + config_.base_url + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

std::string api_key_from_env() {
    const char* key = std::getenv("FIGRET_API_KEY");
    if (!key || !*key) throw ConfigError("FIGRET_API_KEY is not set; the http teacher needs an API credential");
    return key;
}

std::string build_chat_body(const std::string& model, const TeacherRequest& request) {
    request.validate();
    ordered_json body;
    body["model"] = model;
    if (request.temperature == static_cast<double>(static_cast<long long>(request.temperature)))
        body["temperature"] = static_cast<long long>(request.temperature);
    else
        body["temperature"] = request.temperature;
    ordered_json messages = ordered_json::array();
    for (const auto& m : request.conversation) {
        ordered_json msg;
        msg["role"] = m.role;
        msg["content"] = m.content;
        messages.push_back(std::move(msg));
    }
    body["messages"] = std::move(messages);
    return body.dump();
}

std::string parse_chat_content(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw TeacherProtocolError(std::string("completion body is not JSON: ") + e.what());
    }
    try {
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TeacherProtocolError(std::string("completion body lacks choices[0].message.content: ") + e.what());
    }
}

std::optional<json> extract_first_json(std::string_view text) {
    for (std::size_t start = 0; start < text.size(); ++start) {
        const char open = text[start];
        if (open != '{' && open != '[') continue;
        // Bracket matching that skips over string literals.
        int depth = 0;
        bool in_string = false, escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{' || c == '[') ++depth;
            else if (c == '}' || c == ']') {
                if (--depth == 0) {
                    auto parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded()) return parsed;
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

namespace {

bool is_2xx(int status) { return status >= 200 && status < 300; }

std::string run_chat(ChatTransport& transport, const std::string& model, TeacherRequest request,
                     const std::function<void(const std::string&)>* accept) {
    request.validate();
    bool last_was_transport = true;
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < request.max_retries; ++attempt) {
        HttpResponse res;
        try {
            res = transport.post(build_chat_body(model, request));
        } catch (const TransportError& e) {
            last_was_transport = true;
            last_error = e.what();
            continue;
        }
        if (!is_2xx(res.status)) {
            last_was_transport = true;
            last_error = "HTTP status " + std::to_string(res.status);
            continue;
        }
        std::string content;
        try {
            content = parse_chat_content(res.body);
            if (accept) (*accept)(content);
            return content;
        } catch (const TeacherProtocolError& e) {
            last_was_transport = false;
            last_error = e.what();
            if (!content.empty()) request.conversation.push_back({"assistant", content});
            request.conversation.push_back(
                {"user", std::string("Your previous reply could not be used: ") + e.what() +
                             ". Respond again with the requested JSON only."});
        }
    }
    const std::string msg = "teacher failed after " + std::to_string(request.max_retries) + " attempts: " + last_error;
    if (last_was_transport) throw TransportError(msg);
    throw TeacherProtocolError(msg);
}

}  // namespace

std::string chat(ChatTransport& transport, const std::string& model, const TeacherRequest& request) {
    return run_chat(transport, model, request, nullptr);
}

std::string chat_until_valid(ChatTransport& transport, const std::string& model, TeacherRequest request,
                             const std::function<void(const std::string&)>& accept) {
    return run_chat(transport, model, std::move(request), &accept);
}

namespace {

int integral_score(const json& v) {
    if (!v.is_number()) throw TeacherProtocolError("score is not a number");
    const double d = v.get<double>();
    if (d != static_cast<double>(static_cast<int>(d))) throw TeacherProtocolError("score is not an integer");
    return static_cast<int>(d);
}

std::vector<std::string> id_list(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw TeacherProtocolError(std::string("missing array '") + key + "'");
    std::vector<std::string> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_string()) throw TeacherProtocolError(std::string("non-string id in '") + key + "'");
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::string required_string(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_string())
        throw TeacherProtocolError(std::string("missing string '") + key + "'");
    return j.at(key).get<std::string>();
}

}  // namespace

ScoresVerdict parse_scores(const json& j, std::span<const Document> submitted) {
    if (!j.is_object() || !j.contains("scores")) throw TeacherProtocolError("missing 'scores'");
    const auto& s = j.at("scores");
    ScoresVerdict v;
    if (s.is_array()) {
        for (const auto& item : s) {
            if (!item.is_object()) throw TeacherProtocolError("score entry is not an object");
            const auto id = required_string(item, "id");
            if (!item.contains("score")) throw TeacherProtocolError("score entry lacks 'score'");
            if (!v.scores.emplace(id, integral_score(item.at("score"))).second)
                throw TeacherProtocolError("document " + id + " scored twice");
        }
    } else if (s.is_object()) {
        for (const auto& [id, val] : s.items()) v.scores[id] = integral_score(val);
    } else {
        throw TeacherProtocolError("'scores' must be an array or object");
    }
    check_scores(v, submitted);
    return v;
}

InfoDeltasVerdict parse_info_deltas(const json& j, std::span<const Document> negatives) {
    if (!j.is_object() || !j.contains("differences") || !j.at("differences").is_array())
        throw TeacherProtocolError("missing array 'differences'");
    std::set<std::string> allowed;
    for (const auto& d : negatives) allowed.insert(d.id);
    InfoDeltasVerdict v;
    for (const auto& item : j.at("differences")) {
        InfoDelta delta;
        delta.summary = required_string(item, "summary");
        delta.doc_ids = id_list(item, "doc_ids");
        for (const auto& id : delta.doc_ids)
            if (!allowed.contains(id)) throw TeacherProtocolError("difference cites " + id + ", not a less helpful document");
        if (delta.doc_ids.empty()) continue;
        v.deltas.push_back(std::move(delta));
    }
    return v;
}

NewQueriesVerdict parse_new_queries(const json& j, const Query& original, std::span<const Document> retrieved) {
    if (!j.is_object() || !j.contains("queries") || !j.at("queries").is_array())
        throw TeacherProtocolError("missing array 'queries'");
    NewQueriesVerdict v;
    std::size_t i = 0;
    for (const auto& item : j.at("queries")) {
        NewQuery nq;
        nq.query.id = original.id + "/rel" + std::to_string(i++);
        nq.query.text = required_string(item, "query");
        nq.positive_ids = id_list(item, "positive_ids");
        nq.negative_ids = id_list(item, "negative_ids");
        v.queries.push_back(std::move(nq));
    }
    check_new_queries(v, retrieved);
    return v;
}

std::optional<CompDocVerdict> parse_comp_doc(const json& j, const Query& query) {
    const auto text = required_string(j, "document");
    if (text.empty()) return std::nullopt;
    CompDocVerdict v;
    v.document.id = "comp:" + query.id;
    v.document.text = text;
    return v;
}

std::optional<PurityDocsVerdict> parse_purity_docs(const json& j, const Query& query, const Document& positive) {
    if (!j.is_object()) throw TeacherProtocolError("purity verdict is not an object");
    PurityDocsVerdict v;
    const auto side = [&](const char* key, const char* prefix) -> std::optional<Document> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        if (!j.at(key).is_string()) throw TeacherProtocolError(std::string("'") + key + "' is not a string");
        auto text = j.at(key).get<std::string>();
        if (text.empty() || text == positive.text) return std::nullopt;
        return Document{std::string(prefix) + query.id + ":" + positive.id, std::move(text), std::nullopt};
    };
    if (!j.contains("dense_document") && !j.contains("sparse_document"))
        throw TeacherProtocolError("purity verdict lacks dense_document and sparse_document");
    v.dense = side("dense_document", "dense:");
    v.sparse = side("sparse_document", "sparse:");
    if (!v.dense && !v.sparse) return std::nullopt;
    return v;
}

HttpTeacher::HttpTeacher(std::shared_ptr<ChatTransport> transport, std::string model, PromptTemplates templates,
                         int max_retries)
    : transport_(std::move(transport)), model_(std::move(model)), templates_(std::move(templates)),
      max_retries_(max_retries) {
    if (!transport_) throw ConfigError("http teacher needs a transport");
    if (max_retries_ < 1) throw ConfigError("max_retries must be >= 1");
}

TeacherRequest HttpTeacher::request_with(std::span<const Exemplar> exemplars) const {
    TeacherRequest req;
    req.max_retries = max_retries_;
    for (const auto& e : exemplars) {
        req.conversation.push_back(
            {"user", render_template(templates_.exemplar, {{"query", e.query.text},
                                                           {"documents", render_documents(e.docs)},
                                                           {"verdict", to_json(e.verdict).dump()}})});
    }
    return req;
}

void HttpTeacher::append_scoring_turn(TeacherRequest& req, const Query& query, std::span<const Document> retrieved,
                                      const ScoresVerdict& scores) const {
    req.conversation.push_back(
        {"user", render_template(templates_.scoring, {{"query", query.text}, {"documents", render_documents(retrieved)}})});
    req.conversation.push_back({"assistant", to_json(scores).dump()});
}

template <typename T>
T HttpTeacher::ask(TeacherRequest req, const std::function<T(const json&)>& parse) {
    std::optional<T> result;
    chat_until_valid(*transport_, model_, std::move(req), [&](const std::string& content) {
        auto j = extract_first_json(content);
        if (!j) throw TeacherProtocolError("reply contains no JSON");
        result = parse(*j);
    });
    return std::move(*result);
}

ScoresVerdict HttpTeacher::score_documents(const Query& query, std::span<const Document> docs,
                                           std::span<const Exemplar> exemplars) {
    if (docs.empty()) throw PreconditionError("score_documents needs at least one document");
    auto req = request_with(exemplars);
    req.conversation.push_back(
        {"user", render_template(templates_.scoring, {{"query", query.text}, {"documents", render_documents(docs)}})});
    return ask<ScoresVerdict>(std::move(req), [&](const json& j) { return parse_scores(j, docs); });
}

InfoDeltasVerdict HttpTeacher::extract_info_deltas(const Query& query, std::span<const Document> retrieved,
                                                   const ScoresVerdict& scores, std::span<const Document> positives,
                                                   std::span<const Document> negatives,
                                                   std::span<const Exemplar> exemplars) {
    auto req = request_with(exemplars);
    append_scoring_turn(req, query, retrieved, scores);
    req.conversation.push_back({"user", render_template(templates_.relevance_part1,
                                                        {{"query", query.text},
                                                         {"positives", render_documents(positives)},
                                                         {"negatives", render_documents(negatives)}})});
    return ask<InfoDeltasVerdict>(std::move(req), [&](const json& j) { return parse_info_deltas(j, negatives); });
}

NewQueriesVerdict HttpTeacher::make_new_queries(const Query& query, std::span<const Document> retrieved,
                                                const ScoresVerdict& scores, const InfoDeltasVerdict& deltas,
                                                std::span<const Exemplar> exemplars) {
    if (deltas.deltas.empty()) return {};
    std::vector<Document> positives, negatives;
    for (const auto& d : retrieved) {
        const auto it = scores.scores.find(d.id);
        if (it == scores.scores.end()) continue;
        if (it->second >= 8) positives.push_back(d);
        if (it->second <= 3) negatives.push_back(d);
    }
    auto req = request_with(exemplars);
    append_scoring_turn(req, query, retrieved, scores);
    req.conversation.push_back({"user", render_template(templates_.relevance_part1,
                                                        {{"query", query.text},
                                                         {"positives", render_documents(positives)},
                                                         {"negatives", render_documents(negatives)}})});
    json diffs = json::array();
    for (const auto& d : deltas.deltas) diffs.push_back({{"summary", d.summary}, {"doc_ids", d.doc_ids}});
    req.conversation.push_back({"assistant", json{{"differences", diffs}}.dump()});
    req.conversation.push_back({"user", render_template(templates_.relevance_part2, {{"query", query.text}})});
    return ask<NewQueriesVerdict>(std::move(req), [&](const json& j) { return parse_new_queries(j, query, retrieved); });
}

std::optional<CompDocVerdict> HttpTeacher::make_comprehensive_doc(const Query& query,
                                                                  std::span<const Document> positives,
                                                                  std::span<const Exemplar> exemplars) {
    if (positives.empty()) return std::nullopt;
    auto req = request_with(exemplars);
    req.conversation.push_back({"user", render_template(templates_.comprehensiveness,
                                                        {{"query", query.text}, {"documents", render_documents(positives)}})});
    return ask<std::optional<CompDocVerdict>>(std::move(req), [&](const json& j) { return parse_comp_doc(j, query); });
}

std::optional<PurityDocsVerdict> HttpTeacher::make_purity_docs(const Query& query, const Document& positive,
                                                               std::span<const Exemplar> exemplars) {
    auto req = request_with(exemplars);
    req.conversation.push_back(
        {"user", render_template(templates_.purity, {{"query", query.text}, {"document", positive.text}})});
    return ask<std::optional<PurityDocsVerdict>>(
        std::move(req), [&](const json& j) { return parse_purity_docs(j, query, positive); });
}

}  // namespace figret
