#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "figret/prompts.hpp"
#include "figret/teacher.hpp"

namespace figret {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// POSTs a JSON body. Throws TransportError when no response arrives.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual HttpResponse post(const std::string& body) = 0;
};

struct ChatConfig {
    /// e.g. "https://api.openai.com" or "http://127.0.0.1:8080"
    std::string base_url;
    std::string model = "gpt-3.5-turbo";
    std::string api_key;
    std::chrono::seconds timeout{60};
};

/// cpp-httplib backed transport targeting `<base_url>/v1/chat/completions`.
class HttpTransport final : public ChatTransport {
public:
    explicit HttpTransport(ChatConfig config);
    HttpResponse post(const std::string& body) override;

private:
    ChatConfig config_;
};

/// Reads FIGRET_API_KEY; throws ConfigError when unset or empty.
std::string api_key_from_env();

/// Request body with keys in wire order: model, temperature, messages.
std::string build_chat_body(const std::string& model, const TeacherRequest& request);

/// `choices[0].message.content` of a completion response.
std::string parse_chat_content(const std::string& body);

/// First balanced JSON object or array embedded in `text` that parses.
std::optional<json> extract_first_json(std::string_view text);

/// Sends `request` and returns the assistant content. Retries transport
/// failures and non-2xx statuses; `max_retries` bounds total attempts.
std::string chat(ChatTransport& transport, const std::string& model, const TeacherRequest& request);

/// Like `chat`, but also feeds each reply to `accept`. When `accept` throws
/// TeacherProtocolError the reply and an error note are appended to the
/// conversation and the request is re-sent, within the same attempt budget.
std::string chat_until_valid(ChatTransport& transport, const std::string& model, TeacherRequest request,
                             const std::function<void(const std::string&)>& accept);

// Strict verdict parsers for already-extracted JSON.
ScoresVerdict parse_scores(const json& j, std::span<const Document> submitted);
InfoDeltasVerdict parse_info_deltas(const json& j, std::span<const Document> negatives);
NewQueriesVerdict parse_new_queries(const json& j, const Query& original, std::span<const Document> retrieved);
std::optional<CompDocVerdict> parse_comp_doc(const json& j, const Query& query);
std::optional<PurityDocsVerdict> parse_purity_docs(const json& j, const Query& query, const Document& positive);

/// Teacher speaking the chat-completions dialect.
class HttpTeacher final : public Teacher {
public:
    HttpTeacher(std::shared_ptr<ChatTransport> transport, std::string model,
                PromptTemplates templates = PromptTemplates::builtin(), int max_retries = 3);

    ScoresVerdict score_documents(const Query& query, std::span<const Document> docs,
                                  std::span<const Exemplar> exemplars) override;
    InfoDeltasVerdict extract_info_deltas(const Query& query, std::span<const Document> retrieved,
                                          const ScoresVerdict& scores, std::span<const Document> positives,
                                          std::span<const Document> negatives,
                                          std::span<const Exemplar> exemplars) override;
    NewQueriesVerdict make_new_queries(const Query& query, std::span<const Document> retrieved,
                                       const ScoresVerdict& scores, const InfoDeltasVerdict& deltas,
                                       std::span<const Exemplar> exemplars) override;
    std::optional<CompDocVerdict> make_comprehensive_doc(const Query& query, std::span<const Document> positives,
                                                         std::span<const Exemplar> exemplars) override;
    std::optional<PurityDocsVerdict> make_purity_docs(const Query& query, const Document& positive,
                                                      std::span<const Exemplar> exemplars) override;

private:
    TeacherRequest request_with(std::span<const Exemplar> exemplars) const;
    void append_scoring_turn(TeacherRequest& req, const Query& query, std::span<const Document> retrieved,
                             const ScoresVerdict& scores) const;
    template <typename T>
    T ask(TeacherRequest req, const std::function<T(const json&)>& parse);

    std::shared_ptr<ChatTransport> transport_;
    std::string model_;
    PromptTemplates templates_;
    int max_retries_;
};

}  // namespace figret
