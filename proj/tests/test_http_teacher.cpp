#include <gtest/gtest.h>

#include <cstdlib>

#include "figret/error.hpp"
#include "figret/http_teacher.hpp"
#include "stub_server.hpp"

using namespace figret;

namespace {

std::vector<Document> two_docs() {
    return {{"d1", "fact u1: alpha colour red.", std::nullopt}, {"d2", "fact u7: beta size small.", std::nullopt}};
}

std::shared_ptr<HttpTransport> transport_for(const test::StubServer& s, std::string key = "") {
    ChatConfig c;
    c.base_url = s.base_url();
    c.api_key = std::move(key);
    c.timeout = std::chrono::seconds(5);
    return std::make_shared<HttpTransport>(c);
}

const std::string kScoresReply = R"({"scores":[{"id":"d1","score":9},{"id":"d2","score":1}]})";

}  // namespace

TEST(ChatBody, WireSchema) {
    TeacherRequest r;
    r.conversation = {{"system", "be brief"}, {"user", "say \"hi\"\nnow"}};
    EXPECT_EQ(build_chat_body("gpt-3.5-turbo", r),
              R"({"model":"gpt-3.5-turbo","temperature":0,"messages":[{"role":"system","content":"be brief"},)"
              R"({"role":"user","content":"say \"hi\"\nnow"}]})");
}

TEST(ChatBody, RejectsBadRequests) {
    TeacherRequest empty;
    EXPECT_THROW(build_chat_body("m", empty), PreconditionError);
    TeacherRequest bad_role;
    bad_role.conversation = {{"tool", "x"}};
    EXPECT_THROW(build_chat_body("m", bad_role), PreconditionError);
}

TEST(ExtractJson, FindsFirstBalancedValue) {
    EXPECT_EQ(*extract_first_json(R"(Reasoning {not json} then {"a": "}{", "b": [1, 2]} and {"c": 3})"),
              json::parse(R"({"a": "}{", "b": [1, 2]})"));
    EXPECT_EQ(*extract_first_json("list: [1, 2, 3]."), json::parse("[1,2,3]"));
    EXPECT_FALSE(extract_first_json("no json here"));
}

TEST(ParseScores, StrictCoverage) {
    const auto docs = two_docs();
    EXPECT_EQ(parse_scores(json::parse(kScoresReply), docs).scores.at("d1"), 9);
    EXPECT_EQ(parse_scores(json::parse(R"({"scores":{"d1":3,"d2":0}})"), docs).scores.at("d2"), 0);
    EXPECT_THROW(parse_scores(json::parse(R"({"scores":[{"id":"d1","score":9}]})"), docs), TeacherProtocolError);
    EXPECT_THROW(parse_scores(json::parse(R"({"scores":{"d1":3,"d2":11}})"), docs), TeacherProtocolError);
    EXPECT_THROW(parse_scores(json::parse(R"({"scores":{"d1":3,"d2":2,"d9":1}})"), docs), TeacherProtocolError);
    EXPECT_THROW(parse_scores(json::parse(R"({"scores":{"d1":3.5,"d2":2}})"), docs), TeacherProtocolError);
}

TEST(ParseNewQueries, RequiresPartition) {
    const auto docs = two_docs();
    Query q{"q", "what about alpha", {}, ""};
    const auto ok = parse_new_queries(
        json::parse(R"({"queries":[{"query":"alpha colour","positive_ids":["d1"],"negative_ids":["d2"]}]})"), q, docs);
    ASSERT_EQ(ok.queries.size(), 1u);
    EXPECT_EQ(ok.queries[0].query.id, "q/rel0");
    EXPECT_THROW(parse_new_queries(json::parse(R"({"queries":[{"query":"x","positive_ids":["d1"],"negative_ids":[]}]})"),
                                   q, docs),
                 TeacherProtocolError);
    EXPECT_THROW(parse_new_queries(
                     json::parse(R"({"queries":[{"query":"x","positive_ids":["d1"],"negative_ids":["d1","d2"]}]})"), q,
                     docs),
                 TeacherProtocolError);
}

TEST(ParsePurity, SidesAreOptional) {
    Query q{"q", "what", {}, ""};
    Document p{"d1", "original", std::nullopt};
    const auto both = parse_purity_docs(json::parse(R"({"dense_document":"a","sparse_document":"b"})"), q, p);
    ASSERT_TRUE(both && both->dense && both->sparse);
    const auto one = parse_purity_docs(json::parse(R"({"dense_document":"original","sparse_document":"b"})"), q, p);
    ASSERT_TRUE(one);
    EXPECT_FALSE(one->dense);
    EXPECT_FALSE(parse_purity_docs(json::parse(R"({"dense_document":"","sparse_document":null})"), q, p));
    EXPECT_THROW(parse_purity_docs(json::parse(R"({"other":1})"), q, p), TeacherProtocolError);
}

TEST(HttpTeacher, ScoringRequestMatchesWireSchema) {
    test::StubServer server;
    server.push(200, test::StubServer::completion("Thinking... " + kScoresReply));
    HttpTeacher teacher(transport_for(server, "sk-test"), "gpt-3.5-turbo");
    const auto docs = two_docs();
    Query q{"q1", "what about alpha colour", {}, ""};
    const auto v = teacher.score_documents(q, docs, {});
    EXPECT_EQ(v.scores.at("d1"), 9);

    const auto seen = server.seen();
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_EQ(seen[0].path, "/v1/chat/completions");
    EXPECT_EQ(seen[0].authorization, "Bearer sk-test");
    EXPECT_EQ(seen[0].content_type, "application/json");
    const auto prompt = render_template(PromptTemplates::builtin().scoring,
                                        {{"query", q.text}, {"documents", render_documents(docs)}});
    const std::string expected = R"({ "model": "gpt-3.5-turbo", "temperature": 0, "messages": [ { "role": "user", "content": )" +
                                 json(prompt).dump() + " } ] }";
    EXPECT_EQ(test::strip_json_ws(seen[0].body), test::strip_json_ws(expected));
}

TEST(HttpTeacher, BaseUrlPathPrefixIsKept) {
    test::StubServer server;
    server.push(200, test::StubServer::completion(kScoresReply));
    ChatConfig c;
    c.base_url = server.base_url() + "/proxy/";
    HttpTeacher teacher(std::make_shared<HttpTransport>(c), "m");
    teacher.score_documents(Query{"q", "x", {}, ""}, two_docs(), {});
    EXPECT_EQ(server.seen().at(0).path, "/proxy/v1/chat/completions");
}

TEST(HttpTeacher, ServerErrorThenSuccessRetriesOnce) {
    test::StubServer server;
    server.push(500, "{}");
    server.push(200, test::StubServer::completion(kScoresReply));
    HttpTeacher teacher(transport_for(server), "m");
    EXPECT_EQ(teacher.score_documents(Query{"q", "x", {}, ""}, two_docs(), {}).scores.at("d2"), 1);
    const auto seen = server.seen();
    ASSERT_EQ(seen.size(), 2u);
    EXPECT_EQ(seen[0].body, seen[1].body);
}

TEST(HttpTeacher, ThreeServerErrorsAreTransportError) {
    test::StubServer server;
    server.set_fallback(500, "{}");
    HttpTeacher teacher(transport_for(server), "m");
    EXPECT_THROW(teacher.score_documents(Query{"q", "x", {}, ""}, two_docs(), {}), TransportError);
    EXPECT_EQ(server.seen().size(), 3u);
}

TEST(HttpTeacher, ThreeMalformedRepliesAreProtocolError) {
    test::StubServer server;
    server.set_fallback(200, test::StubServer::completion("I would rather not answer in JSON."));
    HttpTeacher teacher(transport_for(server), "m");
    EXPECT_THROW(teacher.score_documents(Query{"q", "x", {}, ""}, two_docs(), {}), TeacherProtocolError);
    const auto seen = server.seen();
    ASSERT_EQ(seen.size(), 3u);
    // Each retry carries the rejected reply and an error note.
    const auto second = json::parse(seen[1].body);
    ASSERT_EQ(second["messages"].size(), 3u);
    EXPECT_EQ(second["messages"][1]["role"], "assistant");
    EXPECT_EQ(second["messages"][1]["content"], "I would rather not answer in JSON.");
    EXPECT_EQ(second["messages"][2]["role"], "user");
    EXPECT_EQ(json::parse(seen[2].body)["messages"].size(), 5u);
}

TEST(HttpTeacher, MalformedBodyIsRetried) {
    test::StubServer server;
    server.push(200, "{not json");
    server.push(200, test::StubServer::completion(kScoresReply));
    HttpTeacher teacher(transport_for(server), "m");
    EXPECT_NO_THROW(teacher.score_documents(Query{"q", "x", {}, ""}, two_docs(), {}));
    EXPECT_EQ(server.seen().size(), 2u);
}

TEST(HttpTeacher, SchemaViolationIsRetriedWithinBudget) {
    test::StubServer server;
    server.push(500, "{}");
    server.push(200, test::StubServer::completion(R"({"scores":[{"id":"d1","score":9}]})"));
    server.push(200, test::StubServer::completion(kScoresReply));
    HttpTeacher teacher(transport_for(server), "m");
    EXPECT_NO_THROW(teacher.score_documents(Query{"q", "x", {}, ""}, two_docs(), {}));
    EXPECT_EQ(server.seen().size(), 3u);
}

TEST(HttpTeacher, UnreachableServerIsTransportError) {
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    ChatConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port);
    c.timeout = std::chrono::seconds(1);
    HttpTeacher teacher(std::make_shared<HttpTransport>(c), "m", PromptTemplates::builtin(), 2);
    EXPECT_THROW(teacher.score_documents(Query{"q", "x", {}, ""}, two_docs(), {}), TransportError);
}

TEST(HttpTeacher, RelevanceCallsReplayTheScoringTurn) {
    test::StubServer server;
    server.push(200, test::StubServer::completion(R"({"differences":[{"summary":"beta facts","doc_ids":["d2"]}]})"));
    server.push(200, test::StubServer::completion(
                         R"({"queries":[{"query":"beta size","positive_ids":["d2"],"negative_ids":["d1"]}]})"));
    HttpTeacher teacher(transport_for(server), "m");
    const auto docs = two_docs();
    Query q{"q1", "what about alpha colour", {}, ""};
    ScoresVerdict scores{{{"d1", 9}, {"d2", 1}}};
    const std::vector<Document> pos{docs[0]}, neg{docs[1]};
    const auto deltas = teacher.extract_info_deltas(q, docs, scores, pos, neg, {});
    ASSERT_EQ(deltas.deltas.size(), 1u);
    EXPECT_EQ(deltas.deltas[0].doc_ids, std::vector<std::string>{"d2"});
    const auto nq = teacher.make_new_queries(q, docs, scores, deltas, {});
    ASSERT_EQ(nq.queries.size(), 1u);
    EXPECT_EQ(nq.queries[0].query.text, "beta size");

    const auto seen = server.seen();
    const auto part1 = json::parse(seen[0].body)["messages"];
    ASSERT_EQ(part1.size(), 3u);
    EXPECT_EQ(part1[1]["role"], "assistant");
    EXPECT_EQ(json::parse(part1[1]["content"].get<std::string>()), to_json(scores));
    const auto part2 = json::parse(seen[1].body)["messages"];
    ASSERT_EQ(part2.size(), 5u);
    EXPECT_EQ(part2[3]["role"], "assistant");
}

TEST(HttpTeacher, ExemplarsArePrepended) {
    test::StubServer server;
    server.push(200, test::StubServer::completion(kScoresReply));
    HttpTeacher teacher(transport_for(server), "m");
    Exemplar ex{Query{"qe", "what about gamma", {}, ""}, {{"e1", "fact u9: gamma.", std::nullopt}}, {{{"e1", 10}}}};
    std::vector<Exemplar> shots{ex, ex};
    teacher.score_documents(Query{"q", "x", {}, ""}, two_docs(), shots);
    const auto msgs = json::parse(server.seen().at(0).body)["messages"];
    ASSERT_EQ(msgs.size(), 3u);
    EXPECT_NE(msgs[0]["content"].get<std::string>().find("what about gamma"), std::string::npos);
}

TEST(HttpTeacher, ComprehensiveAndPurityDocs) {
    test::StubServer server;
    server.push(200, test::StubServer::completion(R"({"document":"fact u1: alpha colour red. fact u2: alpha size big."})"));
    server.push(200, test::StubServer::completion(R"({"dense_document":"fact u1: alpha colour red.","sparse_document":"fact u7: beta size small."})"));
    HttpTeacher teacher(transport_for(server), "m");
    Query q{"q1", "what about alpha", {}, ""};
    const auto docs = two_docs();
    const auto comp = teacher.make_comprehensive_doc(q, docs, {});
    ASSERT_TRUE(comp);
    EXPECT_EQ(comp->document.id, "comp:q1");
    const auto pur = teacher.make_purity_docs(q, Document{"d9", "fact u1: alpha colour red. fact u7: beta size small.", std::nullopt}, {});
    ASSERT_TRUE(pur && pur->dense && pur->sparse);
}

TEST(ApiKey, MissingKeyIsConfigError) {
    const char* old = std::getenv("FIGRET_API_KEY");
    std::string saved = old ? old : "";
    unsetenv("FIGRET_API_KEY");
    EXPECT_THROW(api_key_from_env(), ConfigError);
    setenv("FIGRET_API_KEY", "abc", 1);
    EXPECT_EQ(api_key_from_env(), "abc");
    if (old) setenv("FIGRET_API_KEY", saved.c_str(), 1);
    else unsetenv("FIGRET_API_KEY");
}
