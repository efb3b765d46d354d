#include <gtest/gtest.h>

#include <deque>

#include "tas/error.hpp"
#include "tas/llm_provider.hpp"

using namespace tas;
using nlohmann::json;

namespace {

std::vector<ToolDef> tools() {
  return {{"search", "",
           {{"type", "object"},
            {"properties", {{"query", {{"type", "string"}}}, {"top_k", {{"type", "integer"}}}}},
            {"required", {"query"}},
            {"additionalProperties", false}}}};
}

std::vector<Message> convo() {
  return {{Role::System, "sys", std::nullopt, {}}, {Role::User, "find things", std::nullopt, {}}};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::PreconditionViolation;
}

class FakeTransport : public HttpTransport {
 public:
  std::deque<HttpResponse> replies;
  std::vector<HttpRequest> seen;
  HttpResponse post(const HttpRequest& r) override {
    seen.push_back(r);
    HttpResponse resp = replies.front();
    replies.pop_front();
    return resp;
  }
};

HttpResponse ok(const json& message) {
  HttpResponse r;
  r.status = 200;
  r.body = json{{"choices", {{{"message", message}}}}}.dump();
  return r;
}

ProviderConfig remote_config() {
  ProviderConfig c;
  c.kind = ProviderKind::Remote;
  c.base_url = "https://llm.example/v1";
  c.model = "m";
  c.backoff_base_ms = 0;
  return c;
}

}  // namespace

TEST(Tokens, CeilCharsOverFourPlusEightPerMessage) {
  std::vector<Message> m{{Role::User, "abcde", std::nullopt, {}}};
  EXPECT_EQ(count_tokens_approx(m), 2 + 8);
  m.push_back({Role::User, "", std::nullopt, {}});
  EXPECT_EQ(count_tokens_approx(m), 2 + 16);
}

TEST(ToolValidation, ChecksRequiredTypesAndExtras) {
  const auto t = tools();
  EXPECT_NO_THROW(validate_tool_call({"1", "search", {{"query", "x"}}}, t));
  EXPECT_EQ(code_of([&] { validate_tool_call({"1", "search", json::object()}, t); }), ErrorCode::MalformedToolCall);
  EXPECT_EQ(code_of([&] { validate_tool_call({"1", "search", {{"query", 3}}}, t); }), ErrorCode::MalformedToolCall);
  EXPECT_EQ(code_of([&] { validate_tool_call({"1", "search", {{"query", "x"}, {"extra", 1}}}, t); }),
            ErrorCode::MalformedToolCall);
  EXPECT_EQ(code_of([&] { validate_tool_call({"1", "browse", {{"query", "x"}}}, t); }), ErrorCode::MalformedToolCall);
}

TEST(ConversationHash, StableAndSensitive) {
  auto a = convo();
  EXPECT_EQ(conversation_hash(a), conversation_hash(convo()));
  a[1].content = "find other things";
  EXPECT_NE(conversation_hash(a), conversation_hash(convo()));
}

TEST(Scripted, ReplaysByHashAndStep) {
  const std::string h = conversation_hash(convo());
  ScriptedProvider p(ProviderConfig{}, {{h, 0, ToolCallsTurn{{{"c1", "search", {{"query", "x"}}}}, ""}},
                                        {"*", 0, TextTurn{"fallback"}}});
  const auto t1 = p.complete(convo(), tools());
  ASSERT_TRUE(std::holds_alternative<ToolCallsTurn>(t1));
  const auto t2 = p.complete(convo(), tools());
  EXPECT_EQ(std::get<TextTurn>(t2).content, "fallback");
  EXPECT_EQ(p.remaining(), 0u);
  EXPECT_EQ(code_of([&] { p.complete(convo(), tools()); }), ErrorCode::TranscriptExhausted);
}

TEST(Scripted, MismatchIsLoud) {
  ScriptedProvider p(ProviderConfig{}, {{"deadbeef", 0, TextTurn{"x"}}});
  EXPECT_EQ(code_of([&] { p.complete(convo(), tools()); }), ErrorCode::TranscriptMismatch);
}

TEST(Scripted, ValidatesToolCalls) {
  ScriptedProvider p(ProviderConfig{}, {{"*", 0, ToolCallsTurn{{{"c1", "search", {{"q", "x"}}}}, ""}}});
  EXPECT_EQ(code_of([&] { p.complete(convo(), tools()); }), ErrorCode::MalformedToolCall);
}

TEST(Scripted, ContextOverflow) {
  ProviderConfig c;
  c.max_context_tokens = 10;
  ScriptedProvider p(c, {{"*", 0, TextTurn{"x"}}});
  EXPECT_EQ(code_of([&] { p.complete(convo(), tools()); }), ErrorCode::ContextOverflow);
}

TEST(Scripted, TranscriptJson) {
  const json j = json::array({{{"key", {{"conv_hash", "*"}, {"step", 1}}},
                               {"turn", {{"type", "tool_calls"}, {"calls", {{{"name", "search"}, {"arguments", {{"query", "q"}}}}}}}}}});
  const auto entries = transcript_from_json(j);
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].step, 1);
  EXPECT_EQ(std::get<ToolCallsTurn>(entries[0].turn).calls[0].name, "search");
  EXPECT_EQ(assistant_turn_from_json(to_json(entries[0].turn)), entries[0].turn);
}

TEST(Remote, BuildsChatCompletionRequest) {
  auto transport = std::make_shared<FakeTransport>();
  transport->replies.push_back(ok({{"content", "done"}}));
  RemoteProvider p(remote_config(), transport);
  const auto turn = p.complete(convo(), tools());
  EXPECT_EQ(std::get<TextTurn>(turn).content, "done");
  ASSERT_EQ(transport->seen.size(), 1u);
  EXPECT_EQ(transport->seen[0].url, "https://llm.example/v1/chat/completions");
  const json body = json::parse(transport->seen[0].body);
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["tools"][0]["function"]["name"], "search");
}

TEST(Remote, ParsesToolCalls) {
  const json msg = {{"content", nullptr},
                    {"tool_calls", {{{"id", "a"}, {"function", {{"name", "search"}, {"arguments", "{\"query\":\"x\"}"}}}}}}};
  const auto turn = RemoteProvider::parse_response({{"choices", {{{"message", msg}}}}});
  const auto& calls = std::get<ToolCallsTurn>(turn).calls;
  EXPECT_EQ(calls[0].arguments["query"], "x");
  const json bad_call = {{"function", {{"name", "s"}, {"arguments", "{bad"}}}};
  const json bad = {{"choices", json::array({{{"message", {{"tool_calls", json::array({bad_call})}}}}})}};
  EXPECT_EQ(code_of([&] { RemoteProvider::parse_response(bad); }),
            ErrorCode::MalformedToolCall);
}

TEST(Remote, RetriesTransientFailures) {
  auto transport = std::make_shared<FakeTransport>();
  HttpResponse busy;
  busy.status = 503;
  transport->replies = {busy, busy, ok({{"content", "ok"}})};
  RemoteProvider p(remote_config(), transport);
  EXPECT_EQ(std::get<TextTurn>(p.complete(convo(), tools())).content, "ok");
  EXPECT_EQ(transport->seen.size(), 3u);
}

TEST(Remote, TimeoutAfterRetriesExhausted) {
  auto transport = std::make_shared<FakeTransport>();
  HttpResponse slow;
  slow.timed_out = true;
  transport->replies = {slow, slow, slow};
  RemoteProvider p(remote_config(), transport);
  EXPECT_EQ(code_of([&] { p.complete(convo(), tools()); }), ErrorCode::ProviderTimeout);
  EXPECT_EQ(transport->seen.size(), 3u);
}

TEST(Remote, ClientErrorIsNotRetried) {
  auto transport = std::make_shared<FakeTransport>();
  HttpResponse bad;
  bad.status = 400;
  transport->replies = {bad};
  RemoteProvider p(remote_config(), transport);
  EXPECT_EQ(code_of([&] { p.complete(convo(), tools()); }), ErrorCode::ProviderError);
}

TEST(ProviderConfig, ParsesKinds) {
  const auto c = provider_config_from_json({{"kind", "remote"}, {"base_url", "u"}, {"max_retries", 4}});
  EXPECT_EQ(c.kind, ProviderKind::Remote);
  EXPECT_EQ(c.max_retries, 4);
  EXPECT_EQ(c.temperature, 0.0);
  EXPECT_THROW(provider_config_from_json({{"kind", "magic"}}), Error);
}
