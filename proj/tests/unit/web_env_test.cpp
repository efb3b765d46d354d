#include <gtest/gtest.h>

#include "tas/error.hpp"
#include "tas/web_env.hpp"
#include "tas_test/fixtures.hpp"

using namespace tas;
using nlohmann::json;

namespace {

Corpus small() {
  return corpus_from_json({{"max_doc_chars", 100},
                           {"documents",
                            {{{"url", "b"}, {"title", "Beta"}, {"text", "alpha beta"}},
                             {{"url", "a"}, {"title", "Alpha"}, {"text", "alpha gamma"}},
                             {{"url", "c"}, {"title", "Other"}, {"text", "delta"}, {"fields", {{"K", "v"}}}}}}});
}

}  // namespace

TEST(Corpus, LoadsFixtures) {
  EXPECT_EQ(tas_test::fixture_corpus("ted")->documents().size(), 14u);
  EXPECT_EQ(small().documents().size(), 3u);
}

TEST(Corpus, EmptyListIsValid) {
  const Corpus c = corpus_from_json({{"max_doc_chars", 10}, {"documents", json::array()}});
  EXPECT_TRUE(c.search("anything", 5).empty());
}

TEST(Corpus, DuplicateUrl) {
  try {
    corpus_from_json({{"max_doc_chars", 10},
                      {"documents", {{{"url", "a"}, {"title", ""}, {"text", ""}}, {{"url", "a"}, {"title", ""}, {"text", ""}}}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateUrl);
  }
}

TEST(Corpus, SchemaViolations) {
  EXPECT_THROW(corpus_from_json({{"documents", json::array()}}), Error);
  EXPECT_THROW(corpus_from_json({{"max_doc_chars", 3}, {"documents", {{{"url", "a"}, {"title", ""}, {"text", "toolong"}}}}}),
               Error);
  EXPECT_THROW(load_corpus("/nonexistent/corpus.json"), Error);
}

TEST(Search, TedPrize2009FindsTheWinnerFirst) {
  const auto results = tas_test::fixture_corpus("ted")->search("TED Prize 2009", 5);
  ASSERT_FALSE(results.empty());
  EXPECT_EQ(results[0].url, "https://fixtures.example/ted/prize-2009-sylvia-earle");
  EXPECT_DOUBLE_EQ(results[0].score, 1.0);
  EXPECT_LT(results[1].score, 1.0);
}

TEST(Search, TiesBreakByUrlAndZeroScoresDrop) {
  const auto r = small().search("alpha", 10);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].url, "a");
  EXPECT_EQ(r[1].url, "b");
  EXPECT_TRUE(small().search("zeta", 10).empty());
  EXPECT_EQ(small().search("alpha", 1).size(), 1u);
}

TEST(Search, ScoreIsFractionOfDistinctQueryTerms) {
  const auto r = small().search("alpha alpha gamma zeta", 10);
  EXPECT_DOUBLE_EQ(r[0].score, 2.0 / 3.0);
  EXPECT_EQ(r[0].url, "a");
  EXPECT_DOUBLE_EQ(r[1].score, 1.0 / 3.0);
}

TEST(Search, UnrelatedDocumentDoesNotChangeScores) {
  const auto before = small().search("alpha gamma", 10);
  const Corpus bigger = corpus_from_json({{"max_doc_chars", 100},
                                          {"documents",
                                           {{{"url", "b"}, {"title", "Beta"}, {"text", "alpha beta"}},
                                            {{"url", "a"}, {"title", "Alpha"}, {"text", "alpha gamma"}},
                                            {{"url", "z"}, {"title", "Zed"}, {"text", "unrelated"}}}}});
  EXPECT_EQ(bigger.search("alpha gamma", 10), before);
}

TEST(Search, SnippetIsFirst200CodePoints) {
  std::string text(150, 'x');
  text += std::string(100, 'y') + " needle";
  const Corpus c = corpus_from_json({{"max_doc_chars", 1000}, {"documents", {{{"url", "u"}, {"title", "t"}, {"text", text}}}}});
  EXPECT_EQ(c.search("needle", 1)[0].snippet.size(), 200u);
}

TEST(Visit, TruncatesWithMarker) {
  const Corpus c = small();
  EXPECT_EQ(c.visit("a", 100), "alpha gamma");
  EXPECT_EQ(c.visit("a", 5), "alpha" + std::string(kTruncationMarker));
  try {
    c.visit("missing", 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PageNotFound);
  }
}

TEST(Document, FieldLookupIgnoresCase) {
  const Corpus c = small();
  ASSERT_NE(c.find("c")->field("k"), nullptr);
  EXPECT_EQ(*c.find("c")->field("k"), "v");
}

TEST(RemoteWebEnv, UsesTransport) {
  struct Fake : HttpTransport {
    HttpResponse post(const HttpRequest& r) override {
      HttpResponse resp;
      resp.status = 200;
      if (r.url.ends_with("/search")) {
        resp.body = json{{"results", {{{"url", "u"}, {"title", "t"}, {"snippet", "s"}, {"score", 0.5}}}}}.dump();
      } else {
        resp.body = json{{"text", "0123456789"}}.dump();
      }
      return resp;
    }
  };
  RemoteWebEnv env({"https://search.example", "", 1.0}, std::make_shared<Fake>());
  EXPECT_EQ(env.search("q", 3)[0].url, "u");
  EXPECT_EQ(env.visit("u", 4), "0123" + std::string(kTruncationMarker));
}
