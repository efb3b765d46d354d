#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "tas/http.hpp"

namespace tas {

struct Document {
  std::string url;
  std::string title;
  std::string text;
  std::map<std::string, std::string> fields;  // structured facts, may be empty

  // Case-insensitive field lookup.
  const std::string* field(std::string_view name) const;
};

struct SearchResult {
  std::string url;
  std::string title;
  std::string snippet;  // first 200 code points of text
  double score = 0.0;   // matched query terms / distinct query terms

  bool operator==(const SearchResult&) const = default;
};

inline constexpr std::string_view kTruncationMarker = "…[truncated]";
inline constexpr std::size_t kSnippetChars = 200;

// Immutable after construction; safe for concurrent readers.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Document> documents, std::int64_t max_doc_chars);

  const std::vector<Document>& documents() const noexcept { return documents_; }
  std::int64_t max_doc_chars() const noexcept { return max_doc_chars_; }
  const Document* find(std::string_view url) const;

  std::vector<SearchResult> search(std::string_view query, std::int64_t top_k) const;
  std::string visit(std::string_view url, std::size_t max_chars) const;

 private:
  std::vector<Document> documents_;
  std::vector<std::set<std::string>> terms_;
  std::unordered_map<std::string, std::size_t> by_url_;
  std::int64_t max_doc_chars_ = 1;
};

// {max_doc_chars, documents: [{url, title, text, fields?}]}
Corpus corpus_from_json(const nlohmann::json& j);
Corpus load_corpus(const std::filesystem::path& path);

// Tool backend seen by sub-agents.
class WebEnv {
 public:
  virtual ~WebEnv() = default;
  virtual std::vector<SearchResult> search(std::string_view query, std::int64_t top_k) const = 0;
  virtual std::string visit(std::string_view url, std::size_t max_chars) const = 0;
};

class CorpusEnv final : public WebEnv {
 public:
  explicit CorpusEnv(std::shared_ptr<const Corpus> corpus) : corpus_(std::move(corpus)) {}

  std::vector<SearchResult> search(std::string_view query, std::int64_t top_k) const override {
    return corpus_->search(query, top_k);
  }
  std::string visit(std::string_view url, std::size_t max_chars) const override {
    return corpus_->visit(url, max_chars);
  }
  const Corpus& corpus() const noexcept { return *corpus_; }

 private:
  std::shared_ptr<const Corpus> corpus_;
};

// Sleeps before delegating. Used to exercise wall-clock limits.
class SlowEnv final : public WebEnv {
 public:
  SlowEnv(std::shared_ptr<const WebEnv> inner, std::chrono::milliseconds delay)
      : inner_(std::move(inner)), delay_(delay) {}

  std::vector<SearchResult> search(std::string_view query, std::int64_t top_k) const override;
  std::string visit(std::string_view url, std::size_t max_chars) const override;

 private:
  std::shared_ptr<const WebEnv> inner_;
  std::chrono::milliseconds delay_;
};

struct RemoteWebConfig {
  std::string base_url;
  std::string api_key_env;
  double timeout_s = 30.0;
};

// POST {base_url}/search {query, top_k} -> {results: [SearchResult]}
// POST {base_url}/visit  {url, max_chars} -> {text}
class RemoteWebEnv final : public WebEnv {
 public:
  RemoteWebEnv(RemoteWebConfig config, std::shared_ptr<HttpTransport> transport);

  std::vector<SearchResult> search(std::string_view query, std::int64_t top_k) const override;
  std::string visit(std::string_view url, std::size_t max_chars) const override;

 private:
  nlohmann::json call(const std::string& path, const nlohmann::json& body) const;

  RemoteWebConfig config_;
  std::shared_ptr<HttpTransport> transport_;
};

// Plain-text rendering of a result list, used as a tool observation.
std::string render_search_results(const std::vector<SearchResult>& results);

nlohmann::json to_json(const SearchResult& r);

}  // namespace tas
