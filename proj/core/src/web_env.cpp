#include "tas/web_env.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "tas/error.hpp"
#include "tas/text.hpp"

namespace tas {

using nlohmann::json;

const std::string* Document::field(std::string_view name) const {
  if (auto it = fields.find(std::string(name)); it != fields.end()) return &it->second;
  const std::string folded = text::fold_case(name);
  for (const auto& [k, v] : fields) {
    if (text::fold_case(k) == folded) return &v;
  }
  return nullptr;
}

Corpus::Corpus(std::vector<Document> documents, std::int64_t max_doc_chars)
    : documents_(std::move(documents)), max_doc_chars_(max_doc_chars) {
  if (max_doc_chars_ <= 0) fail(ErrorCode::SchemaViolation, "max_doc_chars must be positive");
  terms_.reserve(documents_.size());
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const Document& d = documents_[i];
    if (d.url.empty()) fail(ErrorCode::SchemaViolation, "document " + std::to_string(i) + " has an empty url");
    if (static_cast<std::int64_t>(text::utf8_length(d.text)) > max_doc_chars_) {
      fail(ErrorCode::SchemaViolation, "document '" + d.url + "' exceeds max_doc_chars");
    }
    if (!by_url_.emplace(d.url, i).second) fail(ErrorCode::DuplicateUrl, d.url);
    auto tokens = text::tokenize(d.title + " " + d.text);
    terms_.emplace_back(tokens.begin(), tokens.end());
  }
}

const Document* Corpus::find(std::string_view url) const {
  auto it = by_url_.find(std::string(url));
  return it == by_url_.end() ? nullptr : &documents_[it->second];
}

std::vector<SearchResult> Corpus::search(std::string_view query, std::int64_t top_k) const {
  if (top_k < 1) fail(ErrorCode::PreconditionViolation, "top_k must be at least 1");
  const auto tokens = text::tokenize(query);
  const std::set<std::string> q(tokens.begin(), tokens.end());
  std::vector<SearchResult> out;
  if (q.empty()) return out;
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    std::size_t hits = 0;
    for (const auto& t : q) hits += terms_[i].count(t);
    if (hits == 0) continue;
    const Document& d = documents_[i];
    out.push_back({d.url, d.title, std::string(text::utf8_prefix(d.text, kSnippetChars)),
                   static_cast<double>(hits) / static_cast<double>(q.size())});
  }
  std::sort(out.begin(), out.end(), [](const SearchResult& a, const SearchResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.url < b.url;
  });
  if (static_cast<std::int64_t>(out.size()) > top_k) out.resize(static_cast<std::size_t>(top_k));
  return out;
}

std::string Corpus::visit(std::string_view url, std::size_t max_chars) const {
  const Document* d = find(url);
  if (d == nullptr) fail(ErrorCode::PageNotFound, std::string(url));
  if (text::utf8_length(d->text) <= max_chars) return d->text;
  std::string out(text::utf8_prefix(d->text, max_chars));
  out += kTruncationMarker;
  return out;
}

Corpus corpus_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::SchemaViolation, "corpus must be a JSON object");
  if (!j.contains("max_doc_chars") || !j["max_doc_chars"].is_number_integer()) {
    fail(ErrorCode::SchemaViolation, "corpus needs an integer max_doc_chars");
  }
  if (!j.contains("documents") || !j["documents"].is_array()) {
    fail(ErrorCode::SchemaViolation, "corpus needs a documents list");
  }
  std::vector<Document> docs;
  for (const auto& d : j["documents"]) {
    if (!d.is_object()) fail(ErrorCode::SchemaViolation, "document must be an object");
    Document doc;
    for (const char* key : {"url", "title", "text"}) {
      if (!d.contains(key) || !d[key].is_string()) {
        fail(ErrorCode::SchemaViolation, std::string("document field '") + key + "' must be a string");
      }
    }
    doc.url = d["url"].get<std::string>();
    doc.title = d["title"].get<std::string>();
    doc.text = d["text"].get<std::string>();
    if (d.contains("fields")) {
      if (!d["fields"].is_object()) fail(ErrorCode::SchemaViolation, "'fields' must be an object");
      for (const auto& [k, v] : d["fields"].items()) {
        if (!v.is_string()) fail(ErrorCode::SchemaViolation, "field '" + k + "' must be a string");
        doc.fields[k] = v.get<std::string>();
      }
    }
    docs.push_back(std::move(doc));
  }
  return Corpus(std::move(docs), j["max_doc_chars"].get<std::int64_t>());
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open corpus '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaViolation, "corpus '" + path.string() + "': " + e.what());
  }
  return corpus_from_json(j);
}

std::vector<SearchResult> SlowEnv::search(std::string_view query, std::int64_t top_k) const {
  std::this_thread::sleep_for(delay_);
  return inner_->search(query, top_k);
}

std::string SlowEnv::visit(std::string_view url, std::size_t max_chars) const {
  std::this_thread::sleep_for(delay_);
  return inner_->visit(url, max_chars);
}

RemoteWebEnv::RemoteWebEnv(RemoteWebConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (!transport_) transport_ = make_curl_transport();
}

json RemoteWebEnv::call(const std::string& path, const json& body) const {
  HttpRequest req;
  req.url = config_.base_url;
  if (!req.url.empty() && req.url.back() == '/') req.url.pop_back();
  req.url += path;
  req.headers["Content-Type"] = "application/json";
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) req.headers["Authorization"] = std::string("Bearer ") + key;
  }
  req.body = body.dump();
  req.timeout = std::chrono::milliseconds(static_cast<long long>(config_.timeout_s * 1000.0));
  const HttpResponse resp = transport_->post(req);
  if (resp.timed_out || resp.transport_error) fail(ErrorCode::IoFailure, path + ": " + resp.error);
  if (resp.status == 404) fail(ErrorCode::PageNotFound, body.value("url", path));
  if (resp.status < 200 || resp.status >= 300) fail(ErrorCode::IoFailure, path + ": HTTP " + std::to_string(resp.status));
  try {
    return json::parse(resp.body);
  } catch (const json::exception& e) {
    fail(ErrorCode::IoFailure, path + ": " + e.what());
  }
}

std::vector<SearchResult> RemoteWebEnv::search(std::string_view query, std::int64_t top_k) const {
  if (top_k < 1) fail(ErrorCode::PreconditionViolation, "top_k must be at least 1");
  const json body = call("/search", {{"query", query}, {"top_k", top_k}});
  std::vector<SearchResult> out;
  for (const auto& r : body.value("results", json::array())) {
    out.push_back({r.value("url", ""), r.value("title", ""), r.value("snippet", ""), r.value("score", 0.0)});
  }
  if (static_cast<std::int64_t>(out.size()) > top_k) out.resize(static_cast<std::size_t>(top_k));
  return out;
}

std::string RemoteWebEnv::visit(std::string_view url, std::size_t max_chars) const {
  const json body = call("/visit", {{"url", url}, {"max_chars", max_chars}});
  std::string page = body.value("text", "");
  if (text::utf8_length(page) > max_chars) {
    page = std::string(text::utf8_prefix(page, max_chars)) + std::string(kTruncationMarker);
  }
  return page;
}

std::string render_search_results(const std::vector<SearchResult>& results) {
  if (results.empty()) return "No results.";
  std::string out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    char score[32];
    std::snprintf(score, sizeof score, "%.3f", r.score);
    out += std::to_string(i + 1) + ". " + r.title + "\n   " + r.url + " (score " + score + ")\n   " + r.snippet + "\n";
  }
  return out;
}

json to_json(const SearchResult& r) {
  return {{"url", r.url}, {"title", r.title}, {"snippet", r.snippet}, {"score", r.score}};
}

}  // namespace tas
