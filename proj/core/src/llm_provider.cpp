#include "tas/llm_provider.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "tas/error.hpp"
#include "tas/text.hpp"

namespace tas {

using nlohmann::json;

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
  }
  return "user";
}

namespace {

bool json_type_matches(const std::string& type, const json& v) {
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "null") return v.is_null();
  return true;  // unknown type keywords are not enforced
}

void check_tool_messages(const std::vector<Message>& messages) {
  std::set<std::string> call_ids;
  for (const auto& m : messages) {
    if (m.role == Role::Assistant) {
      for (const auto& c : m.tool_calls) call_ids.insert(c.id);
    } else if (m.role == Role::Tool) {
      if (!m.tool_call_id || !call_ids.contains(*m.tool_call_id)) {
        fail(ErrorCode::PreconditionViolation, "tool message does not answer a prior tool call");
      }
    }
  }
}

void check_context(const ProviderConfig& config, const std::vector<Message>& messages) {
  const std::int64_t tokens = count_tokens_approx(messages);
  if (tokens > config.max_context_tokens) {
    fail(ErrorCode::ContextOverflow, std::to_string(tokens) + " tokens exceed the " +
                                         std::to_string(config.max_context_tokens) + " token context");
  }
}

void check_turn(const AssistantTurn& turn, const std::vector<ToolDef>& tools) {
  if (const auto* calls = std::get_if<ToolCallsTurn>(&turn)) {
    if (calls->calls.empty()) fail(ErrorCode::MalformedToolCall, "empty tool call list");
    for (const auto& c : calls->calls) validate_tool_call(c, tools);
  }
}

}  // namespace

ProviderConfig provider_config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidValue, "provider config must be an object");
  ProviderConfig c;
  const std::string kind = j.value("kind", "scripted");
  if (kind == "remote") c.kind = ProviderKind::Remote;
  else if (kind == "scripted") c.kind = ProviderKind::Scripted;
  else fail(ErrorCode::InvalidValue, "unknown provider kind '" + kind + "'");
  c.base_url = j.value("base_url", "");
  c.api_key_env = j.value("api_key_env", "");
  c.model = j.value("model", "");
  c.transcript_path = j.value("transcript_path", "");
  c.max_context_tokens = j.value("max_context_tokens", std::int64_t{65536});
  c.request_timeout_s = j.value("request_timeout", 60.0);
  c.max_retries = j.value("max_retries", 2);
  c.temperature = j.value("temperature", 0.0);
  c.backoff_base_ms = j.value("backoff_base_ms", 500);
  if (c.max_context_tokens <= 0) fail(ErrorCode::InvalidValue, "max_context_tokens must be positive");
  if (c.max_retries < 0) fail(ErrorCode::InvalidValue, "max_retries must be non-negative");
  return c;
}

ProviderConfig load_provider_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open provider config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidValue, "provider config '" + path.string() + "': " + e.what());
  }
  ProviderConfig c = provider_config_from_json(j);
  if (!c.transcript_path.empty() && c.transcript_path.is_relative()) {
    c.transcript_path = path.parent_path() / c.transcript_path;
  }
  return c;
}

std::int64_t count_tokens_approx(std::span<const Message> messages) {
  std::int64_t chars = 0;
  for (const auto& m : messages) {
    chars += static_cast<std::int64_t>(text::utf8_length(m.content));
    for (const auto& c : m.tool_calls) {
      chars += static_cast<std::int64_t>(text::utf8_length(c.name) + text::utf8_length(c.arguments.dump()));
    }
  }
  return (chars + 3) / 4 + 8 * static_cast<std::int64_t>(messages.size());
}

void validate_tool_call(const ToolCall& call, std::span<const ToolDef> tools) {
  const ToolDef* def = nullptr;
  for (const auto& t : tools) {
    if (t.name == call.name) def = &t;
  }
  if (def == nullptr) fail(ErrorCode::MalformedToolCall, "unknown tool '" + call.name + "'");
  if (!call.arguments.is_object()) fail(ErrorCode::MalformedToolCall, call.name + ": arguments must be an object");

  const json& schema = def->params_schema;
  if (!schema.is_object()) return;
  const json empty = json::object();
  const json& props = schema.contains("properties") ? schema["properties"] : empty;
  if (schema.contains("required")) {
    for (const auto& r : schema["required"]) {
      if (r.is_string() && !call.arguments.contains(r.get<std::string>())) {
        fail(ErrorCode::MalformedToolCall, call.name + ": missing required argument '" + r.get<std::string>() + "'");
      }
    }
  }
  const bool closed = schema.contains("additionalProperties") && schema["additionalProperties"] == false;
  for (const auto& [name, value] : call.arguments.items()) {
    if (!props.contains(name)) {
      if (closed) fail(ErrorCode::MalformedToolCall, call.name + ": unexpected argument '" + name + "'");
      continue;
    }
    const json& p = props[name];
    if (p.contains("type") && p["type"].is_string() && !json_type_matches(p["type"].get<std::string>(), value)) {
      fail(ErrorCode::MalformedToolCall,
           call.name + ": argument '" + name + "' must be " + p["type"].get<std::string>());
    }
  }
}

json to_json(const Message& m) {
  json j = {{"role", to_string(m.role)}, {"content", m.content}};
  if (m.tool_call_id) j["tool_call_id"] = *m.tool_call_id;
  if (!m.tool_calls.empty()) {
    json calls = json::array();
    for (const auto& c : m.tool_calls) calls.push_back({{"id", c.id}, {"name", c.name}, {"arguments", c.arguments}});
    j["tool_calls"] = std::move(calls);
  }
  return j;
}

std::string conversation_hash(std::span<const Message> messages) {
  json arr = json::array();
  for (const auto& m : messages) arr.push_back(to_json(m));
  return text::hex64(text::fnv1a64(arr.dump()));
}

json to_json(const AssistantTurn& t) {
  if (const auto* text_turn = std::get_if<TextTurn>(&t)) return {{"type", "text"}, {"content", text_turn->content}};
  const auto& calls = std::get<ToolCallsTurn>(t);
  json arr = json::array();
  for (const auto& c : calls.calls) arr.push_back({{"id", c.id}, {"name", c.name}, {"arguments", c.arguments}});
  json j = {{"type", "tool_calls"}, {"calls", std::move(arr)}};
  if (!calls.preamble.empty()) j["preamble"] = calls.preamble;
  return j;
}

AssistantTurn assistant_turn_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type")) fail(ErrorCode::InvalidValue, "assistant turn needs a 'type'");
  const std::string type = j["type"].get<std::string>();
  if (type == "text") return TextTurn{j.value("content", "")};
  if (type != "tool_calls") fail(ErrorCode::InvalidValue, "unknown turn type '" + type + "'");
  ToolCallsTurn t;
  t.preamble = j.value("preamble", "");
  for (const auto& c : j.at("calls")) {
    ToolCall call;
    call.id = c.value("id", "call_" + std::to_string(t.calls.size()));
    call.name = c.at("name").get<std::string>();
    call.arguments = c.value("arguments", json::object());
    t.calls.push_back(std::move(call));
  }
  return t;
}

std::vector<TranscriptEntry> transcript_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorCode::InvalidValue, "transcript must be a JSON list");
  std::vector<TranscriptEntry> out;
  for (const auto& e : j) {
    TranscriptEntry entry;
    const json& key = e.at("key");
    entry.conv_hash = key.at("conv_hash").get<std::string>();
    entry.step = key.at("step").get<std::int64_t>();
    entry.turn = assistant_turn_from_json(e.at("turn"));
    out.push_back(std::move(entry));
  }
  return out;
}

// ---- scripted ---------------------------------------------------------------

ScriptedProvider::ScriptedProvider(ProviderConfig config, std::vector<TranscriptEntry> entries)
    : config_(std::move(config)), entries_(std::move(entries)), consumed_(entries_.size(), false) {}

ScriptedProvider::ScriptedProvider(ProviderConfig config) : config_(std::move(config)) {
  std::ifstream in(config_.transcript_path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open transcript '" + config_.transcript_path.string() + "'");
  try {
    entries_ = transcript_from_json(json::parse(in));
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidValue, std::string("transcript: ") + e.what());
  }
  consumed_.assign(entries_.size(), false);
}

std::size_t ScriptedProvider::remaining() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count(consumed_.begin(), consumed_.end(), false));
}

AssistantTurn ScriptedProvider::complete(const std::vector<Message>& messages, const std::vector<ToolDef>& tools) {
  check_context(config_, messages);
  check_tool_messages(messages);
  std::int64_t step = 0;
  for (const auto& m : messages) step += m.role == Role::Assistant ? 1 : 0;
  const std::string hash = conversation_hash(messages);

  std::lock_guard lock(mutex_);
  std::optional<std::size_t> pick;
  for (std::size_t i = 0; i < entries_.size() && !pick; ++i) {
    if (!consumed_[i] && entries_[i].step == step && entries_[i].conv_hash == hash) pick = i;
  }
  for (std::size_t i = 0; i < entries_.size() && !pick; ++i) {
    if (!consumed_[i] && entries_[i].step == step && entries_[i].conv_hash == "*") pick = i;
  }
  if (!pick) {
    const bool any_left = std::find(consumed_.begin(), consumed_.end(), false) != consumed_.end();
    if (!any_left) fail(ErrorCode::TranscriptExhausted, "transcript has no entries left");
    fail(ErrorCode::TranscriptMismatch, "no transcript entry for (" + hash + ", " + std::to_string(step) + ")");
  }
  consumed_[*pick] = true;
  const AssistantTurn& turn = entries_[*pick].turn;
  check_turn(turn, tools);
  return turn;
}

// ---- remote -----------------------------------------------------------------

RemoteProvider::RemoteProvider(ProviderConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (!transport_) transport_ = make_curl_transport();
}

json RemoteProvider::build_request(const std::vector<Message>& messages, const std::vector<ToolDef>& tools) const {
  json msgs = json::array();
  for (const auto& m : messages) {
    json jm = {{"role", to_string(m.role)}, {"content", m.content}};
    if (m.tool_call_id) jm["tool_call_id"] = *m.tool_call_id;
    if (!m.tool_calls.empty()) {
      json calls = json::array();
      for (const auto& c : m.tool_calls) {
        calls.push_back({{"id", c.id},
                         {"type", "function"},
                         {"function", {{"name", c.name}, {"arguments", c.arguments.dump()}}}});
      }
      jm["tool_calls"] = std::move(calls);
    }
    msgs.push_back(std::move(jm));
  }
  json req = {{"model", config_.model}, {"messages", std::move(msgs)}, {"temperature", config_.temperature}};
  if (!tools.empty()) {
    json jt = json::array();
    for (const auto& t : tools) {
      jt.push_back({{"type", "function"},
                    {"function", {{"name", t.name}, {"description", t.description}, {"parameters", t.params_schema}}}});
    }
    req["tools"] = std::move(jt);
  }
  return req;
}

AssistantTurn RemoteProvider::parse_response(const json& body) {
  if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
    fail(ErrorCode::ProviderError, "response has no choices");
  }
  const json& msg = body["choices"][0].value("message", json::object());
  const std::string content = msg.contains("content") && msg["content"].is_string() ? msg["content"].get<std::string>() : "";
  if (msg.contains("tool_calls") && msg["tool_calls"].is_array() && !msg["tool_calls"].empty()) {
    ToolCallsTurn t;
    t.preamble = content;
    for (const auto& c : msg["tool_calls"]) {
      ToolCall call;
      call.id = c.value("id", "call_" + std::to_string(t.calls.size()));
      const json& fn = c.value("function", json::object());
      call.name = fn.value("name", "");
      const json& args = fn.contains("arguments") ? fn["arguments"] : json();
      if (args.is_string()) {
        try {
          call.arguments = json::parse(args.get<std::string>());
        } catch (const json::exception&) {
          fail(ErrorCode::MalformedToolCall, call.name + ": arguments are not valid JSON");
        }
      } else if (args.is_object()) {
        call.arguments = args;
      } else {
        fail(ErrorCode::MalformedToolCall, call.name + ": arguments missing");
      }
      t.calls.push_back(std::move(call));
    }
    return t;
  }
  return TextTurn{content};
}

AssistantTurn RemoteProvider::complete(const std::vector<Message>& messages, const std::vector<ToolDef>& tools) {
  check_context(config_, messages);
  check_tool_messages(messages);

  HttpRequest request;
  request.url = config_.base_url;
  const std::string suffix = "/chat/completions";
  if (request.url.size() < suffix.size() || request.url.compare(request.url.size() - suffix.size(), suffix.size(), suffix) != 0) {
    if (!request.url.empty() && request.url.back() == '/') request.url.pop_back();
    request.url += suffix;
  }
  request.headers["Content-Type"] = "application/json";
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) request.headers["Authorization"] = std::string("Bearer ") + key;
  }
  request.body = build_request(messages, tools).dump();
  request.timeout = std::chrono::milliseconds(static_cast<long long>(config_.request_timeout_s * 1000.0));

  bool last_timed_out = false;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0 && config_.backoff_base_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_base_ms << (attempt - 1)));
    }
    const HttpResponse response = transport_->post(request);
    if (response.timed_out || response.transport_error) {
      last_timed_out = response.timed_out;
      last_error = response.error;
      continue;
    }
    if (response.status == 429 || response.status >= 500) {
      last_timed_out = false;
      last_error = "HTTP " + std::to_string(response.status);
      continue;
    }
    if (response.status < 200 || response.status >= 300) {
      fail(ErrorCode::ProviderError, "HTTP " + std::to_string(response.status) + ": " + response.body);
    }
    json body;
    try {
      body = json::parse(response.body);
    } catch (const json::exception& e) {
      fail(ErrorCode::ProviderError, std::string("unparseable response: ") + e.what());
    }
    AssistantTurn turn = parse_response(body);
    check_turn(turn, tools);
    return turn;
  }
  const std::string detail = "gave up after " + std::to_string(config_.max_retries + 1) + " attempts: " + last_error;
  fail(last_timed_out ? ErrorCode::ProviderTimeout : ErrorCode::ProviderError, detail);
}

std::unique_ptr<LlmProvider> make_provider(const ProviderConfig& config, std::shared_ptr<HttpTransport> transport) {
  if (config.kind == ProviderKind::Scripted) return std::make_unique<ScriptedProvider>(config);
  return std::make_unique<RemoteProvider>(config, std::move(transport));
}

}  // namespace tas
