#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tas/http.hpp"

namespace tas {

enum class Role { System, User, Assistant, Tool };
std::string_view to_string(Role role) noexcept;

struct ToolCall {
  std::string id;
  std::string name;
  nlohmann::json arguments = nlohmann::json::object();

  bool operator==(const ToolCall&) const = default;
};

struct Message {
  Role role = Role::User;
  std::string content;
  std::optional<std::string> tool_call_id;  // Tool role only
  std::vector<ToolCall> tool_calls;         // Assistant role only

  bool operator==(const Message&) const = default;
};

struct ToolDef {
  std::string name;
  std::string description;
  nlohmann::json params_schema = nlohmann::json::object();
};

struct TextTurn {
  std::string content;
  bool operator==(const TextTurn&) const = default;
};

struct ToolCallsTurn {
  std::vector<ToolCall> calls;  // never empty
  std::string preamble;         // optional thought text
  bool operator==(const ToolCallsTurn&) const = default;
};

using AssistantTurn = std::variant<TextTurn, ToolCallsTurn>;

enum class ProviderKind { Remote, Scripted };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::Scripted;
  std::string base_url;
  std::string api_key_env;
  std::string model;
  std::filesystem::path transcript_path;
  std::int64_t max_context_tokens = 65536;
  double request_timeout_s = 60.0;
  int max_retries = 2;
  double temperature = 0.0;
  int backoff_base_ms = 500;
};

ProviderConfig provider_config_from_json(const nlohmann::json& j);
ProviderConfig load_provider_config(const std::filesystem::path& path);

// ceil(total characters / 4) + 8 per message. Assistant tool calls count
// their name and serialized arguments as content.
std::int64_t count_tokens_approx(std::span<const Message> messages);

// Structural check of a call against the named tool's params_schema
// (object type, required properties, property types, additionalProperties).
// Throws MalformedToolCall.
void validate_tool_call(const ToolCall& call, std::span<const ToolDef> tools);

// Hex FNV-1a over the canonical JSON rendering of the conversation.
std::string conversation_hash(std::span<const Message> messages);

nlohmann::json to_json(const Message& m);
nlohmann::json to_json(const AssistantTurn& t);
AssistantTurn assistant_turn_from_json(const nlohmann::json& j);

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual AssistantTurn complete(const std::vector<Message>& messages, const std::vector<ToolDef>& tools) = 0;
  virtual const ProviderConfig& config() const = 0;
};

struct TranscriptEntry {
  std::string conv_hash;  // "*" matches any conversation
  std::int64_t step = 0;  // number of assistant messages already in the conversation
  AssistantTurn turn;
};

std::vector<TranscriptEntry> transcript_from_json(const nlohmann::json& j);

// Replays a recorded transcript. Each entry is consumed at most once; calls
// are serialized so concurrent callers see a consistent order.
class ScriptedProvider final : public LlmProvider {
 public:
  ScriptedProvider(ProviderConfig config, std::vector<TranscriptEntry> entries);
  explicit ScriptedProvider(ProviderConfig config);  // reads config.transcript_path

  AssistantTurn complete(const std::vector<Message>& messages, const std::vector<ToolDef>& tools) override;
  const ProviderConfig& config() const override { return config_; }
  std::size_t remaining() const;

 private:
  ProviderConfig config_;
  std::vector<TranscriptEntry> entries_;
  std::vector<bool> consumed_;
  mutable std::mutex mutex_;
};

// Chat-completions client: {model, messages, tools, temperature} over HTTPS.
// Transient failures (timeouts, connection errors, 429, 5xx) are retried up
// to max_retries times with exponential backoff.
class RemoteProvider final : public LlmProvider {
 public:
  RemoteProvider(ProviderConfig config, std::shared_ptr<HttpTransport> transport);

  AssistantTurn complete(const std::vector<Message>& messages, const std::vector<ToolDef>& tools) override;
  const ProviderConfig& config() const override { return config_; }

  nlohmann::json build_request(const std::vector<Message>& messages, const std::vector<ToolDef>& tools) const;
  static AssistantTurn parse_response(const nlohmann::json& body);

 private:
  ProviderConfig config_;
  std::shared_ptr<HttpTransport> transport_;
};

std::unique_ptr<LlmProvider> make_provider(const ProviderConfig& config,
                                           std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace tas
