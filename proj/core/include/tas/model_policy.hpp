#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tas/agents.hpp"
#include "tas/llm_provider.hpp"

namespace tas {

// Sub-agent policy backed by a chat model. A text reply means Finish; a
// tool-call reply becomes the next action (only the first call is used).
class ModelPolicy final : public AgentPolicy {
 public:
  explicit ModelPolicy(LlmProvider& provider, std::int64_t reserve_tokens = 1024)
      : provider_(provider), reserve_tokens_(reserve_tokens) {}

  Decision decide(const AgentView& view) const override;

  // Conversation sent for `view`, with the trajectory compacted to fit the
  // provider context minus the reserve.
  std::vector<Message> build_messages(const AgentView& view) const;

 private:
  LlmProvider& provider_;
  std::int64_t reserve_tokens_;
};

std::string system_prompt(AgentMode mode);

// Asks the model whether `record` satisfies every constraint column.
// The reply must start with "yes" (case-insensitive) to count as a pass.
bool model_judge_row(LlmProvider& provider, const Schema& schema, const Record& record);

}  // namespace tas
