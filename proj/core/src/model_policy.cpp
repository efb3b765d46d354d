#include "tas/model_policy.hpp"

#include "tas/text.hpp"

namespace tas {

std::string system_prompt(AgentMode mode) {
  std::string p =
      "You are a web research sub-agent working on one part of a shared table. "
      "Call exactly one tool per turn. Reply with plain text when you are done.\n";
  if (mode == AgentMode::ExpandRows) {
    p += "Goal: discover new candidate rows that satisfy every constraint column. "
         "Use append_rows with all key columns set; include constraint values you verified, "
         "each as {\"value\": ..., \"source_url\": ...}.";
  } else {
    p += "Goal: fill the empty cells of the target row listed in the task. "
         "Use fill_cells with a source_url you visited; list columns with no answer under not_applicable.";
  }
  return p;
}

namespace {

std::string describe_schema(const Schema& schema) {
  std::string out = "Columns:\n";
  for (const auto& c : schema.columns) {
    out += "- " + c.name + " (" + std::string(to_string(c.kind)) + ")";
    if (!c.description.empty()) out += ": " + c.description;
    out += "\n";
  }
  if (schema.target_count) out += "Target row count: " + std::to_string(*schema.target_count) + "\n";
  return out;
}

}  // namespace

std::vector<Message> ModelPolicy::build_messages(const AgentView& view) const {
  std::string task = "Task: " + view.task.instruction + "\n\n" + describe_schema(view.schema);
  if (view.task.mode == AgentMode::PopulateCells) {
    task += "Target columns:";
    for (const auto& c : view.task.target_columns) task += " " + c;
    task += "\n";
  }
  task += "\nCurrent table:\n" + render_markdown(view.schema, view.rows, static_cast<std::int64_t>(view.rows.size()));

  std::vector<Message> head{{Role::System, system_prompt(view.task.mode), std::nullopt, {}},
                            {Role::User, task, std::nullopt, {}}};
  std::vector<Message> tail;
  if (view.repair_hint) {
    tail.push_back({Role::User, "Your previous tool call was rejected (" + *view.repair_hint +
                                    "). Reply with one valid tool call.",
                    std::nullopt, {}});
  }
  const std::int64_t fixed = count_tokens_approx(head) + count_tokens_approx(tail);
  const std::int64_t room = provider_.config().max_context_tokens - fixed - reserve_tokens_;
  if (room <= 0 && !view.trajectory.empty()) {
    fail(ErrorCode::BudgetImpossible, "no context left for the trajectory");
  }
  std::vector<Message> out = head;
  if (!view.trajectory.empty()) {
    for (auto& m : trajectory_messages(compact_trajectory(view.trajectory, room))) out.push_back(std::move(m));
  }
  for (auto& m : tail) out.push_back(std::move(m));
  return out;
}

Decision ModelPolicy::decide(const AgentView& view) const {
  const AssistantTurn turn = provider_.complete(build_messages(view), tool_defs(view.task.mode));
  if (const auto* t = std::get_if<TextTurn>(&turn)) return Finish{t->content};
  const auto& calls = std::get<ToolCallsTurn>(turn);
  const ToolCall& c = calls.calls.front();
  return Action{c.name, c.arguments, calls.preamble};
}

bool model_judge_row(LlmProvider& provider, const Schema& schema, const Record& record) {
  std::string prompt = "Does this candidate satisfy every constraint? Answer yes or no.\n";
  for (const ColumnSpec* k : schema.key_columns()) {
    if (auto it = record.key.find(k->name); it != record.key.end()) prompt += k->name + ": " + it->second + "\n";
  }
  for (const ColumnSpec* c : schema.constraint_columns()) {
    const auto v = record.raw_value(c->name);
    prompt += c->name + " (" + c->description + "): " + v.value_or("") + "\n";
  }
  const AssistantTurn turn = provider.complete(
      {{Role::System, "You verify candidate answers against constraints.", std::nullopt, {}},
       {Role::User, prompt, std::nullopt, {}}},
      {});
  const auto* t = std::get_if<TextTurn>(&turn);
  if (t == nullptr) return false;
  const std::string reply = text::fold_case(text::trim(t->content));
  return reply.rfind("yes", 0) == 0;
}

}  // namespace tas
