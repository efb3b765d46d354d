#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tas/error.hpp"
#include "tas/llm_provider.hpp"
#include "tas/schema.hpp"
#include "tas/table_store.hpp"
#include "tas/web_env.hpp"

namespace tas {

enum class AgentMode { ExpandRows, PopulateCells };
std::string_view to_string(AgentMode mode) noexcept;

struct SubBudget {
  std::int64_t max_steps = 12;
  std::int64_t max_tool_calls = 12;
};

struct SubAgentTask {
  AgentMode mode = AgentMode::ExpandRows;
  std::string instruction;
  TableId table_id;
  std::optional<RecordId> target_record_id;  // PopulateCells only
  std::vector<std::string> target_columns;   // PopulateCells only
  SubBudget budget;
};

// Throws PreconditionViolation when the mode-specific fields are inconsistent.
void validate_task(const SubAgentTask& task);

struct Action {
  std::string tool;
  nlohmann::json arguments = nlohmann::json::object();
  std::string thought;
};

struct Finish {
  std::string summary;
};

using Decision = std::variant<Action, Finish>;

struct TrajectoryStep {
  std::string thought;
  std::string tool;
  nlohmann::json arguments;
  std::string observation;
};

using Trajectory = std::vector<TrajectoryStep>;

enum class Termination { Completed, BudgetExhausted, Error };
std::string_view to_string(Termination t) noexcept;

struct SubAgentReport {
  AgentMode mode = AgentMode::ExpandRows;
  std::int64_t rows_added = 0;
  std::int64_t cells_filled = 0;
  std::vector<std::string> evidence_urls;
  std::int64_t steps_used = 0;
  std::int64_t tool_calls = 0;
  Termination terminated = Termination::Completed;
  std::string error;  // set when terminated == Error
  Trajectory trajectory;
};

nlohmann::json to_json(const SubAgentReport& r);

// What the policy sees at each step. ExpandRows agents see every row;
// PopulateCells agents see only their target row.
struct AgentView {
  const SubAgentTask& task;
  const Schema& schema;
  const Trajectory& trajectory;
  const std::vector<Record>& rows;
  std::optional<std::string> repair_hint;  // set when the previous decision was rejected
};

// Implementations must be safe to call from several threads at once.
class AgentPolicy {
 public:
  virtual ~AgentPolicy() = default;
  virtual Decision decide(const AgentView& view) const = 0;
};

// Raised when a policy produces two malformed decisions in a row.
class PolicyFailureError : public Error {
 public:
  PolicyFailureError(const std::string& detail, SubAgentReport partial)
      : Error(ErrorCode::PolicyFailure, detail), partial_(std::move(partial)) {}
  const SubAgentReport& partial() const noexcept { return partial_; }

 private:
  SubAgentReport partial_;
};

// Tool definitions offered in each mode: search and visit always, plus
// append_rows (ExpandRows) or fill_cells (PopulateCells).
std::vector<ToolDef> tool_defs(AgentMode mode);

inline constexpr std::int64_t kDefaultTopK = 10;
inline constexpr std::size_t kDefaultVisitChars = 4000;

struct RunOptions {
  std::optional<std::chrono::steady_clock::time_point> deadline;
  std::int64_t planner_step = 0;  // stamped on Filled cells as filled_at_step
};

// Bounded ReAct loop: one tool call per step, tool errors become
// "ERROR: <Code>: <detail>" observations.
SubAgentReport run_sub_agent(const SubAgentTask& task, const AgentPolicy& policy, const WebEnv& env,
                             TableStore& store, const RunOptions& options = {});

// "<key values in schema order> <columns>", joined by single spaces.
// PreconditionViolation when `columns` is empty.
std::string make_row_query(const Schema& schema, const Record& record, const std::vector<std::string>& columns);

inline constexpr std::string_view kElided = "[observation elided]";

// Chat rendering of a trajectory: an assistant tool call and a tool reply per step.
std::vector<Message> trajectory_messages(const Trajectory& trajectory);

// Replaces the oldest observations with kElided until the rendered
// trajectory fits max_tokens. BudgetImpossible if the skeleton alone does not.
Trajectory compact_trajectory(const Trajectory& trajectory, std::int64_t max_tokens);

}  // namespace tas
