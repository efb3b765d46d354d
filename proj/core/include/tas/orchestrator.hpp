#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tas/agents.hpp"
#include "tas/answer.hpp"
#include "tas/llm_provider.hpp"
#include "tas/schema.hpp"
#include "tas/table_store.hpp"
#include "tas/web_env.hpp"

namespace tas {

struct Budget {
  std::int64_t max_planner_steps = 8;
  double wall_timeout_s = 300.0;
  std::int64_t max_parallel = 4;
  SubBudget sub_budget;
  std::int64_t stale_rounds_limit = 2;
};

struct TaskSpec {
  std::string query;
  TaskMode mode = TaskMode::Wide;
  std::optional<Schema> schema_hint;
  std::optional<std::filesystem::path> ground_truth_path;
  Budget budget;
};

// Throws InvalidTask.
void validate_task_spec(const TaskSpec& spec);
TaskSpec task_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
TaskSpec load_task_spec(const std::filesystem::path& path);

struct ExpandPlan {
  std::vector<std::string> queries;
};

struct PopulateTarget {
  RecordId record_id;
  std::vector<std::string> columns;
};

struct PopulatePlan {
  std::vector<PopulateTarget> targets;
};

struct DonePlan {};

using Plan = std::variant<ExpandPlan, PopulatePlan, DonePlan>;

std::string summarize(const Plan& plan);

struct HistoryEntry {
  std::int64_t step = 0;
  std::string plan;
  std::int64_t revision_after = 0;
  std::int64_t new_rows = 0;
  std::int64_t new_fills = 0;
};

enum class Phase { Init, Expanding, Populating, Finished };
std::string_view to_string(Phase p) noexcept;

struct PlannerState {
  std::vector<HistoryEntry> history;
  Phase phase = Phase::Init;
  std::int64_t consecutive_stale_expansions = 0;
};

struct Usage {
  std::int64_t planner_steps = 0;
  std::int64_t sub_agent_runs = 0;
  std::int64_t tool_calls = 0;
  std::int64_t max_concurrency = 0;
  double wall_seconds = 0.0;
};

struct RunResult {
  Answer answer;
  TableId table_id;
  TableState table;
  PlannerState state;
  std::vector<SubAgentReport> reports;
  Usage usage;
  std::string stop_reason;  // saturated, done, max_planner_steps, wall_timeout, error: ...
  bool saturated = false;
};

using RowJudge = std::function<bool(const Schema&, const Record&)>;

struct RunDeps {
  LlmProvider* provider = nullptr;  // schema construction; may be null with a schema hint
  const WebEnv* env = nullptr;
  TableStore* store = nullptr;
  const AgentPolicy* policy = nullptr;
  RowJudge judge;  // Deep synthesis; rule-based when empty
  std::uint64_t seed = 0;
};

// Rule used by planning and by rule-based synthesis: every constraint cell
// Filled and satisfying its column.
bool row_verified(const Schema& schema, const Record& record);

Schema construct_schema(const TaskSpec& spec, LlmProvider* provider);

std::vector<std::string> make_expansion_queries(const Schema& schema, std::int64_t revision, std::int64_t n,
                                                std::uint64_t seed = 0);

Plan formulate_strategy(const TableState& table, const TaskSpec& spec, const PlannerState& state,
                        std::uint64_t seed = 0);

enum class Saturation { Pending, Done };
Saturation check_saturation(const TableState& table, const TaskSpec& spec, const PlannerState& state);

Answer synthesize(const TableState& table, const TaskSpec& spec, const RowJudge& judge = {});

// Runs tasks on at most max_parallel threads and joins them all. Sub-agent
// failures come back as Error reports. `max_seen` receives the peak number
// of concurrently running agents.
std::vector<SubAgentReport> dispatch(const std::vector<SubAgentTask>& tasks, std::int64_t max_parallel,
                                     const AgentPolicy& policy, const WebEnv& env, TableStore& store,
                                     const RunOptions& options, std::int64_t* max_seen = nullptr);

RunResult run_task(const TaskSpec& spec, const RunDeps& deps);

// answer.json, table.snapshot, trace.json, usage.json under `dir`.
void write_run_result(const RunResult& result, const std::filesystem::path& dir);

nlohmann::json trace_json(const RunResult& result);
nlohmann::json to_json(const Usage& u);

}  // namespace tas
