#include "tas/agents.hpp"

#include <algorithm>
#include <set>

#include "tas/filter.hpp"
#include "tas/text.hpp"

namespace tas {

using nlohmann::json;

std::string_view to_string(AgentMode mode) noexcept {
  return mode == AgentMode::ExpandRows ? "expand_rows" : "populate_cells";
}

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::BudgetExhausted: return "budget_exhausted";
    case Termination::Error: return "error";
  }
  return "error";
}

void validate_task(const SubAgentTask& task) {
  if (task.budget.max_steps < 1 || task.budget.max_tool_calls < 1) {
    fail(ErrorCode::PreconditionViolation, "sub-agent budget must be positive");
  }
  if (task.mode == AgentMode::PopulateCells) {
    if (!task.target_record_id) fail(ErrorCode::PreconditionViolation, "PopulateCells needs a target record");
    if (task.target_columns.empty()) fail(ErrorCode::PreconditionViolation, "PopulateCells needs target columns");
  } else if (task.target_record_id || !task.target_columns.empty()) {
    fail(ErrorCode::PreconditionViolation, "ExpandRows takes no target record or columns");
  }
}

json to_json(const SubAgentReport& r) {
  json steps = json::array();
  for (const auto& s : r.trajectory) {
    steps.push_back({{"thought", s.thought}, {"tool", s.tool}, {"arguments", s.arguments}, {"observation", s.observation}});
  }
  json j = {{"mode", to_string(r.mode)},           {"rows_added", r.rows_added},
            {"cells_filled", r.cells_filled},      {"evidence_urls", r.evidence_urls},
            {"steps_used", r.steps_used},          {"tool_calls", r.tool_calls},
            {"terminated", to_string(r.terminated)}, {"trajectory", std::move(steps)}};
  if (r.terminated == Termination::Error) j["error"] = r.error;
  return j;
}

std::vector<ToolDef> tool_defs(AgentMode mode) {
  std::vector<ToolDef> defs;
  defs.push_back({"search", "Keyword web search. Returns ranked results with url, title and snippet.",
                  {{"type", "object"},
                   {"properties", {{"query", {{"type", "string"}}}, {"top_k", {{"type", "integer"}}}}},
                   {"required", {"query"}},
                   {"additionalProperties", false}}});
  defs.push_back({"visit", "Fetch the text of a web page.",
                  {{"type", "object"},
                   {"properties", {{"url", {{"type", "string"}}}, {"max_chars", {{"type", "integer"}}}}},
                   {"required", {"url"}},
                   {"additionalProperties", false}}});
  if (mode == AgentMode::ExpandRows) {
    defs.push_back({"append_rows",
                    "Append candidate rows. Each row maps column names to values; key columns are required.",
                    {{"type", "object"},
                     {"properties", {{"rows", {{"type", "array"}}}}},
                     {"required", {"rows"}},
                     {"additionalProperties", false}}});
  } else {
    defs.push_back({"fill_cells",
                    "Fill empty cells of the target row. `values` maps column to value, `not_applicable` lists "
                    "columns with no answer, `source_url` must be a page seen during this task.",
                    {{"type", "object"},
                     {"properties",
                      {{"values", {{"type", "object"}}},
                       {"not_applicable", {{"type", "array"}}},
                       {"source_url", {{"type", "string"}}}}},
                     {"additionalProperties", false}}});
  }
  return defs;
}

namespace {

void add_unique(std::vector<std::string>& out, const std::string& value) {
  if (std::find(out.begin(), out.end(), value) == out.end()) out.push_back(value);
}

class Runner {
 public:
  Runner(const SubAgentTask& task, const AgentPolicy& policy, const WebEnv& env, TableStore& store,
         const RunOptions& options)
      : task_(task), policy_(policy), env_(env), store_(store), options_(options) {}

  SubAgentReport run() {
    validate_task(task_);
    schema_ = store_.schema(task_.table_id);
    report_.mode = task_.mode;
    for (const auto& c : task_.target_columns) {
      const ColumnSpec* spec = schema_.find(c);
      if (spec == nullptr) fail(ErrorCode::UnknownColumn, c);
      if (spec->kind == ColumnKind::Key) fail(ErrorCode::PreconditionViolation, "key column '" + c + "' is not fillable");
      targets_.push_back(spec->name);
    }
    defs_ = tool_defs(task_.mode);

    if (task_.mode == AgentMode::PopulateCells && !has_pending_targets(load_rows())) {
      report_.terminated = Termination::Completed;
      return report_;
    }

    while (true) {
      if (options_.deadline && std::chrono::steady_clock::now() >= *options_.deadline) {
        report_.terminated = Termination::BudgetExhausted;
        break;
      }
      const std::vector<Record> rows = load_rows();
      Decision decision;
      try {
        decision = decide(rows);
      } catch (const PolicyFailureError&) {
        throw;
      } catch (const Error& e) {
        report_.terminated = Termination::Error;
        report_.error = e.what();
        break;
      }
      if (std::holds_alternative<Finish>(decision)) {
        report_.terminated = Termination::Completed;
        break;
      }
      if (report_.steps_used >= task_.budget.max_steps || report_.tool_calls >= task_.budget.max_tool_calls) {
        report_.terminated = Termination::BudgetExhausted;
        break;
      }
      const Action& action = std::get<Action>(decision);
      std::string observation;
      try {
        observation = execute(action, rows);
      } catch (const Error& e) {
        observation = std::string("ERROR: ") + e.what();
      } catch (const json::exception& e) {
        observation = std::string("ERROR: InvalidValue: ") + e.what();
      }
      ++report_.steps_used;
      ++report_.tool_calls;
      report_.trajectory.push_back({action.thought, action.tool, action.arguments, std::move(observation)});
    }
    return report_;
  }

 private:
  std::vector<Record> load_rows() const {
    if (task_.mode == AgentMode::ExpandRows) return store_.state(task_.table_id).records;
    auto r = store_.find_record(task_.table_id, *task_.target_record_id);
    if (!r) fail(ErrorCode::PreconditionViolation, "target record " + task_.target_record_id->value + " not found");
    return {*r};
  }

  bool has_pending_targets(const std::vector<Record>& rows) const {
    for (const auto& c : targets_) {
      auto it = rows.front().cells.find(c);
      if (it != rows.front().cells.end() && is_pending(it->second)) return true;
    }
    return false;
  }

  Decision decide(const std::vector<Record>& rows) {
    std::optional<std::string> hint;
    for (int attempt = 0;; ++attempt) {
      try {
        Decision d = policy_.decide(AgentView{task_, schema_, report_.trajectory, rows, hint});
        if (const auto* a = std::get_if<Action>(&d)) validate_tool_call(ToolCall{"", a->tool, a->arguments}, defs_);
        return d;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedToolCall) throw;
        if (attempt >= 1) throw PolicyFailureError(e.what(), report_);
        hint = e.what();
      }
    }
  }

  std::string execute(const Action& a, const std::vector<Record>& rows) {
    if (a.tool == "search") {
      const std::int64_t top_k = a.arguments.value("top_k", kDefaultTopK);
      auto results = env_.search(a.arguments.at("query").get<std::string>(), top_k);
      for (const auto& r : results) seen_urls_.insert(r.url);
      return render_search_results(results);
    }
    if (a.tool == "visit") {
      const std::string url = a.arguments.at("url").get<std::string>();
      const std::int64_t max_chars = a.arguments.value("max_chars", static_cast<std::int64_t>(kDefaultVisitChars));
      if (max_chars < 1) fail(ErrorCode::PreconditionViolation, "max_chars must be positive");
      std::string page = env_.visit(url, static_cast<std::size_t>(max_chars));
      seen_urls_.insert(url);
      last_visited_ = url;
      return page;
    }
    if (a.tool == "append_rows") return append_rows(a.arguments.at("rows"));
    if (a.tool == "fill_cells") return fill_cells(a.arguments, rows.front());
    fail(ErrorCode::MalformedToolCall, "unknown tool '" + a.tool + "'");
  }

  std::string append_rows(const json& rows) {
    if (!rows.is_array()) fail(ErrorCode::InvalidValue, "rows must be a list");
    std::vector<RecordLiteral> literals;
    std::vector<std::string> urls;
    for (const auto& lit : rows) {
      RecordLiteral parsed = parse_record_literal(lit, schema_);
      for (auto& [col, cell] : parsed) {
        if (auto* f = std::get_if<Filled>(&cell)) {
          f->filled_at_step = options_.planner_step;
          if (f->source_url) urls.push_back(*f->source_url);
        }
      }
      literals.push_back(std::move(parsed));
    }
    const AddResult res = store_.add_records(task_.table_id, literals);
    report_.rows_added += res.inserted;
    if (res.inserted > 0) {
      for (const auto& u : urls) add_unique(report_.evidence_urls, u);
    }
    return "Added " + std::to_string(res.inserted) + " rows; " + std::to_string(res.deduplicated) +
           " duplicates skipped.";
  }

  std::string resolve_target(const std::string& column) const {
    const ColumnSpec* spec = schema_.find(column);
    if (spec == nullptr) fail(ErrorCode::UnknownColumn, column);
    if (std::find(targets_.begin(), targets_.end(), spec->name) == targets_.end()) {
      fail(ErrorCode::InvalidValue, "column '" + spec->name + "' is not a target of this task");
    }
    return spec->name;
  }

  std::string fill_cells(const json& args, const Record& row) {
    std::vector<std::pair<std::string, json>> writes;
    if (args.contains("values")) {
      for (const auto& [col, v] : args["values"].items()) {
        std::string value = v.is_string() ? v.get<std::string>() : v.is_number() ? v.dump() : "";
        if (text::trim(value).empty()) fail(ErrorCode::InvalidValue, "value for '" + col + "' must be non-empty text");
        writes.emplace_back(resolve_target(col), json(value));
      }
    }
    const bool has_values = !writes.empty();
    if (args.contains("not_applicable")) {
      if (!args["not_applicable"].is_array()) fail(ErrorCode::InvalidValue, "not_applicable must be a list");
      for (const auto& col : args["not_applicable"]) {
        if (!col.is_string()) fail(ErrorCode::InvalidValue, "not_applicable entries must be column names");
        writes.emplace_back(resolve_target(col.get<std::string>()), json());
      }
    }
    if (writes.empty()) fail(ErrorCode::InvalidValue, "nothing to fill");

    std::optional<std::string> source;
    if (args.contains("source_url")) {
      const std::string url = args["source_url"].get<std::string>();
      if (!seen_urls_.contains(url)) fail(ErrorCode::InvalidValue, "source_url '" + url + "' was not seen in this task");
      source = url;
    } else if (last_visited_) {
      source = last_visited_;
    }
    if (has_values && !source) fail(ErrorCode::InvalidValue, "filled values need a source page from this task");

    json key_terms = json::array();
    for (const auto& [k, v] : row.key) key_terms.push_back({{k, v}});
    std::int64_t filled = 0;
    for (const auto& [col, value] : writes) {
      json clause = key_terms;
      clause.push_back({{col, {{"$exists", false}}}});
      json literal = value.is_null()
                         ? json("NA")
                         : json{{"value", value}, {"source_url", *source}, {"filled_at_step", options_.planner_step}};
      const UpdateResult res = store_.update_records(task_.table_id, json{{"$and", clause}}, json{{"$set", {{col, literal}}}});
      filled += res.modified;
    }
    report_.cells_filled += filled;
    if (filled > 0 && has_values) add_unique(report_.evidence_urls, *source);
    return "Filled " + std::to_string(filled) + " of " + std::to_string(writes.size()) + " cells.";
  }

  const SubAgentTask& task_;
  const AgentPolicy& policy_;
  const WebEnv& env_;
  TableStore& store_;
  const RunOptions& options_;
  Schema schema_;
  std::vector<std::string> targets_;
  std::vector<ToolDef> defs_;
  std::set<std::string> seen_urls_;
  std::optional<std::string> last_visited_;
  SubAgentReport report_;
};

}  // namespace

SubAgentReport run_sub_agent(const SubAgentTask& task, const AgentPolicy& policy, const WebEnv& env,
                             TableStore& store, const RunOptions& options) {
  return Runner(task, policy, env, store, options).run();
}

std::vector<Message> trajectory_messages(const Trajectory& trajectory) {
  std::vector<Message> out;
  out.reserve(trajectory.size() * 2);
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& s = trajectory[i];
    const std::string id = "call_" + std::to_string(i);
    out.push_back(Message{Role::Assistant, s.thought, std::nullopt, {ToolCall{id, s.tool, s.arguments}}});
    out.push_back(Message{Role::Tool, s.observation, id, {}});
  }
  return out;
}

Trajectory compact_trajectory(const Trajectory& trajectory, std::int64_t max_tokens) {
  if (max_tokens <= 0) fail(ErrorCode::PreconditionViolation, "max_tokens must be positive");
  Trajectory out = trajectory;
  for (std::size_t i = 0;; ++i) {
    if (count_tokens_approx(trajectory_messages(out)) <= max_tokens) return out;
    if (i >= out.size()) break;
    out[i].observation = std::string(kElided);
  }
  fail(ErrorCode::BudgetImpossible, "trajectory skeleton exceeds " + std::to_string(max_tokens) + " tokens");
}

std::string make_row_query(const Schema& schema, const Record& record, const std::vector<std::string>& columns) {
  if (columns.empty()) fail(ErrorCode::PreconditionViolation, "make_row_query needs at least one column");
  std::string out;
  auto append = [&out](const std::string& part) {
    if (part.empty()) return;
    if (!out.empty()) out += ' ';
    out += part;
  };
  for (const ColumnSpec* k : schema.key_columns()) {
    if (auto it = record.key.find(k->name); it != record.key.end()) append(it->second);
  }
  for (const auto& c : columns) append(c);
  return out;
}

}  // namespace tas
