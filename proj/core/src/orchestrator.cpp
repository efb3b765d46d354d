#include "tas/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <regex>
#include <set>
#include <thread>

#include "tas/error.hpp"
#include "tas/metrics.hpp"
#include "tas/text.hpp"

namespace tas {

using nlohmann::json;

namespace {

std::string trim_copy(const std::string& s) { return text::trim(s); }

json read_json(const std::filesystem::path& path, ErrorCode code) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(code, "'" + path.string() + "': " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
  out << bytes;
  if (!out) fail(ErrorCode::IoFailure, "write failed for '" + path.string() + "'");
}

}  // namespace

// ---- task spec --------------------------------------------------------------

void validate_task_spec(const TaskSpec& spec) {
  const Budget& b = spec.budget;
  if (text::trim(spec.query).empty()) fail(ErrorCode::InvalidTask, "query is empty");
  if (b.max_planner_steps < 1 || b.max_parallel < 1 || b.stale_rounds_limit < 1 || !(b.wall_timeout_s > 0) ||
      b.sub_budget.max_steps < 1 || b.sub_budget.max_tool_calls < 1) {
    fail(ErrorCode::InvalidTask, "budget values must be positive");
  }
  if (spec.schema_hint) {
    if (spec.schema_hint->task_mode != spec.mode) fail(ErrorCode::InvalidTask, "schema hint mode differs from task mode");
    try {
      validate_schema(*spec.schema_hint);
    } catch (const Error& e) {
      fail(ErrorCode::InvalidTask, e.what());
    }
  }
}

TaskSpec task_spec_from_json(const json& j, const std::filesystem::path& base_dir) {
  TaskSpec s;
  try {
    s.query = j.at("query").get<std::string>();
    s.mode = task_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("schema_hint") && !j["schema_hint"].is_null()) {
      json hint = j["schema_hint"];
      if (!hint.contains("task_mode")) hint["task_mode"] = to_string(s.mode);
      s.schema_hint = schema_from_json(hint);
    }
    if (j.contains("ground_truth") && j["ground_truth"].is_string()) {
      std::filesystem::path p = j["ground_truth"].get<std::string>();
      s.ground_truth_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (j.contains("budget")) {
      const json& b = j["budget"];
      s.budget.max_planner_steps = b.value("max_planner_steps", s.budget.max_planner_steps);
      s.budget.wall_timeout_s = b.value("wall_timeout_s", s.budget.wall_timeout_s);
      s.budget.max_parallel = b.value("max_parallel", s.budget.max_parallel);
      s.budget.stale_rounds_limit = b.value("stale_rounds_limit", s.budget.stale_rounds_limit);
      if (b.contains("sub_budget")) {
        s.budget.sub_budget.max_steps = b["sub_budget"].value("max_steps", s.budget.sub_budget.max_steps);
        s.budget.sub_budget.max_tool_calls = b["sub_budget"].value("max_tool_calls", s.budget.sub_budget.max_tool_calls);
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidTask, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidTask) throw;
    fail(ErrorCode::InvalidTask, e.what());
  }
  validate_task_spec(s);
  return s;
}

TaskSpec load_task_spec(const std::filesystem::path& path) {
  return task_spec_from_json(read_json(path, ErrorCode::InvalidTask), path.parent_path());
}

// ---- plans ------------------------------------------------------------------

std::string summarize(const Plan& plan) {
  if (const auto* e = std::get_if<ExpandPlan>(&plan)) {
    std::string s = "ExpandRows(";
    for (std::size_t i = 0; i < e->queries.size(); ++i) s += (i ? " | " : "") + e->queries[i];
    return s + ")";
  }
  if (const auto* p = std::get_if<PopulatePlan>(&plan)) {
    std::size_t cells = 0;
    for (const auto& t : p->targets) cells += t.columns.size();
    return "PopulateCells(" + std::to_string(p->targets.size()) + " rows, " + std::to_string(cells) + " cells)";
  }
  return "Done";
}

std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::Init: return "init";
    case Phase::Expanding: return "expanding";
    case Phase::Populating: return "populating";
    case Phase::Finished: return "finished";
  }
  return "init";
}

bool row_verified(const Schema& schema, const Record& record) {
  for (const ColumnSpec* c : schema.constraint_columns()) {
    auto it = record.cells.find(c->name);
    if (it == record.cells.end()) return false;
    const Filled* f = as_filled(it->second);
    if (f == nullptr || !satisfies_constraint(*c, f->value)) return false;
  }
  return true;
}

namespace {

// Has Pending constraint cells and no resolved cell that already fails.
bool row_verifiable(const Schema& schema, const Record& record) {
  bool pending = false;
  for (const ColumnSpec* c : schema.constraint_columns()) {
    auto it = record.cells.find(c->name);
    if (it == record.cells.end()) return false;
    if (is_pending(it->second)) {
      pending = true;
    } else if (is_na(it->second) || !satisfies_constraint(*c, as_filled(it->second)->value)) {
      return false;
    }
  }
  return pending;
}

std::vector<std::string> pending_columns(const Schema& schema, const Record& r) {
  std::vector<std::string> out;
  for (const ColumnSpec* c : schema.non_key_columns()) {
    auto it = r.cells.find(c->name);
    if (it != r.cells.end() && is_pending(it->second)) out.push_back(c->name);
  }
  return out;
}

bool any_pending(const TableState& t) {
  for (const auto& r : t.records) {
    if (!pending_columns(t.schema, r).empty()) return true;
  }
  return false;
}

bool target_met(const TableState& t) {
  const auto rows = static_cast<std::int64_t>(t.records.size());
  if (t.schema.task_mode == TaskMode::Deep) {
    return std::any_of(t.records.begin(), t.records.end(),
                       [&](const Record& r) { return row_verified(t.schema, r); });
  }
  return t.schema.target_count ? rows >= *t.schema.target_count : rows >= 1;
}

bool shortfall(const TableState& t) {
  if (t.schema.task_mode == TaskMode::Deep) {
    return std::none_of(t.records.begin(), t.records.end(), [&](const Record& r) {
      return row_verified(t.schema, r) || row_verifiable(t.schema, r);
    });
  }
  return !target_met(t);
}

const std::vector<std::string>& diversifiers() {
  static const std::vector<std::string> v{"list", "official site", "directory", "overview",
                                          "database", "ranking", "news", "review"};
  return v;
}

std::string join_descriptions(const std::vector<const ColumnSpec*>& cols) {
  std::string out;
  for (const ColumnSpec* c : cols) {
    const std::string d = trim_copy(c->description);
    if (d.empty()) continue;
    if (!out.empty()) out += ' ';
    out += d;
  }
  return out;
}

}  // namespace

std::vector<std::string> make_expansion_queries(const Schema& schema, std::int64_t revision, std::int64_t n,
                                                std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::PreconditionViolation, "make_expansion_queries needs n >= 1");
  std::string base = join_descriptions(schema.constraint_columns());
  if (base.empty()) base = join_descriptions(schema.key_columns());
  if (base.empty()) {
    for (const ColumnSpec* k : schema.key_columns()) base += (base.empty() ? "" : " ") + k->name;
    base += " list";
  }

  std::vector<std::string> queries;
  const auto count = static_cast<std::size_t>(n);
  if (const auto ranges = text::find_year_ranges(base); !ranges.empty()) {
    const auto& r = ranges.front();
    const int years = r.to - r.from + 1;
    const int parts = static_cast<int>(std::min<std::int64_t>(n, years));
    int start = r.from;
    for (int i = 0; i < parts; ++i) {
      const int len = years / parts + (i < years % parts ? 1 : 0);
      const int end = start + len - 1;
      const std::string span = start == end ? std::to_string(start) : std::to_string(start) + "-" + std::to_string(end);
      queries.push_back(base.substr(0, r.begin) + span + base.substr(r.end));
      start = end + 1;
    }
  } else {
    static const std::regex paren(R"(\(([^()]*,[^()]*)\))");
    std::smatch m;
    if (std::regex_search(base, m, paren)) {
      std::vector<std::string> items;
      std::string cur;
      for (char c : m[1].str() + ",") {
        if (c == ',') {
          if (!trim_copy(cur).empty()) items.push_back(trim_copy(cur));
          cur.clear();
        } else {
          cur += c;
        }
      }
      const std::size_t groups = std::min(count, items.size());
      const std::string prefix = m.prefix().str();
      const std::string suffix = m.suffix().str();
      std::size_t at = 0;
      for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t len = items.size() / groups + (g < items.size() % groups ? 1 : 0);
        std::string group;
        for (std::size_t i = 0; i < len; ++i) group += (i ? ", " : "") + items[at + i];
        at += len;
        queries.push_back(trim_copy(prefix + (len == 1 ? group : "(" + group + ")") + suffix));
      }
    }
  }
  if (queries.empty()) queries.push_back(base);

  const auto& div = diversifiers();
  const std::uint64_t offset = static_cast<std::uint64_t>(std::max<std::int64_t>(revision, 0)) + seed;
  for (std::size_t i = 0; queries.size() < count; ++i) {
    queries.push_back(base + " " + div[(offset + i) % div.size()]);
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (!seen.insert(queries[i]).second) {
      queries[i] += " (part " + std::to_string(i + 1) + ")";
      seen.insert(queries[i]);
    }
  }
  queries.resize(count);
  return queries;
}

Plan formulate_strategy(const TableState& table, const TaskSpec& spec, const PlannerState& state, std::uint64_t seed) {
  if (shortfall(table) && state.consecutive_stale_expansions < spec.budget.stale_rounds_limit) {
    return ExpandPlan{make_expansion_queries(table.schema, table.revision, spec.budget.max_parallel, seed)};
  }
  PopulatePlan p;
  for (const auto& r : table.records) {
    auto cols = pending_columns(table.schema, r);
    if (!cols.empty()) p.targets.push_back({r.record_id, std::move(cols)});
  }
  if (!p.targets.empty()) return p;
  return DonePlan{};
}

Saturation check_saturation(const TableState& table, const TaskSpec& spec, const PlannerState& state) {
  if (any_pending(table)) return Saturation::Pending;
  if (target_met(table) || state.consecutive_stale_expansions >= spec.budget.stale_rounds_limit) return Saturation::Done;
  return Saturation::Pending;
}

// ---- schema construction ----------------------------------------------------

namespace {

std::string strip_fences(const std::string& s) {
  std::string t = text::trim(s);
  if (t.rfind("```", 0) == 0) {
    const auto nl = t.find('\n');
    t = nl == std::string::npos ? "" : t.substr(nl + 1);
    const auto close = t.rfind("```");
    if (close != std::string::npos) t = t.substr(0, close);
  }
  return t;
}

}  // namespace

Schema construct_schema(const TaskSpec& spec, LlmProvider* provider) {
  if (spec.schema_hint) return *spec.schema_hint;
  if (provider == nullptr) fail(ErrorCode::SchemaConstructionFailed, "no schema hint and no provider");
  std::vector<Message> messages{
      {Role::System,
       "Design a table for the research question. Reply with JSON only: "
       "{\"columns\": [{\"name\": ..., \"kind\": \"key\"|\"constraint\"|\"info\", \"description\": ...}], "
       "\"target_count\": optional integer}. Key columns identify candidates, constraint columns hold conditions "
       "a candidate must satisfy, info columns hold attributes to collect.",
       std::nullopt,
       {}},
      {Role::User, "Mode: " + std::string(to_string(spec.mode)) + "\nQuestion: " + spec.query, std::nullopt, {}}};
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply;
    try {
      const AssistantTurn turn = provider->complete(messages, {});
      const auto* t = std::get_if<TextTurn>(&turn);
      if (t == nullptr) fail(ErrorCode::InvalidSchema, "expected a JSON text reply, got tool calls");
      reply = t->content;
      json j = json::parse(strip_fences(reply));
      if (!j.is_object()) fail(ErrorCode::InvalidSchema, "schema reply must be a JSON object");
      j["task_mode"] = to_string(spec.mode);
      Schema s = schema_from_json(j);
      validate_schema(s);
      return s;
    } catch (const json::exception& e) {
      last_error = e.what();
    } catch (const Error& e) {
      last_error = e.what();
    }
    messages.push_back({Role::Assistant, reply, std::nullopt, {}});
    messages.push_back({Role::User, "That schema was rejected: " + last_error + ". Reply with corrected JSON only.",
                        std::nullopt, {}});
  }
  fail(ErrorCode::SchemaConstructionFailed, last_error);
}

// ---- synthesis --------------------------------------------------------------

namespace {

std::pair<int, int> coverage(const Schema& schema, const Record& r) {
  int verified = 0, resolved = 0;
  for (const ColumnSpec* c : schema.constraint_columns()) {
    const auto& cell = r.cells.at(c->name);
    if (const Filled* f = as_filled(cell); f != nullptr && satisfies_constraint(*c, f->value)) ++verified;
  }
  for (const auto& [col, cell] : r.cells) resolved += is_pending(cell) ? 0 : 1;
  return {verified, resolved};
}

DeepAnswer deep_answer_for(const Schema& schema, const Record& r, bool low_confidence) {
  DeepAnswer a;
  a.low_confidence = low_confidence;
  for (const ColumnSpec* k : schema.key_columns()) {
    const std::string& v = r.key.at(k->name);
    a.entity[k->name] = v;
    a.label += (a.label.empty() ? "" : " ") + v;
  }
  std::vector<const ColumnSpec*> order = schema.constraint_columns();
  for (const ColumnSpec* c : schema.info_columns()) order.push_back(c);
  for (const ColumnSpec* c : order) {
    const Filled* f = as_filled(r.cells.at(c->name));
    if (f != nullptr && f->source_url &&
        std::find(a.evidence_urls.begin(), a.evidence_urls.end(), *f->source_url) == a.evidence_urls.end()) {
      a.evidence_urls.push_back(*f->source_url);
    }
  }
  return a;
}

}  // namespace

Answer synthesize(const TableState& table, const TaskSpec& spec, const RowJudge& judge) {
  const Schema& schema = table.schema;
  if (spec.mode != TaskMode::Deep) {
    TableAnswer t;
    t.markdown = render_markdown(schema, table.records, static_cast<std::int64_t>(table.records.size()));
    t.table = table_to_ground_truth_json(table);
    return t;
  }
  if (table.records.empty()) {
    DeepAnswer a;
    a.unknown = true;
    a.low_confidence = true;
    return a;
  }
  std::vector<const Record*> survivors;
  for (const auto& r : table.records) {
    if (!row_verified(schema, r)) continue;
    if (judge && !judge(schema, r)) continue;
    survivors.push_back(&r);
  }
  if (survivors.size() == 1) return deep_answer_for(schema, *survivors.front(), false);

  std::vector<const Record*> pool = survivors;
  if (pool.empty()) {
    for (const auto& r : table.records) pool.push_back(&r);
  }
  const Record* best = pool.front();
  auto best_cov = coverage(schema, *best);
  for (const Record* r : pool) {
    const auto cov = coverage(schema, *r);
    if (cov > best_cov) {
      best = r;
      best_cov = cov;
    }
  }
  return deep_answer_for(schema, *best, true);
}

// ---- dispatch ---------------------------------------------------------------

std::vector<SubAgentReport> dispatch(const std::vector<SubAgentTask>& tasks, std::int64_t max_parallel,
                                     const AgentPolicy& policy, const WebEnv& env, TableStore& store,
                                     const RunOptions& options, std::int64_t* max_seen) {
  std::vector<SubAgentReport> reports(tasks.size());
  if (tasks.empty()) return reports;
  std::atomic<std::size_t> next{0};
  std::atomic<std::int64_t> active{0};
  std::atomic<std::int64_t> peak{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
      const std::int64_t now = active.fetch_add(1) + 1;
      for (std::int64_t p = peak.load(); now > p && !peak.compare_exchange_weak(p, now);) {
      }
      try {
        reports[i] = run_sub_agent(tasks[i], policy, env, store, options);
      } catch (const PolicyFailureError& e) {
        reports[i] = e.partial();
        reports[i].terminated = Termination::Error;
        reports[i].error = e.what();
      } catch (const std::exception& e) {
        reports[i].mode = tasks[i].mode;
        reports[i].terminated = Termination::Error;
        reports[i].error = e.what();
      }
      active.fetch_sub(1);
    }
  };

  const auto width = static_cast<std::size_t>(std::max<std::int64_t>(1, std::min<std::int64_t>(
      max_parallel, static_cast<std::int64_t>(tasks.size()))));
  std::vector<std::thread> pool;
  pool.reserve(width);
  for (std::size_t i = 0; i < width; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (max_seen != nullptr) *max_seen = std::max(*max_seen, peak.load());
  return reports;
}

// ---- run --------------------------------------------------------------------

RunResult run_task(const TaskSpec& spec, const RunDeps& deps) {
  validate_task_spec(spec);
  if (deps.env == nullptr || deps.store == nullptr || deps.policy == nullptr) {
    fail(ErrorCode::PreconditionViolation, "run_task needs an environment, a store and a policy");
  }
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto deadline = start + std::chrono::duration_cast<clock::duration>(
                                    std::chrono::duration<double>(spec.budget.wall_timeout_s));

  Schema schema;
  try {
    schema = construct_schema(spec, deps.provider);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaConstructionFailed) throw;
    fail(ErrorCode::SchemaConstructionFailed, e.what());
  }
  RunResult result;
  try {
    result.table_id = deps.store->create_table(schema);
  } catch (const Error& e) {
    fail(ErrorCode::StoreFailure, e.what());
  }

  PlannerState& state = result.state;
  std::int64_t steps = 0;
  try {
    while (true) {
      if (steps >= spec.budget.max_planner_steps) {
        result.stop_reason = "max_planner_steps";
        break;
      }
      if (clock::now() >= deadline) {
        result.stop_reason = "wall_timeout";
        break;
      }
      const TableState before = deps.store->state(result.table_id);
      const Plan plan = formulate_strategy(before, spec, state, deps.seed);
      if (std::holds_alternative<DonePlan>(plan)) {
        result.stop_reason = "done";
        result.saturated = true;
        break;
      }
      ++steps;
      RunOptions options{deadline, steps};
      std::vector<SubAgentTask> tasks;
      if (const auto* e = std::get_if<ExpandPlan>(&plan)) {
        state.phase = Phase::Expanding;
        for (const auto& q : e->queries) {
          tasks.push_back({AgentMode::ExpandRows, q, result.table_id, std::nullopt, {}, spec.budget.sub_budget});
        }
      } else {
        state.phase = Phase::Populating;
        for (const auto& t : std::get<PopulatePlan>(plan).targets) {
          const Record* rec = nullptr;
          for (const auto& r : before.records) {
            if (r.record_id == t.record_id) rec = &r;
          }
          tasks.push_back({AgentMode::PopulateCells, make_row_query(schema, *rec, t.columns), result.table_id,
                           t.record_id, t.columns, spec.budget.sub_budget});
        }
      }
      auto reports = dispatch(tasks, spec.budget.max_parallel, *deps.policy, *deps.env, *deps.store, options,
                              &result.usage.max_concurrency);
      HistoryEntry h{steps, summarize(plan), 0, 0, 0};
      for (auto& r : reports) {
        h.new_rows += r.rows_added;
        h.new_fills += r.cells_filled;
        result.reports.push_back(std::move(r));
      }
      if (std::holds_alternative<ExpandPlan>(plan)) {
        state.consecutive_stale_expansions = h.new_rows == 0 ? state.consecutive_stale_expansions + 1 : 0;
      }
      const TableState after = deps.store->state(result.table_id);
      h.revision_after = after.revision;
      state.history.push_back(std::move(h));
      if (check_saturation(after, spec, state) == Saturation::Done) {
        result.stop_reason = "saturated";
        result.saturated = true;
        break;
      }
    }
  } catch (const Error& e) {
    result.stop_reason = std::string("error: ") + e.what();
  }
  state.phase = Phase::Finished;

  result.table = deps.store->state(result.table_id);
  result.answer = synthesize(result.table, spec, deps.judge);
  result.usage.planner_steps = static_cast<std::int64_t>(state.history.size());
  result.usage.sub_agent_runs = static_cast<std::int64_t>(result.reports.size());
  for (const auto& r : result.reports) result.usage.tool_calls += r.tool_calls;
  result.usage.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
  return result;
}

json to_json(const Usage& u) {
  return {{"planner_steps", u.planner_steps},
          {"sub_agent_runs", u.sub_agent_runs},
          {"tool_calls", u.tool_calls},
          {"max_concurrency", u.max_concurrency},
          {"wall_seconds", u.wall_seconds}};
}

json trace_json(const RunResult& result) {
  json history = json::array();
  for (const auto& h : result.state.history) {
    history.push_back({{"step", h.step},
                       {"plan", h.plan},
                       {"revision_after", h.revision_after},
                       {"new_rows", h.new_rows},
                       {"new_fills", h.new_fills}});
  }
  json reports = json::array();
  for (const auto& r : result.reports) reports.push_back(to_json(r));
  json j = {{"stop_reason", result.stop_reason},
            {"saturated", result.saturated},
            {"partial", !result.saturated},
            {"phase", to_string(result.state.phase)},
            {"consecutive_stale_expansions", result.state.consecutive_stale_expansions},
            {"schema", to_json(result.table.schema)},
            {"history", std::move(history)},
            {"reports", std::move(reports)}};
  if (const auto* d = std::get_if<DeepAnswer>(&result.answer)) j["low_confidence"] = d->low_confidence;
  return j;
}

void write_run_result(const RunResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create '" + dir.string() + "': " + ec.message());
  write_file(dir / "answer.json", to_json(result.answer).dump(2) + "\n");
  write_file(dir / "table.snapshot", encode_snapshot(result.table));
  write_file(dir / "trace.json", trace_json(result).dump(2) + "\n");
  write_file(dir / "usage.json", to_json(result.usage).dump(2) + "\n");
}

}  // namespace tas
