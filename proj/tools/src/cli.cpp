#include "tas_cli/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tas/error.hpp"
#include "tas/metrics.hpp"
#include "tas/model_policy.hpp"
#include "tas/oracle_policy.hpp"
#include "tas/orchestrator.hpp"

namespace tas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunArgs {
  std::string task;
  std::string corpus;
  std::string policy = "oracle";
  std::string provider;
  std::string output = "tas-output";
  std::int64_t max_steps = 0;
  std::uint64_t seed = 0;
  int verbose = 0;
};

struct ScoreArgs {
  std::vector<std::string> paths;
  std::string trials;
  double tolerance = 0.0;
  std::string output = "tas-output";
};

struct ShowArgs {
  std::string snapshot;
  std::int64_t limit = 50;
  bool pending_only = false;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& body) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write '" + path.string() + "'");
  out << body;
}

// A run directory stands for its table.snapshot.
fs::path resolve_snapshot(const fs::path& p) {
  if (fs::is_directory(p)) return p / "table.snapshot";
  return p;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Snapshot bytes or a ground-truth style table export.
TableState load_prediction(const fs::path& path) {
  const std::string bytes = read_file(resolve_snapshot(path));
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidValue, "'" + path.string() + "': " + e.what());
  }
  if (j.is_object() && j.contains("checksum")) return decode_snapshot(bytes);
  if (j.is_object() && j.value("type", "") == "table") j = j.at("table");
  return table_from_ground_truth(ground_truth_from_json(j));
}

void print_report(std::ostream& out, const MetricsReport& m) {
  auto line = [&](const char* name, double p, double r, double f) {
    out << "  " << name << std::string(8 - std::char_traits<char>::length(name), ' ') << "P " << fmt(p) << "  R "
        << fmt(r) << "  F1 " << fmt(f) << "\n";
  };
  line("column", m.col_p, m.col_r, m.col_f1);
  line("row", m.row_p, m.row_r, m.row_f1);
  line("item", m.item_p, m.item_r, m.item_f1);
  out << "  success " << (m.success ? "true" : "false") << "  (rate " << fmt(m.success_rate) << ")\n";
  out << "  cells   " << m.correct_cells << " correct of " << m.total_pred_cells << " predicted\n";
}

std::string gt_answer_label(const GroundTruthTable& gt) {
  if (gt.rows.empty()) return "";
  std::string label;
  for (const auto& k : gt.key_columns) label += (label.empty() ? "" : " ") + gt.rows.front().at(k);
  return label;
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  TaskSpec spec = load_task_spec(a.task);
  if (a.max_steps > 0) spec.budget.max_planner_steps = a.max_steps;

  if (a.corpus.empty()) fail(ErrorCode::IoFailure, "--corpus is required");
  auto corpus = std::make_shared<const Corpus>(load_corpus(a.corpus));
  CorpusEnv env(corpus);
  TableStore store;

  std::unique_ptr<LlmProvider> provider;
  if (!a.provider.empty()) provider = make_provider(load_provider_config(a.provider));

  std::unique_ptr<AgentPolicy> policy;
  RunDeps deps;
  if (a.policy == "oracle") {
    policy = std::make_unique<OraclePolicy>(corpus);
  } else if (a.policy == "model") {
    if (!provider) fail(ErrorCode::InvalidTask, "--policy model needs --provider");
    policy = std::make_unique<ModelPolicy>(*provider);
    LlmProvider* p = provider.get();
    deps.judge = [p](const Schema& s, const Record& r) { return model_judge_row(*p, s, r); };
  } else {
    fail(ErrorCode::InvalidTask, "unknown policy '" + a.policy + "'");
  }
  deps.provider = provider.get();
  deps.env = &env;
  deps.store = &store;
  deps.policy = policy.get();
  deps.seed = a.seed;

  const RunResult result = run_task(spec, deps);
  const fs::path dir = a.output;
  write_run_result(result, dir);

  if (a.verbose > 0) {
    for (const auto& h : result.state.history) {
      err << "step " << h.step << ": " << h.plan << " -> +" << h.new_rows << " rows, +" << h.new_fills
          << " cells (rev " << h.revision_after << ")\n";
    }
  }
  out << "stop:    " << result.stop_reason << (result.saturated ? "" : " (partial)") << "\n";
  out << "steps:   " << result.usage.planner_steps << "\n";
  out << "rows:    " << result.table.records.size() << "\n";
  if (const auto* d = std::get_if<DeepAnswer>(&result.answer)) {
    out << "answer:  " << (d->unknown ? "Unknown" : d->label) << (d->low_confidence ? " (low confidence)" : "") << "\n";
  } else {
    out << std::get<TableAnswer>(result.answer).markdown;
  }

  if (spec.ground_truth_path) {
    const GroundTruthTable gt = load_ground_truth(*spec.ground_truth_path);
    json score;
    if (const auto* d = std::get_if<DeepAnswer>(&result.answer)) {
      const bool pass = pass_at_n(std::span<const DeepAnswer>(d, 1), gt_answer_label(gt));
      out << "correct: " << (pass ? "true" : "false") << "\n";
      score = {{"pass", pass}, {"expected", gt_answer_label(gt)}};
    } else {
      const MetricsReport m = score_table(result.table, gt);
      out << "score:\n";
      print_report(out, m);
      score = to_json(m);
    }
    write_text(dir / "score.json", score.dump(2) + "\n");
  }
  out << "output:  " << dir.string() << "\n";
  return kExitOk;
}

int cmd_score(const ScoreArgs& a, std::ostream& out) {
  MatchConfig config;
  config.numeric_tolerance = a.tolerance;
  if (a.tolerance < 0) fail(ErrorCode::InvalidValue, "--tolerance must be non-negative");
  const fs::path dir = a.output;

  if (!a.trials.empty()) {
    if (a.paths.size() != 1) fail(ErrorCode::InvalidValue, "with --trials pass only the ground-truth path");
    const GroundTruthTable gt = load_ground_truth(a.paths.front());
    std::vector<fs::path> trial_dirs;
    for (const auto& e : fs::directory_iterator(a.trials)) {
      if (e.is_directory()) trial_dirs.push_back(e.path());
    }
    std::sort(trial_dirs.begin(), trial_dirs.end());
    if (trial_dirs.empty()) fail(ErrorCode::EmptyTrialSet, "no trial directories under '" + a.trials + "'");

    std::vector<MetricsReport> reports;
    std::vector<DeepAnswer> answers;
    json trials = json::array();
    for (const auto& t : trial_dirs) {
      const MetricsReport m = score_table(load_prediction(t), gt, config);
      reports.push_back(m);
      json entry = {{"trial", t.filename().string()}, {"metrics", to_json(m)}};
      if (fs::exists(t / "answer.json")) {
        const Answer ans = answer_from_json(json::parse(read_file(t / "answer.json")));
        if (const auto* d = std::get_if<DeepAnswer>(&ans)) answers.push_back(*d);
      }
      out << t.filename().string() << ":\n";
      print_report(out, m);
      trials.push_back(std::move(entry));
    }
    const auto k = std::to_string(reports.size());
    const MetricsReport avg = aggregate(reports, AggregateMode::Avg);
    const MetricsReport max = aggregate(reports, AggregateMode::Max);
    const std::int64_t num = num_at_k(reports);
    out << "Avg@" << k << ":\n";
    print_report(out, avg);
    out << "Max@" << k << ":\n";
    print_report(out, max);
    out << "Num@" << k << ": " << num << "\n";
    json summary = {{"trials", std::move(trials)}, {"avg", to_json(avg)}, {"max", to_json(max)}, {"num_at_k", num}, {"k", reports.size()}};
    if (!answers.empty()) {
      const bool pass = pass_at_n(answers, gt_answer_label(gt), config);
      out << "Pass@" << answers.size() << ": " << (pass ? "true" : "false") << "\n";
      summary["pass_at_n"] = pass;
    }
    write_text(dir / "score.json", summary.dump(2) + "\n");
    return kExitOk;
  }

  if (a.paths.size() != 2) fail(ErrorCode::InvalidValue, "score needs PRED and GT paths");
  const MetricsReport m = score_table(load_prediction(a.paths[0]), load_ground_truth(a.paths[1]), config);
  print_report(out, m);
  write_text(dir / "score.json", to_json(m).dump(2) + "\n");
  return kExitOk;
}

int cmd_show(const ShowArgs& a, std::ostream& out) {
  TableStore store;
  const TableId id = store.load(resolve_snapshot(a.snapshot));
  if (!a.pending_only) {
    out << store.show_table(id, a.limit);
    return kExitOk;
  }
  const Schema schema = store.schema(id);
  json clauses = json::array();
  for (const ColumnSpec* c : schema.non_key_columns()) clauses.push_back({{c->name, {{"$exists", false}}}});
  std::vector<Record> rows;
  if (!clauses.empty()) rows = store.filter_records(id, json{{"$or", clauses}});
  out << render_markdown(schema, rows, a.limit);
  return kExitOk;
}

int cmd_corpus_validate(const std::string& path, std::ostream& out) {
  const Corpus c = load_corpus(path);
  out << "ok: " << c.documents().size() << " documents, max_doc_chars " << c.max_doc_chars() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Table-as-search runner: plan, search, fill and score tables."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "tas 0.1.0");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run a task and write the result directory");
  run_cmd->add_option("task", run_args.task, "Task spec JSON")->required();
  run_cmd->add_option("--corpus", run_args.corpus, "Fixture corpus JSON")->required();
  run_cmd->add_option("--policy", run_args.policy, "Sub-agent policy")->check(CLI::IsMember({"oracle", "model"}));
  run_cmd->add_option("--provider", run_args.provider, "Provider config JSON");
  run_cmd->add_option("--output", run_args.output, "Output directory");
  run_cmd->add_option("--max-steps", run_args.max_steps, "Override the planner step limit")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run_args.seed, "Query diversification seed");
  run_cmd->add_flag("-v,--verbose", run_args.verbose, "Print planner history");

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "Score a prediction (or trial directories) against ground truth");
  score_cmd->add_option("paths", score_args.paths, "PRED GT, or GT with --trials")->required()->expected(1, 2);
  score_cmd->add_option("--trials", score_args.trials, "Directory of trial run directories");
  score_cmd->add_option("--tolerance", score_args.tolerance, "Numeric match tolerance");
  score_cmd->add_option("--output", score_args.output, "Output directory for score.json");

  ShowArgs show_args;
  auto* show_cmd = app.add_subcommand("show", "Render a table snapshot as Markdown");
  show_cmd->add_option("snapshot", show_args.snapshot, "Snapshot file or run directory")->required();
  show_cmd->add_option("--limit", show_args.limit, "Maximum rows")->check(CLI::NonNegativeNumber);
  show_cmd->add_flag("--pending-only", show_args.pending_only, "Only rows with Pending cells");

  std::string corpus_path;
  auto* validate_cmd = app.add_subcommand("corpus-validate", "Check a corpus file");
  validate_cmd->add_option("corpus", corpus_path, "Corpus JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*run_cmd) return cmd_run(run_args, out, err);
    if (*score_cmd) return cmd_score(score_args, out);
    if (*show_cmd) return cmd_show(show_args, out);
    if (*validate_cmd) return cmd_corpus_validate(corpus_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace tas::cli
