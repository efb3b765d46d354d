#include "tas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>

#include "tas/error.hpp"

namespace tas {

using nlohmann::json;

// ---- answers ----------------------------------------------------------------

json to_json(const Answer& answer) {
  if (const auto* d = std::get_if<DeepAnswer>(&answer)) {
    return {{"type", "deep"},
            {"entity", d->entity},
            {"label", d->label},
            {"evidence_urls", d->evidence_urls},
            {"low_confidence", d->low_confidence},
            {"unknown", d->unknown}};
  }
  const auto& t = std::get<TableAnswer>(answer);
  return {{"type", "table"}, {"markdown", t.markdown}, {"table", t.table}};
}

Answer answer_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidValue, "answer must be an object");
  const std::string type = j.value("type", "");
  if (type == "deep") {
    DeepAnswer d;
    d.entity = j.value("entity", std::map<std::string, std::string>{});
    d.label = j.value("label", "");
    d.evidence_urls = j.value("evidence_urls", std::vector<std::string>{});
    d.low_confidence = j.value("low_confidence", false);
    d.unknown = j.value("unknown", false);
    return d;
  }
  if (type == "table") return TableAnswer{j.value("markdown", ""), j.value("table", json::object())};
  fail(ErrorCode::InvalidValue, "unknown answer type '" + type + "'");
}

// ---- ground truth -----------------------------------------------------------

GroundTruthTable ground_truth_from_json(const json& j) {
  constexpr auto code = ErrorCode::InvalidValue;
  if (!j.is_object()) fail(code, "ground truth must be an object");
  GroundTruthTable gt;
  try {
    gt.key_columns = j.at("key_columns").get<std::vector<std::string>>();
    gt.columns = j.at("columns").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    fail(code, std::string("ground truth header: ") + e.what());
  }
  if (gt.key_columns.empty()) fail(code, "ground truth needs key columns");
  for (const auto& k : gt.key_columns) {
    if (std::find(gt.columns.begin(), gt.columns.end(), k) == gt.columns.end()) {
      fail(code, "key column '" + k + "' missing from columns");
    }
  }
  if (!j.contains("rows") || !j["rows"].is_array()) fail(code, "ground truth needs a rows list");
  std::set<std::vector<std::string>> keys;
  for (const auto& rj : j["rows"]) {
    if (!rj.is_object()) fail(code, "ground-truth row must be an object");
    std::map<std::string, std::string> row;
    for (const auto& c : gt.columns) {
      if (!rj.contains(c)) fail(code, "ground-truth row misses column '" + c + "'");
      const json& v = rj[c];
      row[c] = v.is_string() ? v.get<std::string>() : v.is_null() ? std::string("NA") : v.dump();
    }
    std::vector<std::string> tuple;
    for (const auto& k : gt.key_columns) tuple.push_back(normalize(row[k]));
    if (!keys.insert(tuple).second) fail(code, "duplicate ground-truth key");
    gt.rows.push_back(std::move(row));
  }
  return gt;
}

GroundTruthTable load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  try {
    return ground_truth_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidValue, "'" + path.string() + "': " + e.what());
  }
}

json to_json(const GroundTruthTable& gt) {
  json rows = json::array();
  for (const auto& r : gt.rows) rows.push_back(r);
  return {{"key_columns", gt.key_columns}, {"columns", gt.columns}, {"rows", std::move(rows)}};
}

json table_to_ground_truth_json(const TableState& table) {
  json keys = json::array();
  json cols = json::array();
  for (const auto& c : table.schema.columns) {
    cols.push_back(c.name);
    if (c.kind == ColumnKind::Key) keys.push_back(c.name);
  }
  json rows = json::array();
  for (const auto& r : table.records) {
    json row = json::object();
    for (const auto& c : table.schema.columns) row[c.name] = r.raw_value(c.name).value_or("");
    rows.push_back(std::move(row));
  }
  return {{"key_columns", std::move(keys)}, {"columns", std::move(cols)}, {"rows", std::move(rows)}};
}

TableState table_from_ground_truth(const GroundTruthTable& gt) {
  TableState t;
  for (const auto& c : gt.columns) {
    const bool is_key = std::find(gt.key_columns.begin(), gt.key_columns.end(), c) != gt.key_columns.end();
    t.schema.columns.push_back({c, is_key ? ColumnKind::Key : ColumnKind::Info, "", std::nullopt});
  }
  std::int64_t n = 0;
  for (const auto& row : gt.rows) {
    Record r;
    r.record_id.value = "r" + std::to_string(++n);
    for (const auto& c : t.schema.columns) {
      const std::string& v = row.at(c.name);
      if (c.kind == ColumnKind::Key) {
        r.key[c.name] = v;
      } else if (text::trim(v).empty()) {
        r.cells[c.name] = Pending{};
      } else if (v == "NA" || v == "N/A") {
        r.cells[c.name] = NotApplicable{};
      } else {
        r.cells[c.name] = Filled{v, std::nullopt, 0};
      }
    }
    r.dedup_key = make_dedup_key(t.schema, r.key);
    t.records.push_back(std::move(r));
  }
  return t;
}

// ---- scoring ----------------------------------------------------------------

json to_json(const MetricsReport& r) {
  return {{"col_p", r.col_p},   {"col_r", r.col_r},   {"col_f1", r.col_f1},   {"row_p", r.row_p},
          {"row_r", r.row_r},   {"row_f1", r.row_f1}, {"item_p", r.item_p},   {"item_r", r.item_r},
          {"item_f1", r.item_f1}, {"success", r.success}, {"success_rate", r.success_rate},
          {"correct_cells", r.correct_cells}, {"total_pred_cells", r.total_pred_cells}};
}

double f1_score(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

bool match_cell(const CellValue& pred, std::string_view gt, const MatchConfig& config) {
  if (is_pending(pred)) return false;
  const std::string g = normalize(gt);
  if (is_na(pred)) return g == "na" || g == "n/a";
  const std::string& value = as_filled(pred)->value;
  if (config.judge) return config.judge(value, gt);
  const std::string p = normalize(value);
  const auto a = text::parse_decimal(p);
  const auto b = text::parse_decimal(g);
  if (a && b) return std::fabs(*a - *b) <= config.numeric_tolerance;
  return p == g;
}

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

CellValue pred_cell(const ColumnSpec& col, const Record& r) {
  if (col.kind == ColumnKind::Key) {
    auto it = r.key.find(col.name);
    if (it == r.key.end()) return Pending{};
    return Filled{it->second, std::nullopt, 0};
  }
  auto it = r.cells.find(col.name);
  return it == r.cells.end() ? CellValue{Pending{}} : it->second;
}

}  // namespace

MetricsReport score_table(const TableState& pred, const GroundTruthTable& gt, const MatchConfig& config) {
  std::map<std::string, const ColumnSpec*> cols;
  for (const auto& c : gt.columns) {
    const ColumnSpec* spec = pred.schema.find(c);
    if (spec == nullptr) fail(ErrorCode::ColumnMismatch, "prediction lacks column '" + c + "'");
    cols[c] = spec;
  }
  std::vector<std::string> non_key;
  for (const auto& c : gt.columns) {
    if (std::find(gt.key_columns.begin(), gt.key_columns.end(), c) == gt.key_columns.end()) non_key.push_back(c);
  }

  std::map<std::vector<std::string>, std::size_t> gt_index;
  for (std::size_t i = 0; i < gt.rows.size(); ++i) {
    std::vector<std::string> tuple;
    for (const auto& k : gt.key_columns) tuple.push_back(normalize(gt.rows[i].at(k)));
    gt_index.emplace(std::move(tuple), i);
  }

  std::int64_t matched = 0, correct = 0, full_rows = 0;
  std::set<std::size_t> used;
  for (const auto& r : pred.records) {
    std::vector<std::string> tuple;
    bool keyed = true;
    for (const auto& k : gt.key_columns) {
      const CellValue v = pred_cell(*cols[k], r);
      const Filled* f = as_filled(v);
      if (f == nullptr) {
        keyed = false;
        break;
      }
      tuple.push_back(normalize(f->value));
    }
    if (!keyed) continue;
    auto it = gt_index.find(tuple);
    if (it == gt_index.end() || !used.insert(it->second).second) continue;
    ++matched;
    const auto& gt_row = gt.rows[it->second];
    std::int64_t row_correct = 0;
    for (const auto& c : non_key) row_correct += match_cell(pred_cell(*cols[c], r), gt_row.at(c), config) ? 1 : 0;
    correct += row_correct;
    if (row_correct == static_cast<std::int64_t>(non_key.size())) ++full_rows;
  }

  const auto pred_rows = static_cast<std::int64_t>(pred.records.size());
  const auto gt_rows = static_cast<std::int64_t>(gt.rows.size());
  const auto nk = static_cast<std::int64_t>(non_key.size());
  MetricsReport m;
  m.col_p = ratio(matched, pred_rows);
  m.col_r = ratio(matched, gt_rows);
  m.col_f1 = f1_score(m.col_p, m.col_r);
  m.row_p = ratio(full_rows, pred_rows);
  m.row_r = ratio(full_rows, gt_rows);
  m.row_f1 = f1_score(m.row_p, m.row_r);
  m.item_p = ratio(correct, pred_rows * nk);
  m.item_r = ratio(correct, gt_rows * nk);
  m.item_f1 = f1_score(m.item_p, m.item_r);
  m.success = m.row_f1 == 1.0;
  m.success_rate = m.success ? 1.0 : 0.0;
  m.correct_cells = correct;
  m.total_pred_cells = pred_rows * nk;
  return m;
}

std::int64_t num_at_k(std::span<const MetricsReport> reports) {
  if (reports.empty()) fail(ErrorCode::EmptyTrialSet, "num_at_k needs at least one trial");
  std::int64_t best = 0;
  for (const auto& r : reports) best = std::max(best, r.correct_cells);
  return best;
}

MetricsReport aggregate(std::span<const MetricsReport> reports, AggregateMode mode) {
  if (reports.empty()) fail(ErrorCode::EmptyTrialSet, "aggregate needs at least one trial");
  using Field = double MetricsReport::*;
  static constexpr Field fields[] = {&MetricsReport::col_p,  &MetricsReport::col_r,  &MetricsReport::col_f1,
                                     &MetricsReport::row_p,  &MetricsReport::row_r,  &MetricsReport::row_f1,
                                     &MetricsReport::item_p, &MetricsReport::item_r, &MetricsReport::item_f1,
                                     &MetricsReport::success_rate};
  MetricsReport out = reports.front();
  const auto n = static_cast<double>(reports.size());
  if (mode == AggregateMode::Avg) {
    // first + mean of differences keeps the mean of identical values exact
    for (Field f : fields) {
      double diff = 0;
      for (const auto& r : reports) diff += r.*f - reports.front().*f;
      out.*f = reports.front().*f + diff / n;
    }
    double cc = 0, tc = 0;
    for (const auto& r : reports) {
      cc += static_cast<double>(r.correct_cells - reports.front().correct_cells);
      tc += static_cast<double>(r.total_pred_cells - reports.front().total_pred_cells);
    }
    out.correct_cells = std::llround(static_cast<double>(reports.front().correct_cells) + cc / n);
    out.total_pred_cells = std::llround(static_cast<double>(reports.front().total_pred_cells) + tc / n);
    out.success = std::all_of(reports.begin(), reports.end(), [](const MetricsReport& r) { return r.success; });
  } else {
    for (const auto& r : reports) {
      for (Field f : fields) out.*f = std::max(out.*f, r.*f);
      out.correct_cells = std::max(out.correct_cells, r.correct_cells);
      out.total_pred_cells = std::max(out.total_pred_cells, r.total_pred_cells);
      out.success = out.success || r.success;
    }
  }
  return out;
}

bool pass_at_n(std::span<const DeepAnswer> answers, std::string_view gt_answer, const MatchConfig& config) {
  if (answers.empty()) fail(ErrorCode::EmptyTrialSet, "pass_at_n needs at least one answer");
  const std::string g = normalize(gt_answer);
  for (const auto& a : answers) {
    if (a.unknown) continue;
    if (config.judge ? config.judge(a.label, gt_answer) : normalize(a.label) == g) return true;
  }
  return false;
}

std::string_view to_string(Difficulty d) noexcept {
  switch (d) {
    case Difficulty::Easy: return "Easy";
    case Difficulty::MedEasy: return "MedEasy";
    case Difficulty::Medium: return "Medium";
    case Difficulty::MedHard: return "MedHard";
    case Difficulty::Hard: return "Hard";
  }
  return "Easy";
}

std::vector<Difficulty> bucket_difficulty(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::PreconditionViolation, "bucket_difficulty needs values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<std::int64_t>(sorted.size());
  std::vector<double> cuts;
  for (int pct : {20, 40, 60, 80}) {
    const std::int64_t rank = (pct * n + 99) / 100;  // ceil(p * N)
    cuts.push_back(sorted[static_cast<std::size_t>(std::max<std::int64_t>(rank, 1) - 1)]);
  }
  std::vector<Difficulty> out;
  out.reserve(values.size());
  for (double v : values) {
    int tier = 0;
    for (double c : cuts) tier += c < v ? 1 : 0;
    out.push_back(static_cast<Difficulty>(tier));
  }
  return out;
}

}  // namespace tas
