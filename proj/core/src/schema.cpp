#include "tas/schema.hpp"

#include <set>

#include "tas/error.hpp"
#include "tas/text.hpp"

namespace tas {

using nlohmann::json;

std::string_view to_string(ColumnKind kind) noexcept {
  switch (kind) {
    case ColumnKind::Key: return "key";
    case ColumnKind::Constraint: return "constraint";
    case ColumnKind::Info: return "info";
  }
  return "info";
}

std::string_view to_string(ValueHint hint) noexcept {
  switch (hint) {
    case ValueHint::Text: return "text";
    case ValueHint::Number: return "number";
    case ValueHint::Url: return "url";
    case ValueHint::Email: return "email";
    case ValueHint::Date: return "date";
  }
  return "text";
}

std::string_view to_string(TaskMode mode) noexcept {
  switch (mode) {
    case TaskMode::Deep: return "deep";
    case TaskMode::Wide: return "wide";
    case TaskMode::DeepWide: return "deep_wide";
  }
  return "wide";
}

ColumnKind column_kind_from_string(std::string_view s) {
  const std::string f = text::fold_case(s);
  if (f == "key") return ColumnKind::Key;
  if (f == "constraint") return ColumnKind::Constraint;
  if (f == "info") return ColumnKind::Info;
  fail(ErrorCode::InvalidSchema, "unknown column kind '" + std::string(s) + "'");
}

ValueHint value_hint_from_string(std::string_view s) {
  const std::string f = text::fold_case(s);
  if (f == "text") return ValueHint::Text;
  if (f == "number") return ValueHint::Number;
  if (f == "url") return ValueHint::Url;
  if (f == "email") return ValueHint::Email;
  if (f == "date") return ValueHint::Date;
  fail(ErrorCode::InvalidSchema, "unknown value hint '" + std::string(s) + "'");
}

TaskMode task_mode_from_string(std::string_view s) {
  const std::string f = text::fold_case(s);
  if (f == "deep") return TaskMode::Deep;
  if (f == "wide") return TaskMode::Wide;
  if (f == "deep_wide" || f == "deepwide") return TaskMode::DeepWide;
  fail(ErrorCode::InvalidSchema, "unknown task mode '" + std::string(s) + "'");
}

namespace {

std::vector<const ColumnSpec*> columns_where(const Schema& s, bool (*pred)(ColumnKind)) {
  std::vector<const ColumnSpec*> out;
  for (const auto& c : s.columns) {
    if (pred(c.kind)) out.push_back(&c);
  }
  return out;
}

}  // namespace

std::vector<const ColumnSpec*> Schema::key_columns() const {
  return columns_where(*this, [](ColumnKind k) { return k == ColumnKind::Key; });
}
std::vector<const ColumnSpec*> Schema::non_key_columns() const {
  return columns_where(*this, [](ColumnKind k) { return k != ColumnKind::Key; });
}
std::vector<const ColumnSpec*> Schema::constraint_columns() const {
  return columns_where(*this, [](ColumnKind k) { return k == ColumnKind::Constraint; });
}
std::vector<const ColumnSpec*> Schema::info_columns() const {
  return columns_where(*this, [](ColumnKind k) { return k == ColumnKind::Info; });
}

const ColumnSpec* Schema::find(std::string_view name) const {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  const std::string folded = text::fold_case(name);
  for (const auto& c : columns) {
    if (text::fold_case(c.name) == folded) return &c;
  }
  return nullptr;
}

void validate_schema(const Schema& schema) {
  std::set<std::string> seen;
  for (const auto& c : schema.columns) {
    if (text::trim(c.name).empty()) fail(ErrorCode::InvalidSchema, "column name must be non-empty");
    if (!seen.insert(text::fold_case(c.name)).second) {
      fail(ErrorCode::DuplicateColumn, "duplicate column '" + c.name + "'");
    }
  }
  if (schema.key_columns().empty()) fail(ErrorCode::InvalidSchema, "schema needs at least one key column");
  const bool has_constraint = !schema.constraint_columns().empty();
  const bool has_info = !schema.info_columns().empty();
  switch (schema.task_mode) {
    case TaskMode::Deep:
      if (!has_constraint) fail(ErrorCode::InvalidSchema, "deep mode needs a constraint column");
      break;
    case TaskMode::Wide:
      if (!has_info) fail(ErrorCode::InvalidSchema, "wide mode needs an info column");
      break;
    case TaskMode::DeepWide:
      if (!has_constraint || !has_info) {
        fail(ErrorCode::InvalidSchema, "deep_wide mode needs constraint and info columns");
      }
      break;
  }
  if (schema.target_count && *schema.target_count <= 0) {
    fail(ErrorCode::InvalidSchema, "target_count must be positive");
  }
}

bool same_content(const CellValue& a, const CellValue& b) {
  if (a.index() != b.index()) return false;
  if (const auto* fa = as_filled(a)) return fa->value == as_filled(b)->value;
  return true;
}

std::optional<std::string> Record::raw_value(const std::string& column) const {
  if (auto it = key.find(column); it != key.end()) return it->second;
  auto it = cells.find(column);
  if (it == cells.end() || is_pending(it->second)) return std::nullopt;
  if (is_na(it->second)) return std::string("NA");
  return as_filled(it->second)->value;
}

std::string make_dedup_key(const Schema& schema, const std::map<std::string, std::string>& key) {
  std::string out;
  bool first = true;
  for (const auto* col : schema.key_columns()) {
    if (!first) out.push_back(kDedupSeparator);
    first = false;
    auto it = key.find(col->name);
    if (it != key.end()) out += text::normalize(it->second);
  }
  return out;
}

bool satisfies_constraint(const ColumnSpec& column, std::string_view value) {
  return text::contains_token_phrase(column.description, value);
}

// ---- JSON -----------------------------------------------------------------

json to_json(const ColumnSpec& c) {
  json j = {{"name", c.name}, {"kind", to_string(c.kind)}, {"description", c.description}};
  if (c.value_hint) j["value_hint"] = to_string(*c.value_hint);
  return j;
}

json to_json(const Schema& s) {
  json cols = json::array();
  for (const auto& c : s.columns) cols.push_back(to_json(c));
  json j = {{"columns", std::move(cols)}, {"task_mode", to_string(s.task_mode)}};
  if (s.target_count) j["target_count"] = *s.target_count;
  return j;
}

json to_json(const CellValue& c) {
  if (is_pending(c)) return {{"state", "pending"}};
  if (is_na(c)) return {{"state", "na"}};
  const auto& f = *as_filled(c);
  json j = {{"state", "filled"}, {"value", f.value}, {"filled_at_step", f.filled_at_step}};
  if (f.source_url) j["source_url"] = *f.source_url;
  return j;
}

json to_json(const Record& r) {
  json cells = json::object();
  for (const auto& [name, cell] : r.cells) cells[name] = to_json(cell);
  return {{"record_id", r.record_id.value}, {"key", r.key}, {"cells", std::move(cells)},
          {"dedup_key", r.dedup_key}};
}

json to_json(const TableState& t) {
  json records = json::array();
  for (const auto& r : t.records) records.push_back(to_json(r));
  return {{"table_id", t.table_id.value}, {"schema", to_json(t.schema)},
          {"records", std::move(records)}, {"revision", t.revision}};
}

namespace {

const json& require(const json& j, const char* field, ErrorCode code) {
  if (!j.is_object() || !j.contains(field)) fail(code, std::string("missing field '") + field + "'");
  return j.at(field);
}

std::string require_string(const json& j, const char* field, ErrorCode code) {
  const json& v = require(j, field, code);
  if (!v.is_string()) fail(code, std::string("field '") + field + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

Schema schema_from_json(const json& j) {
  constexpr auto code = ErrorCode::InvalidSchema;
  const json& cols = require(j, "columns", code);
  if (!cols.is_array()) fail(code, "'columns' must be an array");
  Schema s;
  for (const auto& cj : cols) {
    ColumnSpec c;
    c.name = require_string(cj, "name", code);
    c.kind = column_kind_from_string(require_string(cj, "kind", code));
    if (cj.contains("description")) {
      if (!cj["description"].is_string()) fail(code, "'description' must be a string");
      c.description = cj["description"].get<std::string>();
    }
    if (cj.contains("value_hint") && !cj["value_hint"].is_null()) {
      if (!cj["value_hint"].is_string()) fail(code, "'value_hint' must be a string");
      c.value_hint = value_hint_from_string(cj["value_hint"].get<std::string>());
    }
    s.columns.push_back(std::move(c));
  }
  if (j.contains("task_mode")) s.task_mode = task_mode_from_string(require_string(j, "task_mode", code));
  if (j.contains("target_count") && !j["target_count"].is_null()) {
    if (!j["target_count"].is_number_integer()) fail(code, "'target_count' must be an integer");
    s.target_count = j["target_count"].get<std::int64_t>();
  }
  return s;
}

CellValue cell_from_json(const json& j) {
  constexpr auto code = ErrorCode::InvalidValue;
  const std::string state = require_string(j, "state", code);
  if (state == "pending") return Pending{};
  if (state == "na") return NotApplicable{};
  if (state != "filled") fail(code, "unknown cell state '" + state + "'");
  Filled f;
  f.value = require_string(j, "value", code);
  if (text::trim(f.value).empty()) fail(code, "filled value must be non-empty");
  if (j.contains("source_url")) f.source_url = require_string(j, "source_url", code);
  const json& step = require(j, "filled_at_step", code);
  if (!step.is_number_integer() || step.get<std::int64_t>() < 0) fail(code, "bad filled_at_step");
  f.filled_at_step = step.get<std::int64_t>();
  return f;
}

Record record_from_json(const json& j) {
  constexpr auto code = ErrorCode::InvalidValue;
  Record r;
  r.record_id.value = require_string(j, "record_id", code);
  const json& key = require(j, "key", code);
  if (!key.is_object()) fail(code, "'key' must be an object");
  for (const auto& [k, v] : key.items()) {
    if (!v.is_string()) fail(code, "key values must be strings");
    r.key[k] = v.get<std::string>();
  }
  const json& cells = require(j, "cells", code);
  if (!cells.is_object()) fail(code, "'cells' must be an object");
  for (const auto& [k, v] : cells.items()) r.cells[k] = cell_from_json(v);
  r.dedup_key = require_string(j, "dedup_key", code);
  return r;
}

TableState table_state_from_json(const json& j) {
  constexpr auto code = ErrorCode::InvalidValue;
  TableState t;
  t.table_id.value = require_string(j, "table_id", code);
  t.schema = schema_from_json(require(j, "schema", code));
  const json& records = require(j, "records", code);
  if (!records.is_array()) fail(code, "'records' must be an array");
  for (const auto& rj : records) t.records.push_back(record_from_json(rj));
  const json& rev = require(j, "revision", code);
  if (!rev.is_number_integer() || rev.get<std::int64_t>() < 0) fail(code, "bad revision");
  t.revision = rev.get<std::int64_t>();
  return t;
}

}  // namespace tas
