#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace tas {

enum class ColumnKind { Key, Constraint, Info };
enum class ValueHint { Text, Number, Url, Email, Date };
enum class TaskMode { Deep, Wide, DeepWide };

std::string_view to_string(ColumnKind kind) noexcept;
std::string_view to_string(ValueHint hint) noexcept;
std::string_view to_string(TaskMode mode) noexcept;
ColumnKind column_kind_from_string(std::string_view s);
ValueHint value_hint_from_string(std::string_view s);
TaskMode task_mode_from_string(std::string_view s);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Info;
  std::string description;
  std::optional<ValueHint> value_hint;

  bool operator==(const ColumnSpec&) const = default;
};

// Query-derived search contract: key columns identify candidates, constraint
// columns must verify, info columns are collected.
struct Schema {
  std::vector<ColumnSpec> columns;
  std::optional<std::int64_t> target_count;
  TaskMode task_mode = TaskMode::Wide;

  std::vector<const ColumnSpec*> key_columns() const;
  std::vector<const ColumnSpec*> non_key_columns() const;
  std::vector<const ColumnSpec*> constraint_columns() const;
  std::vector<const ColumnSpec*> info_columns() const;

  // Case-insensitive lookup.
  const ColumnSpec* find(std::string_view name) const;

  bool operator==(const Schema&) const = default;
};

// Throws InvalidSchema / DuplicateColumn.
void validate_schema(const Schema& schema);

struct Pending {
  bool operator==(const Pending&) const = default;
};
struct NotApplicable {
  bool operator==(const NotApplicable&) const = default;
};
struct Filled {
  std::string value;
  std::optional<std::string> source_url;
  std::int64_t filled_at_step = 0;

  bool operator==(const Filled&) const = default;
};

using CellValue = std::variant<Pending, NotApplicable, Filled>;

inline bool is_pending(const CellValue& c) { return std::holds_alternative<Pending>(c); }
inline bool is_na(const CellValue& c) { return std::holds_alternative<NotApplicable>(c); }
inline const Filled* as_filled(const CellValue& c) { return std::get_if<Filled>(&c); }

// Same state and same value; provenance is ignored.
bool same_content(const CellValue& a, const CellValue& b);

struct RecordId {
  std::string value;
  auto operator<=>(const RecordId&) const = default;
};

struct TableId {
  std::string value;
  auto operator<=>(const TableId&) const = default;
};

struct Record {
  RecordId record_id;
  std::map<std::string, std::string> key;
  std::map<std::string, CellValue> cells;
  std::string dedup_key;

  // Key value or cell for `column` rendered as the store compares it:
  // nullopt for Pending, "NA" for NotApplicable.
  std::optional<std::string> raw_value(const std::string& column) const;

  bool operator==(const Record&) const = default;
};

struct TableState {
  TableId table_id;
  Schema schema;
  std::vector<Record> records;
  std::int64_t revision = 0;

  bool operator==(const TableState&) const = default;
};

inline constexpr char kDedupSeparator = '\x1F';

// normalize() of each key value in schema column order, joined by 0x1F.
std::string make_dedup_key(const Schema& schema, const std::map<std::string, std::string>& key);

// Rule used to verify a constraint cell against its column: the value's tokens
// must appear as a contiguous run inside the column description's tokens.
bool satisfies_constraint(const ColumnSpec& column, std::string_view value);

// JSON mappings. Enum strings are lowercase ("key", "deep_wide", ...).
nlohmann::json to_json(const ColumnSpec& c);
nlohmann::json to_json(const Schema& s);
nlohmann::json to_json(const CellValue& c);
nlohmann::json to_json(const Record& r);
nlohmann::json to_json(const TableState& t);
Schema schema_from_json(const nlohmann::json& j);
CellValue cell_from_json(const nlohmann::json& j);
Record record_from_json(const nlohmann::json& j);
TableState table_state_from_json(const nlohmann::json& j);

}  // namespace tas
