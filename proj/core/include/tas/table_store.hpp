#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tas/filter.hpp"
#include "tas/schema.hpp"

namespace tas {

struct AddResult {
  std::int64_t inserted = 0;
  std::int64_t deduplicated = 0;
};

struct UpdateResult {
  std::int64_t matched = 0;
  std::int64_t modified = 0;
};

using RecordLiteral = std::map<std::string, CellValue>;

// Embedded document table store exposing the six table primitives plus
// snapshot/load. Mutations on one table are serialized; readers get copies
// taken at a single revision. Safe to share across threads.
class TableStore {
 public:
  TableStore();
  ~TableStore();
  TableStore(const TableStore&) = delete;
  TableStore& operator=(const TableStore&) = delete;

  TableId create_table(const Schema& schema);

  AddResult add_records(const TableId& table, std::span<const RecordLiteral> candidates);
  // JSON array of record literals (see parse_record_literal).
  AddResult add_records(const TableId& table, const nlohmann::json& candidates);

  UpdateResult update_records(const TableId& table, const FilterQuery& filter, const UpdateSpec& update);
  UpdateResult update_records(const TableId& table, const nlohmann::json& filter, const nlohmann::json& update);

  std::vector<Record> filter_records(const TableId& table, const FilterQuery& query) const;
  std::vector<Record> filter_records(const TableId& table, const nlohmann::json& query) const;

  std::int64_t count_table(const TableId& table, const FilterQuery& query) const;
  std::int64_t count_table(const TableId& table, const nlohmann::json& query) const;

  std::string show_table(const TableId& table, std::int64_t limit) const;

  Schema schema(const TableId& table) const;
  TableState state(const TableId& table) const;
  std::optional<Record> find_record(const TableId& table, const RecordId& id) const;

  void snapshot(const TableId& table, const std::filesystem::path& path) const;
  TableId load(const std::filesystem::path& path);
  // Registers an existing state (e.g. one decoded from a snapshot).
  TableId adopt(TableState state);

 private:
  struct Table;
  std::shared_ptr<Table> get(const TableId& id) const;

  mutable std::mutex registry_mutex_;
  std::map<TableId, std::shared_ptr<Table>> tables_;
  std::int64_t next_table_ = 1;
};

// Markdown rendering used by show_table: header in schema order, separator,
// then up to `limit` rows. Pending renders empty, NotApplicable as "NA".
// Appends "(showing X of Y rows)" when rows were cut.
std::string render_markdown(const Schema& schema, std::span<const Record> records, std::int64_t limit);

// Snapshot file codec. The body is the canonical (sorted-key, compact) JSON of
// {format_version, schema, records, revision, table_id}; the checksum is the
// lowercase hex CRC32 of that body.
std::string encode_snapshot(const TableState& state);
TableState decode_snapshot(std::string_view bytes);

}  // namespace tas
