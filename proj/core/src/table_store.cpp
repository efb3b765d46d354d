#include "tas/table_store.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <shared_mutex>
#include <sstream>

#include "tas/error.hpp"
#include "tas/text.hpp"

namespace tas {

using nlohmann::json;

struct TableStore::Table {
  mutable std::shared_mutex mutex;
  TableState state;
  std::set<std::string> dedup_keys;
  std::int64_t next_record = 1;
};

namespace {

std::int64_t record_sequence(const RecordId& id) {
  if (id.value.size() < 2 || id.value.front() != 'r') return 0;
  std::int64_t n = 0;
  for (std::size_t i = 1; i < id.value.size(); ++i) {
    const char c = id.value[i];
    if (c < '0' || c > '9') return 0;
    n = n * 10 + (c - '0');
  }
  return n;
}

Record build_record(const Schema& schema, const RecordLiteral& literal, std::int64_t seq) {
  Record r;
  for (const auto& [name, _] : literal) {
    if (schema.find(name) == nullptr) fail(ErrorCode::UnknownColumn, "unknown column '" + name + "'");
  }
  for (const auto* col : schema.key_columns()) {
    const CellValue* v = nullptr;
    for (const auto& [name, cell] : literal) {
      if (schema.find(name) == col) v = &cell;
    }
    const Filled* f = v ? as_filled(*v) : nullptr;
    if (f == nullptr || text::trim(f->value).empty()) {
      fail(ErrorCode::MissingKey, "record literal lacks key column '" + col->name + "'");
    }
    r.key[col->name] = f->value;
  }
  for (const auto* col : schema.non_key_columns()) {
    CellValue cell = Pending{};
    for (const auto& [name, value] : literal) {
      if (schema.find(name) == col) cell = value;
    }
    r.cells[col->name] = std::move(cell);
  }
  r.dedup_key = make_dedup_key(schema, r.key);
  r.record_id.value = "r" + std::to_string(seq);
  return r;
}

std::string hex32(unsigned long v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08lx", v & 0xffffffffUL);
  return buf;
}

std::string crc32_hex(std::string_view body) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
  return hex32(crc);
}

void check_state_invariants(const TableState& t) {
  validate_schema(t.schema);
  std::set<std::string> keys;
  std::set<std::string> ids;
  const auto non_key = t.schema.non_key_columns();
  for (const auto& r : t.records) {
    if (!ids.insert(r.record_id.value).second) fail(ErrorCode::InvalidValue, "duplicate record id");
    if (r.key.size() != t.schema.key_columns().size()) fail(ErrorCode::InvalidValue, "key arity mismatch");
    for (const auto* col : t.schema.key_columns()) {
      if (!r.key.contains(col->name)) fail(ErrorCode::InvalidValue, "record misses key " + col->name);
    }
    if (r.cells.size() != non_key.size()) fail(ErrorCode::InvalidValue, "cell arity mismatch");
    for (const auto* col : non_key) {
      if (!r.cells.contains(col->name)) fail(ErrorCode::InvalidValue, "record misses cell " + col->name);
    }
    if (r.dedup_key != make_dedup_key(t.schema, r.key)) fail(ErrorCode::InvalidValue, "dedup key mismatch");
    if (!keys.insert(r.dedup_key).second) fail(ErrorCode::InvalidValue, "duplicate dedup key");
  }
}

}  // namespace

TableStore::TableStore() = default;
TableStore::~TableStore() = default;

std::shared_ptr<TableStore::Table> TableStore::get(const TableId& id) const {
  std::lock_guard lock(registry_mutex_);
  auto it = tables_.find(id);
  if (it == tables_.end()) fail(ErrorCode::TableNotFound, "no table '" + id.value + "'");
  return it->second;
}

TableId TableStore::create_table(const Schema& schema) {
  validate_schema(schema);
  auto table = std::make_shared<Table>();
  table->state.schema = schema;
  std::lock_guard lock(registry_mutex_);
  TableId id{"t" + std::to_string(next_table_++)};
  while (tables_.contains(id)) id = TableId{"t" + std::to_string(next_table_++)};
  table->state.table_id = id;
  tables_.emplace(id, std::move(table));
  return id;
}

AddResult TableStore::add_records(const TableId& id, std::span<const RecordLiteral> candidates) {
  auto table = get(id);
  std::unique_lock lock(table->mutex);
  const Schema& schema = table->state.schema;

  // Validate the whole batch before touching state.
  std::vector<Record> staged;
  staged.reserve(candidates.size());
  std::int64_t seq = table->next_record;
  for (const auto& lit : candidates) staged.push_back(build_record(schema, lit, seq++));

  AddResult result;
  std::int64_t next = table->next_record;
  for (auto& r : staged) {
    if (table->dedup_keys.contains(r.dedup_key)) {
      ++result.deduplicated;
      continue;
    }
    r.record_id.value = "r" + std::to_string(next++);
    table->dedup_keys.insert(r.dedup_key);
    table->state.records.push_back(std::move(r));
    ++result.inserted;
  }
  table->next_record = next;
  if (result.inserted > 0) ++table->state.revision;
  return result;
}

AddResult TableStore::add_records(const TableId& id, const json& candidates) {
  if (!candidates.is_array()) fail(ErrorCode::InvalidValue, "add_records expects a JSON array");
  const Schema s = schema(id);
  std::vector<RecordLiteral> literals;
  for (const auto& c : candidates) literals.push_back(parse_record_literal(c, s));
  return add_records(id, literals);
}

UpdateResult TableStore::update_records(const TableId& id, const FilterQuery& filter, const UpdateSpec& update) {
  auto table = get(id);
  std::unique_lock lock(table->mutex);
  UpdateResult result;
  for (auto& r : table->state.records) {
    if (!filter.matches(r)) continue;
    ++result.matched;
    bool changed = false;
    for (const auto& [col, value] : update.set) {
      auto it = r.cells.find(col);
      if (it == r.cells.end()) fail(ErrorCode::UnknownColumn, "unknown column '" + col + "'");
      if (!same_content(it->second, value)) changed = true;
    }
    if (!changed) continue;
    for (const auto& [col, value] : update.set) {
      auto& cell = r.cells[col];
      if (!same_content(cell, value)) cell = value;
    }
    ++result.modified;
  }
  if (result.modified > 0) ++table->state.revision;
  return result;
}

UpdateResult TableStore::update_records(const TableId& id, const json& filter, const json& update) {
  const Schema s = schema(id);
  return update_records(id, FilterQuery::parse(filter, s), UpdateSpec::parse(update, s));
}

std::vector<Record> TableStore::filter_records(const TableId& id, const FilterQuery& query) const {
  auto table = get(id);
  std::shared_lock lock(table->mutex);
  std::vector<Record> out;
  for (const auto& r : table->state.records) {
    if (query.matches(r)) out.push_back(r);
  }
  return out;
}

std::vector<Record> TableStore::filter_records(const TableId& id, const json& query) const {
  return filter_records(id, FilterQuery::parse(query, schema(id)));
}

std::int64_t TableStore::count_table(const TableId& id, const FilterQuery& query) const {
  auto table = get(id);
  std::shared_lock lock(table->mutex);
  std::int64_t n = 0;
  for (const auto& r : table->state.records) {
    if (query.matches(r)) ++n;
  }
  return n;
}

std::int64_t TableStore::count_table(const TableId& id, const json& query) const {
  return count_table(id, FilterQuery::parse(query, schema(id)));
}

std::string TableStore::show_table(const TableId& id, std::int64_t limit) const {
  auto table = get(id);
  std::shared_lock lock(table->mutex);
  return render_markdown(table->state.schema, table->state.records, limit);
}

Schema TableStore::schema(const TableId& id) const {
  auto table = get(id);
  std::shared_lock lock(table->mutex);
  return table->state.schema;
}

TableState TableStore::state(const TableId& id) const {
  auto table = get(id);
  std::shared_lock lock(table->mutex);
  return table->state;
}

std::optional<Record> TableStore::find_record(const TableId& id, const RecordId& rid) const {
  auto table = get(id);
  std::shared_lock lock(table->mutex);
  for (const auto& r : table->state.records) {
    if (r.record_id == rid) return r;
  }
  return std::nullopt;
}

void TableStore::snapshot(const TableId& id, const std::filesystem::path& path) const {
  const std::string bytes = encode_snapshot(state(id));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
}

TableId TableStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return adopt(decode_snapshot(buf.str()));
}

TableId TableStore::adopt(TableState state) {
  check_state_invariants(state);
  auto table = std::make_shared<Table>();
  for (const auto& r : state.records) {
    table->dedup_keys.insert(r.dedup_key);
    table->next_record = std::max(table->next_record, record_sequence(r.record_id) + 1);
  }
  std::lock_guard lock(registry_mutex_);
  if (state.table_id.value.empty() || tables_.contains(state.table_id)) {
    TableId id{"t" + std::to_string(next_table_++)};
    while (tables_.contains(id)) id = TableId{"t" + std::to_string(next_table_++)};
    state.table_id = id;
  }
  const TableId id = state.table_id;
  table->state = std::move(state);
  tables_.emplace(id, std::move(table));
  return id;
}

std::string render_markdown(const Schema& schema, std::span<const Record> records, std::int64_t limit) {
  const auto escape = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '|') out += "\\|";
      else if (c == '\n' || c == '\r') out.push_back(' ');
      else out.push_back(c);
    }
    return out;
  };
  std::string out = "|";
  std::string sep = "|";
  for (const auto& c : schema.columns) {
    out += " " + escape(c.name) + " |";
    sep += " --- |";
  }
  out += "\n" + sep + "\n";
  const auto total = static_cast<std::int64_t>(records.size());
  const std::int64_t shown = std::min(std::max<std::int64_t>(limit, 0), total);
  for (std::int64_t i = 0; i < shown; ++i) {
    const Record& r = records[static_cast<std::size_t>(i)];
    out += "|";
    for (const auto& c : schema.columns) {
      out += " " + escape(r.raw_value(c.name).value_or("")) + " |";
    }
    out += "\n";
  }
  if (shown < total) {
    out += "(showing " + std::to_string(shown) + " of " + std::to_string(total) + " rows)\n";
  }
  return out;
}

std::string encode_snapshot(const TableState& state) {
  json body = to_json(state);
  body["format_version"] = 1;
  const std::string canonical = body.dump();
  body["checksum"] = crc32_hex(canonical);
  return body.dump() + "\n";
}

TableState decode_snapshot(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptSnapshot, std::string("unparseable snapshot: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("checksum") || !doc["checksum"].is_string()) {
    fail(ErrorCode::CorruptSnapshot, "snapshot lacks a checksum");
  }
  try {
    // Any byte that deviates from the canonical encoding is corruption.
    if (doc.dump() + "\n" != bytes) fail(ErrorCode::CorruptSnapshot, "non-canonical snapshot bytes");
    const std::string checksum = doc["checksum"].get<std::string>();
    json body = doc;
    body.erase("checksum");
    if (crc32_hex(body.dump()) != checksum) fail(ErrorCode::CorruptSnapshot, "checksum mismatch");
    if (!body.contains("format_version") || body["format_version"] != 1) {
      fail(ErrorCode::CorruptSnapshot, "unsupported format_version");
    }
    TableState state = table_state_from_json(body);
    check_state_invariants(state);
    return state;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptSnapshot) throw;
    fail(ErrorCode::CorruptSnapshot, e.what());
  } catch (const std::exception& e) {
    fail(ErrorCode::CorruptSnapshot, e.what());
  }
}

}  // namespace tas
