#pragma once

#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "tas/schema.hpp"

namespace tas {

// Filter documents, Mongo-style:
//   {}                                   matches everything
//   {"City": "Monterey"}                 raw equality (case-sensitive)
//   {"City": {"$exists": false}}         cell is Pending
//   {"City": {"$ne": "NA"}}              non-Pending and not equal
//   {"$and": [...]}, {"$or": [...]}      non-empty arrays of filters
// Several members in one object are conjunctive. Equality and $ne operands
// may be strings or numbers (numbers compare by their JSON text). Any other
// operator is MalformedOperator; a field outside the schema is UnknownColumn.
class FilterQuery {
 public:
  struct Node;

  static FilterQuery parse(const nlohmann::json& doc, const Schema& schema);

  // Matches every record.
  FilterQuery();

  bool matches(const Record& record) const;
  const nlohmann::json& source() const noexcept { return source_; }

 private:
  std::shared_ptr<const Node> root_;
  nlohmann::json source_;
};

// Parses `query` against `schema` and evaluates it on `record`.
bool eval_filter(const nlohmann::json& query, const Schema& schema, const Record& record);

// {"$set": {column: cell-literal, ...}} and nothing else.
struct UpdateSpec {
  std::map<std::string, CellValue> set;  // canonical column names

  static UpdateSpec parse(const nlohmann::json& doc, const Schema& schema);
};

// Cell literal wire form:
//   "text"                        Filled("text")
//   "NA" / "N/A"                  NotApplicable
//   null or blank string          Pending (only when allow_pending)
//   number                        Filled(JSON text of the number)
//   {"value": "...", "source_url": "...", "filled_at_step": n}   Filled
CellValue parse_cell_literal(const nlohmann::json& literal, bool allow_pending);

// Record literal: {column: cell-literal}. Columns resolved case-insensitively
// to canonical names; UnknownColumn otherwise.
std::map<std::string, CellValue> parse_record_literal(const nlohmann::json& literal, const Schema& schema);

}  // namespace tas
