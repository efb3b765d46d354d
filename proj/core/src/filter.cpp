#include "tas/filter.hpp"

#include <variant>
#include <vector>

#include "tas/error.hpp"
#include "tas/text.hpp"

namespace tas {

using nlohmann::json;

struct FilterQuery::Node {
  struct Eq {
    std::string value;
  };
  struct Ne {
    std::string value;
  };
  struct Exists {
    bool expected;
  };
  using Condition = std::variant<Eq, Ne, Exists>;

  enum class Kind { And, Or, Field };
  Kind kind = Kind::And;
  std::vector<Node> children;  // And / Or
  std::string column;          // Field
  bool is_key = false;
  std::vector<Condition> conditions;
};

namespace {

using Node = FilterQuery::Node;

std::string operand_string(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  fail(ErrorCode::MalformedOperator, where + ": operand must be a string or number");
}

const ColumnSpec& resolve_column(const Schema& schema, const std::string& name) {
  const ColumnSpec* col = schema.find(name);
  if (col == nullptr) fail(ErrorCode::UnknownColumn, "unknown column '" + name + "'");
  return *col;
}

Node parse_node(const json& doc, const Schema& schema);

Node parse_field(const std::string& name, const json& spec, const Schema& schema) {
  const ColumnSpec& col = resolve_column(schema, name);
  Node n;
  n.kind = Node::Kind::Field;
  n.column = col.name;
  n.is_key = col.kind == ColumnKind::Key;
  if (!spec.is_object()) {
    n.conditions.emplace_back(Node::Eq{operand_string(spec, name)});
    return n;
  }
  if (spec.empty()) fail(ErrorCode::MalformedOperator, name + ": empty operator document");
  for (const auto& [op, arg] : spec.items()) {
    if (op == "$exists") {
      if (!arg.is_boolean()) fail(ErrorCode::MalformedOperator, name + ": $exists takes a boolean");
      n.conditions.emplace_back(Node::Exists{arg.get<bool>()});
    } else if (op == "$ne") {
      n.conditions.emplace_back(Node::Ne{operand_string(arg, name + ".$ne")});
    } else {
      fail(ErrorCode::MalformedOperator, name + ": unsupported operator '" + op + "'");
    }
  }
  return n;
}

Node parse_logical(const std::string& op, const json& arg, const Schema& schema) {
  if (!arg.is_array() || arg.empty()) {
    fail(ErrorCode::MalformedOperator, op + " takes a non-empty array of filters");
  }
  Node n;
  n.kind = op == "$and" ? Node::Kind::And : Node::Kind::Or;
  for (const auto& child : arg) n.children.push_back(parse_node(child, schema));
  return n;
}

Node parse_node(const json& doc, const Schema& schema) {
  if (!doc.is_object()) fail(ErrorCode::MalformedOperator, "filter must be a JSON object");
  Node n;
  n.kind = Node::Kind::And;
  for (const auto& [name, spec] : doc.items()) {
    if (!name.empty() && name.front() == '$') {
      if (name != "$and" && name != "$or") {
        fail(ErrorCode::MalformedOperator, "unsupported operator '" + name + "'");
      }
      n.children.push_back(parse_logical(name, spec, schema));
    } else {
      n.children.push_back(parse_field(name, spec, schema));
    }
  }
  return n;
}

bool eval_condition(const Node::Condition& cond, bool is_key, const std::optional<std::string>& value) {
  return std::visit(
      [&](const auto& c) -> bool {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Node::Exists>) {
          return value.has_value() == c.expected;
        } else if constexpr (std::is_same_v<T, Node::Eq>) {
          return value.has_value() && *value == c.value;
        } else {
          (void)is_key;
          return value.has_value() && *value != c.value;
        }
      },
      cond);
}

bool eval_node(const Node& n, const Record& r) {
  switch (n.kind) {
    case Node::Kind::And:
      for (const auto& c : n.children) {
        if (!eval_node(c, r)) return false;
      }
      return true;
    case Node::Kind::Or:
      for (const auto& c : n.children) {
        if (eval_node(c, r)) return true;
      }
      return false;
    case Node::Kind::Field: {
      const std::optional<std::string> value = r.raw_value(n.column);
      for (const auto& cond : n.conditions) {
        if (!eval_condition(cond, n.is_key, value)) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace

FilterQuery::FilterQuery() : root_(std::make_shared<Node>()), source_(json::object()) {}

FilterQuery FilterQuery::parse(const json& doc, const Schema& schema) {
  FilterQuery q;
  q.root_ = std::make_shared<Node>(parse_node(doc, schema));
  q.source_ = doc;
  return q;
}

bool FilterQuery::matches(const Record& record) const { return eval_node(*root_, record); }

bool eval_filter(const json& query, const Schema& schema, const Record& record) {
  return FilterQuery::parse(query, schema).matches(record);
}

CellValue parse_cell_literal(const json& literal, bool allow_pending) {
  if (literal.is_null()) {
    if (allow_pending) return Pending{};
    fail(ErrorCode::InvalidValue, "a cell cannot be reset to pending");
  }
  if (literal.is_number()) return Filled{literal.dump(), std::nullopt, 0};
  if (literal.is_string()) {
    const std::string s = literal.get<std::string>();
    const std::string t = text::trim(s);
    if (t.empty()) {
      if (allow_pending) return Pending{};
      fail(ErrorCode::InvalidValue, "filled value must be non-empty");
    }
    if (t == "NA" || t == "N/A") return NotApplicable{};
    return Filled{s, std::nullopt, 0};
  }
  if (literal.is_object()) {
    if (!literal.contains("value") || !literal["value"].is_string()) {
      fail(ErrorCode::InvalidValue, "object cell literal needs a string 'value'");
    }
    Filled f;
    f.value = literal["value"].get<std::string>();
    if (text::trim(f.value).empty()) fail(ErrorCode::InvalidValue, "filled value must be non-empty");
    if (literal.contains("source_url") && !literal["source_url"].is_null()) {
      if (!literal["source_url"].is_string()) fail(ErrorCode::InvalidValue, "'source_url' must be a string");
      f.source_url = literal["source_url"].get<std::string>();
    }
    if (literal.contains("filled_at_step")) {
      const json& step = literal["filled_at_step"];
      if (!step.is_number_integer() || step.get<std::int64_t>() < 0) {
        fail(ErrorCode::InvalidValue, "'filled_at_step' must be a non-negative integer");
      }
      f.filled_at_step = step.get<std::int64_t>();
    }
    for (const auto& [k, v] : literal.items()) {
      if (k != "value" && k != "source_url" && k != "filled_at_step") {
        fail(ErrorCode::InvalidValue, "unexpected cell literal field '" + k + "'");
      }
    }
    return f;
  }
  fail(ErrorCode::InvalidValue, "unsupported cell literal " + literal.dump());
}

std::map<std::string, CellValue> parse_record_literal(const json& literal, const Schema& schema) {
  if (!literal.is_object()) fail(ErrorCode::InvalidValue, "record literal must be a JSON object");
  std::map<std::string, CellValue> out;
  for (const auto& [name, value] : literal.items()) {
    const ColumnSpec& col = resolve_column(schema, name);
    out[col.name] = parse_cell_literal(value, true);
  }
  return out;
}

UpdateSpec UpdateSpec::parse(const json& doc, const Schema& schema) {
  if (!doc.is_object()) fail(ErrorCode::MalformedOperator, "update must be a JSON object");
  UpdateSpec u;
  for (const auto& [op, arg] : doc.items()) {
    if (op != "$set") fail(ErrorCode::MalformedOperator, "unsupported update operator '" + op + "'");
    if (!arg.is_object() || arg.empty()) {
      fail(ErrorCode::MalformedOperator, "$set takes a non-empty object");
    }
    for (const auto& [name, value] : arg.items()) {
      const ColumnSpec& col = resolve_column(schema, name);
      if (col.kind == ColumnKind::Key) {
        fail(ErrorCode::KeyColumnUpdate, "key column '" + col.name + "' is immutable");
      }
      u.set[col.name] = parse_cell_literal(value, false);
    }
  }
  if (u.set.empty()) fail(ErrorCode::MalformedOperator, "update needs $set");
  return u;
}

}  // namespace tas
