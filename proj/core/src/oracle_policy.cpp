#include "tas/oracle_policy.hpp"

#include <set>

#include "tas/text.hpp"

namespace tas {

using nlohmann::json;

std::vector<std::string> instruction_phrases(const std::string& instruction) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    std::string t = text::trim(current);
    if (!t.empty()) out.push_back(std::move(t));
    current.clear();
  };
  for (char c : instruction) {
    if (c == ';' || c == '\n') flush();
    else current += c;
  }
  flush();
  return out;
}

namespace {

bool years_in_range(const Document& doc, const Schema& schema, const std::vector<text::YearRange>& ranges) {
  if (ranges.empty()) return true;
  for (const auto& col : schema.columns) {
    const std::string* v = doc.field(col.name);
    if (v == nullptr) continue;
    const auto year = text::parse_year(text::trim(*v));
    if (!year) continue;
    bool inside = false;
    for (const auto& r : ranges) inside = inside || (*year >= r.from && *year <= r.to);
    if (!inside) return false;
  }
  return true;
}

}  // namespace

Decision OraclePolicy::decide(const AgentView& view) const {
  return view.task.mode == AgentMode::ExpandRows ? expand(view) : populate(view);
}

Decision OraclePolicy::expand(const AgentView& view) const {
  const Schema& schema = view.schema;
  if (schema.target_count && static_cast<std::int64_t>(view.rows.size()) >= *schema.target_count) {
    return Finish{"target row count reached"};
  }
  const auto phrases = instruction_phrases(view.task.instruction);
  std::size_t searches = 0;
  for (const auto& s : view.trajectory) searches += s.tool == "search" ? 1 : 0;

  if (!view.trajectory.empty() && view.trajectory.back().tool == "search") {
    const std::string query = view.trajectory.back().arguments.value("query", "");
    const auto ranges = text::find_year_ranges(query);
    std::set<std::string> known;
    for (const auto& r : view.rows) known.insert(r.dedup_key);

    json rows = json::array();
    for (const auto& hit : corpus_->search(query, top_k_)) {
      const Document* doc = corpus_->find(hit.url);
      std::map<std::string, std::string> key;
      bool complete = true;
      for (const ColumnSpec* k : schema.key_columns()) {
        const std::string* v = doc->field(k->name);
        if (v == nullptr || text::trim(*v).empty()) {
          complete = false;
          break;
        }
        key[k->name] = *v;
      }
      if (!complete || !years_in_range(*doc, schema, ranges)) continue;
      json row = json::object();
      bool eligible = true;
      for (const ColumnSpec* c : schema.constraint_columns()) {
        const std::string* v = doc->field(c->name);
        if (v == nullptr) continue;
        if (!satisfies_constraint(*c, *v)) {
          eligible = false;
          break;
        }
        row[c->name] = {{"value", *v}, {"source_url", doc->url}};
      }
      if (!eligible || !known.insert(make_dedup_key(schema, key)).second) continue;
      for (const auto& [k, v] : key) row[k] = v;
      rows.push_back(std::move(row));
    }
    if (!rows.empty()) {
      const std::string thought = "Append " + std::to_string(rows.size()) + " eligible candidates";
      return Action{"append_rows", {{"rows", std::move(rows)}}, thought};
    }
  }
  if (searches < phrases.size()) {
    return Action{"search", {{"query", phrases[searches]}, {"top_k", top_k_}}, "Search for candidates"};
  }
  return Finish{"searches exhausted"};
}

Decision OraclePolicy::populate(const AgentView& view) const {
  const Record& row = view.rows.front();
  std::optional<std::string> column;
  for (const auto& c : view.task.target_columns) {
    const ColumnSpec* spec = view.schema.find(c);
    if (spec == nullptr) continue;
    auto it = row.cells.find(spec->name);
    if (it != row.cells.end() && is_pending(it->second)) {
      column = spec->name;
      break;
    }
  }
  if (!column) return Finish{"all target cells resolved"};

  const std::string query = make_row_query(view.schema, row, {*column});
  const auto& traj = view.trajectory;
  if (traj.size() >= 2 && traj.back().tool == "visit" && traj[traj.size() - 2].tool == "search" &&
      traj[traj.size() - 2].arguments.value("query", "") == query) {
    const std::string url = traj.back().arguments.value("url", "");
    const Document* doc = corpus_->find(url);
    const std::string* value = doc != nullptr ? doc->field(*column) : nullptr;
    if (value != nullptr && !text::trim(*value).empty()) {
      return Action{"fill_cells", {{"values", {{*column, *value}}}, {"source_url", url}}, "Fill " + *column};
    }
    return Action{"fill_cells", {{"not_applicable", {*column}}}, "No value for " + *column};
  }
  if (!traj.empty() && traj.back().tool == "search" && traj.back().arguments.value("query", "") == query) {
    const auto hits = corpus_->search(query, top_k_);
    if (hits.empty()) return Action{"fill_cells", {{"not_applicable", {*column}}}, "No source for " + *column};
    return Action{"visit", {{"url", hits.front().url}}, "Read the top result"};
  }
  return Action{"search", {{"query", query}, {"top_k", top_k_}}, "Look up " + *column};
}

}  // namespace tas
