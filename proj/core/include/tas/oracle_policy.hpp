#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tas/agents.hpp"
#include "tas/web_env.hpp"

namespace tas {

// Deterministic policy reading the structured `fields` of fixture documents.
//
// ExpandRows: one search per phrase of the instruction (phrases are separated
// by ';' or newlines). After each search, every result document carrying all
// key fields is appended unless a constraint field it carries fails the
// column, or a year-valued field falls outside every year range named in the
// phrase. Finishes when phrases run out or the target row count is reached.
//
// PopulateCells: for each Pending target column, search "<keys> <column>",
// visit the top hit and fill fields[column], or mark NotApplicable when the
// field (or any hit) is missing.
class OraclePolicy final : public AgentPolicy {
 public:
  explicit OraclePolicy(std::shared_ptr<const Corpus> corpus, std::int64_t top_k = 20)
      : corpus_(std::move(corpus)), top_k_(top_k) {}

  Decision decide(const AgentView& view) const override;

 private:
  Decision expand(const AgentView& view) const;
  Decision populate(const AgentView& view) const;

  std::shared_ptr<const Corpus> corpus_;
  std::int64_t top_k_;
};

// Phrases of an ExpandRows instruction, trimmed, empties dropped.
std::vector<std::string> instruction_phrases(const std::string& instruction);

}  // namespace tas
