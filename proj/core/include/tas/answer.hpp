#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace tas {

struct DeepAnswer {
  std::map<std::string, std::string> entity;  // key column -> value
  std::string label;                          // key values in schema order, space-joined
  std::vector<std::string> evidence_urls;
  bool low_confidence = false;
  bool unknown = false;
};

struct TableAnswer {
  std::string markdown;
  nlohmann::json table;  // ground-truth file layout
};

using Answer = std::variant<DeepAnswer, TableAnswer>;

nlohmann::json to_json(const Answer& answer);
Answer answer_from_json(const nlohmann::json& j);

}  // namespace tas
