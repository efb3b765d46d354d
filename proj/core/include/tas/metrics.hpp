#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tas/answer.hpp"
#include "tas/schema.hpp"
#include "tas/text.hpp"

namespace tas {

using text::normalize;

struct GroundTruthTable {
  std::vector<std::string> key_columns;
  std::vector<std::string> columns;
  std::vector<std::map<std::string, std::string>> rows;
};

// {key_columns, columns, rows: [{column: value}]}. Throws InvalidValue when
// a row misses a column or key tuples repeat.
GroundTruthTable ground_truth_from_json(const nlohmann::json& j);
GroundTruthTable load_ground_truth(const std::filesystem::path& path);
nlohmann::json to_json(const GroundTruthTable& gt);

// Export in the ground-truth layout: Pending as "", NotApplicable as "NA".
nlohmann::json table_to_ground_truth_json(const TableState& table);
// Inverse used when scoring exported tables: "" is Pending, "NA" NotApplicable.
TableState table_from_ground_truth(const GroundTruthTable& gt);

struct MatchConfig {
  double numeric_tolerance = 0.0;
  // Optional equivalence hook on raw strings; replaces normalized equality.
  std::function<bool(std::string_view pred, std::string_view gt)> judge;
};

struct MetricsReport {
  double col_p = 0, col_r = 0, col_f1 = 0;
  double row_p = 0, row_r = 0, row_f1 = 0;
  double item_p = 0, item_r = 0, item_f1 = 0;
  bool success = false;
  double success_rate = 0;  // 0/1 for a single trial, aggregated otherwise
  std::int64_t correct_cells = 0;
  std::int64_t total_pred_cells = 0;
};

nlohmann::json to_json(const MetricsReport& r);

double f1_score(double p, double r);

bool match_cell(const CellValue& pred, std::string_view gt, const MatchConfig& config = {});

// Throws ColumnMismatch when a ground-truth column is absent from pred.
MetricsReport score_table(const TableState& pred, const GroundTruthTable& gt, const MatchConfig& config = {});

// Max correct_cells over trials. EmptyTrialSet when empty.
std::int64_t num_at_k(std::span<const MetricsReport> reports);

enum class AggregateMode { Avg, Max };
MetricsReport aggregate(std::span<const MetricsReport> reports, AggregateMode mode);

bool pass_at_n(std::span<const DeepAnswer> answers, std::string_view gt_answer, const MatchConfig& config = {});

enum class Difficulty { Easy, MedEasy, Medium, MedHard, Hard };
std::string_view to_string(Difficulty d) noexcept;

// Nearest-rank cut points at the 20/40/60/80th percentiles; a value's tier
// is the number of cut points strictly below it.
std::vector<Difficulty> bucket_difficulty(std::span<const double> values);

}  // namespace tas
