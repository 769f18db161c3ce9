#pragma once

// Evaluation records and accuracy tables (task accuracy plus per-rule
// attribute accuracy), rendered as CSV, Markdown or JSON.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ravenx/raven.hpp"

namespace ravenx::report {

struct EvalRecord {
  std::string puzzle_id;
  int chosen_index = -1;  // -1 when no candidate could be chosen
  int answer_index = 0;
  std::vector<std::optional<int>> predicted_values;  // per attribute
  std::vector<int> hidden_values;
  std::vector<raven::Rule> rules;

  bool correct() const { return chosen_index == answer_index; }
};

nlohmann::json to_json(const EvalRecord& r);
EvalRecord eval_record_from_json(const nlohmann::json& j);

struct Tally {
  long correct = 0;
  long total = 0;

  std::optional<double> percent() const;
  Tally& operator+=(const Tally& o) {
    correct += o.correct;
    total += o.total;
    return *this;
  }
  bool operator==(const Tally&) const = default;
};

/// Column order: constant, progression, distribute three, arithmetic.
inline constexpr std::array<raven::RuleFamily, 4> kReportFamilies = {
    raven::RuleFamily::Constant, raven::RuleFamily::Progression, raven::RuleFamily::Distribute,
    raven::RuleFamily::Arithmetic};

struct ReportRow {
  std::string method;
  std::string configuration;
  Tally task;
  std::array<Tally, 4> per_rule;  // attribute-wise, in kReportFamilies order

  const Tally& rule(raven::RuleFamily f) const;
  bool operator==(const ReportRow&) const = default;
};

/// Task accuracy counts exact candidate matches; rule accuracy counts
/// attributes whose predicted value equals the hidden value, partitioned by
/// the attribute's generated rule.
ReportRow summarize(std::string method, std::string configuration, const std::vector<EvalRecord>& records);

class ReportTable {
 public:
  std::vector<ReportRow> rows;

  void merge(const ReportTable& other);
  std::string to_csv() const;
  std::string to_markdown() const;
  nlohmann::json to_json() const;
  static ReportTable from_json(const nlohmann::json& j);
};

inline constexpr const char* kReportSchema = "ravenx.report/1";

}  // namespace ravenx::report
