#include "ravenx/report.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ravenx::report {

namespace {

std::size_t family_index(raven::RuleFamily f) {
  for (std::size_t i = 0; i < kReportFamilies.size(); ++i) {
    if (kReportFamilies[i] == f) return i;
  }
  throw std::logic_error("report: unknown rule family");
}

std::string format_percent(const Tally& t) {
  const auto p = t.percent();
  if (!p) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *p);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

nlohmann::json tally_json(const Tally& t) { return {{"correct", t.correct}, {"total", t.total}}; }

Tally tally_from_json(const nlohmann::json& j) {
  Tally t{j.at("correct").get<long>(), j.at("total").get<long>()};
  if (t.correct < 0 || t.total < 0 || t.correct > t.total) throw std::invalid_argument("report: bad tally");
  return t;
}

}  // namespace

std::optional<double> Tally::percent() const {
  if (total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

nlohmann::json to_json(const EvalRecord& r) {
  nlohmann::json predicted = nlohmann::json::array();
  for (const auto& v : r.predicted_values) predicted.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& rule : r.rules) rules.push_back(raven::to_string(rule));
  return {{"id", r.puzzle_id},          {"chosen_index", r.chosen_index}, {"answer_index", r.answer_index},
          {"correct", r.correct()},     {"predicted", predicted},         {"hidden", r.hidden_values},
          {"rules", rules}};
}

EvalRecord eval_record_from_json(const nlohmann::json& j) {
  EvalRecord r;
  r.puzzle_id = j.at("id").get<std::string>();
  r.chosen_index = j.at("chosen_index").get<int>();
  r.answer_index = j.at("answer_index").get<int>();
  for (const auto& v : j.at("predicted")) {
    r.predicted_values.push_back(v.is_null() ? std::nullopt : std::optional<int>(v.get<int>()));
  }
  r.hidden_values = j.at("hidden").get<std::vector<int>>();
  for (const auto& s : j.at("rules")) r.rules.push_back(raven::parse_rule(s.get<std::string>()));
  if (r.predicted_values.size() != r.hidden_values.size() || r.rules.size() != r.hidden_values.size()) {
    throw std::invalid_argument("eval record " + r.puzzle_id + ": attribute count mismatch");
  }
  return r;
}

const Tally& ReportRow::rule(raven::RuleFamily f) const { return per_rule[family_index(f)]; }

ReportRow summarize(std::string method, std::string configuration, const std::vector<EvalRecord>& records) {
  ReportRow row{std::move(method), std::move(configuration), {}, {}};
  for (const auto& r : records) {
    ++row.task.total;
    row.task.correct += r.correct() ? 1 : 0;
    for (std::size_t a = 0; a < r.rules.size(); ++a) {
      auto& t = row.per_rule[family_index(r.rules[a].family())];
      ++t.total;
      const auto& p = r.predicted_values.at(a);
      t.correct += (p && *p == r.hidden_values.at(a)) ? 1 : 0;
    }
  }
  return row;
}

void ReportTable::merge(const ReportTable& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

std::string ReportTable::to_csv() const {
  std::ostringstream os;
  os << "method,configuration,task_accuracy,task_correct,task_total";
  for (auto f : kReportFamilies) {
    const auto name = raven::to_string(f);
    os << ',' << name << "_accuracy," << name << "_correct," << name << "_total";
  }
  os << '\n';
  for (const auto& r : rows) {
    os << csv_field(r.method) << ',' << csv_field(r.configuration) << ',' << format_percent(r.task) << ','
       << r.task.correct << ',' << r.task.total;
    for (const auto& t : r.per_rule) os << ',' << format_percent(t) << ',' << t.correct << ',' << t.total;
    os << '\n';
  }
  return os.str();
}

std::string ReportTable::to_markdown() const {
  std::ostringstream os;
  os << "| Method | Configuration | Task acc. (%) | Constant (%) | Progression (%) | Distribute three (%) | "
        "Arithmetic (%) |\n";
  os << "|---|---|---:|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    os << "| " << md_cell(r.method) << " | " << md_cell(r.configuration) << " | " << format_percent(r.task) << " ("
       << r.task.correct << "/" << r.task.total << ")";
    for (const auto& t : r.per_rule) os << " | " << format_percent(t);
    os << " |\n";
  }
  return os.str();
}

nlohmann::json ReportTable::to_json() const {
  nlohmann::json out = {{"schema", kReportSchema}, {"rows", nlohmann::json::array()}};
  for (const auto& r : rows) {
    nlohmann::json per_rule = nlohmann::json::object();
    for (std::size_t i = 0; i < kReportFamilies.size(); ++i) {
      per_rule[raven::to_string(kReportFamilies[i])] = tally_json(r.per_rule[i]);
    }
    out["rows"].push_back(
        {{"method", r.method}, {"configuration", r.configuration}, {"task", tally_json(r.task)}, {"per_rule", per_rule}});
  }
  return out;
}

ReportTable ReportTable::from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != kReportSchema) {
    throw std::invalid_argument("report: expected schema " + std::string(kReportSchema));
  }
  ReportTable table;
  for (const auto& jr : j.at("rows")) {
    ReportRow r;
    r.method = jr.at("method").get<std::string>();
    r.configuration = jr.at("configuration").get<std::string>();
    r.task = tally_from_json(jr.at("task"));
    for (std::size_t i = 0; i < kReportFamilies.size(); ++i) {
      r.per_rule[i] = tally_from_json(jr.at("per_rule").at(raven::to_string(kReportFamilies[i])));
    }
    table.rows.push_back(std::move(r));
  }
  return table;
}

}  // namespace ravenx::report
