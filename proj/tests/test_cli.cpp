#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "ravenx/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ravenx;

namespace {

const fs::path kFixtures = RAVENX_FIXTURES;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

int run(std::vector<std::string> args) { return cli::run(args); }

report::EvalRecord record(int chosen, int answer, std::vector<std::optional<int>> predicted, std::vector<int> hidden,
                          std::vector<raven::Rule> rules) {
  report::EvalRecord r;
  r.puzzle_id = "p";
  r.chosen_index = chosen;
  r.answer_index = answer;
  r.predicted_values = std::move(predicted);
  r.hidden_values = std::move(hidden);
  r.rules = std::move(rules);
  return r;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("summaries partition attribute accuracy by rule") {
  using raven::Rule;
  std::vector<report::EvalRecord> records{
      record(1, 1, {2, 3, 4}, {2, 3, 5}, {Rule::constant(), Rule::progression(1), Rule::arithmetic_plus()}),
      record(0, 2, {std::nullopt, 3, 4}, {1, 3, 4},
             {Rule::distribute(raven::Shift::Left), Rule::arithmetic_minus(), Rule::arithmetic_plus()}),
  };
  const auto row = report::summarize("m", "c", records);
  CHECK(row.task == report::Tally{1, 2});
  CHECK(row.rule(raven::RuleFamily::Constant) == report::Tally{1, 1});
  CHECK(row.rule(raven::RuleFamily::Progression) == report::Tally{1, 1});
  CHECK(row.rule(raven::RuleFamily::Distribute) == report::Tally{0, 1});
  CHECK(row.rule(raven::RuleFamily::Arithmetic) == report::Tally{2, 3});
  long total = 0;
  for (const auto& t : row.per_rule) total += t.total;
  CHECK(total == 6);
  CHECK_FALSE(report::Tally{}.percent());
  CHECK(*report::Tally{1, 4}.percent() == doctest::Approx(25.0));
}

TEST_CASE("tables render csv, markdown and json") {
  report::ReportTable table;
  report::ReportRow row;
  row.method = "ARLC_progr";
  row.configuration = "3x10 m=50";
  row.task = {997, 1000};
  row.per_rule = {report::Tally{10, 10}, report::Tally{5, 10}, report::Tally{}, report::Tally{2, 3}};
  table.rows.push_back(row);
  const auto csv = table.to_csv();
  CHECK(csv.find("arithmetic_accuracy") != std::string::npos);
  CHECK(csv.find("ARLC_progr,3x10 m=50,99.7,997,1000,100.0,10,10,50.0,5,10,n/a,0,0,66.7,2,3") != std::string::npos);
  const auto md = table.to_markdown();
  CHECK(md.find("| Arithmetic (%) |") != std::string::npos);
  CHECK(md.find("n/a") != std::string::npos);
  const auto back = report::ReportTable::from_json(table.to_json());
  CHECK(back.rows == table.rows);
  auto bad = table.to_json();
  bad["schema"] = "ravenx.report/0";
  CHECK_THROWS(report::ReportTable::from_json(bad));
  report::ReportTable merged;
  merged.merge(table);
  merged.merge(back);
  CHECK(merged.rows.size() == 2);
}

}

TEST_SUITE("cli") {

TEST_CASE("gen, eval and report end to end") {
  TempDir dir("ravenx_cli_e2e");
  REQUIRE(run({"gen", "--grid", "3", "--count", "60", "--seed", "5", "--out", dir / "data/test.jsonl"}) == 0);
  CHECK(fs::exists(dir / "data/test.manifest.json"));
  REQUIRE(run({"eval", "--data", dir / "data/test.jsonl", "--programmed", "--out-dir", dir / "eval1"}) == 0);
  REQUIRE(run({"eval", "--data", dir / "data/test.jsonl", "--programmed", "--out-dir", dir / "eval2", "--threads",
               "3"}) == 0);
  for (const char* f : {"report.csv", "report.md", "report.json", "results.jsonl", "manifest.json"}) {
    CAPTURE(f);
    CHECK(slurp(dir / (std::string("eval1/") + f)) == slurp(dir / (std::string("eval2/") + f)));
  }
  const auto manifest = json::parse(slurp(dir / "eval1/manifest.json"));
  CHECK(manifest["command"] == "eval");
  CHECK(manifest["outputs"]["report.csv"] == cli::fnv1a_file(dir / "eval1/report.csv"));
  CHECK(manifest["inputs"].contains(dir / "data/test.jsonl"));
  const auto table = report::ReportTable::from_json(json::parse(slurp(dir / "eval1/report.json")));
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].task.total == 60);
  CHECK(*table.rows[0].task.percent() >= 90.0);

  REQUIRE(run({"report", "--in", dir / "eval1/report.json", "--in", dir / "eval2/report.json", "--out-dir",
               dir / "merged"}) == 0);
  const auto csv = slurp(dir / "merged/report.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("arithmetic_accuracy") != std::string::npos);
}

TEST_CASE("generation is reproducible and splits are written") {
  TempDir dir("ravenx_cli_gen");
  REQUIRE(run({"gen", "--grid", "10", "--range", "100", "--count", "20", "--seed", "3", "--out", dir / "a.jsonl"}) == 0);
  REQUIRE(run({"gen", "--grid", "10", "--range", "100", "--count", "20", "--seed", "3", "--out", dir / "b.jsonl"}) == 0);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  REQUIRE(run({"gen", "--train", "30", "--validation", "10", "--test", "10", "--seed", "1", "--out-dir",
               dir / "splits"}) == 0);
  for (const char* f : {"train.jsonl", "validation.jsonl", "test.jsonl", "manifest.json"}) CHECK(fs::exists(dir / (std::string("splits/") + f)));
}

TEST_CASE("train writes a checkpoint that eval accepts") {
  TempDir dir("ravenx_cli_train");
  REQUIRE(run({"gen", "--train", "40", "--validation", "20", "--test", "20", "--seed", "2", "--out-dir", dir / "d"}) == 0);
  REQUIRE(run({"train", "--data", dir / "d/train.jsonl", "--validation", dir / "d/validation.jsonl", "--epochs", "2",
               "--programmed-init", "--out-dir", dir / "t"}) == 0);
  for (const char* f : {"checkpoint.json", "loss.csv", "manifest.json"}) CHECK(fs::exists(dir / (std::string("t/") + f)));
  const auto loss = slurp(dir / "t/loss.csv");
  CHECK(std::count(loss.begin(), loss.end(), '\n') == 3);
  const auto manifest = json::parse(slurp(dir / "t/manifest.json"));
  CHECK(manifest["config"]["validation_accuracy"].contains("start"));
  REQUIRE(run({"eval", "--data", dir / "d/test.jsonl", "--checkpoint", dir / "t/checkpoint.json", "--out-dir",
               dir / "e"}) == 0);
  const auto first = slurp(dir / "t/checkpoint.json");
  REQUIRE(run({"train", "--data", dir / "d/train.jsonl", "--epochs", "2", "--programmed-init", "--out-dir", dir / "t2"}) == 0);
  CHECK(slurp(dir / "t2/checkpoint.json") == first);
}

TEST_CASE("llm-eval dry run writes transcripts, report and confusion matrix") {
  TempDir dir("ravenx_cli_llm");
  REQUIRE(run({"llm-eval", "--data", (kFixtures / "llm20.jsonl").string(), "--dry-run",
               (kFixtures / "llm20_script.json").string(), "--retries", "1", "--out-dir", dir / "out"}) == 0);
  const auto table = report::ReportTable::from_json(json::parse(slurp(dir / "out/report.json")));
  CHECK(table.rows[0].task == report::Tally{13, 20});
  const auto transcript = slurp(dir / "out/transcripts.jsonl");
  CHECK(std::count(transcript.begin(), transcript.end(), '\n') == 20);
  const auto confusion = json::parse(slurp(dir / "out/confusion.json"));
  CHECK(confusion["total"].get<long>() > 0);
  CHECK(fs::exists(dir / "out/confusion.md"));
}

TEST_CASE("errors exit nonzero") {
  TempDir dir("ravenx_cli_err");
  CHECK(run({}) != 0);
  CHECK(run({"bogus"}) != 0);
  CHECK(run({"eval", "--data", dir / "missing.jsonl", "--programmed", "--out-dir", dir / "x"}) != 0);
  CHECK(run({"gen", "--grid", "3", "--count", "0", "--out", dir / "z.jsonl"}) != 0);
  CHECK(run({"gen", "--grid", "10", "--count", "5", "--out", dir / "z.jsonl"}) != 0);
  {
    std::ofstream bad(dir / "bad.jsonl");
    bad << R"({"schema":"ravenx.dataset/0"})" << "\n";
  }
  CHECK(run({"eval", "--data", dir / "bad.jsonl", "--programmed", "--out-dir", dir / "x"}) != 0);
  REQUIRE(run({"gen", "--grid", "10", "--range", "60", "--count", "5", "--out", dir / "wide.jsonl"}) == 0);
  REQUIRE(run({"gen", "--grid", "10", "--range", "50", "--count", "5", "--out", dir / "narrow.jsonl"}) == 0);
  REQUIRE(run({"train", "--data", dir / "narrow.jsonl", "--epochs", "1", "--programmed-init", "--out-dir", dir / "t"}) == 0);
  CHECK(run({"eval", "--data", dir / "wide.jsonl", "--checkpoint", dir / "t/checkpoint.json", "--out-dir", dir / "e"}) != 0);
  CHECK(run({"eval", "--data", dir / "wide.jsonl", "--checkpoint", dir / "t/checkpoint.json", "--swap-range", "60",
             "--out-dir", dir / "e"}) == 0);
  CHECK(run({"llm-eval", "--data", dir / "wide.jsonl", "--n", "4", "--dry-run", (kFixtures / "llm20_script.json").string(),
             "--out-dir", dir / "l"}) != 0);
}

}
