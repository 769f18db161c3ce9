#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ravenx/arlc.hpp"
#include "ravenx/evaluate.hpp"
#include "ravenx/llm.hpp"
#include "ravenx/raven.hpp"
#include "ravenx/report.hpp"

namespace ravenx::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fnv1a_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

class Manifest {
 public:
  explicit Manifest(std::string command) { j_ = {{"tool", "ravenx"}, {"version", "0.1.0"}, {"command", std::move(command)}}; }

  json& config() { return j_["config"]; }
  json& seeds() { return j_["seeds"]; }
  void input(const fs::path& p) { j_["inputs"][p.string()] = fnv1a_file(p); }
  void output(const fs::path& dir, const std::string& name) { j_["outputs"][name] = fnv1a_file(dir / name); }

  void write(const fs::path& path) const { write_text(path, j_.dump(2) + "\n"); }

 private:
  json j_;
};

std::string grid_label(const raven::GeneratorConfig& c) {
  std::string s = "3x" + std::to_string(c.grid) + " m=" + std::to_string(c.max_range());
  return s;
}

// ---- gen -----------------------------------------------------------------

struct GenOptions {
  int grid = 3;
  int range = 0;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string split = "test";
  fs::path out;
  std::size_t train = 0, validation = 0, test = 0;
  fs::path out_dir;
};

raven::GeneratorConfig generator_config(int grid, int range) {
  if (range == 0) {
    if (grid != 3) throw std::invalid_argument("--range is required when --grid is not 3");
    return raven::GeneratorConfig::iraven();
  }
  return raven::GeneratorConfig::iraven_x(grid, range);
}

int cmd_gen(const GenOptions& o) {
  const auto config = generator_config(o.grid, o.range);
  config.validate();
  Manifest m("gen");
  m.config() = {{"grid", o.grid}, {"range", config.max_range()}};
  m.seeds()["master"] = o.seed;

  const bool split_mode = !o.out_dir.empty();
  if (split_mode == !o.out.empty()) throw std::invalid_argument("gen: give exactly one of --out or --out-dir");
  if (split_mode) {
    if (o.train + o.validation + o.test == 0) throw std::invalid_argument("gen: --out-dir needs --train/--validation/--test counts");
    auto sets = raven::gen_splits(config, o.train, o.validation, o.test, o.seed);
    fs::create_directories(o.out_dir);
    for (auto* d : {&sets.train, &sets.validation, &sets.test}) {
      const auto name = raven::to_string(d->split) + ".jsonl";
      raven::save_dataset(*d, o.out_dir / name);
      m.output(o.out_dir, name);
    }
    m.config()["counts"] = {{"train", o.train}, {"validation", o.validation}, {"test", o.test}};
    m.write(o.out_dir / "manifest.json");
    std::cout << "wrote " << o.train << "/" << o.validation << "/" << o.test << " puzzles to " << o.out_dir.string()
              << "\n";
  } else {
    if (o.count == 0) throw std::invalid_argument("gen: --count must be positive");
    const auto ds = raven::gen_dataset(config, o.count, o.seed, raven::parse_split(o.split));
    if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
    raven::save_dataset(ds, o.out);
    const auto dir = o.out.has_parent_path() ? o.out.parent_path() : fs::path(".");
    m.config()["count"] = o.count;
    m.config()["split"] = o.split;
    m.output(dir, o.out.filename().string());
    m.write(dir / (o.out.stem().string() + ".manifest.json"));
    std::cout << "wrote " << o.count << " puzzles to " << o.out.string() << "\n";
  }
  return 0;
}

// ---- train ---------------------------------------------------------------

struct CodebookOptions {
  std::size_t dims = 1024;
  std::size_t blocks = 4;
  std::uint64_t seed = 0;
};

struct TrainOptions {
  fs::path data;
  fs::path validation;
  fs::path out_dir;
  arlc::TrainConfig train;
  double init_scale = arlc::kDefaultInitScale;
  int rules = 5;
  std::uint64_t seed = 0;
  bool programmed_init = false;
  CodebookOptions codebook;
};

double accuracy(const arlc::Reasoner& r, const std::vector<raven::RpmPuzzle>& puzzles) {
  if (puzzles.empty()) return 0.0;
  long correct = 0;
  for (const auto& p : puzzles) correct += r.predict(p).answer_index == p.answer_index ? 1 : 0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(puzzles.size());
}

int cmd_train(TrainOptions o) {
  const auto ds = raven::load_dataset(o.data);
  const auto shape = arlc::TemplateShape::for_grid(ds.config.grid);
  const vsa::Codebook cb({o.codebook.dims, o.codebook.blocks, static_cast<std::size_t>(ds.config.max_range()),
                          o.codebook.seed});
  Rng rng(derive_seed(o.seed, 0));
  arlc::RuleSet init;
  if (o.programmed_init) {
    init = arlc::program_rules(shape);
    if (o.rules < init.rules()) throw std::invalid_argument("train: --rules must be at least 4 with --programmed-init");
    init.append_uniform(o.rules - init.rules());
  } else {
    init = arlc::RuleSet::random(shape, o.rules, o.init_scale, rng);
  }
  o.train.seed = derive_seed(o.seed, 1);

  std::vector<raven::RpmPuzzle> validation;
  if (!o.validation.empty()) validation = raven::load_dataset(o.validation).puzzles;
  const double start_acc = validation.empty() ? 0.0 : accuracy(arlc::Reasoner(cb, init), validation);

  std::ostringstream curve;
  curve << "epoch,loss\n";
  auto result = arlc::train(ds.puzzles, cb, init, o.train, [&](int epoch, double loss) {
    char line[64];
    std::snprintf(line, sizeof line, "%d,%.9g\n", epoch + 1, loss);
    curve << line;
    std::cout << "epoch " << (epoch + 1) << "/" << o.train.epochs << " loss " << loss << std::endl;
  });

  fs::create_directories(o.out_dir);
  const arlc::Reasoner reasoner(cb, result.rules);
  arlc::save_checkpoint(reasoner, o.out_dir / "checkpoint.json");
  write_text(o.out_dir / "loss.csv", curve.str());

  Manifest m("train");
  m.input(o.data);
  m.config() = {{"epochs", o.train.epochs},       {"learning_rate", o.train.learning_rate},
                {"batch_size", o.train.batch_size}, {"momentum", o.train.momentum},
                {"init_scale", o.init_scale},     {"rules", o.rules},
                {"programmed_init", o.programmed_init},
                {"codebook", vsa::to_json(cb.spec())}};
  m.seeds()["master"] = o.seed;
  if (!validation.empty()) {
    m.input(o.validation);
    const double end_acc = accuracy(reasoner, validation);
    m.config()["validation_accuracy"] = {{"start", start_acc}, {"end", end_acc}};
    std::cout << "validation accuracy " << start_acc << "% -> " << end_acc << "%\n";
  }
  m.output(o.out_dir, "checkpoint.json");
  m.output(o.out_dir, "loss.csv");
  m.write(o.out_dir / "manifest.json");
  return 0;
}

// ---- eval ----------------------------------------------------------------

struct EvalOptions {
  fs::path data;
  fs::path checkpoint;
  bool programmed = false;
  int swap_range = 0;
  std::string method;
  fs::path out_dir;
  int threads = 1;
  CodebookOptions codebook;
};

void write_report(const report::ReportTable& table, const fs::path& dir, Manifest& m) {
  write_text(dir / "report.csv", table.to_csv());
  write_text(dir / "report.md", table.to_markdown());
  write_text(dir / "report.json", table.to_json().dump(2) + "\n");
  for (const char* name : {"report.csv", "report.md", "report.json"}) m.output(dir, name);
}

int cmd_eval(const EvalOptions& o) {
  const auto ds = raven::load_dataset(o.data);
  if (o.programmed == !o.checkpoint.empty()) throw std::invalid_argument("eval: give exactly one of --checkpoint or --programmed");
  Manifest m("eval");
  m.input(o.data);

  std::optional<arlc::Reasoner> reasoner;
  if (o.programmed) {
    const vsa::Codebook cb({o.codebook.dims, o.codebook.blocks, static_cast<std::size_t>(ds.config.max_range()),
                            o.codebook.seed});
    reasoner.emplace(cb, arlc::program_rules(arlc::TemplateShape::for_grid(ds.config.grid)));
  } else {
    reasoner.emplace(arlc::load_checkpoint(o.checkpoint));
    m.input(o.checkpoint);
  }
  if (o.swap_range > 0) {
    reasoner.emplace(arlc::swap_dictionary(*reasoner, reasoner->codebook().with_range(static_cast<std::size_t>(o.swap_range))));
  }
  if (static_cast<std::size_t>(ds.config.max_range()) > reasoner->codebook().range()) {
    throw std::invalid_argument("eval: dataset range " + std::to_string(ds.config.max_range()) +
                                " exceeds the dictionary range " + std::to_string(reasoner->codebook().range()) +
                                "; use --swap-range");
  }

  const auto records = evaluate(*reasoner, ds.puzzles, o.threads);
  fs::create_directories(o.out_dir);
  std::ostringstream lines;
  for (const auto& r : records) lines << report::to_json(r).dump() << '\n';
  write_text(o.out_dir / "results.jsonl", lines.str());

  const std::string method = !o.method.empty() ? o.method : (o.programmed ? "ARLC_progr" : "ARLC");
  std::string configuration = grid_label(ds.config);
  if (o.swap_range > 0) configuration += " (dictionary m=" + std::to_string(o.swap_range) + ")";
  report::ReportTable table;
  table.rows.push_back(report::summarize(method, configuration, records));

  m.config() = {{"method", method},
                {"programmed", o.programmed},
                {"swap_range", o.swap_range},
                {"codebook", vsa::to_json(reasoner->codebook().spec())}};
  m.output(o.out_dir, "results.jsonl");
  write_report(table, o.out_dir, m);
  m.write(o.out_dir / "manifest.json");
  std::cout << table.to_markdown();
  return 0;
}

// ---- llm-eval ------------------------------------------------------------

struct LlmOptions {
  fs::path data;
  fs::path pool;
  fs::path dry_run;
  fs::path out_dir;
  std::string profile = "gpt-4";
  std::string model;
  std::string mode = "predictive";
  std::string scope = "disentangled";
  std::string base_url;
  int n = 7;
  double temperature = -1.0;
  int in_context = 0;
  bool strict = false;
  int concurrency = 4;
  int retries = 4;
  std::uint64_t seed = 0;
};

int cmd_llm_eval(const LlmOptions& o) {
  const auto ds = raven::load_dataset(o.data);
  llm::HarnessOptions h;
  h.prompt = llm::PromptConfig::for_profile(o.profile);
  if (!o.model.empty()) h.prompt.profile.model = o.model;
  h.prompt.mode = llm::parse_prompt_mode(o.mode);
  h.prompt.scope = llm::parse_attribute_scope(o.scope);
  h.prompt.self_consistency_n = o.n;
  if (o.temperature >= 0.0) h.prompt.temperature = o.temperature;
  h.prompt.in_context_count = o.in_context;
  h.prompt.strict_parse = o.strict;
  h.prompt.validate();
  h.concurrency = o.concurrency;
  h.retry.max_attempts = o.retries;
  h.seed = o.seed;

  Manifest m("llm-eval");
  m.input(o.data);
  std::vector<raven::RpmPuzzle> pool;
  if (o.in_context > 0) {
    if (o.pool.empty()) throw std::invalid_argument("llm-eval: --in-context needs --pool with training puzzles");
    pool = raven::load_dataset(o.pool).puzzles;
    m.input(o.pool);
  }
  h.in_context_pool = pool;

  std::unique_ptr<llm::Endpoint> endpoint;
  if (!o.dry_run.empty()) {
    endpoint = std::make_unique<llm::ScriptedEndpoint>(llm::ScriptedEndpoint::load(o.dry_run));
    m.input(o.dry_run);
  } else {
    auto http = llm::HttpConfig::from_env();
    if (!o.base_url.empty()) http.base_url = o.base_url;
    if (http.base_url.empty()) throw std::invalid_argument("llm-eval: set RAVENX_LLM_BASE_URL, --base-url or --dry-run");
    endpoint = std::make_unique<llm::HttpEndpoint>(http);
  }

  fs::create_directories(o.out_dir);
  std::ofstream transcript_file(o.out_dir / "transcripts.jsonl", std::ios::binary);
  if (!transcript_file) throw std::runtime_error("cannot write transcripts");
  llm::TranscriptWriter transcript(transcript_file);
  const auto records = llm::run_harness(ds.puzzles, *endpoint, h, &transcript);
  transcript_file.close();

  std::vector<report::EvalRecord> evals;
  long failed = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    evals.push_back(llm::to_eval_record(records[i], ds.puzzles[i]));
    failed += records[i].failed() ? 1 : 0;
  }
  std::string configuration = grid_label(ds.config) + ", " + llm::to_string(h.prompt.mode) + ", " +
                              llm::to_string(h.prompt.scope) + ", n=" + std::to_string(h.prompt.self_consistency_n);
  if (h.prompt.in_context_count > 0) configuration += ", " + std::to_string(h.prompt.in_context_count) + " in-context";
  report::ReportTable table;
  table.rows.push_back(report::summarize(h.prompt.profile.name, configuration, evals));
  const auto confusion = llm::error_analysis(ds.puzzles, records);

  m.config() = {{"profile", h.prompt.profile.name},  {"model", h.prompt.profile.model},
                {"mode", o.mode},                    {"scope", o.scope},
                {"n", o.n},                          {"temperature", h.prompt.temperature},
                {"in_context", o.in_context},        {"strict", o.strict},
                {"dry_run", !o.dry_run.empty()},     {"failed_puzzles", failed}};
  m.seeds()["in_context"] = o.seed;
  m.output(o.out_dir, "transcripts.jsonl");
  write_report(table, o.out_dir, m);
  write_text(o.out_dir / "confusion.md", confusion.to_markdown());
  write_text(o.out_dir / "confusion.json", confusion.to_json().dump(2) + "\n");
  m.output(o.out_dir, "confusion.md");
  m.output(o.out_dir, "confusion.json");
  m.write(o.out_dir / "manifest.json");
  std::cout << table.to_markdown() << "\n" << confusion.to_markdown();
  if (failed > 0) std::cerr << failed << " puzzle(s) had failed queries; see transcripts.jsonl\n";
  return 0;
}

// ---- report --------------------------------------------------------------

int cmd_report(const std::vector<fs::path>& inputs, const fs::path& out_dir) {
  report::ReportTable merged;
  Manifest m("report");
  for (const auto& p : inputs) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    merged.merge(report::ReportTable::from_json(json::parse(in)));
    m.input(p);
  }
  fs::create_directories(out_dir);
  write_report(merged, out_dir, m);
  m.write(out_dir / "manifest.json");
  std::cout << merged.to_markdown();
  return 0;
}

void add_codebook_flags(CLI::App* cmd, CodebookOptions& c) {
  cmd->add_option("--dims", c.dims, "Vector dimension D")->capture_default_str();
  cmd->add_option("--blocks", c.blocks, "Number of blocks B")->capture_default_str();
  cmd->add_option("--codebook-seed", c.seed, "Seed of the base vector")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"RPM puzzle generation, VSA abductive rule learning and LLM evaluation"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate puzzles as JSON lines");
  g->add_option("--grid", gen.grid, "Columns g")->capture_default_str();
  g->add_option("--range", gen.range, "Shared dynamic range m (default: I-RAVEN ranges at g=3)");
  g->add_option("--count", gen.count, "Number of puzzles");
  g->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
  g->add_option("--split", gen.split, "Split label for --out")->check(CLI::IsMember({"train", "validation", "test"}));
  g->add_option("--out", gen.out, "Output JSONL file");
  g->add_option("--train", gen.train, "Training puzzles (with --out-dir)");
  g->add_option("--validation", gen.validation, "Validation puzzles (with --out-dir)");
  g->add_option("--test", gen.test, "Test puzzles (with --out-dir)");
  g->add_option("--out-dir", gen.out_dir, "Directory for disjoint train/validation/test files");

  TrainOptions train;
  auto* t = app.add_subcommand("train", "Train ARLC rules on a dataset");
  t->add_option("--data", train.data, "Training JSONL")->required()->check(CLI::ExistingFile);
  t->add_option("--validation", train.validation, "Held-out JSONL for accuracy before and after")->check(CLI::ExistingFile);
  t->add_option("--out-dir", train.out_dir, "Output directory")->required();
  t->add_option("--epochs", train.train.epochs)->capture_default_str();
  t->add_option("--lr", train.train.learning_rate)->capture_default_str();
  t->add_option("--batch", train.train.batch_size)->capture_default_str();
  t->add_option("--momentum", train.train.momentum)->capture_default_str();
  t->add_option("--init-scale", train.init_scale, "Std of the initial logits")->capture_default_str();
  t->add_option("--rules", train.rules, "Number of rules R")->capture_default_str();
  t->add_option("--seed", train.seed, "Seed for initialization and shuffling")->capture_default_str();
  t->add_flag("--programmed-init", train.programmed_init, "Start from the programmed rules");
  add_codebook_flags(t, train.codebook);

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Evaluate ARLC on a dataset");
  e->add_option("--data", ev.data, "Test JSONL")->required()->check(CLI::ExistingFile);
  e->add_option("--checkpoint", ev.checkpoint, "Trained checkpoint")->check(CLI::ExistingFile);
  e->add_flag("--programmed", ev.programmed, "Use the programmed rules");
  e->add_option("--swap-range", ev.swap_range, "Evaluate with a dictionary of this range");
  e->add_option("--method", ev.method, "Method name in the report");
  e->add_option("--out-dir", ev.out_dir, "Output directory")->required();
  e->add_option("--threads", ev.threads)->capture_default_str();
  add_codebook_flags(e, ev.codebook);

  LlmOptions lo;
  auto* l = app.add_subcommand("llm-eval", "Query a chat-completions endpoint on a dataset");
  l->add_option("--data", lo.data, "Test JSONL")->required()->check(CLI::ExistingFile);
  l->add_option("--out-dir", lo.out_dir, "Output directory")->required();
  l->add_option("--profile", lo.profile)->check(CLI::IsMember({"gpt-4", "llama-3-70b"}))->capture_default_str();
  l->add_option("--model", lo.model, "Override the profile's model name");
  l->add_option("--mode", lo.mode)->check(CLI::IsMember({"predictive", "discriminative"}))->capture_default_str();
  l->add_option("--scope", lo.scope)->check(CLI::IsMember({"disentangled", "entangled"}))->capture_default_str();
  l->add_option("--n", lo.n, "Self-consistency samples (odd)")->capture_default_str();
  l->add_option("--temperature", lo.temperature, "Sampling temperature (default: profile)");
  l->add_option("--in-context", lo.in_context, "In-context example matrices")->capture_default_str();
  l->add_option("--pool", lo.pool, "JSONL to draw in-context examples from")->check(CLI::ExistingFile);
  l->add_flag("--strict", lo.strict, "Reject responses with extra numbers");
  l->add_option("--concurrency", lo.concurrency, "Requests in flight")->capture_default_str();
  l->add_option("--retries", lo.retries, "Attempts per request")->capture_default_str();
  l->add_option("--seed", lo.seed, "Seed for in-context sampling")->capture_default_str();
  l->add_option("--base-url", lo.base_url, "Endpoint base URL (default: RAVENX_LLM_BASE_URL)");
  l->add_option("--dry-run", lo.dry_run, "Replay scripted responses instead of calling an endpoint")
      ->check(CLI::ExistingFile);

  std::vector<fs::path> report_inputs;
  fs::path report_out;
  auto* r = app.add_subcommand("report", "Merge report.json files");
  r->add_option("--in", report_inputs, "report.json files")->required()->check(CLI::ExistingFile);
  r->add_option("--out-dir", report_out, "Output directory")->required();

  std::vector<const char*> argv{"ravenx"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*t) return cmd_train(train);
    if (*e) return cmd_eval(ev);
    if (*l) return cmd_llm_eval(lo);
    if (*r) return cmd_report(report_inputs, report_out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace ravenx::cli
