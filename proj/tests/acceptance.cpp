// Acceptance checks. Each criterion prints one PASS/FAIL line with the measured
// values and the thresholds it was held to.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "ravenx/arlc.hpp"
#include "ravenx/evaluate.hpp"
#include "ravenx/llm.hpp"
#include "ravenx/raven.hpp"
#include "ravenx/report.hpp"
#include "ravenx/rng.hpp"
#include "ravenx/spectral.hpp"
#include "ravenx/vsa.hpp"

using namespace ravenx;

namespace {

struct Options {
  int criterion = 0;
  int seeds = 10;
  int train_count = 5000;
  int test_count = 500;
  int epochs = 25;
  int ood_train_count = 1000;
  double ood_lr = 0.2;
  int pl_seeds = 3;
  int threads = 0;
  std::string fixtures = RAVENX_FIXTURES;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

bool report_line(int id, bool pass, const std::string& what) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  return pass;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int worker_count(const Options& o, int jobs) {
  const int hw = o.threads > 0 ? o.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min(hw, jobs));
}

void parallel_for(int jobs, int workers, const std::function<void(int)>& fn) {
  std::atomic<int> next{0};
  auto run = [&] {
    for (int i = next++; i < jobs; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
}

// ---- 1: VSA algebra ----------------------------------------------------------

vsa::BlockVector power_oracle(const vsa::Codebook& cb, long v) {
  const long L = static_cast<long>(cb.block_len());
  std::vector<std::size_t> pos;
  for (auto o : cb.base_offsets()) pos.push_back(static_cast<std::size_t>(((v * static_cast<long>(o)) % L + L) % L));
  return vsa::BlockVector::one_hot(cb.block_len(), pos);
}

vsa::BlockVector random_simplex(std::size_t blocks, std::size_t len, Rng& rng) {
  vsa::BlockVector v(blocks, len);
  for (std::size_t b = 0; b < blocks; ++b) {
    double s = 0.0;
    for (auto& x : v.block(b)) s += (x = rng.uniform01());
    for (auto& x : v.block(b)) x /= s;
  }
  return v;
}

bool criterion_vsa() {
  const auto start = Clock::now();
  Rng rng(1);
  const vsa::Codebook cb({1024, 4, 1000, 7});
  int exact = 0;
  for (int t = 0; t < 1000; ++t) {
    const long a = rng.uniform_int(0, 999), b = rng.uniform_int(0, 999);
    const bool hom = vsa::bind(vsa::fpe_encode(cb, a), vsa::fpe_encode(cb, b)) == power_oracle(cb, a + b);
    const bool inv = vsa::unbind(vsa::bind(vsa::fpe_encode(cb, a), vsa::fpe_encode(cb, b)), vsa::fpe_encode(cb, b)) ==
                     vsa::fpe_encode(cb, a);
    exact += hom && inv;
  }
  // sim((p z^v1 + (1-p) z^v1') * z^v2, z^v3) = p sim(z^v1 * z^v2, z^v3) + (1-p) sim(z^v1' * z^v2, z^v3),
  // with sim the block-averaged inner product.
  double worst_lin = 0.0;
  for (int t = 0; t < 200; ++t) {
    const vsa::Codebook c({1024, 4, 100, rng.next()});
    const long v1 = rng.uniform_int(0, 99), v1p = rng.uniform_int(0, 99), v2 = rng.uniform_int(0, 99),
               v3 = rng.uniform_int(0, 99);
    const double p = rng.uniform01();
    std::vector<double> pm(100, 0.0);
    pm[static_cast<std::size_t>(v1)] += p;
    pm[static_cast<std::size_t>(v1p)] += 1.0 - p;
    const auto& z3 = vsa::fpe_encode(c, v3);
    auto sim = [&](const vsa::BlockVector& x) {
      return std::inner_product(x.data().begin(), x.data().end(), z3.data().begin(), 0.0) / 4.0;
    };
    const double lhs = sim(vsa::bind(vsa::encode_pmf(c, vsa::Pmf(pm)), vsa::fpe_encode(c, v2)));
    const double rhs = p * sim(vsa::bind(vsa::fpe_encode(c, v1), vsa::fpe_encode(c, v2))) +
                       (1.0 - p) * sim(vsa::bind(vsa::fpe_encode(c, v1p), vsa::fpe_encode(c, v2)));
    worst_lin = std::max(worst_lin, std::abs(lhs - rhs));
  }
  double worst_simplex = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto a = random_simplex(4, 256, rng), b = random_simplex(4, 256, rng);
    for (const auto& v : {vsa::bind(a, b), vsa::unbind(a, b)}) {
      for (std::size_t blk = 0; blk < 4; ++blk) {
        double s = 0.0;
        for (double x : v.block(blk)) {
          s += x;
          if (x < 0) worst_simplex = std::max(worst_simplex, -x);
        }
        worst_simplex = std::max(worst_simplex, std::abs(s - 1.0));
      }
    }
  }
  const double secs = seconds_since(start);
  const bool pass = exact == 1000 && worst_lin < 1e-6 && worst_simplex < 1e-9 && secs < 10.0;
  return report_line(1, pass,
                     fmt("VSA algebra: homomorphism+inverse exact on %d/1000 pairs (need 1000); linearity error %.2e "
                         "(< 1e-6); simplex error %.2e (< 1e-9); %.1f s (< 10 s)",
                         exact, worst_lin, worst_simplex, secs));
}

// ---- 2: generator -------------------------------------------------------------

bool row_ok(const std::vector<int>& row, const std::vector<int>* prev, const raven::Rule& rule, int m) {
  for (int v : row)
    if (v < 0 || v >= m) return false;
  const std::size_t g = row.size();
  switch (rule.kind) {
    case raven::Rule::Kind::Constant: return std::set<int>(row.begin(), row.end()).size() == 1;
    case raven::Rule::Kind::Progression:
      for (std::size_t j = 0; j < g; ++j)
        if (row[j] != row[0] + static_cast<int>(j) * rule.delta) return false;
      return true;
    case raven::Rule::Kind::ArithmeticPlus: return std::accumulate(row.begin(), row.end() - 1, 0L) == row.back();
    case raven::Rule::Kind::ArithmeticMinus: return std::accumulate(row.begin() + 1, row.end(), 0L) == row.front();
    case raven::Rule::Kind::DistributeN:
      if (std::set<int>(row.begin(), row.end()).size() != g) return false;
      if (!prev) return true;
      for (std::size_t j = 0; j < g; ++j) {
        const int expect = rule.shift == raven::Shift::Right ? (*prev)[(j + g - 1) % g] : (*prev)[(j + 1) % g];
        if (row[j] != expect) return false;
      }
      return true;
  }
  return false;
}

double chi2(const std::vector<double>& counts) {
  const double expected = std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(counts.size());
  double s = 0.0;
  for (double c : counts) s += (c - expected) * (c - expected) / expected;
  return s;
}

bool criterion_generator() {
  const auto start = Clock::now();
  long rows = 0, bad = 0;
  for (int g : {3, 10}) {
    for (int m : {10, 50, 100, 1000}) {
      Rng rng(derive_seed(static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(m)));
      std::vector<raven::Rule> rules{raven::Rule::constant(), raven::Rule::arithmetic_plus(),
                                     raven::Rule::arithmetic_minus(), raven::Rule::distribute(raven::Shift::Left),
                                     raven::Rule::distribute(raven::Shift::Right)};
      for (int d : raven::feasible_deltas(m, g)) rules.push_back(raven::Rule::progression(d));
      for (const auto& rule : rules) {
        // 10k rows per rule: ceil(10000 / 3) grids of three rows.
        for (int i = 0; i < 3334; ++i) {
          const auto grid = raven::generate_rows(rule, m, g, rng);
          for (std::size_t r = 0; r < 3; ++r) {
            ++rows;
            bad += !row_ok(grid[r], r ? &grid[r - 1] : nullptr, rule, m);
          }
        }
      }
    }
  }
  const auto ds = raven::gen_dataset(raven::GeneratorConfig::iraven(), 4000, 11, raven::Split::Test);
  std::vector<double> answers(8, 0.0);
  std::map<raven::RuleFamily, double> color, shape;
  for (const auto& p : ds.puzzles) {
    answers[static_cast<std::size_t>(p.answer_index)] += 1;
    color[p.rules[2].family()] += 1;
    shape[p.rules[0].family()] += 1;
  }
  std::vector<double> cv, sv;
  for (auto& [k, v] : color) cv.push_back(v);
  for (auto& [k, v] : shape) sv.push_back(v);
  // Critical values at p = 0.01 for 7, 3 and 2 degrees of freedom.
  const double ca = chi2(answers), cc = chi2(cv), cs = chi2(sv);
  const bool uniform = ca < 18.475 && cv.size() == 4 && cc < 11.345 && sv.size() == 3 && cs < 9.210;
  const auto cfg = raven::GeneratorConfig::iraven_x(10, 100);
  const bool deterministic = raven::serialize_dataset(raven::gen_dataset(cfg, 300, 5, raven::Split::Test)) ==
                             raven::serialize_dataset(raven::gen_dataset(cfg, 300, 5, raven::Split::Test));
  const double secs = seconds_since(start);
  const bool pass = bad == 0 && uniform && deterministic && secs < 60.0;
  return report_line(2, pass,
                     fmt("generator: %ld/%ld rows violate their rule (need 0); chi2 answer %.2f (< 18.475), color "
                         "rule %.2f (< 11.345), shape rule %.2f (< 9.210); byte-deterministic %s; %.1f s (< 60 s)",
                         bad, rows, ca, cc, cs, deterministic ? "yes" : "no", secs));
}

// ---- 3: programmed rules -----------------------------------------------------

report::ReportRow eval_programmed(int g, int m, int count, std::uint64_t seed, int threads) {
  const auto cfg = g == 3 && m == 0 ? raven::GeneratorConfig::iraven() : raven::GeneratorConfig::iraven_x(g, m);
  const auto ds = raven::gen_dataset(cfg, static_cast<std::size_t>(count), seed, raven::Split::Test);
  const arlc::Reasoner r(vsa::Codebook({1024, 4, static_cast<std::size_t>(cfg.max_range()), 1}),
                         arlc::program_rules(arlc::TemplateShape::for_grid(g)));
  return report::summarize("ARLC_progr", "", evaluate(r, ds.puzzles, threads));
}

bool criterion_programmed(const Options& o) {
  const int threads = worker_count(o, 8);
  bool pass = true;
  std::string detail;
  const auto base = eval_programmed(3, 0, 500, 301, threads);
  const double t3 = *base.task.percent();
  pass = pass && t3 >= 97.0;
  detail += fmt("3x3 task %.1f%% (>= 97)", t3);
  for (int m : {50, 100, 1000}) {
    const auto row = eval_programmed(10, m, 500, 300 + static_cast<std::uint64_t>(m), threads);
    const double task = *row.task.percent();
    const double arith = *row.rule(raven::RuleFamily::Arithmetic).percent();
    pass = pass && task >= 99.0 && arith >= 99.0;
    detail += fmt("; 3x10 m=%d task %.1f%% arithmetic %.1f%% (>= 99, >= 99)", m, task, arith);
  }
  return report_line(3, pass, "ARLC_progr on 500 puzzles each: " + detail);
}

// ---- 4: learning from scratch --------------------------------------------------

struct SeedRun {
  double start = 0.0;
  double end = 0.0;
};

double task_accuracy(const arlc::Reasoner& r, const std::vector<raven::RpmPuzzle>& puzzles) {
  long c = 0;
  for (const auto& p : puzzles) c += r.predict(p).answer_index == p.answer_index;
  return 100.0 * static_cast<double>(c) / static_cast<double>(puzzles.size());
}

bool criterion_learn(const Options& o) {
  const auto start = Clock::now();
  const auto cfg = raven::GeneratorConfig::iraven();
  const vsa::Codebook cb({1024, 4, static_cast<std::size_t>(cfg.max_range()), 1});
  const auto shape = arlc::TemplateShape::for_grid(3);
  std::vector<double> acc(static_cast<std::size_t>(o.seeds));
  std::mutex io;
  parallel_for(o.seeds, worker_count(o, o.seeds), [&](int s) {
    const auto seed = static_cast<std::uint64_t>(s + 1);
    const auto splits = raven::gen_splits(cfg, static_cast<std::size_t>(o.train_count), 0,
                                          static_cast<std::size_t>(o.test_count), derive_seed(seed, 100));
    Rng rng(derive_seed(seed, 0));
    const auto init = arlc::RuleSet::random(shape, 5, arlc::kDefaultInitScale, rng);
    arlc::TrainConfig tc;
    tc.epochs = o.epochs;
    tc.seed = derive_seed(seed, 1);
    const auto result = arlc::train(splits.train.puzzles, cb, init, tc);
    acc[static_cast<std::size_t>(s)] = task_accuracy(arlc::Reasoner(cb, result.rules), splits.test.puzzles);
    std::lock_guard lock(io);
    std::printf("  seed %d: held-out task accuracy %.1f%% (final loss %.4f)\n", s + 1, acc[static_cast<std::size_t>(s)],
                result.epoch_loss.back());
    std::fflush(stdout);
  });
  const int good = static_cast<int>(std::count_if(acc.begin(), acc.end(), [](double a) { return a >= 95.0; }));
  const int need = (8 * o.seeds + 9) / 10;
  const double mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
  const double secs = seconds_since(start);
  return report_line(4, good >= need,
                     fmt("ARLC_learn from scratch (%d puzzles, lr 0.01, %d epochs, R=5): %d/%d seeds >= 95%% "
                         "(need %d), mean %.1f%%, %.0f s",
                         o.train_count, o.epochs, good, o.seeds, need, mean, secs));
}

// ---- 5: dictionary swap ----------------------------------------------------------

bool criterion_swap(const Options& o) {
  const auto start = Clock::now();
  const auto train_cfg = raven::GeneratorConfig::iraven_x(10, 50);
  const auto train = raven::gen_dataset(train_cfg, static_cast<std::size_t>(o.ood_train_count), 501, raven::Split::Train);
  const vsa::Codebook cb({1024, 4, 50, 1});
  Rng rng(derive_seed(5, 0));
  const auto init = arlc::RuleSet::random(arlc::TemplateShape::for_grid(10), 5, arlc::kDefaultInitScale, rng);
  arlc::TrainConfig tc;
  tc.epochs = o.epochs;
  tc.learning_rate = o.ood_lr;
  tc.seed = derive_seed(5, 1);
  const auto result = arlc::train(train.puzzles, cb, init, tc);
  const arlc::Reasoner learned(cb, result.rules);
  const auto in_dist = raven::gen_dataset(train_cfg, 500, 502, raven::Split::Test);
  const auto in_row = report::summarize("ARLC_learn", "m=50", evaluate(learned, in_dist.puzzles, worker_count(o, 8)));
  const auto swapped = arlc::swap_dictionary(learned, cb.with_range(1000));
  const auto ood = raven::gen_dataset(raven::GeneratorConfig::iraven_x(10, 1000), 500, 503, raven::Split::Test);
  const auto row = report::summarize("ARLC_learn", "m=1000", evaluate(swapped, ood.puzzles, worker_count(o, 8)));
  const double task = *row.task.percent();
  const double arith = *row.rule(raven::RuleFamily::Arithmetic).percent();
  return report_line(5, task >= 85.0 && arith >= 55.0,
                     fmt("dictionary swap 3x10 m=50 -> m=1000 (%d training puzzles, lr %g): task %.1f%% (>= 85), arithmetic "
                         "%.1f%% (>= 55); in-distribution task %.1f%%; %.0f s",
                         o.ood_train_count, o.ood_lr, task, arith, *in_row.task.percent(), seconds_since(start)));
}

// ---- 6: gradient check -----------------------------------------------------------

bool criterion_gradient() {
  Rng rng(606);
  const vsa::Codebook cb({1024, 4, 10, 1});
  const vsa::SpectralBasis basis(cb);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    auto rules = arlc::RuleSet::random(arlc::TemplateShape::for_grid(3), 5, arlc::kDefaultInitScale, rng);
    const auto p = raven::gen_puzzle(raven::GeneratorConfig::iraven(), rng);
    const auto panels = arlc::encode_panels(basis, p.grids[static_cast<std::size_t>(t % 3)]);
    std::vector<double> grad(rules.parameter_count(), 0.0);
    arlc::loss_and_gradient(basis, rules, panels, grad);
    for (int k = 0; k < 2; ++k) {
      const auto j = static_cast<std::size_t>(rng.below(rules.parameter_count()));
      const double h = 1e-4, x = rules.parameters()[j];
      rules.parameters()[j] = x + h;
      const double up = arlc::loss_and_gradient(basis, rules, panels, {});
      rules.parameters()[j] = x - h;
      const double down = arlc::loss_and_gradient(basis, rules, panels, {});
      rules.parameters()[j] = x;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(grad[j] - fd) / std::max({std::abs(grad[j]), std::abs(fd), 1e-6}));
    }
  }
  return report_line(6, worst < 1e-4,
                     fmt("gradient check on 10 logits over 5 puzzles: max relative error %.2e (< 1e-4)", worst));
}

// ---- 7: programmed then learned ----------------------------------------------------

bool criterion_programmed_learned(const Options& o) {
  const auto start = Clock::now();
  const auto cfg = raven::GeneratorConfig::iraven();
  const vsa::Codebook cb({1024, 4, static_cast<std::size_t>(cfg.max_range()), 1});
  std::vector<SeedRun> runs(static_cast<std::size_t>(o.pl_seeds));
  std::mutex io;
  parallel_for(o.pl_seeds, worker_count(o, o.pl_seeds), [&](int s) {
    const auto seed = static_cast<std::uint64_t>(s + 1);
    const auto splits = raven::gen_splits(cfg, static_cast<std::size_t>(o.train_count), 0,
                                          static_cast<std::size_t>(o.test_count), derive_seed(seed, 200));
    auto init = arlc::program_rules(arlc::TemplateShape::for_grid(3));
    init.append_uniform(1);
    arlc::TrainConfig tc;
    tc.epochs = o.epochs;
    tc.seed = derive_seed(seed, 1);
    auto& run = runs[static_cast<std::size_t>(s)];
    run.start = task_accuracy(arlc::Reasoner(cb, init), splits.test.puzzles);
    const auto result = arlc::train(splits.train.puzzles, cb, init, tc);
    run.end = task_accuracy(arlc::Reasoner(cb, result.rules), splits.test.puzzles);
    std::lock_guard lock(io);
    std::printf("  seed %d: %.1f%% -> %.1f%%\n", s + 1, run.start, run.end);
    std::fflush(stdout);
  });
  std::string detail;
  bool pass = true;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    pass = pass && runs[i].end >= runs[i].start - 1.0;
    detail += fmt("%sseed %zu %.1f -> %.1f", i ? ", " : "", i + 1, runs[i].start, runs[i].end);
  }
  return report_line(7, pass,
                     "ARLC_p->l held-out accuracy never drops more than 1 point below the programmed start: " + detail +
                         fmt("; %.0f s", seconds_since(start)));
}

// ---- 8: LLM harness ----------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool criterion_llm(const Options& o) {
  using namespace ravenx::llm;
  const std::filesystem::path fx = o.fixtures;
  int failures = 0;
  auto expect = [&](bool ok) { failures += !ok; };

  raven::RpmPuzzle p;
  p.id = "hand";
  p.attributes = {{"shape", 5, false}, {"size", 6, true}, {"color", 10, true}};
  p.grids = {{{2, 2, 2}, {4, 4, 4}, {1, 1, 1}}, {{1, 2, 3}, {2, 3, 4}, {3, 4, 5}}, {{1, 2, 3}, {4, 1, 5}, {2, 6, 8}}};
  p.rules = {raven::Rule::constant(), raven::Rule::progression(1), raven::Rule::arithmetic_plus()};
  p.candidates = {{3, 5, 8}, {1, 0, 8}, {3, 0, 6}, {1, 5, 6}, {3, 0, 8}, {1, 5, 8}, {1, 0, 6}, {3, 5, 6}};
  p.answer_index = 5;
  const auto gpt = PromptConfig::for_profile("gpt-4");
  const auto llama = PromptConfig::for_profile("llama-3-70b");
  int goldens = 0;
  auto golden = [&](const std::string& text, const char* name) {
    const bool ok = text == slurp(fx / "prompts" / name);
    goldens += ok;
    expect(ok);
  };
  golden(render_predictive(p, 0, gpt), "predictive_gpt4_shape.txt");
  golden(render_predictive(p, 1, llama), "predictive_llama_size.txt");
  golden(render_entangled(p, gpt), "entangled_gpt4.txt");
  golden(render_discriminative(p, 2, gpt), "discriminative_gpt4_color.txt");
  golden(render_discriminative(p, 2, llama), "discriminative_llama_color.txt");

  auto ans = [](std::initializer_list<int> v) {
    std::vector<std::optional<Answer>> out;
    for (int x : v) out.push_back(Answer{x});
    return out;
  };
  expect(vote(ans({5, 5, 7, 5, 3, 5, 5})) == Answer{5});
  expect(parse_integer("The answer is 4") == 4);
  expect(vote(ans({7, 3, 3, 7, 3, 7})) == Answer{7});
  const std::vector<std::optional<int>> pred{3, 4, 2};
  expect(select_candidate(pred, {{3, 4, 0}, {3, 0, 0}, {0, 0, 0}}) == 0);

  const raven::Grid constant_row{{1, 5, 9}, {5, 9, 1}, {4, 4, 0}};
  const raven::Grid progression_row{{1, 2, 3}, {0, 1, 2}, {2, 5, 0}};
  const raven::Grid distribute{{1, 2, 3}, {2, 7, 5}, {7, 5, 0}};
  expect(classify_error(constant_row, 4) == ErrorClass::LastRowConstant);
  expect(classify_error(progression_row, 8) == ErrorClass::LastRowProgression);
  expect(classify_error(progression_row, 5) == ErrorClass::ShortConstant);
  expect(classify_error(distribute, 2) == ErrorClass::ShortDistribute);
  expect(classify_error(distribute, 9) == ErrorClass::Unknown);

  const auto ds = raven::load_dataset(fx / "llm20.jsonl");
  auto endpoint = ScriptedEndpoint::load(fx / "llm20_script.json");
  const auto expected = nlohmann::json::parse(slurp(fx / "llm20_expected.json"));
  HarnessOptions opt;
  opt.prompt = gpt;
  opt.retry.max_attempts = 2;
  opt.retry.sleep = [](std::chrono::milliseconds) {};
  const auto records = run_harness(ds.puzzles, endpoint, opt);
  int correct = 0;
  for (const auto& r : records) correct += r.correct();
  const int want = expected["correct"].get<int>();
  expect(correct == want);
  return report_line(8, failures == 0,
                     fmt("LLM harness: %d/5 golden prompts byte-equal; scripted dry run %d/20 correct (hand-computed "
                         "%d/20); %d unit checks failed (need 0)",
                         goldens, correct, want, failures));
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"ravenx acceptance checks"};
  app.add_option("--criterion", o.criterion, "Criterion to run (0 for all)")->check(CLI::Range(0, 8));
  app.add_option("--seeds", o.seeds, "Seeds for learning from scratch")->capture_default_str();
  app.add_option("--train-count", o.train_count)->capture_default_str();
  app.add_option("--test-count", o.test_count)->capture_default_str();
  app.add_option("--epochs", o.epochs)->capture_default_str();
  app.add_option("--ood-train-count", o.ood_train_count)->capture_default_str();
  app.add_option("--ood-lr", o.ood_lr, "Learning rate for the 3x10 model")->capture_default_str();
  app.add_option("--pl-seeds", o.pl_seeds, "Seeds for programmed-then-learned training")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads (0: all cores)")->capture_default_str();
  app.add_option("--fixtures", o.fixtures)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<bool()>> checks{
      criterion_vsa,
      criterion_generator,
      [&] { return criterion_programmed(o); },
      [&] { return criterion_learn(o); },
      [&] { return criterion_swap(o); },
      criterion_gradient,
      [&] { return criterion_programmed_learned(o); },
      [&] { return criterion_llm(o); },
  };
  bool ok = true;
  for (int i = 1; i <= 8; ++i) {
    if (o.criterion != 0 && o.criterion != i) continue;
    try {
      ok = checks[static_cast<std::size_t>(i - 1)]() && ok;
    } catch (const std::exception& e) {
      ok = report_line(i, false, std::string("error: ") + e.what()) && ok;
    }
  }
  return ok ? 0 : 1;
}
