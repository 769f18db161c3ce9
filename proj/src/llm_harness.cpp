#include <atomic>
#include <cmath>
#include <exception>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "ravenx/llm.hpp"

namespace ravenx::llm {

std::vector<std::string> extract_numbers(std::string_view text) {
  static const std::regex number_re(R"(-?\d+(?:\.\d+)?)");
  std::vector<std::string> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number_re); it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

namespace {

std::optional<long long> as_integer(const std::string& token) {
  const auto dot = token.find('.');
  if (dot != std::string::npos && token.find_first_not_of('0', dot + 1) != std::string::npos) return std::nullopt;
  try {
    return std::stoll(token.substr(0, dot));
  } catch (const std::out_of_range&) {
    return std::nullopt;
  }
}

}  // namespace

std::optional<int> parse_integer(std::string_view text, bool strict) {
  const auto numbers = extract_numbers(text);
  if (numbers.empty() || (strict && numbers.size() != 1)) return std::nullopt;
  const auto v = as_integer(numbers.front());
  if (!v || *v < INT32_MIN || *v > INT32_MAX) return std::nullopt;
  return static_cast<int>(*v);
}

std::optional<std::vector<int>> parse_entangled(std::string_view text, std::size_t attributes, bool strict) {
  const auto numbers = extract_numbers(text);
  if (numbers.size() < attributes || (strict && numbers.size() != attributes)) return std::nullopt;
  std::vector<int> out;
  for (std::size_t a = 0; a < attributes; ++a) {
    const double scaled = std::stod(numbers[a]) / std::pow(10.0, scale_exponent(a));
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) > 1e-6 || std::abs(rounded) > INT32_MAX) return std::nullopt;
    out.push_back(static_cast<int>(rounded));
  }
  return out;
}

std::optional<Answer> vote(std::span<const std::optional<Answer>> parsed) {
  std::vector<std::pair<Answer, int>> counts;  // first-seen order
  for (const auto& p : parsed) {
    if (!p) continue;
    auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return c.first == *p; });
    if (it == counts.end()) {
      counts.emplace_back(*p, 1);
    } else {
      ++it->second;
    }
  }
  if (counts.empty()) return std::nullopt;
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

int select_candidate(std::span<const std::optional<int>> predicted, const std::vector<std::vector<int>>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_candidate: no candidates");
  int best = 0;
  int best_overlap = -1;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    int overlap = 0;
    for (std::size_t a = 0; a < predicted.size() && a < candidates[k].size(); ++a) {
      overlap += (predicted[a] && *predicted[a] == candidates[k][a]) ? 1 : 0;
    }
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = static_cast<int>(k);
    }
  }
  return best;
}

std::string to_string(ErrorClass c) {
  switch (c) {
    case ErrorClass::LastRowConstant: return "constant";
    case ErrorClass::LastRowProgression: return "progression";
    case ErrorClass::ShortConstant: return "short_constant";
    case ErrorClass::ShortDistribute: return "short_distribute_three";
    case ErrorClass::Unknown: return "unknown";
  }
  throw std::logic_error("unknown error class");
}

ErrorClass classify_error(const raven::Grid& grid, std::optional<int> predicted) {
  if (!predicted) return ErrorClass::Unknown;
  const int p = *predicted;
  const auto& last = grid.at(2);
  const auto& middle = grid.at(1);
  const std::size_t known = last.size() - 1;  // x_{3,1} .. x_{3,g-1}

  const bool constant = std::all_of(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(known),
                                    [&](int v) { return v == last[0]; });
  if (constant && p == last[0]) return ErrorClass::LastRowConstant;

  if (known >= 2) {
    const int delta = last[1] - last[0];
    bool progression = true;
    for (std::size_t c = 1; c < known; ++c) progression = progression && (last[c] - last[c - 1] == delta);
    if (progression && p == last[known - 1] + delta) return ErrorClass::LastRowProgression;
  }

  if (p == last[known - 1]) return ErrorClass::ShortConstant;

  const std::set<int> row2(middle.begin(), middle.end());
  const bool within = std::all_of(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(known),
                                  [&](int v) { return row2.count(v) > 0; });
  if (within && row2.count(p)) return ErrorClass::ShortDistribute;
  return ErrorClass::Unknown;
}

long ConfusionMatrix::total() const {
  long t = 0;
  for (const auto& row : counts)
    for (long c : row) t += c;
  return t;
}

long ConfusionMatrix::explained() const {
  long unknown = 0;
  for (const auto& row : counts) unknown += row[static_cast<std::size_t>(ErrorClass::Unknown)];
  return total() - unknown;
}

nlohmann::json ConfusionMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::object();
  for (std::size_t f = 0; f < report::kReportFamilies.size(); ++f) {
    nlohmann::json row = nlohmann::json::object();
    for (auto c : kAllErrorClasses) row[to_string(c)] = counts[f][static_cast<std::size_t>(c)];
    rows[raven::to_string(report::kReportFamilies[f])] = row;
  }
  return {{"counts", rows}, {"total", total()}, {"explained", explained()}};
}

std::string ConfusionMatrix::to_markdown() const {
  std::ostringstream os;
  os << "| Ground truth |";
  for (auto c : kAllErrorClasses) os << ' ' << to_string(c) << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < std::size(kAllErrorClasses); ++i) os << "---:|";
  os << '\n';
  for (std::size_t f = 0; f < report::kReportFamilies.size(); ++f) {
    os << "| " << raven::to_string(report::kReportFamilies[f]) << " |";
    for (long c : counts[f]) os << ' ' << c << " |";
    os << '\n';
  }
  os << "\nExplained " << explained() << " of " << total() << " errors.\n";
  return os.str();
}

bool PromptRecord::failed() const {
  return std::any_of(queries.begin(), queries.end(), [](const QueryRecord& q) { return q.failed; });
}

namespace {

nlohmann::json answer_json(const std::optional<Answer>& a) { return a ? nlohmann::json(*a) : nlohmann::json(nullptr); }

std::optional<Answer> answer_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<Answer>();
}

}  // namespace

nlohmann::json to_json(const PromptRecord& r) {
  nlohmann::json queries = nlohmann::json::array();
  for (const auto& q : r.queries) {
    nlohmann::json parsed = nlohmann::json::array();
    for (const auto& p : q.parsed) parsed.push_back(answer_json(p));
    queries.push_back({{"attribute", q.attribute},
                       {"prompt", q.prompt},
                       {"responses", q.responses},
                       {"parsed", parsed},
                       {"vote", answer_json(q.vote)},
                       {"failed", q.failed},
                       {"error", q.error}});
  }
  nlohmann::json predicted = nlohmann::json::array();
  for (const auto& p : r.predicted) predicted.push_back(p ? nlohmann::json(*p) : nlohmann::json(nullptr));
  return {{"id", r.puzzle_id},          {"queries", queries},   {"predicted", predicted},
          {"chosen_index", r.chosen_index}, {"answer_index", r.answer_index}, {"correct", r.correct()},
          {"failed", r.failed()},       {"rules", r.rules}};
}

PromptRecord prompt_record_from_json(const nlohmann::json& j) {
  PromptRecord r;
  r.puzzle_id = j.at("id").get<std::string>();
  for (const auto& jq : j.at("queries")) {
    QueryRecord q;
    q.attribute = jq.at("attribute").get<int>();
    q.prompt = jq.at("prompt").get<std::string>();
    q.responses = jq.at("responses").get<std::vector<std::string>>();
    for (const auto& p : jq.at("parsed")) q.parsed.push_back(answer_from_json(p));
    q.vote = answer_from_json(jq.at("vote"));
    q.failed = jq.at("failed").get<bool>();
    q.error = jq.at("error").get<std::string>();
    r.queries.push_back(std::move(q));
  }
  for (const auto& p : j.at("predicted")) r.predicted.push_back(p.is_null() ? std::nullopt : std::optional<int>(p.get<int>()));
  r.chosen_index = j.at("chosen_index").get<int>();
  r.answer_index = j.at("answer_index").get<int>();
  r.rules = j.at("rules").get<std::vector<std::string>>();
  return r;
}

ConfusionMatrix error_analysis(std::span<const raven::RpmPuzzle> puzzles, std::span<const PromptRecord> records) {
  std::map<std::string, const raven::RpmPuzzle*> by_id;
  for (const auto& p : puzzles) by_id[p.id] = &p;
  ConfusionMatrix m;
  for (const auto& r : records) {
    const auto it = by_id.find(r.puzzle_id);
    if (it == by_id.end()) throw std::invalid_argument("error_analysis: unknown puzzle " + r.puzzle_id);
    const auto& puzzle = *it->second;
    for (std::size_t a = 0; a < puzzle.attribute_count(); ++a) {
      const auto predicted = a < r.predicted.size() ? r.predicted[a] : std::nullopt;
      if (predicted && *predicted == puzzle.hidden_value(a)) continue;
      const auto family = puzzle.rules[a].family();
      const auto f = static_cast<std::size_t>(
          std::find(report::kReportFamilies.begin(), report::kReportFamilies.end(), family) -
          report::kReportFamilies.begin());
      ++m.counts[f][static_cast<std::size_t>(classify_error(puzzle.grids[a], predicted))];
    }
  }
  return m;
}

report::EvalRecord to_eval_record(const PromptRecord& record, const raven::RpmPuzzle& puzzle) {
  report::EvalRecord e;
  e.puzzle_id = record.puzzle_id;
  e.chosen_index = record.chosen_index;
  e.answer_index = puzzle.answer_index;
  e.predicted_values = record.predicted;
  e.predicted_values.resize(puzzle.attribute_count());
  for (std::size_t a = 0; a < puzzle.attribute_count(); ++a) e.hidden_values.push_back(puzzle.hidden_value(a));
  e.rules = puzzle.rules;
  return e;
}

void TranscriptWriter::submit(std::size_t index, const PromptRecord& record) {
  std::lock_guard lock(mutex_);
  pending_.emplace(index, to_json(record).dump());
  while (!pending_.empty() && pending_.begin()->first == next_) {
    out_ << pending_.begin()->second << '\n';
    pending_.erase(pending_.begin());
    ++next_;
  }
  out_.flush();
}

namespace {

QueryRecord ask(Endpoint& endpoint, const HarnessOptions& options, int attribute, std::string prompt) {
  const auto& cfg = options.prompt;
  QueryRecord q;
  q.attribute = attribute;
  q.prompt = std::move(prompt);
  const auto result = query(endpoint, {cfg.profile.model, q.prompt, cfg.temperature, cfg.self_consistency_n},
                            options.retry);
  q.responses = result.responses;
  q.failed = result.failed;
  q.error = result.error;
  return q;
}

}  // namespace

PromptRecord solve(const raven::RpmPuzzle& puzzle, Endpoint& endpoint, const HarnessOptions& options,
                   std::uint64_t puzzle_seed) {
  const auto& cfg = options.prompt;
  cfg.validate();
  PromptRecord rec;
  rec.puzzle_id = puzzle.id;
  rec.answer_index = puzzle.answer_index;
  for (const auto& r : puzzle.rules) rec.rules.push_back(raven::to_string(r));
  rec.predicted.assign(puzzle.attribute_count(), std::nullopt);
  const auto attributes = puzzle.attribute_count();

  Rng rng(puzzle_seed);
  const auto examples = sample_in_context(puzzle, options.in_context_pool, cfg.in_context_count, rng);

  if (cfg.scope == AttributeScope::Entangled) {
    std::vector<std::vector<raven::Grid>> ctx;
    for (const auto* p : examples) ctx.push_back(p->grids);
    auto q = ask(endpoint, options, -1, render_entangled(puzzle, cfg, ctx));
    if (!q.failed) {
      for (const auto& s : q.responses) q.parsed.push_back(parse_entangled(s, attributes, cfg.strict_parse));
      q.vote = vote(q.parsed);
      if (q.vote) {
        for (std::size_t a = 0; a < attributes; ++a) rec.predicted[a] = (*q.vote)[a];
      }
    }
    rec.queries.push_back(std::move(q));
  } else {
    for (std::size_t a = 0; a < attributes; ++a) {
      const bool predictive = cfg.mode == PromptMode::Predictive;
      std::string prompt;
      if (predictive) {
        std::vector<raven::Grid> ctx;
        for (const auto* p : examples) ctx.push_back(p->grids[a]);
        prompt = render_predictive(puzzle, a, cfg, ctx);
      } else {
        prompt = render_discriminative(puzzle, a, cfg);
      }
      auto q = ask(endpoint, options, static_cast<int>(a), std::move(prompt));
      if (!q.failed) {
        for (const auto& s : q.responses) {
          auto v = parse_integer(s, cfg.strict_parse);
          if (v && !predictive && (*v < 1 || *v > static_cast<int>(puzzle.candidates.size()))) v.reset();
          q.parsed.push_back(v ? std::optional<Answer>(Answer{*v}) : std::nullopt);
        }
        q.vote = vote(q.parsed);
        if (q.vote) {
          const int v = q.vote->front();
          rec.predicted[a] = predictive ? v : puzzle.candidates[static_cast<std::size_t>(v - 1)][a];
        }
      }
      rec.queries.push_back(std::move(q));
    }
  }

  const bool any = std::any_of(rec.predicted.begin(), rec.predicted.end(), [](const auto& p) { return p.has_value(); });
  rec.chosen_index = any ? select_candidate(rec.predicted, puzzle.candidates) : -1;
  return rec;
}

std::vector<PromptRecord> run_harness(std::span<const raven::RpmPuzzle> puzzles, Endpoint& endpoint,
                                      const HarnessOptions& options, TranscriptWriter* transcript) {
  options.prompt.validate();
  if (options.concurrency < 1) throw std::invalid_argument("concurrency must be at least 1");
  std::vector<PromptRecord> records(puzzles.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < puzzles.size(); i = next++) {
      try {
        records[i] = solve(puzzles[i], endpoint, options, derive_seed(options.seed, i));
        if (transcript) transcript->submit(i, records[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = puzzles.size();
      }
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(options.concurrency), puzzles.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return records;
}

}  // namespace ravenx::llm
