#include "ravenx/raven.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ravenx::raven {

using nlohmann::json;

RuleFamily Rule::family() const {
  switch (kind) {
    case Kind::Constant: return RuleFamily::Constant;
    case Kind::Progression: return RuleFamily::Progression;
    case Kind::ArithmeticPlus:
    case Kind::ArithmeticMinus: return RuleFamily::Arithmetic;
    case Kind::DistributeN: return RuleFamily::Distribute;
  }
  throw std::logic_error("unknown rule kind");
}

std::string to_string(RuleFamily f) {
  switch (f) {
    case RuleFamily::Constant: return "constant";
    case RuleFamily::Progression: return "progression";
    case RuleFamily::Arithmetic: return "arithmetic";
    case RuleFamily::Distribute: return "distribute_three";
  }
  throw std::logic_error("unknown rule family");
}

std::string to_string(const Rule& r) {
  switch (r.kind) {
    case Rule::Kind::Constant: return "constant";
    case Rule::Kind::Progression: return std::string("progression(") + (r.delta > 0 ? "+" : "") +
                                         std::to_string(r.delta) + ")";
    case Rule::Kind::ArithmeticPlus: return "arithmetic_plus";
    case Rule::Kind::ArithmeticMinus: return "arithmetic_minus";
    case Rule::Kind::DistributeN:
      return std::string("distribute_n(") + (r.shift == Shift::Left ? "left" : "right") + ")";
  }
  throw std::logic_error("unknown rule kind");
}

Rule parse_rule(std::string_view text) {
  if (text == "constant") return Rule::constant();
  if (text == "arithmetic_plus") return Rule::arithmetic_plus();
  if (text == "arithmetic_minus") return Rule::arithmetic_minus();
  if (text == "distribute_n(left)") return Rule::distribute(Shift::Left);
  if (text == "distribute_n(right)") return Rule::distribute(Shift::Right);
  constexpr std::string_view prefix = "progression(";
  if (text.starts_with(prefix) && text.ends_with(")")) {
    const std::string inner(text.substr(prefix.size(), text.size() - prefix.size() - 1));
    std::size_t used = 0;
    const int delta = std::stoi(inner, &used);
    if (used == inner.size() && delta != 0) return Rule::progression(delta);
  }
  throw std::invalid_argument("unknown rule '" + std::string(text) + "'");
}

GeneratorConfig GeneratorConfig::iraven() {
  return {3, {{"shape", 5, false}, {"size", 6, true}, {"color", 10, true}}};
}

GeneratorConfig GeneratorConfig::iraven_x(int grid, int range) {
  return {grid, {{"shape", range, false}, {"size", range, true}, {"color", range, true}}};
}

int GeneratorConfig::max_range() const {
  int m = 0;
  for (const auto& a : attributes) m = std::max(m, a.range);
  return m;
}

void GeneratorConfig::validate() const {
  if (grid < 3) throw std::invalid_argument("grid must have at least 3 columns");
  if (attributes.size() < 3) throw std::invalid_argument("at least 3 attributes are required");
  std::set<std::string> names;
  for (const auto& a : attributes) {
    if (!names.insert(a.name).second) throw std::invalid_argument("duplicate attribute '" + a.name + "'");
    // Distribute-n needs g distinct values and progression with |delta| = 1
    // needs g - 1 <= m - 1; both reduce to m >= g.
    if (a.range < grid) {
      throw std::invalid_argument("attribute '" + a.name + "' range " + std::to_string(a.range) +
                                  " is smaller than the grid width " + std::to_string(grid));
    }
  }
}

std::vector<int> RpmPuzzle::answer() const {
  std::vector<int> v;
  for (std::size_t a = 0; a < attributes.size(); ++a) v.push_back(hidden_value(a));
  return v;
}

Grid gen_constant(int m, int g, Rng& rng) {
  if (m < 1) throw std::invalid_argument("gen_constant: m must be positive");
  Grid grid(3, std::vector<int>(g));
  for (auto& row : grid) std::fill(row.begin(), row.end(), rng.uniform_int(0, m - 1));
  return grid;
}

std::vector<int> feasible_deltas(int m, int g) {
  std::vector<int> out;
  for (int d : {-2, -1, 1, 2}) {
    if (std::abs(d) * (g - 1) <= m - 1) out.push_back(d);
  }
  return out;
}

Grid gen_progression(int m, int g, int delta, Rng& rng) {
  const int span = std::abs(delta) * (g - 1);
  if (delta == 0 || span > m - 1) {
    throw std::invalid_argument("gen_progression: delta " + std::to_string(delta) + " infeasible for m=" +
                                std::to_string(m) + ", g=" + std::to_string(g));
  }
  Grid grid(3, std::vector<int>(g));
  for (auto& row : grid) {
    // The anchor is the column holding the largest value: right-most for an
    // increasing row, left-most for a decreasing one.
    const int anchor = rng.uniform_int(span, m - 1);
    for (int j = 0; j < g; ++j) {
      row[j] = delta > 0 ? anchor - (g - 1 - j) * delta : anchor + j * delta;
    }
  }
  return grid;
}

Grid gen_progression(int m, int g, Rng& rng, int* chosen_delta) {
  const auto deltas = feasible_deltas(m, g);
  if (deltas.empty()) {
    throw std::invalid_argument("gen_progression: no feasible step for m=" + std::to_string(m) +
                                ", g=" + std::to_string(g));
  }
  const int delta = deltas[rng.below(deltas.size())];
  if (chosen_delta) *chosen_delta = delta;
  return gen_progression(m, g, delta, rng);
}

Grid gen_arithmetic(int m, int g, bool plus, Rng& rng) {
  if (m < g - 1) {
    throw std::invalid_argument("gen_arithmetic: m=" + std::to_string(m) + " too small for g=" +
                                std::to_string(g));
  }
  Grid grid(3);
  for (auto& row : grid) {
    std::vector<int> operands;
    int sum = 0;
    for (int j = 0; j < g - 1; ++j) {
      const int v = rng.uniform_int(0, m - 1 - sum);
      operands.push_back(v);
      sum += v;
    }
    rng.shuffle(operands);
    if (plus) {
      row = operands;
      row.push_back(sum);
    } else {
      row.push_back(sum);
      row.insert(row.end(), operands.begin(), operands.end());
    }
  }
  return grid;
}

Grid gen_distribute_n(int m, int g, Shift shift, Rng& rng) {
  if (m < g) {
    throw std::invalid_argument("gen_distribute_n: need m >= g distinct values (m=" + std::to_string(m) +
                                ", g=" + std::to_string(g) + ")");
  }
  std::vector<int> pool(m);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < g; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - i)));
    std::swap(pool[i], pool[j]);
  }
  Grid grid(3, std::vector<int>(g));
  std::copy(pool.begin(), pool.begin() + g, grid[0].begin());
  for (int r = 1; r < 3; ++r) {
    for (int j = 0; j < g; ++j) {
      grid[r][j] = shift == Shift::Right ? grid[r - 1][(j - 1 + g) % g] : grid[r - 1][(j + 1) % g];
    }
  }
  return grid;
}

Grid generate_rows(const Rule& rule, int m, int g, Rng& rng) {
  switch (rule.kind) {
    case Rule::Kind::Constant: return gen_constant(m, g, rng);
    case Rule::Kind::Progression: return gen_progression(m, g, rule.delta, rng);
    case Rule::Kind::ArithmeticPlus: return gen_arithmetic(m, g, true, rng);
    case Rule::Kind::ArithmeticMinus: return gen_arithmetic(m, g, false, rng);
    case Rule::Kind::DistributeN: return gen_distribute_n(m, g, rule.shift, rng);
  }
  throw std::logic_error("unknown rule kind");
}

bool verify_rows(const Grid& grid, const Rule& rule, int m) {
  if (grid.size() != 3 || grid[0].size() < 2) return false;
  const std::size_t g = grid[0].size();
  for (const auto& row : grid) {
    if (row.size() != g) return false;
    for (int v : row) {
      if (v < 0 || v > m - 1) return false;
    }
  }
  for (std::size_t r = 0; r < 3; ++r) {
    const auto& row = grid[r];
    switch (rule.kind) {
      case Rule::Kind::Constant:
        if (std::any_of(row.begin(), row.end(), [&](int v) { return v != row[0]; })) return false;
        break;
      case Rule::Kind::Progression:
        for (std::size_t j = 1; j < g; ++j) {
          if (row[j] - row[j - 1] != rule.delta) return false;
        }
        break;
      case Rule::Kind::ArithmeticPlus:
        if (std::accumulate(row.begin(), row.end() - 1, 0) != row.back()) return false;
        break;
      case Rule::Kind::ArithmeticMinus:
        if (std::accumulate(row.begin() + 1, row.end(), 0) != row.front()) return false;
        break;
      case Rule::Kind::DistributeN:
        if (r == 0) {
          std::set<int> distinct(row.begin(), row.end());
          if (distinct.size() != g) return false;
        } else {
          for (std::size_t j = 0; j < g; ++j) {
            const int expected =
                rule.shift == Shift::Right ? grid[r - 1][(j + g - 1) % g] : grid[r - 1][(j + 1) % g];
            if (row[j] != expected) return false;
          }
        }
        break;
    }
  }
  return true;
}

CandidateSet gen_candidates(const std::vector<int>& answer, const std::vector<AttributeSpec>& attributes,
                            Rng& rng) {
  if (answer.size() != attributes.size()) throw std::invalid_argument("gen_candidates: arity mismatch");
  if (attributes.size() < 3) throw std::invalid_argument("gen_candidates: need at least 3 attributes");

  std::vector<std::size_t> order(attributes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  order.resize(3);

  std::vector<int> distractor(3);
  for (std::size_t level = 0; level < 3; ++level) {
    const auto& spec = attributes[order[level]];
    if (spec.range < 2) {
      throw std::invalid_argument("gen_candidates: attribute '" + spec.name + "' has no distractor value");
    }
    int v = rng.uniform_int(0, spec.range - 2);
    if (v >= answer[order[level]]) ++v;
    distractor[level] = v;
  }

  std::vector<int> leaves(8);
  std::iota(leaves.begin(), leaves.end(), 0);
  rng.shuffle(leaves);

  CandidateSet out;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    std::vector<int> panel = answer;
    for (std::size_t level = 0; level < 3; ++level) {
      if (leaves[i] & (1 << level)) panel[order[level]] = distractor[level];
    }
    if (leaves[i] == 0) out.answer_index = static_cast<int>(i);
    out.panels.push_back(std::move(panel));
  }
  return out;
}

namespace {

Rule sample_rule(const AttributeSpec& spec, int g, Rng& rng) {
  std::vector<RuleFamily> families;
  for (RuleFamily f : kAllFamilies) {
    if (f == RuleFamily::Arithmetic && !spec.allow_arithmetic) continue;
    families.push_back(f);
  }
  switch (families[rng.below(families.size())]) {
    case RuleFamily::Constant: return Rule::constant();
    case RuleFamily::Progression: {
      const auto deltas = feasible_deltas(spec.range, g);
      if (deltas.empty()) throw std::invalid_argument("no feasible progression step for '" + spec.name + "'");
      return Rule::progression(deltas[rng.below(deltas.size())]);
    }
    case RuleFamily::Arithmetic: return rng.coin() ? Rule::arithmetic_plus() : Rule::arithmetic_minus();
    case RuleFamily::Distribute: return Rule::distribute(rng.coin() ? Shift::Left : Shift::Right);
  }
  throw std::logic_error("unknown rule family");
}

}  // namespace

RpmPuzzle gen_puzzle(const GeneratorConfig& config, Rng& rng, std::string id) {
  config.validate();
  RpmPuzzle p;
  p.id = std::move(id);
  p.grid = config.grid;
  p.attributes = config.attributes;
  for (const auto& spec : config.attributes) {
    const Rule rule = sample_rule(spec, config.grid, rng);
    p.rules.push_back(rule);
    p.grids.push_back(generate_rows(rule, spec.range, config.grid, rng));
  }
  auto candidates = gen_candidates(p.answer(), p.attributes, rng);
  p.candidates = std::move(candidates.panels);
  p.answer_index = candidates.answer_index;
  return p;
}

void validate_puzzle(const RpmPuzzle& p) {
  auto fail = [&](const std::string& what) { throw std::logic_error("puzzle " + p.id + ": " + what); };
  const std::size_t n = p.attributes.size();
  if (p.grids.size() != n || p.rules.size() != n) fail("attribute count mismatch");
  for (std::size_t a = 0; a < n; ++a) {
    if (!p.attributes[a].allow_arithmetic && p.rules[a].family() == RuleFamily::Arithmetic) {
      fail("arithmetic rule on attribute '" + p.attributes[a].name + "'");
    }
    if (!verify_rows(p.grids[a], p.rules[a], p.attributes[a].range)) {
      fail("rows of '" + p.attributes[a].name + "' violate " + to_string(p.rules[a]));
    }
  }
  if (p.candidates.size() != 8) fail("expected 8 candidates");
  if (p.answer_index < 0 || p.answer_index >= 8) fail("answer index out of range");
  const auto answer = p.answer();
  int matches = 0;
  for (std::size_t i = 0; i < p.candidates.size(); ++i) {
    const auto& c = p.candidates[i];
    if (c.size() != n) fail("candidate arity mismatch");
    for (std::size_t a = 0; a < n; ++a) {
      if (c[a] < 0 || c[a] >= p.attributes[a].range) fail("candidate value out of range");
    }
    if (c == answer) ++matches;
    for (std::size_t j = 0; j < i; ++j) {
      if (p.candidates[j] == c) fail("duplicate candidates");
    }
  }
  if (matches != 1 || p.candidates[p.answer_index] != answer) fail("answer panel not unique among candidates");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  throw std::logic_error("unknown split");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "validation" || text == "val") return Split::Validation;
  if (text == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + std::string(text) + "'");
}

namespace {

std::string puzzle_id(Split split, std::size_t index) {
  std::ostringstream os;
  os << to_string(split) << '-';
  os.width(6);
  os.fill('0');
  os << index;
  return os.str();
}

}  // namespace

Dataset gen_dataset(const GeneratorConfig& config, std::size_t count, std::uint64_t seed, Split split) {
  config.validate();
  Dataset d{config, split, seed, {}};
  d.puzzles.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    d.puzzles.push_back(gen_puzzle(config, rng, puzzle_id(split, i)));
  }
  return d;
}

SplitDatasets gen_splits(const GeneratorConfig& config, std::size_t train, std::size_t validation,
                         std::size_t test, std::uint64_t seed) {
  config.validate();
  SplitDatasets out{{config, Split::Train, seed, {}},
                    {config, Split::Validation, seed, {}},
                    {config, Split::Test, seed, {}}};
  std::unordered_set<std::string> seen;
  const std::size_t total = train + validation + test;
  const std::size_t max_attempts = 100 * total + 1000;
  std::size_t attempt = 0;
  std::size_t produced = 0;
  while (produced < total) {
    if (attempt >= max_attempts) {
      throw std::runtime_error("gen_splits: configuration space too small for disjoint splits");
    }
    Rng rng(derive_seed(seed, attempt++));
    RpmPuzzle p = gen_puzzle(config, rng);
    if (!seen.insert(content_key(p)).second) continue;
    Dataset& target = produced < train ? out.train : produced < train + validation ? out.validation : out.test;
    p.id = puzzle_id(target.split, target.puzzles.size());
    target.puzzles.push_back(std::move(p));
    ++produced;
  }
  return out;
}

namespace {

json attribute_header(const AttributeSpec& a) {
  return {{"name", a.name}, {"range", a.range}, {"allow_arithmetic", a.allow_arithmetic}};
}

AttributeSpec attribute_from_json(const json& j) {
  return {j.at("name").get<std::string>(), j.at("range").get<int>(), j.at("allow_arithmetic").get<bool>()};
}

}  // namespace

std::string content_key(const RpmPuzzle& puzzle) {
  json j = to_json(puzzle);
  j.erase("id");
  return j.dump();
}

json to_json(const RpmPuzzle& p) {
  json attrs = json::array();
  for (std::size_t a = 0; a < p.attributes.size(); ++a) {
    json rows = json::array();
    for (std::size_t r = 0; r < 3; ++r) {
      json row = json::array();
      for (int j = 0; j < p.grid; ++j) {
        if (r == 2 && j == p.grid - 1) {
          row.push_back(nullptr);
        } else {
          row.push_back(p.grids[a][r][j]);
        }
      }
      rows.push_back(std::move(row));
    }
    json entry = attribute_header(p.attributes[a]);
    entry["rule"] = to_string(p.rules[a]);
    entry["rows"] = std::move(rows);
    attrs.push_back(std::move(entry));
  }
  return {{"id", p.id},
          {"grid", p.grid},
          {"attributes", std::move(attrs)},
          {"candidates", p.candidates},
          {"answer_index", p.answer_index}};
}

RpmPuzzle puzzle_from_json(const json& j) {
  RpmPuzzle p;
  p.id = j.at("id").get<std::string>();
  p.grid = j.at("grid").get<int>();
  p.candidates = j.at("candidates").get<std::vector<std::vector<int>>>();
  p.answer_index = j.at("answer_index").get<int>();
  if (p.answer_index < 0 || p.answer_index >= static_cast<int>(p.candidates.size())) {
    throw std::runtime_error("puzzle " + p.id + ": answer_index out of range");
  }
  const auto& attrs = j.at("attributes");
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    const auto& entry = attrs[a];
    p.attributes.push_back(attribute_from_json(entry));
    p.rules.push_back(parse_rule(entry.at("rule").get<std::string>()));
    Grid grid(3, std::vector<int>(p.grid));
    const auto& rows = entry.at("rows");
    if (rows.size() != 3) throw std::runtime_error("puzzle " + p.id + ": expected 3 rows");
    for (std::size_t r = 0; r < 3; ++r) {
      if (rows[r].size() != static_cast<std::size_t>(p.grid)) {
        throw std::runtime_error("puzzle " + p.id + ": row width mismatch");
      }
      for (int c = 0; c < p.grid; ++c) {
        if (r == 2 && c == p.grid - 1) {
          grid[r][c] = p.candidates.at(p.answer_index).at(a);
        } else {
          grid[r][c] = rows[r][c].get<int>();
        }
      }
    }
    p.grids.push_back(std::move(grid));
  }
  return p;
}

std::string serialize_dataset(const Dataset& d) {
  json attrs = json::array();
  for (const auto& a : d.config.attributes) attrs.push_back(attribute_header(a));
  json header = {{"schema", kDatasetSchema},
                 {"split", to_string(d.split)},
                 {"seed", d.seed},
                 {"grid", d.config.grid},
                 {"attributes", std::move(attrs)},
                 {"count", d.puzzles.size()}};
  std::string out = header.dump();
  out += '\n';
  for (const auto& p : d.puzzles) {
    out += to_json(p).dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize_dataset(d);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty dataset file");
  const json header = json::parse(line);
  const auto schema = header.value("schema", std::string{});
  if (schema != kDatasetSchema) {
    throw std::runtime_error(path.string() + ": unsupported schema '" + schema + "' (expected " +
                             kDatasetSchema + ")");
  }
  Dataset d;
  d.split = parse_split(header.at("split").get<std::string>());
  d.seed = header.at("seed").get<std::uint64_t>();
  d.config.grid = header.at("grid").get<int>();
  for (const auto& a : header.at("attributes")) d.config.attributes.push_back(attribute_from_json(a));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      d.puzzles.push_back(puzzle_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  const auto expected = header.at("count").get<std::size_t>();
  if (expected != d.puzzles.size()) {
    throw std::runtime_error(path.string() + ": header announces " + std::to_string(expected) +
                             " puzzles, found " + std::to_string(d.puzzles.size()));
  }
  return d;
}

}  // namespace ravenx::raven
