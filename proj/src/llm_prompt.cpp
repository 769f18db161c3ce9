#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "ravenx/llm.hpp"

namespace ravenx::llm {

std::string to_string(PromptMode m) { return m == PromptMode::Predictive ? "predictive" : "discriminative"; }
std::string to_string(AttributeScope s) { return s == AttributeScope::Disentangled ? "disentangled" : "entangled"; }

PromptMode parse_prompt_mode(std::string_view text) {
  if (text == "predictive") return PromptMode::Predictive;
  if (text == "discriminative") return PromptMode::Discriminative;
  throw std::invalid_argument("unknown prompt mode: " + std::string(text));
}

AttributeScope parse_attribute_scope(std::string_view text) {
  if (text == "disentangled") return AttributeScope::Disentangled;
  if (text == "entangled") return AttributeScope::Entangled;
  throw std::invalid_argument("unknown attribute scope: " + std::string(text));
}

ModelProfile ModelProfile::named(std::string_view name) {
  if (name == "gpt-4") return {"gpt-4", "gpt-4-0613", "Only return the missing number.", 0.5};
  if (name == "llama-3-70b") return {"llama-3-70b", "meta-llama/Meta-Llama-3-70B-Instruct", "", 0.4};
  throw std::invalid_argument("unknown model profile: " + std::string(name) + " (expected gpt-4 or llama-3-70b)");
}

PromptConfig PromptConfig::for_profile(std::string_view name) {
  PromptConfig c;
  c.profile = ModelProfile::named(name);
  c.temperature = c.profile.temperature;
  return c;
}

void PromptConfig::validate() const {
  if (self_consistency_n < 1 || self_consistency_n % 2 == 0) {
    throw std::invalid_argument("self-consistency n must be a positive odd number");
  }
  if (temperature < 0.0) throw std::invalid_argument("temperature must be non-negative");
  if (in_context_count < 0) throw std::invalid_argument("in-context count must be non-negative");
  if (mode == PromptMode::Discriminative && scope == AttributeScope::Entangled) {
    throw std::invalid_argument("discriminative prompts are per attribute");
  }
  if (mode == PromptMode::Discriminative && in_context_count > 0) {
    throw std::invalid_argument("in-context examples are only used with predictive prompts");
  }
}

int scale_exponent(std::size_t attribute) {
  static constexpr int kCycle[] = {0, -1, 1};
  return kCycle[attribute % 3];
}

std::string format_scaled(int value, int exponent) {
  switch (exponent) {
    case 0: return std::to_string(value);
    case 1: return std::to_string(value * 10);
    case -1: {
      const int mag = value < 0 ? -value : value;
      return std::string(value < 0 ? "-" : "") + std::to_string(mag / 10) + "." + std::to_string(mag % 10);
    }
    default: throw std::invalid_argument("format_scaled: exponent must be -1, 0 or 1");
  }
}

namespace {

using CellFn = std::function<std::string(int row, int col)>;

// "row i: a, b, c" lines; the hidden cell of an incomplete matrix is left
// blank after the final comma.
void render_matrix(std::ostream& os, int grid, const CellFn& cell, bool complete) {
  for (int r = 0; r < 3; ++r) {
    os << "row " << (r + 1) << ":";
    for (int c = 0; c < grid; ++c) {
      const bool hidden = !complete && r == 2 && c == grid - 1;
      if (hidden) break;
      os << ' ' << cell(r, c);
      if (c + 1 < grid || (!complete && r == 2)) os << ',';
    }
    os << '\n';
  }
}

void prefix_line(std::ostream& os, const std::string& prefix) {
  if (!prefix.empty()) os << prefix << '\n';
}

void check_attribute(const raven::RpmPuzzle& puzzle, std::size_t attribute) {
  if (attribute >= puzzle.attribute_count()) {
    throw std::out_of_range("attribute " + std::to_string(attribute) + " not in puzzle " + puzzle.id);
  }
}

}  // namespace

std::string render_predictive(const raven::RpmPuzzle& puzzle, std::size_t attribute, const PromptConfig& config,
                              std::span<const raven::Grid> in_context) {
  check_attribute(puzzle, attribute);
  std::ostringstream os;
  prefix_line(os, config.profile.prefix);
  for (const auto& g : in_context) {
    render_matrix(os, puzzle.grid, [&](int r, int c) { return std::to_string(g[r][c]); }, true);
    os << '\n';
  }
  const auto& grid = puzzle.grids[attribute];
  render_matrix(os, puzzle.grid, [&](int r, int c) { return std::to_string(grid[r][c]); }, false);
  return os.str();
}

std::string render_entangled(const raven::RpmPuzzle& puzzle, const PromptConfig& config,
                             std::span<const std::vector<raven::Grid>> in_context) {
  auto triple = [&](const std::vector<raven::Grid>& grids, int r, int c) {
    std::string s = "(";
    for (std::size_t a = 0; a < grids.size(); ++a) {
      if (a) s += ", ";
      s += format_scaled(grids[a][r][c], scale_exponent(a));
    }
    return s + ")";
  };
  std::ostringstream os;
  prefix_line(os, config.profile.prefix);
  for (const auto& grids : in_context) {
    if (grids.size() != puzzle.attribute_count()) throw std::invalid_argument("in-context example attribute count");
    render_matrix(os, puzzle.grid, [&](int r, int c) { return triple(grids, r, c); }, true);
    os << '\n';
  }
  render_matrix(os, puzzle.grid, [&](int r, int c) { return triple(puzzle.grids, r, c); }, false);
  return os.str();
}

std::string render_discriminative(const raven::RpmPuzzle& puzzle, std::size_t attribute, const PromptConfig& config) {
  check_attribute(puzzle, attribute);
  std::ostringstream os;
  if (!config.profile.prefix.empty()) os << "Only return the number of the correct answer.\n";
  const auto& grid = puzzle.grids[attribute];
  render_matrix(os, puzzle.grid, [&](int r, int c) { return std::to_string(grid[r][c]); }, false);
  for (std::size_t k = 0; k < puzzle.candidates.size(); ++k) {
    os << "Answer " << (k + 1) << ": " << puzzle.candidates[k][attribute] << '\n';
  }
  return os.str();
}

std::vector<const raven::RpmPuzzle*> sample_in_context(const raven::RpmPuzzle& query,
                                                       std::span<const raven::RpmPuzzle> pool, int count,
                                                       Rng& rng) {
  if (count <= 0) return {};
  auto context_of = [](const raven::RpmPuzzle& p) {
    std::vector<raven::Grid> ctx = p.grids;
    for (auto& g : ctx) g[2].pop_back();
    return ctx;
  };
  const auto query_ctx = context_of(query);
  std::vector<const raven::RpmPuzzle*> eligible;
  for (const auto& p : pool) {
    if (p.grid == query.grid && p.attribute_count() == query.attribute_count()) eligible.push_back(&p);
  }
  if (eligible.empty()) throw std::invalid_argument("in-context pool has no puzzle with a matching layout");

  std::vector<const raven::RpmPuzzle*> out;
  const std::size_t max_draws = 1000 * static_cast<std::size_t>(count);
  for (std::size_t draws = 0; out.size() < static_cast<std::size_t>(count); ++draws) {
    if (draws >= max_draws) throw std::runtime_error("in-context pool has too few puzzles unlike the query");
    const auto* p = eligible[rng.below(eligible.size())];
    if (context_of(*p) == query_ctx) continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace ravenx::llm
