#pragma once

// Procedural I-RAVEN (3x3) and I-RAVEN-X (3xg, range m) puzzle generation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ravenx/rng.hpp"

namespace ravenx::raven {

/// Three rows of g attribute values.
using Grid = std::vector<std::vector<int>>;

enum class RuleFamily { Constant, Progression, Arithmetic, Distribute };
inline constexpr RuleFamily kAllFamilies[] = {RuleFamily::Constant, RuleFamily::Progression,
                                              RuleFamily::Arithmetic, RuleFamily::Distribute};

enum class Shift { Left, Right };

struct Rule {
  enum class Kind { Constant, Progression, ArithmeticPlus, ArithmeticMinus, DistributeN };

  Kind kind = Kind::Constant;
  int delta = 0;               // progression only
  Shift shift = Shift::Right;  // distribute-n only

  static Rule constant() { return {}; }
  static Rule progression(int delta) { return {Kind::Progression, delta, Shift::Right}; }
  static Rule arithmetic_plus() { return {Kind::ArithmeticPlus, 0, Shift::Right}; }
  static Rule arithmetic_minus() { return {Kind::ArithmeticMinus, 0, Shift::Right}; }
  static Rule distribute(Shift s) { return {Kind::DistributeN, 0, s}; }

  RuleFamily family() const;
  bool operator==(const Rule&) const = default;
};

std::string to_string(RuleFamily f);
std::string to_string(const Rule& r);
Rule parse_rule(std::string_view text);

struct AttributeSpec {
  std::string name;
  int range = 10;  // values lie in [0, range - 1]
  bool allow_arithmetic = true;

  bool operator==(const AttributeSpec&) const = default;
};

struct GeneratorConfig {
  int grid = 3;  // columns g
  std::vector<AttributeSpec> attributes;

  /// I-RAVEN center constellation: shape=5, size=6, color=10, g=3.
  static GeneratorConfig iraven();
  /// I-RAVEN-X: shape/size/color sharing one range m, g columns.
  static GeneratorConfig iraven_x(int grid, int range);

  int max_range() const;
  void validate() const;
};

struct RpmPuzzle {
  std::string id;
  int grid = 3;
  std::vector<AttributeSpec> attributes;
  std::vector<Grid> grids;  // per attribute, 3 x g, last cell is the answer
  std::vector<Rule> rules;  // per attribute
  std::vector<std::vector<int>> candidates;  // 8 panels, one value per attribute
  int answer_index = 0;

  std::size_t attribute_count() const { return attributes.size(); }
  int hidden_value(std::size_t attribute) const { return grids[attribute][2][grid - 1]; }
  std::vector<int> answer() const;

  bool operator==(const RpmPuzzle&) const = default;
};

// Row-set generators. Each returns a 3 x g grid that satisfies the rule.
Grid gen_constant(int m, int g, Rng& rng);
Grid gen_progression(int m, int g, int delta, Rng& rng);
/// Samples delta uniformly from the feasible subset of {-2, -1, +1, +2}.
Grid gen_progression(int m, int g, Rng& rng, int* chosen_delta = nullptr);
Grid gen_arithmetic(int m, int g, bool plus, Rng& rng);
Grid gen_distribute_n(int m, int g, Shift shift, Rng& rng);
/// Progression steps usable at (m, g): |delta| * (g - 1) <= m - 1.
std::vector<int> feasible_deltas(int m, int g);

Grid generate_rows(const Rule& rule, int m, int g, Rng& rng);
/// True when every row of `grid` satisfies `rule` and all values are in [0, m-1].
bool verify_rows(const Grid& grid, const Rule& rule, int m);

struct CandidateSet {
  std::vector<std::vector<int>> panels;
  int answer_index = 0;
};

/// Attribute bisection tree: three levels, each splitting the candidates into
/// a half that keeps the correct value and a half carrying one distractor.
CandidateSet gen_candidates(const std::vector<int>& answer, const std::vector<AttributeSpec>& attributes,
                            Rng& rng);

RpmPuzzle gen_puzzle(const GeneratorConfig& config, Rng& rng, std::string id = {});
/// Throws std::logic_error naming the first violated invariant.
void validate_puzzle(const RpmPuzzle& puzzle);

enum class Split { Train, Validation, Test };
std::string to_string(Split s);
Split parse_split(std::string_view text);

struct Dataset {
  GeneratorConfig config;
  Split split = Split::Test;
  std::uint64_t seed = 0;
  std::vector<RpmPuzzle> puzzles;
};

/// Puzzle i is generated from derive_seed(seed, i), so generation order and
/// parallelism do not affect content.
Dataset gen_dataset(const GeneratorConfig& config, std::size_t count, std::uint64_t seed, Split split);

struct SplitDatasets {
  Dataset train, validation, test;
};
/// Train, validation and test sets that share no puzzle content.
SplitDatasets gen_splits(const GeneratorConfig& config, std::size_t train, std::size_t validation,
                         std::size_t test, std::uint64_t seed);

/// Canonical content string (everything except the id).
std::string content_key(const RpmPuzzle& puzzle);

nlohmann::json to_json(const RpmPuzzle& puzzle);
RpmPuzzle puzzle_from_json(const nlohmann::json& j);

inline constexpr const char* kDatasetSchema = "ravenx.dataset/1";
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
std::string serialize_dataset(const Dataset& dataset);

}  // namespace ravenx::raven
