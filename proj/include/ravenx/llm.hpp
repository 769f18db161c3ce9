#pragma once

// Text prompting of chat-completion models on RPM puzzles: prompt rendering,
// endpoint transport with retries, answer parsing, self-consistency voting,
// candidate selection and an analysis of associative errors.

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ravenx/raven.hpp"
#include "ravenx/report.hpp"

namespace ravenx::llm {

enum class PromptMode { Predictive, Discriminative };
enum class AttributeScope { Disentangled, Entangled };

std::string to_string(PromptMode m);
std::string to_string(AttributeScope s);
PromptMode parse_prompt_mode(std::string_view text);
AttributeScope parse_attribute_scope(std::string_view text);

struct ModelProfile {
  std::string name;
  std::string model;   // model identifier sent to the endpoint
  std::string prefix;  // first prompt line, empty for none
  double temperature = 0.0;

  /// "gpt-4" (prefix "Only return the missing number.", T = 0.5) or
  /// "llama-3-70b" (no prefix, T = 0.4).
  static ModelProfile named(std::string_view name);
};

struct PromptConfig {
  PromptMode mode = PromptMode::Predictive;
  AttributeScope scope = AttributeScope::Disentangled;
  int self_consistency_n = 7;
  double temperature = 0.5;
  int in_context_count = 0;
  ModelProfile profile = ModelProfile::named("gpt-4");
  bool strict_parse = false;

  /// Profile defaults with the profile's temperature.
  static PromptConfig for_profile(std::string_view name);
  void validate() const;
};

/// Scale factors of the entangled triple: shape 1x, size 0.1x, color 10x.
/// Attribute a uses the factor 10^(e) with e cycling 0, -1, +1.
int scale_exponent(std::size_t attribute);
std::string format_scaled(int value, int exponent);

// Rendering. `in_context` holds complete example matrices (one grid per
// prompt for disentangled prompts, one grid per attribute for entangled ones).
std::string render_predictive(const raven::RpmPuzzle& puzzle, std::size_t attribute, const PromptConfig& config,
                              std::span<const raven::Grid> in_context = {});
std::string render_entangled(const raven::RpmPuzzle& puzzle, const PromptConfig& config,
                             std::span<const std::vector<raven::Grid>> in_context = {});
std::string render_discriminative(const raven::RpmPuzzle& puzzle, std::size_t attribute, const PromptConfig& config);

/// Picks `count` example puzzles from `pool` whose context matrices differ from
/// the query's; duplicates are discarded and re-drawn.
std::vector<const raven::RpmPuzzle*> sample_in_context(const raven::RpmPuzzle& query,
                                                       std::span<const raven::RpmPuzzle> pool, int count,
                                                       Rng& rng);

// Transport.

struct ChatRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  int n = 1;
};

nlohmann::json request_body(const ChatRequest& request);
/// choices[i].message.content in order.
std::vector<std::string> parse_completion_body(const nlohmann::json& body);

class EndpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Must be safe to call from several threads at once.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  /// Returns up to request.n completions; throws EndpointError on failure.
  virtual std::vector<std::string> complete(const ChatRequest& request) = 0;
};

struct HttpConfig {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string api_key;
  std::chrono::seconds timeout{120};

  /// RAVENX_LLM_BASE_URL and RAVENX_LLM_API_KEY.
  static HttpConfig from_env();
};

/// POSTs to {base_url}/chat/completions.
class HttpEndpoint final : public Endpoint {
 public:
  explicit HttpEndpoint(HttpConfig config);
  std::vector<std::string> complete(const ChatRequest& request) override;

 private:
  HttpConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

/// Replays fixed completions keyed by the exact prompt text.
/// File format: {"responses": [{"prompt": "...", "completions": ["..."]}]}.
class ScriptedEndpoint final : public Endpoint {
 public:
  ScriptedEndpoint() = default;
  explicit ScriptedEndpoint(std::map<std::string, std::vector<std::string>> script);
  static ScriptedEndpoint from_json(const nlohmann::json& j);
  static ScriptedEndpoint load(const std::filesystem::path& path);

  void add(std::string prompt, std::vector<std::string> completions);
  std::vector<std::string> complete(const ChatRequest& request) override;

 private:
  std::map<std::string, std::vector<std::string>> script_;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

struct QueryResult {
  std::vector<std::string> responses;
  bool failed = false;
  std::string error;
  int attempts = 0;
};

/// Collects n completions, re-requesting the remainder when a server returns
/// fewer choices than asked. Failures after the last retry are recorded, not
/// thrown.
QueryResult query(Endpoint& endpoint, const ChatRequest& request, const RetryPolicy& retry = {});

// Parsing and voting.

/// All numbers in the text, in order ("-3", "4", "0.5").
std::vector<std::string> extract_numbers(std::string_view text);
/// First integer; strict mode rejects responses that contain other numbers.
std::optional<int> parse_integer(std::string_view text, bool strict = false);
/// First three numbers of an entangled answer, unscaled to attribute values.
std::optional<std::vector<int>> parse_entangled(std::string_view text, std::size_t attributes, bool strict = false);

using Answer = std::vector<int>;
/// Plurality over parsed answers; ties go to the answer seen first.
std::optional<Answer> vote(std::span<const std::optional<Answer>> parsed);

/// Candidate with the most matching attribute values, lowest index on ties.
/// Missing predictions match nothing.
int select_candidate(std::span<const std::optional<int>> predicted, const std::vector<std::vector<int>>& candidates);

// Associative-error analysis of wrong attribute predictions.

enum class ErrorClass { LastRowConstant, LastRowProgression, ShortConstant, ShortDistribute, Unknown };
inline constexpr ErrorClass kAllErrorClasses[] = {ErrorClass::LastRowConstant, ErrorClass::LastRowProgression,
                                                  ErrorClass::ShortConstant, ErrorClass::ShortDistribute,
                                                  ErrorClass::Unknown};
std::string to_string(ErrorClass c);

/// Checks in priority order: constant, progression, short constant, short
/// distribute three. A missing prediction is Unknown.
ErrorClass classify_error(const raven::Grid& grid, std::optional<int> predicted);

struct ConfusionMatrix {
  // [ground-truth family in report::kReportFamilies order][error class]
  std::array<std::array<long, 5>, 4> counts{};

  long total() const;
  long explained() const;
  nlohmann::json to_json() const;
  std::string to_markdown() const;
};

// Harness.

struct QueryRecord {
  int attribute = -1;  // -1 for an entangled prompt
  std::string prompt;
  std::vector<std::string> responses;
  std::vector<std::optional<Answer>> parsed;
  std::optional<Answer> vote;
  bool failed = false;
  std::string error;
};

struct PromptRecord {
  std::string puzzle_id;
  std::vector<QueryRecord> queries;
  std::vector<std::optional<int>> predicted;  // attribute values
  int chosen_index = -1;
  int answer_index = 0;
  std::vector<std::string> rules;

  bool correct() const { return chosen_index == answer_index; }
  bool failed() const;
};

nlohmann::json to_json(const PromptRecord& r);
PromptRecord prompt_record_from_json(const nlohmann::json& j);

ConfusionMatrix error_analysis(std::span<const raven::RpmPuzzle> puzzles, std::span<const PromptRecord> records);

report::EvalRecord to_eval_record(const PromptRecord& record, const raven::RpmPuzzle& puzzle);

/// Appends JSONL lines in index order regardless of completion order.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(std::ostream& out) : out_(out) {}
  void submit(std::size_t index, const PromptRecord& record);

 private:
  std::ostream& out_;
  std::mutex mutex_;
  std::size_t next_ = 0;
  std::map<std::size_t, std::string> pending_;
};

struct HarnessOptions {
  PromptConfig prompt;
  int concurrency = 4;
  RetryPolicy retry;
  std::uint64_t seed = 0;                        // in-context sampling
  std::span<const raven::RpmPuzzle> in_context_pool;
};

/// Solves one puzzle: renders, queries, parses, votes and selects.
PromptRecord solve(const raven::RpmPuzzle& puzzle, Endpoint& endpoint, const HarnessOptions& options,
                   std::uint64_t puzzle_seed);

/// Runs every puzzle with at most `concurrency` requests in flight.
std::vector<PromptRecord> run_harness(std::span<const raven::RpmPuzzle> puzzles, Endpoint& endpoint,
                                      const HarnessOptions& options, TranscriptWriter* transcript = nullptr);

}  // namespace ravenx::llm
