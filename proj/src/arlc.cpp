#include "ravenx/arlc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace ravenx::arlc {

using nlohmann::json;
using vsa::BlockVector;

TemplateShape TemplateShape::for_grid(int grid) {
  if (grid < 3) throw std::invalid_argument("TemplateShape: grid must be at least 3");
  if (grid == 3) return {3, 6, 6};
  if (grid == 10) return {10, 11, 11};
  return {grid, grid + 1, grid + 1};
}

RuleSet::RuleSet(TemplateShape shape, int rules)
    : shape_(shape),
      rules_(rules),
      logits_(static_cast<std::size_t>(rules) * shape.terms() * shape.sources(), 0.0) {
  if (rules < 1) throw std::invalid_argument("RuleSet: need at least one rule");
  if (shape.numerator < 1 || shape.denominator < 0) throw std::invalid_argument("RuleSet: bad term counts");
}

RuleSet RuleSet::random(TemplateShape shape, int rules, double scale, Rng& rng) {
  RuleSet rs(shape, rules);
  for (double& v : rs.logits_) v = scale * rng.normal();
  return rs;
}

std::size_t RuleSet::offset(int rule, int term) const {
  if (rule < 0 || rule >= rules_ || term < 0 || term >= shape_.terms()) {
    throw std::out_of_range("RuleSet: rule/term index out of range");
  }
  return (static_cast<std::size_t>(rule) * shape_.terms() + term) * shape_.sources();
}

std::span<double> RuleSet::logits(int rule, int term) {
  return {logits_.data() + offset(rule, term), static_cast<std::size_t>(shape_.sources())};
}

std::span<const double> RuleSet::logits(int rule, int term) const {
  return {logits_.data() + offset(rule, term), static_cast<std::size_t>(shape_.sources())};
}

std::vector<double> RuleSet::weights(int rule, int term) const {
  auto z = logits(rule, term);
  const double top = *std::max_element(z.begin(), z.end());
  std::vector<double> w(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += (w[i] = std::exp(z[i] - top));
  for (double& v : w) v /= total;
  return w;
}

void RuleSet::set_one_hot(int rule, int term, int source, double logit) {
  auto z = logits(rule, term);
  if (source < 0 || source >= static_cast<int>(z.size())) throw std::out_of_range("set_one_hot: bad source");
  std::fill(z.begin(), z.end(), 0.0);
  z[static_cast<std::size_t>(source)] = logit;
}

void RuleSet::append_uniform(int count) {
  rules_ += count;
  logits_.resize(static_cast<std::size_t>(rules_) * shape_.terms() * shape_.sources(), 0.0);
}

RuleSet program_rules(TemplateShape shape, double logit) {
  const int g = shape.grid;
  const int I = shape.samples();
  const int e = shape.identity_source();
  auto sample = [](int i) { return i; };            // x_{i+1}
  auto context = [I](int j) { return I + j; };      // o_{j+1}
  const int needed_num = std::max(g, 2);             // distribute-n binds a full context row
  const int needed_den = std::max(g - 1, 1);
  if (shape.numerator < needed_num || shape.denominator < needed_den) {
    throw std::invalid_argument("program_rules: template " + std::to_string(shape.numerator) + "+" +
                                std::to_string(shape.denominator) + " terms is too small for g=" +
                                std::to_string(g));
  }

  RuleSet rs(shape, 4);
  for (int r = 0; r < 4; ++r) {
    for (int k = 0; k < shape.terms(); ++k) rs.set_one_hot(r, k, e, logit);
  }
  const int den0 = shape.numerator;

  // Progression / constant: x_{g-1} (x) x_{g-1} (/) x_{g-2}.
  rs.set_one_hot(0, 0, sample(g - 2), logit);
  rs.set_one_hot(0, 1, sample(g - 2), logit);
  rs.set_one_hot(0, den0, sample(g - 3), logit);

  // Arithmetic plus: x_1 (x) ... (x) x_{g-1}.
  for (int i = 0; i < g - 1; ++i) rs.set_one_hot(1, i, sample(i), logit);

  // Arithmetic minus: x_1 (/) x_2 (/) ... (/) x_{g-1}.
  rs.set_one_hot(2, 0, sample(0), logit);
  for (int i = 1; i < g - 1; ++i) rs.set_one_hot(2, den0 + i - 1, sample(i), logit);

  // Distribute-n: rows are permutations of each other, so the hidden value is
  // the full context row's sum minus the visible samples.
  for (int j = 0; j < g; ++j) rs.set_one_hot(3, j, context(j), logit);
  for (int i = 0; i < g - 1; ++i) rs.set_one_hot(3, den0 + i, sample(i), logit);
  return rs;
}

std::array<RowPermutation, 3> build_contexts(int grid) {
  if (grid < 3) throw std::invalid_argument("build_contexts: grid must be at least 3");
  std::array<RowPermutation, 3> perms;
  for (int t = 0; t < 3; ++t) {
    RowPermutation& p = perms[static_cast<std::size_t>(t)];
    p.target_row = t;
    p.target = {t, grid - 1};
    for (int c = 0; c < grid - 1; ++c) p.samples.push_back({t, c});
    int others[2];
    int n = 0;
    for (int r = 0; r < 3; ++r) {
      if (r != t) others[n++] = r;
    }
    for (int c = 0; c < grid; ++c) p.context.push_back({others[0], c});
    for (int c = 0; c < grid - 1; ++c) p.context.push_back({others[1], c});
  }
  return perms;
}

PanelEncoding PanelEncoding::encode(const vsa::Codebook& codebook, const raven::Grid& grid, bool include_answer) {
  PanelEncoding enc;
  enc.grid = static_cast<int>(grid.at(0).size());
  enc.identity = codebook.identity();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < enc.grid; ++c) {
      const bool hidden = r == 2 && c == enc.grid - 1;
      if (hidden && !include_answer) {
        enc.panels.emplace_back();
      } else {
        enc.panels.push_back(vsa::fpe_encode(codebook, grid[r][c]));
      }
    }
  }
  return enc;
}

namespace {

const BlockVector& source_vector(const RowPermutation& perm, const PanelEncoding& enc, int source) {
  const int I = static_cast<int>(perm.samples.size());
  const int J = static_cast<int>(perm.context.size());
  if (source < I) return enc.at(perm.samples[source]);
  if (source < I + J) return enc.at(perm.context[source - I]);
  return enc.identity;
}

std::vector<double> softmax(std::span<const double> s) {
  const double top = *std::max_element(s.begin(), s.end());
  std::vector<double> p(s.size());
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) total += (p[i] = std::exp(s[i] - top));
  for (double& v : p) v /= total;
  return p;
}

void axpy(double a, const BlockVector& x, BlockVector& y) {
  auto src = x.data();
  auto dst = y.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += a * src[i];
}

}  // namespace

BlockVector assemble_term(const RuleSet& rules, int rule, int term, const RowPermutation& perm,
                          const PanelEncoding& enc) {
  const auto w = rules.weights(rule, term);
  if (w.size() != perm.samples.size() + perm.context.size() + 1) {
    throw std::invalid_argument("assemble_term: rule template does not match the grid");
  }
  BlockVector out(enc.identity.blocks(), enc.identity.block_len());
  for (std::size_t n = 0; n < w.size(); ++n) {
    if (w[n] != 0.0) axpy(w[n], source_vector(perm, enc, static_cast<int>(n)), out);
  }
  return out;
}

BlockVector execute_rule(const RuleSet& rules, int rule, const RowPermutation& perm, const PanelEncoding& enc) {
  const auto& shape = rules.shape();
  BlockVector num = enc.identity;
  BlockVector den = enc.identity;
  for (int k = 0; k < shape.terms(); ++k) {
    BlockVector c = assemble_term(rules, rule, k, perm, enc);
    if (shape.is_numerator(k)) {
      num = vsa::bind(num, c);
    } else {
      den = vsa::bind(den, c);
    }
  }
  return vsa::unbind(num, den);
}

double confidence(const RuleSet& rules, int rule, const PanelEncoding& enc, Mode mode) {
  const auto perms = build_contexts(enc.grid);
  const int rows = mode == Mode::Train ? 3 : 2;
  if (mode == Mode::Train && !enc.complete()) throw std::invalid_argument("confidence: train mode needs the answer");
  double s = 0.0;
  for (int t = 0; t < rows; ++t) {
    const auto& p = perms[static_cast<std::size_t>(t)];
    s += vsa::similarity(enc.at(p.target), execute_rule(rules, rule, p, enc));
  }
  return s;
}

BlockVector soft_select(std::span<const double> confidences, std::span<const BlockVector> predictions) {
  if (confidences.empty() || confidences.size() != predictions.size()) {
    throw std::invalid_argument("soft_select: need one confidence per prediction");
  }
  const auto beta = softmax(confidences);
  BlockVector out(predictions[0].blocks(), predictions[0].block_len());
  for (std::size_t r = 0; r < beta.size(); ++r) axpy(beta[r], predictions[r], out);
  return out;
}

double loss(const PanelEncoding& enc, const RuleSet& rules) {
  if (!enc.complete()) throw std::invalid_argument("loss: needs the answer panel");
  const auto perms = build_contexts(enc.grid);
  std::vector<std::array<BlockVector, 3>> preds(static_cast<std::size_t>(rules.rules()));
  std::vector<double> s(static_cast<std::size_t>(rules.rules()), 0.0);
  for (int r = 0; r < rules.rules(); ++r) {
    for (int t = 0; t < 3; ++t) {
      const auto& p = perms[static_cast<std::size_t>(t)];
      auto& pred = preds[static_cast<std::size_t>(r)][static_cast<std::size_t>(t)];
      pred = execute_rule(rules, r, p, enc);
      s[static_cast<std::size_t>(r)] += vsa::similarity(enc.at(p.target), pred);
    }
  }
  double total = 1.0;
  for (int t = 0; t < 3; ++t) {
    std::vector<BlockVector> row;
    for (const auto& pr : preds) row.push_back(pr[static_cast<std::size_t>(t)]);
    total -= vsa::similarity(enc.at(perms[static_cast<std::size_t>(t)].target), soft_select(s, row));
  }
  return total;
}

Reasoner::Reasoner(vsa::Codebook codebook, RuleSet rules)
    : codebook_(std::move(codebook)), basis_(codebook_), rules_(std::move(rules)) {}

Prediction Reasoner::predict(const raven::RpmPuzzle& puzzle) const {
  if (puzzle.grid != rules_.shape().grid) {
    throw std::invalid_argument("Reasoner: rules were built for g=" + std::to_string(rules_.shape().grid) +
                                ", puzzle has g=" + std::to_string(puzzle.grid));
  }
  Prediction out;
  out.scores.assign(puzzle.candidates.size(), 0.0);
  for (std::size_t a = 0; a < puzzle.attribute_count(); ++a) {
    for (const auto& c : puzzle.candidates) {
      if (c[a] < 0 || static_cast<std::size_t>(c[a]) >= codebook_.range()) {
        throw std::out_of_range("Reasoner: candidate value outside the dictionary range " +
                                std::to_string(codebook_.range()));
      }
    }
    auto panels = encode_panels(basis_, puzzle.grids[a]);
    panels.back().clear();  // the answer panel is never an input
    auto inf = infer_attribute(basis_, rules_, panels);
    int best_value = puzzle.candidates.front()[a];
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < puzzle.candidates.size(); ++i) {
      const int v = puzzle.candidates[i][a];
      const double sim = basis_.cosine(inf.prediction, basis_.code(static_cast<std::size_t>(v)));
      out.scores[i] += sim;
      if (sim > best_sim) {
        best_sim = sim;
        best_value = v;
      }
    }
    out.predicted_values.push_back(best_value);
    out.confidences.push_back(std::move(inf.confidences));
  }
  out.answer_index = static_cast<int>(std::max_element(out.scores.begin(), out.scores.end()) - out.scores.begin());
  return out;
}

int predict_answer(const raven::RpmPuzzle& puzzle, const vsa::Codebook& codebook, const RuleSet& rules) {
  return Reasoner(codebook, rules).predict(puzzle).answer_index;
}

Reasoner swap_dictionary(const Reasoner& reasoner, vsa::Codebook codebook) {
  const auto& a = reasoner.codebook().spec();
  const auto& b = codebook.spec();
  if (a.dims != b.dims || a.blocks != b.blocks || a.seed != b.seed) {
    throw std::invalid_argument("swap_dictionary: codebook base differs (dims/blocks/seed must match)");
  }
  return Reasoner(std::move(codebook), reasoner.rules());
}

json checkpoint_to_json(const Reasoner& reasoner) {
  const auto& rs = reasoner.rules();
  const auto& cb = reasoner.codebook().spec();
  const auto p = rs.parameters();
  return {{"schema", kCheckpointSchema},
          {"dims", cb.dims},
          {"blocks", cb.blocks},
          {"seed", cb.seed},
          {"range", cb.range},
          {"grid", rs.shape().grid},
          {"rules", rs.rules()},
          {"numerator_terms", rs.shape().numerator},
          {"denominator_terms", rs.shape().denominator},
          {"sources", rs.shape().sources()},
          {"logits", std::vector<double>(p.begin(), p.end())}};
}

Reasoner checkpoint_from_json(const json& j) {
  const auto schema = j.value("schema", std::string{});
  if (schema != kCheckpointSchema) {
    throw std::runtime_error("checkpoint: unsupported schema '" + schema + "' (expected " + kCheckpointSchema + ")");
  }
  vsa::CodebookSpec cb;
  cb.dims = j.at("dims").get<std::size_t>();
  cb.blocks = j.at("blocks").get<std::size_t>();
  cb.seed = j.at("seed").get<std::uint64_t>();
  cb.range = j.at("range").get<std::size_t>();
  TemplateShape shape{j.at("grid").get<int>(), j.at("numerator_terms").get<int>(),
                      j.at("denominator_terms").get<int>()};
  if (j.at("sources").get<int>() != shape.sources()) throw std::runtime_error("checkpoint: source count mismatch");
  RuleSet rs(shape, j.at("rules").get<int>());
  const auto logits = j.at("logits").get<std::vector<double>>();
  if (logits.size() != rs.parameter_count()) throw std::runtime_error("checkpoint: logit count mismatch");
  std::copy(logits.begin(), logits.end(), rs.parameters().begin());
  return Reasoner(vsa::Codebook(cb), std::move(rs));
}

void save_checkpoint(const Reasoner& reasoner, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << checkpoint_to_json(reasoner).dump() << '\n';
}

Reasoner load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return checkpoint_from_json(json::parse(in));
}

}  // namespace ravenx::arlc
