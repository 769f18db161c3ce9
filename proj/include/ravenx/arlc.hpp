#pragma once

// Abductive rule learner with context awareness.
//
// A rule is a template of numerator terms bound together and denominator
// terms unbound from the result. Each term is a convex combination of the
// current row's sample panels, the context panels and the identity, with
// weights given by a softmax over free logits. Rules are executed on three
// row permutations; agreement with the known last panels gives each rule a
// confidence, and the prediction for the hidden panel is the softmax-weighted
// combination of all rules' outputs.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "ravenx/raven.hpp"
#include "ravenx/rng.hpp"
#include "ravenx/spectral.hpp"
#include "ravenx/vsa.hpp"

namespace ravenx::arlc {

struct TemplateShape {
  int grid = 3;
  int numerator = 6;
  int denominator = 6;

  /// 6 + 6 terms at g = 3, 11 + 11 at g = 10, (g + 1) + (g + 1) otherwise.
  static TemplateShape for_grid(int grid);

  int samples() const { return grid - 1; }
  int contexts() const { return 2 * grid - 1; }
  int sources() const { return samples() + contexts() + 1; }
  int identity_source() const { return sources() - 1; }
  int terms() const { return numerator + denominator; }
  bool is_numerator(int term) const { return term < numerator; }

  bool operator==(const TemplateShape&) const = default;
};

/// Assignment logits for R rules x T terms x (I + J + 1) sources.
class RuleSet {
 public:
  RuleSet() = default;
  RuleSet(TemplateShape shape, int rules);
  /// Logits drawn from N(0, scale^2).
  static RuleSet random(TemplateShape shape, int rules, double scale, Rng& rng);

  const TemplateShape& shape() const { return shape_; }
  int rules() const { return rules_; }
  std::size_t parameter_count() const { return logits_.size(); }

  std::span<double> logits(int rule, int term);
  std::span<const double> logits(int rule, int term) const;
  std::span<double> parameters() { return logits_; }
  std::span<const double> parameters() const { return logits_; }

  /// Softmax of the term's logits: (w_k, u_k, v_k) on the simplex.
  std::vector<double> weights(int rule, int term) const;
  void set_one_hot(int rule, int term, int source, double logit);

  /// Appends `count` rules with all-zero logits (uniform assignment).
  void append_uniform(int count);

  bool operator==(const RuleSet&) const = default;

 private:
  std::size_t offset(int rule, int term) const;

  TemplateShape shape_;
  int rules_ = 0;
  std::vector<double> logits_;
};

/// Logit placed on the selected source of a programmed term. Large enough that
/// the remaining softmax mass is below double precision relevance.
inline constexpr double kProgrammedLogit = 40.0;

/// Four hand-written rules: progression (constant is the delta = 0 case),
/// arithmetic plus, arithmetic minus, distribute-n.
RuleSet program_rules(TemplateShape shape, double logit = kProgrammedLogit);

struct PanelRef {
  int row = 0;
  int col = 0;
  bool operator==(const PanelRef&) const = default;
};

/// Which panels play the role of samples X and context O when predicting the
/// last panel of `target_row`. Samples are the first g-1 panels of the target
/// row; the context is the earlier remaining row in full followed by the first
/// g-1 panels of the other one, so the hidden panel is never referenced.
struct RowPermutation {
  int target_row = 0;
  std::vector<PanelRef> samples;
  std::vector<PanelRef> context;
  PanelRef target;
};

std::array<RowPermutation, 3> build_contexts(int grid);

enum class Mode { Train, Inference };

/// VSA vectors of one attribute's panels (row-major, 3 x g). The last panel is
/// empty when the answer is unknown.
struct PanelEncoding {
  int grid = 3;
  std::vector<vsa::BlockVector> panels;
  vsa::BlockVector identity;

  static PanelEncoding encode(const vsa::Codebook& codebook, const raven::Grid& grid, bool include_answer);
  const vsa::BlockVector& at(PanelRef p) const { return panels[static_cast<std::size_t>(p.row * grid + p.col)]; }
  bool complete() const { return !panels.back().empty(); }
};

// Reference operations on BlockVectors; the Reasoner and the trainer evaluate
// the same quantities in the spectral domain.
vsa::BlockVector assemble_term(const RuleSet& rules, int rule, int term, const RowPermutation& perm,
                               const PanelEncoding& enc);
vsa::BlockVector execute_rule(const RuleSet& rules, int rule, const RowPermutation& perm,
                              const PanelEncoding& enc);
double confidence(const RuleSet& rules, int rule, const PanelEncoding& enc, Mode mode);
vsa::BlockVector soft_select(std::span<const double> confidences, std::span<const vsa::BlockVector> predictions);
/// 1 - sum over rows of cos(actual, soft-selected prediction), confidences in train mode.
double loss(const PanelEncoding& enc, const RuleSet& rules);

/// Per-attribute spectra of the 3 x g panels.
std::vector<vsa::Spectrum> encode_panels(const vsa::SpectralBasis& basis, const raven::Grid& grid);

/// Loss of one attribute example; adds d(loss)/d(logits) * scale into `grad`
/// when it is non-empty.
double loss_and_gradient(const vsa::SpectralBasis& basis, const RuleSet& rules,
                         std::span<const vsa::Spectrum> panels, std::span<double> grad, double scale = 1.0);

struct AttributeInference {
  std::vector<double> confidences;  // per rule, rows 1 and 2 only
  vsa::Spectrum prediction;         // soft-selected hidden panel
};

AttributeInference infer_attribute(const vsa::SpectralBasis& basis, const RuleSet& rules,
                                   std::span<const vsa::Spectrum> panels);

struct Prediction {
  int answer_index = 0;
  std::vector<double> scores;                     // per candidate
  std::vector<int> predicted_values;              // per attribute
  std::vector<std::vector<double>> confidences;   // per attribute, per rule
};

class Reasoner {
 public:
  Reasoner(vsa::Codebook codebook, RuleSet rules);

  const vsa::Codebook& codebook() const { return codebook_; }
  const vsa::SpectralBasis& basis() const { return basis_; }
  const RuleSet& rules() const { return rules_; }

  /// Scores candidates by the summed cosine between each attribute's
  /// soft-selected prediction and the candidate's code; lowest index wins ties.
  /// The predicted value of an attribute is the candidate value closest to the
  /// prediction.
  Prediction predict(const raven::RpmPuzzle& puzzle) const;

 private:
  vsa::Codebook codebook_;
  vsa::SpectralBasis basis_;
  RuleSet rules_;
};

int predict_answer(const raven::RpmPuzzle& puzzle, const vsa::Codebook& codebook, const RuleSet& rules);

/// Same rules, new dictionary. The codebook must share (D, B, seed).
Reasoner swap_dictionary(const Reasoner& reasoner, vsa::Codebook codebook);

/// Standard deviation of the initial logits of rules learned from scratch.
inline constexpr double kDefaultInitScale = 1.0;

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 25;
  int batch_size = 1;
  double momentum = 0.9;
  std::uint64_t seed = 0;  // shuffling order
};

struct TrainResult {
  RuleSet rules;
  std::vector<double> epoch_loss;  // mean per-attribute loss over each epoch
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Mini-batch SGD over every (puzzle, attribute) pair; each example uses all
/// three row permutations. Throws std::runtime_error if the loss or a gradient
/// becomes non-finite.
TrainResult train(std::span<const raven::RpmPuzzle> puzzles, const vsa::Codebook& codebook, RuleSet init,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

double mean_loss(std::span<const raven::RpmPuzzle> puzzles, const vsa::SpectralBasis& basis,
                 const RuleSet& rules);

inline constexpr const char* kCheckpointSchema = "ravenx.checkpoint/1";
nlohmann::json checkpoint_to_json(const Reasoner& reasoner);
Reasoner checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Reasoner& reasoner, const std::filesystem::path& path);
Reasoner load_checkpoint(const std::filesystem::path& path);

}  // namespace ravenx::arlc
