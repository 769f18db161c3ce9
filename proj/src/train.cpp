#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ravenx/arlc.hpp"

namespace ravenx::arlc {

namespace {

struct Example {
  std::size_t puzzle;
  std::size_t attribute;
};

std::vector<Example> enumerate_examples(std::span<const raven::RpmPuzzle> puzzles) {
  std::vector<Example> out;
  for (std::size_t p = 0; p < puzzles.size(); ++p) {
    for (std::size_t a = 0; a < puzzles[p].attribute_count(); ++a) out.push_back({p, a});
  }
  return out;
}

}  // namespace

double mean_loss(std::span<const raven::RpmPuzzle> puzzles, const vsa::SpectralBasis& basis, const RuleSet& rules) {
  const auto examples = enumerate_examples(puzzles);
  if (examples.empty()) throw std::invalid_argument("mean_loss: no examples");
  double total = 0.0;
  for (const auto& ex : examples) {
    const auto panels = encode_panels(basis, puzzles[ex.puzzle].grids[ex.attribute]);
    total += loss_and_gradient(basis, rules, panels, {});
  }
  return total / static_cast<double>(examples.size());
}

TrainResult train(std::span<const raven::RpmPuzzle> puzzles, const vsa::Codebook& codebook, RuleSet init,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  if (config.batch_size < 1 || config.epochs < 0) throw std::invalid_argument("train: bad batch size or epochs");
  for (const auto& p : puzzles) {
    if (p.grid != init.shape().grid) throw std::invalid_argument("train: puzzle " + p.id + " has a different grid");
  }
  const vsa::SpectralBasis basis(codebook);
  auto examples = enumerate_examples(puzzles);
  if (examples.empty()) throw std::invalid_argument("train: no training examples");

  TrainResult result{std::move(init), {}};
  RuleSet& rules = result.rules;
  std::vector<double> grad(rules.parameter_count());
  std::vector<double> velocity(rules.parameter_count(), 0.0);
  Rng rng(config.seed);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(examples);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < examples.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(examples.size(), start + static_cast<std::size_t>(config.batch_size));
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = examples[i];
        const auto& puzzle = puzzles[ex.puzzle];
        const auto panels = encode_panels(basis, puzzle.grids[ex.attribute]);
        const double l = loss_and_gradient(basis, rules, panels, grad, scale);
        if (!std::isfinite(l)) {
          std::ostringstream os;
          os << "train: non-finite loss at epoch " << epoch << ", puzzle " << puzzle.id << ", attribute "
             << puzzle.attributes[ex.attribute].name;
          throw std::runtime_error(os.str());
        }
        epoch_total += l;
      }
      double grad_norm = 0.0;
      for (double gv : grad) grad_norm += gv * gv;
      if (!std::isfinite(grad_norm)) {
        std::ostringstream os;
        os << "train: non-finite gradient at epoch " << epoch << ", batch starting at example " << start;
        throw std::runtime_error(os.str());
      }
      auto params = rules.parameters();
      for (std::size_t j = 0; j < params.size(); ++j) {
        velocity[j] = config.momentum * velocity[j] + grad[j];
        params[j] -= config.learning_rate * velocity[j];
      }
    }
    const double mean = epoch_total / static_cast<double>(examples.size());
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

}  // namespace ravenx::arlc
