#include "ravenx/evaluate.hpp"

#include <algorithm>
#include <thread>

namespace ravenx {

std::vector<report::EvalRecord> evaluate(const arlc::Reasoner& reasoner, std::span<const raven::RpmPuzzle> puzzles,
                                         int threads) {
  std::vector<report::EvalRecord> records(puzzles.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < puzzles.size(); i += stride) {
      const auto& p = puzzles[i];
      const auto pred = reasoner.predict(p);
      auto& r = records[i];
      r.puzzle_id = p.id;
      r.chosen_index = pred.answer_index;
      r.answer_index = p.answer_index;
      for (int v : pred.predicted_values) r.predicted_values.emplace_back(v);
      for (std::size_t a = 0; a < p.attribute_count(); ++a) r.hidden_values.push_back(p.hidden_value(a));
      r.rules = p.rules;
    }
  };
  const auto n = static_cast<std::size_t>(std::max(1, threads));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(work, t, n);
  work(0, n);
  for (auto& t : pool) t.join();
  return records;
}

}  // namespace ravenx
