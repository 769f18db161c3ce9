#pragma once

// Runs a Reasoner over a puzzle set and records per-puzzle outcomes.

#include <span>
#include <vector>

#include "ravenx/arlc.hpp"
#include "ravenx/report.hpp"

namespace ravenx {

std::vector<report::EvalRecord> evaluate(const arlc::Reasoner& reasoner, std::span<const raven::RpmPuzzle> puzzles,
                                         int threads = 1);

}  // namespace ravenx
