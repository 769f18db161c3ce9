#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ravenx/arlc.hpp"
#include "ravenx/evaluate.hpp"
#include "ravenx/llm.hpp"
#include "ravenx/raven.hpp"
#include "ravenx/report.hpp"
#include "ravenx/vsa.hpp"

namespace py = pybind11;
using namespace ravenx;

namespace {

py::array_t<double> to_numpy(const vsa::BlockVector& v) {
  py::array_t<double> out({v.blocks(), v.block_len()});
  std::copy(v.data().begin(), v.data().end(), out.mutable_data());
  return out;
}

vsa::BlockVector from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a (blocks, block_len) array");
  vsa::BlockVector v(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), v.data().begin());
  return v;
}

raven::GeneratorConfig config_for(int grid, int range) {
  return grid == 3 && range == 0 ? raven::GeneratorConfig::iraven() : raven::GeneratorConfig::iraven_x(grid, range);
}

std::vector<std::string> rule_strings(const raven::RpmPuzzle& p) {
  std::vector<std::string> out;
  for (const auto& r : p.rules) out.push_back(raven::to_string(r));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Vector-symbolic abductive rule learning on Raven's progressive matrices";

  py::class_<vsa::Codebook>(m, "Codebook")
      .def(py::init([](std::size_t dims, std::size_t blocks, std::size_t range, std::uint64_t seed) {
             return vsa::Codebook({dims, blocks, range, seed});
           }),
           py::arg("dims") = 1024, py::arg("blocks") = 4, py::arg("range") = 10, py::arg("seed") = 0)
      .def_property_readonly("dims", &vsa::Codebook::dims)
      .def_property_readonly("blocks", &vsa::Codebook::blocks)
      .def_property_readonly("range", &vsa::Codebook::range)
      .def_property_readonly("seed", &vsa::Codebook::seed)
      .def("encode", [](const vsa::Codebook& cb, long v) { return to_numpy(vsa::fpe_encode(cb, v)); })
      .def("with_range", &vsa::Codebook::with_range);

  m.def("bind", [](const py::array_t<double>& a, const py::array_t<double>& b) {
    return to_numpy(vsa::bind(from_numpy(a), from_numpy(b)));
  });
  m.def("unbind", [](const py::array_t<double>& a, const py::array_t<double>& b) {
    return to_numpy(vsa::unbind(from_numpy(a), from_numpy(b)));
  });
  m.def("similarity", [](const py::array_t<double>& a, const py::array_t<double>& b) {
    return vsa::similarity(from_numpy(a), from_numpy(b));
  });

  py::class_<raven::RpmPuzzle>(m, "Puzzle")
      .def_readonly("id", &raven::RpmPuzzle::id)
      .def_readonly("grid", &raven::RpmPuzzle::grid)
      .def_readonly("grids", &raven::RpmPuzzle::grids)
      .def_readonly("candidates", &raven::RpmPuzzle::candidates)
      .def_readonly("answer_index", &raven::RpmPuzzle::answer_index)
      .def_property_readonly("rules", &rule_strings)
      .def_property_readonly("attributes",
                             [](const raven::RpmPuzzle& p) {
                               std::vector<std::string> names;
                               for (const auto& a : p.attributes) names.push_back(a.name);
                               return names;
                             })
      .def("answer", &raven::RpmPuzzle::answer)
      .def("to_json", [](const raven::RpmPuzzle& p) { return raven::to_json(p).dump(); })
      .def("__repr__", [](const raven::RpmPuzzle& p) { return "<Puzzle " + p.id + ">"; });

  m.def(
      "generate",
      [](int grid, int range, std::size_t count, std::uint64_t seed, const std::string& split) {
        return raven::gen_dataset(config_for(grid, range), count, seed, raven::parse_split(split)).puzzles;
      },
      py::arg("grid") = 3, py::arg("range") = 0, py::arg("count") = 1, py::arg("seed") = 0,
      py::arg("split") = "test", "Generates puzzles; range 0 at grid 3 selects the I-RAVEN attribute ranges.");
  m.def("load_dataset", [](const std::filesystem::path& p) { return raven::load_dataset(p).puzzles; });

  py::class_<arlc::Reasoner>(m, "Reasoner")
      .def_static(
          "programmed",
          [](int grid, std::size_t range, std::uint64_t seed) {
            return arlc::Reasoner(vsa::Codebook({1024, 4, range, seed}),
                                  arlc::program_rules(arlc::TemplateShape::for_grid(grid)));
          },
          py::arg("grid") = 3, py::arg("range") = 10, py::arg("seed") = 1)
      .def_static("load", [](const std::filesystem::path& p) { return arlc::load_checkpoint(p); })
      .def("save", [](const arlc::Reasoner& r, const std::filesystem::path& p) { arlc::save_checkpoint(r, p); })
      .def("swap_dictionary",
           [](const arlc::Reasoner& r, std::size_t range) {
             return arlc::swap_dictionary(r, r.codebook().with_range(range));
           })
      .def_property_readonly("range", [](const arlc::Reasoner& r) { return r.codebook().range(); })
      .def_property_readonly("rules", [](const arlc::Reasoner& r) { return r.rules().rules(); })
      .def("predict",
           [](const arlc::Reasoner& r, const raven::RpmPuzzle& p) {
             const auto pred = r.predict(p);
             py::dict d;
             d["answer_index"] = pred.answer_index;
             d["scores"] = pred.scores;
             d["predicted_values"] = pred.predicted_values;
             return d;
           })
      .def(
          "accuracy",
          [](const arlc::Reasoner& r, const std::vector<raven::RpmPuzzle>& puzzles, int threads) {
            const auto records = evaluate(r, puzzles, threads);
            return report::summarize("", "", records).task.percent().value_or(0.0);
          },
          py::arg("puzzles"), py::arg("threads") = 1);

  m.def(
      "train",
      [](const std::vector<raven::RpmPuzzle>& puzzles, int epochs, double lr, int rules, std::uint64_t seed,
         bool programmed) {
        if (puzzles.empty()) throw std::invalid_argument("train: no puzzles");
        const auto& first = puzzles.front();
        int range = 0;
        for (const auto& a : first.attributes) range = std::max(range, a.range);
        const vsa::Codebook cb({1024, 4, static_cast<std::size_t>(range), 1});
        const auto shape = arlc::TemplateShape::for_grid(first.grid);
        Rng rng(derive_seed(seed, 0));
        arlc::RuleSet init;
        if (programmed) {
          init = arlc::program_rules(shape);
          init.append_uniform(std::max(0, rules - init.rules()));
        } else {
          init = arlc::RuleSet::random(shape, rules, arlc::kDefaultInitScale, rng);
        }
        arlc::TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.learning_rate = lr;
        cfg.seed = derive_seed(seed, 1);
        py::gil_scoped_release release;
        auto result = arlc::train(puzzles, cb, init, cfg);
        return std::make_pair(arlc::Reasoner(cb, result.rules), result.epoch_loss);
      },
      py::arg("puzzles"), py::arg("epochs") = 25, py::arg("lr") = 0.01, py::arg("rules") = 5, py::arg("seed") = 0,
      py::arg("programmed") = false, "Returns (reasoner, per-epoch mean loss).");

  auto llm = m.def_submodule("llm", "Prompt rendering and answer parsing for chat models");
  llm.def(
      "render_predictive",
      [](const raven::RpmPuzzle& p, std::size_t attribute, const std::string& profile) {
        return llm::render_predictive(p, attribute, llm::PromptConfig::for_profile(profile));
      },
      py::arg("puzzle"), py::arg("attribute"), py::arg("profile") = "gpt-4");
  llm.def(
      "render_entangled",
      [](const raven::RpmPuzzle& p, const std::string& profile) {
        return llm::render_entangled(p, llm::PromptConfig::for_profile(profile));
      },
      py::arg("puzzle"), py::arg("profile") = "gpt-4");
  llm.def(
      "render_discriminative",
      [](const raven::RpmPuzzle& p, std::size_t attribute, const std::string& profile) {
        return llm::render_discriminative(p, attribute, llm::PromptConfig::for_profile(profile));
      },
      py::arg("puzzle"), py::arg("attribute"), py::arg("profile") = "gpt-4");
  llm.def("parse_integer", &llm::parse_integer, py::arg("text"), py::arg("strict") = false);
  llm.def("vote", [](const std::vector<std::optional<int>>& values) -> std::optional<int> {
    std::vector<std::optional<llm::Answer>> parsed;
    for (const auto& v : values) parsed.push_back(v ? std::optional<llm::Answer>(llm::Answer{*v}) : std::nullopt);
    const auto r = llm::vote(parsed);
    return r ? std::optional<int>(r->front()) : std::nullopt;
  });
  llm.def("select_candidate", [](const std::vector<std::optional<int>>& predicted,
                                 const std::vector<std::vector<int>>& candidates) {
    return llm::select_candidate(predicted, candidates);
  });
  llm.def("classify_error", [](const raven::Grid& grid, std::optional<int> predicted) {
    return llm::to_string(llm::classify_error(grid, predicted));
  });
}
