// Python bindings: world generation and oracle, gradient checks, training
// from flat configs, checkpoint loading, prediction and slot inspection.

#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "entnet/checkpoint.hpp"
#include "entnet/error.hpp"
#include "entnet/gradcheck.hpp"
#include "entnet/inspect.hpp"
#include "entnet/pipeline.hpp"
#include "entnet/world.hpp"

namespace py = pybind11;
using namespace entnet;

namespace {

FlatConfig to_flat(const std::map<std::string, std::string>& values) {
  FlatConfig c;
  for (const auto& [k, v] : values) c.set(k, v);
  return c;
}

world::WorldConfig world_config(int lines, int width, int height) {
  world::WorldConfig c;
  c.lines = lines;
  c.width = width;
  c.height = height;
  c.validate();
  return c;
}

std::vector<std::string> story_lines(const world::WorldStory& s) {
  std::vector<std::string> out;
  for (const auto& a : s.actions) out.push_back(world::format_action(a));
  return out;
}

std::vector<world::Action> parse_lines(const std::vector<std::string>& lines) {
  std::vector<world::Action> actions;
  for (const auto& l : lines) actions.push_back(world::parse_action(l));
  return actions;
}

struct PyModel {
  std::shared_ptr<Model> model;
  py::dict extra;
};

py::dict prediction_dict(const Prediction& p) {
  py::dict d;
  d["index"] = p.index;
  d["token"] = p.token;
  d["probabilities"] = p.probabilities;
  return d;
}

QASample make_sample(const std::vector<std::vector<std::string>>& context, const std::vector<std::string>& query,
                     const std::string& answer, const std::vector<std::string>& candidates) {
  QASample s;
  s.context = context;
  s.query = query;
  s.candidates = candidates;
  // Prediction ignores the answer; any token the encoder accepts will do.
  s.answer = !answer.empty() ? answer : candidates.empty() ? std::string(kNullToken) : candidates.front();
  return s;
}

}  // namespace

PYBIND11_MODULE(_entnet, m) {
  m.doc() = "Recurrent entity network core";

  py::register_exception<Error>(m, "EntNetError");

  m.def(
      "generate_world",
      [](std::size_t count, int t_min, int t_max, std::uint64_t seed, int width, int height) {
        std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> out;
        for (const auto& s : pipeline::generate_world(world_config(std::max(t_max, 4), width, height), count, t_min,
                                                      t_max, seed)) {
          std::vector<std::string> answers;
          for (const auto& p : s.answers) answers.push_back(world::format_position(p));
          out.emplace_back(story_lines(s), answers);
        }
        return out;
      },
      py::arg("count"), py::arg("t_min") = 10, py::arg("t_max") = 10, py::arg("seed") = 1, py::arg("width") = 10,
      py::arg("height") = 10, "Stories as (lines, answers) pairs; answers[k] is agent k+1's final cell.");

  m.def(
      "world_oracle",
      [](const std::vector<std::string>& lines, int width, int height) {
        world::WorldConfig c = world_config(10, width, height);
        std::vector<std::string> out;
        for (const auto& p : world::world_oracle(parse_lines(lines), c)) out.push_back(world::format_position(p));
        return out;
      },
      py::arg("lines"), py::arg("width") = 10, py::arg("height") = 10,
      "Replays statement lines and returns each agent's final cell.");

  m.def(
      "gradient_check",
      [](std::size_t dim, std::size_t slots, std::size_t steps, const std::string& variant,
         const std::string& activation, std::uint64_t seed) {
        RandomCheckSpec spec;
        spec.dim = dim;
        spec.slots = slots;
        spec.steps = steps;
        spec.variant = variant == "simplified" ? Variant::kSimplified : Variant::kGeneral;
        spec.activation = activation == "identity" ? Activation::kIdentity : Activation::kPrelu;
        spec.seed = seed;
        const GradCheckResult r = random_gradient_check(spec);
        py::dict d;
        d["max_relative_error"] = r.max_relative_error;
        d["max_absolute_error"] = r.max_absolute_error;
        d["worst_parameter"] = r.worst_parameter;
        d["checked"] = r.checked;
        return d;
      },
      py::arg("dim") = 8, py::arg("slots") = 3, py::arg("steps") = 4, py::arg("variant") = "general",
      py::arg("activation") = "prelu", py::arg("seed") = 1);

  m.def(
      "resolve_config", [](const std::map<std::string, std::string>& user) {
        return pipeline::resolve(to_flat(user)).values();
      },
      py::arg("config"), "Fills task defaults; raises EntNetError on unknown keys or values.");

  py::class_<PyModel>(m, "Model")
      .def_static(
          "load",
          [](const std::string& path) {
            LoadedCheckpoint c = load_checkpoint(path);
            PyModel pm{std::make_shared<Model>(std::move(c.model)), {}};
            pm.extra = py::module_::import("json").attr("loads")(c.extra.dump());
            return pm;
          },
          py::arg("path"))
      .def_property_readonly("extra", [](const PyModel& m) { return m.extra; })
      .def_property_readonly("parameter_count", [](const PyModel& m) { return parameter_count(m.model->config()); })
      .def_property_readonly("vocabulary", [](const PyModel& m) { return m.model->vocab().tokens(); })
      .def(
          "predict",
          [](const PyModel& m, const std::vector<std::vector<std::string>>& context,
             const std::vector<std::string>& query, const std::vector<std::string>& candidates) {
            return prediction_dict(m.model->predict(m.model->encode_sample(make_sample(context, query, "", candidates))));
          },
          py::arg("context"), py::arg("query"), py::arg("candidates") = std::vector<std::string>{})
      .def(
          "nearest_words",
          [](const PyModel& m, const std::vector<std::vector<std::string>>& context,
             const std::vector<std::string>& query, std::size_t k) {
            const EncodedSample e = m.model->encode_sample(make_sample(context, query, "", {}));
            const auto states = m.model->trace(e);
            const AffinityReport r = slot_nearest_words(states.back().slots, m.model->output_weights(),
                                                        m.model->vocab(), k, m.model->slot_labels(e));
            std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>> out;
            for (const auto& s : r.slots) {
              std::vector<std::pair<std::string, double>> words;
              for (const auto& w : s.nearest) words.emplace_back(w.token, w.score);
              out.emplace_back(s.label, words);
            }
            return out;
          },
          py::arg("context"), py::arg("query"), py::arg("k") = 3);

  m.def(
      "train",
      [](const std::map<std::string, std::string>& user, const std::string& out_dir) {
        const FlatConfig resolved = pipeline::resolve(to_flat(user));
        const pipeline::Splits splits = pipeline::load_splits(resolved);
        pipeline::Experiment exp;
        {
          py::gil_scoped_release release;
          exp = pipeline::run_experiment(resolved, splits, out_dir);
        }
        py::list runs;
        for (const auto& r : exp.runs) {
          py::dict d;
          d["seed"] = r.metrics.seed;
          d["best_epoch"] = r.metrics.best_epoch;
          d["best_valid_error"] = r.metrics.best_valid_error;
          d["test_error"] = r.metrics.test_error;
          d["epochs"] = r.metrics.epochs.size();
          runs.append(d);
        }
        py::dict result;
        result["runs"] = runs;
        result["best_seed"] = exp.runs[exp.best].metrics.seed;
        result["test_error"] = exp.runs[exp.best].metrics.test_error;
        return result;
      },
      py::arg("config"), py::arg("out_dir") = "",
      "Trains one model per configured seed; returns per-seed metrics and the selected seed.");
}
