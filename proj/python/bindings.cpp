// Copyright 2026 The simtrace Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings. Structured values cross the boundary as JSON text; the
// package wrapper turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "simtrace/annotation.hpp"
#include "simtrace/detector.hpp"
#include "simtrace/evolution.hpp"
#include "simtrace/metrics.hpp"
#include "simtrace/optimizer.hpp"
#include "simtrace/physics.hpp"
#include "simtrace/query.hpp"
#include "simtrace/reward.hpp"
#include "simtrace/scenes.hpp"
#include "simtrace/trace_io.hpp"

namespace py = pybind11;
using namespace simtrace;

namespace {

Scene scene_of(const std::string& text) { return parse_scene(text); }

Action action_of(const std::vector<double>& xyr) {
  if (xyr.size() != 3) throw Error("action must be (x, y, r)");
  return Action{{xyr[0], xyr[1]}, xyr[2]};
}

PatternLibrary library_of(const std::string& text) {
  return text.empty() ? PatternLibrary{} : library_from_json(parse_json_text(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "simtrace core";
  py::register_exception<Error>(m, "SimtraceError", PyExc_ValueError);

  m.def("template_ids", &template_ids);
  m.def(
      "build_scene",
      [](const std::string& id, std::uint64_t variant, const std::string& params) {
        const Json p = params.empty() ? Json::object() : parse_json_text(params);
        return serialize_scene(build_scene({id, p, variant}));
      },
      py::arg("template_id"), py::arg("variant") = 0, py::arg("params") = "");
  m.def(
      "simulate",
      [](const std::string& scene, const std::vector<double>& action, const std::string& config) {
        const SimConfig c = config.empty() ? SimConfig{} : sim_config_from_json(parse_json_text(config));
        const Scene s = scene_of(scene);
        py::gil_scoped_release release;
        return serialize_trace(simulate(s, action_of(action), c));
      },
      py::arg("scene"), py::arg("action"), py::arg("config") = "");
  m.def(
      "check_placement",
      [](const std::string& scene, const std::vector<double>& action) {
        try {
          check_placement(scene_of(scene), action_of(action));
          return true;
        } catch (const InvalidPlacementError&) {
          return false;
        }
      },
      py::arg("scene"), py::arg("action"));

  m.def("parse_detector", [](const std::string& src) { return print_detector(parse_detector(src)); });
  m.def("detector_length", [](const std::string& src) { return program_length(parse_detector(src)); });
  m.def(
      "annotate",
      [](const std::string& trace, const std::string& library, const std::string& trace_ref) {
        return canonical_dump(ast_to_json(annotate(parse_trace(trace), library_of(library)), trace_ref));
      },
      py::arg("trace"), py::arg("library") = "", py::arg("trace_ref") = "");
  m.def(
      "ablate",
      [](const std::string& library, const std::string& uid) {
        return canonical_dump(library_to_json(ablate(library_of(library), uid)));
      },
      py::arg("library"), py::arg("uid"));

  m.def("trace_distance", [](const std::string& a, const std::string& b, std::size_t samples) {
    return trace_distance(parse_trace(a), parse_trace(b), samples);
  }, py::arg("a"), py::arg("b"), py::arg("samples") = kDefaultSamples);
  m.def("symmetric_cross_entropy", [](const std::vector<double>& p, const std::vector<double>& q) {
    return symmetric_cross_entropy(Histogram{p}, Histogram{q});
  });
  m.def("correlation", &correlation);
  m.def("length_penalty", &length_penalty);
  m.def("time_penalty", &time_penalty);

  m.def("parse_reward", [](const std::string& src) { return print_reward(parse_reward(src)); });
  m.def(
      "evaluate_reward",
      [](const std::string& program, const std::string& ast, const std::string& trace, bool binary,
         bool swap_after) {
        RewardProgram p = parse_reward(program);
        if (binary) p = binary_reward(std::move(p));
        const Trace t = parse_trace(trace);
        EvalContext ctx = EvalContext::make(t, ast_from_json(parse_json_text(ast)));
        ctx.swap_after = swap_after;
        return canonical_dump(evaluate_reward(p, ctx).to_json());
      },
      py::arg("program"), py::arg("ast"), py::arg("trace"), py::arg("binary") = false, py::arg("swap_after") = false);
  m.def("nearby_grade", &nearby_grade);
  m.def("count_grade", &count_grade);

  m.def(
      "anneal",
      [](const std::string& scene, const std::string& reward, std::size_t samples, std::uint64_t seed,
         const std::string& library, const std::string& config) {
        AnnealConfig cfg;
        cfg.samples = samples;
        cfg.seed = seed;
        const SimConfig sim = config.empty() ? SimConfig{} : sim_config_from_json(parse_json_text(config));
        const Scene s = scene_of(scene);
        const RewardProgram r = parse_reward(reward);
        const PatternLibrary lib = library_of(library);
        py::gil_scoped_release release;
        return canonical_dump(anneal(s, r, lib, cfg, sim).to_json());
      },
      py::arg("scene"), py::arg("reward"), py::arg("samples") = 250, py::arg("seed") = 0, py::arg("library") = "",
      py::arg("config") = "");
  m.def(
      "success_test",
      [](const std::string& trace, double x, double y, double tolerance) {
        return success_test(parse_trace(trace), {x, y}, tolerance);
      },
      py::arg("trace"), py::arg("x"), py::arg("y"), py::arg("tolerance") = 10.0);

  m.def("question_templates", [] {
    std::vector<std::string> ids;
    for (const TemplateInfo& t : question_templates()) ids.push_back(t.id);
    return ids;
  });
  m.def(
      "answer",
      [](const std::string& template_id, const std::string& args, const std::string& trace, const std::string& ast) {
        const Trace t = parse_trace(trace);
        const AnnotationMatrix m = ast.empty() ? AnnotationMatrix{} : ast_from_json(parse_json_text(ast));
        return answer({template_id, parse_json_text(args)}, t, ast.empty() ? nullptr : &m).dump();
      },
      py::arg("template_id"), py::arg("args"), py::arg("trace"), py::arg("ast") = "");
}
