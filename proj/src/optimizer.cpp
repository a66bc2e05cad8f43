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

#include "simtrace/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "simtrace/rng.hpp"
#include "simtrace/trace_io.hpp"

namespace simtrace {

void AnnealConfig::validate() const {
  if (samples < 1) throw Error("annealing needs at least one sample");
  if (initial_temperature <= 0.0) throw Error("initial temperature must be positive");
  if (cooling <= 0.0 || cooling >= 1.0) throw Error("cooling factor must lie in (0, 1)");
  if (sigma_x <= 0.0 || sigma_y <= 0.0 || sigma_r <= 0.0) throw Error("proposal scales must be positive");
}

Json AnnealConfig::to_json() const {
  return Json{{"samples", samples},   {"initial_temperature", initial_temperature},
              {"cooling", cooling},   {"sigma", {sigma_x, sigma_y, sigma_r}},
              {"seed", seed}};
}

std::size_t OptimizationRun::best_within(std::size_t budget) const {
  const std::size_t n = std::min(budget, history.size());
  if (n == 0) throw Error("empty optimization history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (history[i].score > history[best].score) best = i;
  return best;
}

Json OptimizationRun::to_json() const {
  Json hist = Json::array();
  for (const AnnealSample& s : history)
    hist.push_back(Json{{"x", canonical_double(s.action.position.x)},
                        {"y", canonical_double(s.action.position.y)},
                        {"r", canonical_double(s.action.radius)},
                        {"score", canonical_double(s.score)},
                        {"accepted", s.accepted},
                        {"valid", s.valid}});
  return Json{{"history", hist},
              {"best",
               {{"index", best_index},
                {"x", canonical_double(best_action.position.x)},
                {"y", canonical_double(best_action.position.y)},
                {"r", canonical_double(best_action.radius)},
                {"score", canonical_double(best_score)}}}};
}

ActionScore score_action(const Scene& scene, const Action& action, const RewardProgram& reward,
                         const PatternLibrary& library, const SimConfig& sim, bool keep_trace) {
  ActionScore out;
  Trace trace;
  try {
    trace = simulate(scene, action, sim);
  } catch (const InvalidPlacementError&) {
    out.valid = false;
    return out;
  } catch (const SimulationError&) {
    out.valid = false;
    return out;
  }
  const AnnotationMatrix matrix = annotate(trace, library);
  out.score = eval_partial(reward, EvalContext::make(trace, matrix, &library));
  if (keep_trace) out.trace = std::move(trace);
  return out;
}

void check_reward_identifiers(const RewardProgram& reward, const PatternLibrary& library) {
  std::vector<std::pair<std::string, std::string>> known;
  for (const PatternDetector& d : library.detectors) known.emplace_back(d.uid, d.label);
  validate_identifiers(reward, known);
}

OptimizationRun anneal(const Scene& scene, const RewardProgram& reward, const PatternLibrary& library,
                       const AnnealConfig& config, const SimConfig& sim) {
  config.validate();
  check_reward_identifiers(reward, library);
  Rng rng(mix_seed(config.seed));
  const double lo = 0.0, hi = kSceneExtent;

  OptimizationRun run;
  Action current{{rng.uniform(lo, hi), rng.uniform(lo, hi)}, rng.uniform(kMinActionRadius, kMaxActionRadius)};
  ActionScore first = score_action(scene, current, reward, library, sim);
  run.history.push_back({current, first.score, true, first.valid});
  double current_score = first.score;
  double temperature = config.initial_temperature;

  for (std::size_t i = 1; i < config.samples; ++i) {
    temperature *= config.cooling;
    Action proposal{{std::clamp(current.position.x + rng.normal(0.0, config.sigma_x), lo, hi),
                     std::clamp(current.position.y + rng.normal(0.0, config.sigma_y), lo, hi)},
                    std::clamp(current.radius + rng.normal(0.0, config.sigma_r), kMinActionRadius, kMaxActionRadius)};
    const ActionScore s = score_action(scene, proposal, reward, library, sim);
    const double delta = s.score - current_score;
    const double u = rng.uniform();
    const bool accept = delta >= 0.0 || u < std::exp(delta / temperature);
    if (accept) {
      current = proposal;
      current_score = s.score;
    }
    run.history.push_back({proposal, s.score, accept, s.valid});
  }
  run.best_index = run.best_within(run.history.size());
  run.best_action = run.history[run.best_index].action;
  run.best_score = run.history[run.best_index].score;
  run.best_trace = score_action(scene, run.best_action, reward, library, sim, true).trace;
  return run;
}

bool success_test(const Trace& trace, Vec2 target, double tolerance) {
  int green = -1;
  for (const SceneObject& o : trace.scene)
    if (o.color == Color::Green) {
      green = o.id;
      break;
    }
  if (green < 0) throw NotFoundError("trace has no green object");
  Vec2 p = trace.find_object(green)->position();
  for (auto it = trace.frames.rbegin(); it != trace.frames.rend(); ++it)
    if (const SceneObject* o = it->find(green)) {
      p = o->position();
      break;
    }
  return distance(p, target) < tolerance;
}

Heatmap export_heatmap(const OptimizationRun& run, std::size_t x_bins, std::size_t y_bins) {
  if (run.history.empty()) throw Error("cannot export a heatmap of an empty run");
  if (x_bins == 0 || y_bins == 0) throw Error("heatmap needs at least one bin per axis");
  Heatmap h{x_bins, y_bins, std::vector<double>(x_bins * y_bins, std::numeric_limits<double>::quiet_NaN())};
  auto bin = [](double v, std::size_t n) {
    const auto b = static_cast<long long>(std::floor(v / kSceneExtent * static_cast<double>(n)));
    return static_cast<std::size_t>(std::clamp<long long>(b, 0, static_cast<long long>(n) - 1));
  };
  for (const AnnealSample& s : run.history) {
    double& cell = h.cells[bin(s.action.position.y, y_bins) * x_bins + bin(s.action.position.x, x_bins)];
    if (std::isnan(cell) || s.score > cell) cell = s.score;
  }
  return h;
}

Json Heatmap::to_json() const {
  Json rows = Json::array();
  for (std::size_t r = 0; r < y_bins; ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < x_bins; ++c) {
      const double v = at(c, r);
      row.push_back(std::isnan(v) ? Json(nullptr) : Json(canonical_double(v)));
    }
    rows.push_back(row);
  }
  return Json{{"x_bins", x_bins}, {"y_bins", y_bins}, {"rows", rows}};
}

std::string Heatmap::to_ppm(int cell_pixels) const {
  const int w = static_cast<int>(x_bins) * cell_pixels;
  const int hgt = static_cast<int>(y_bins) * cell_pixels;
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(hgt) + "\n255\n";
  for (int py = 0; py < hgt; ++py) {
    const std::size_t row = y_bins - 1 - static_cast<std::size_t>(py / cell_pixels);
    for (int px = 0; px < w; ++px) {
      const double v = at(static_cast<std::size_t>(px / cell_pixels), row);
      unsigned char rgb[3] = {40, 40, 40};
      if (!std::isnan(v)) {
        // Dark blue through orange to near white.
        const double t = std::clamp(v, 0.0, 1.0);
        rgb[0] = static_cast<unsigned char>(std::lround(20 + 235 * t));
        rgb[1] = static_cast<unsigned char>(std::lround(20 + 200 * t * t));
        rgb[2] = static_cast<unsigned char>(std::lround(90 + 100 * t * t * t - 60 * t));
      }
      out.append(reinterpret_cast<char*>(rgb), 3);
    }
  }
  return out;
}

}  // namespace simtrace
