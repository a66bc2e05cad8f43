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

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "simtrace/annotation.hpp"
#include "simtrace/physics.hpp"
#include "simtrace/reward.hpp"

namespace simtrace {

struct AnnealConfig {
  std::size_t samples = 250;
  double initial_temperature = 0.5;
  double cooling = 0.995;
  double sigma_x = 16.0;
  double sigma_y = 16.0;
  double sigma_r = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
  Json to_json() const;
};

struct AnnealSample {
  Action action;
  double score = 0.0;
  bool accepted = false;
  /// False when the placement was rejected by the simulator (score 0).
  bool valid = true;
};

struct OptimizationRun {
  std::vector<AnnealSample> history;
  std::size_t best_index = 0;
  Action best_action;
  double best_score = 0.0;
  std::optional<Trace> best_trace;

  /// Best action among the first `budget` samples.
  std::size_t best_within(std::size_t budget) const;
  Json to_json() const;
};

/// Score of one action: simulate, annotate with the library, partial credit.
/// Rejected placements and diverged rollouts score 0.
struct ActionScore {
  double score = 0.0;
  bool valid = true;
  std::optional<Trace> trace;
};
ActionScore score_action(const Scene& scene, const Action& action, const RewardProgram& reward,
                         const PatternLibrary& library, const SimConfig& sim, bool keep_trace = false);

/// Fails with RewardValidationError when the reward names unknown events.
void check_reward_identifiers(const RewardProgram& reward, const PatternLibrary& library);

OptimizationRun anneal(const Scene& scene, const RewardProgram& reward, const PatternLibrary& library,
                       const AnnealConfig& config, const SimConfig& sim = {});

/// Green object's final position strictly within `tolerance` of the target.
bool success_test(const Trace& trace, Vec2 target, double tolerance = 10.0);

struct Heatmap {
  std::size_t x_bins = 0;
  std::size_t y_bins = 0;
  /// Row-major from the bottom row; NaN marks unvisited cells.
  std::vector<double> cells;

  double at(std::size_t col, std::size_t row) const { return cells[row * x_bins + col]; }
  Json to_json() const;
  /// Binary PPM, brighter is higher, unvisited cells dark grey; top row = high y.
  std::string to_ppm(int cell_pixels = 8) const;
};

Heatmap export_heatmap(const OptimizationRun& run, std::size_t x_bins = 32, std::size_t y_bins = 32);

}  // namespace simtrace
