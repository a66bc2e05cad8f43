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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "simtrace/physics.hpp"

namespace simtrace {

/// Template id, generator overrides (object sizes, gaps, counts) and variant seed.
struct SceneTemplate {
  std::string id;
  Json parameters = Json::object();
  std::uint64_t seed = 0;
};

class UnknownTemplateError : public Error {
 public:
  using Error::Error;
};

std::vector<std::string> template_ids();

/// Deterministic in (id, parameters, seed). Jars and standingsticks are built
/// from convex parts.
Scene build_scene(const SceneTemplate& spec);

// Shape builders shared by templates and tests.
SceneObject make_circle(int id, Color color, Vec2 center, double radius, bool is_static);
SceneObject make_bar(int id, Color color, Vec2 center, double width, double height, double angle, bool is_static);
/// Open-top container resting on `bottom_center`.
SceneObject make_jar(int id, Color color, Vec2 bottom_center, double width, double height, double wall,
                     bool is_static);
SceneObject make_standingsticks(int id, Color color, Vec2 bottom_center, double width, double height, double thickness,
                                bool is_static);

/// Searches quantized then random actions for one whose rollout succeeds.
std::optional<Action> find_solution(const Scene& scene, const SimConfig& config, std::uint64_t seed,
                                    int random_budget = 400);

/// Writes frame_00000.ppm ... into `out_dir`; returns the number written.
std::size_t render_frames(const Trace& trace, const std::filesystem::path& out_dir, int size = 256);

/// Binary PPM (P6) of one frame, objects filled in their colors on white.
std::string render_frame_ppm(const Trace& trace, std::size_t frame, int size = 256);

}  // namespace simtrace
