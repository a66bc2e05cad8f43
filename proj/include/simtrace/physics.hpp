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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simtrace/trace.hpp"

namespace simtrace {

/// Integration and material constants. Units are scene units and simulation
/// time units; the recorded trace normalizes time to [0, 1].
struct SimConfig {
  double gravity = 9.8 * 25.6;  // 25.6 scene units per metre
  double duration = 5.0;
  int timestep_count = 300;  // recorded frames, including the initial state
  double restitution = 0.2;
  double friction = 0.5;
  /// Integration steps per recorded frame. Contact events are resolved per
  /// frame; with one substep every CollisionStart frame shows the pair touching.
  int substeps = 1;
  int velocity_iterations = 12;
  int position_iterations = 4;
  double restitution_threshold = 20.0;
  double density = 1.0;

  /// Throws Error when a field is out of range.
  void validate() const;
};

Json sim_config_to_json(const SimConfig& config);
SimConfig sim_config_from_json(const Json& json);

/// An initial arrangement: one green object, one blue object, no red object,
/// any number of black objects. Optional metadata is carried alongside.
struct Scene {
  std::string template_id;
  std::uint64_t seed = 0;
  std::vector<SceneObject> objects;
  std::optional<Action> solution;
  std::map<std::string, Vec2> targets;

  friend bool operator==(const Scene&, const Scene&) = default;
};

Json scene_to_json(const Scene& scene);
Scene scene_from_json(const Json& json);
std::string serialize_scene(const Scene& scene);
Scene parse_scene(std::string_view text);

class InvalidPlacementError : public Error {
 public:
  using Error::Error;
};

/// Raised when the integrator produces non-finite or runaway state.
class SimulationError : public Error {
 public:
  using Error::Error;
};

/// Contact is reported when the separation is at most this many scene units.
inline constexpr double kTouchTolerance = 0.25;

/// Adds the red ball, integrates, and records frames and contact events.
Trace simulate(const Scene& scene, const Action& action, const SimConfig& config = {});

/// Throws InvalidPlacementError when the ball would start inside geometry.
void check_placement(const Scene& scene, const Action& action);

/// Green-blue contact still open at the final frame, judged from the event list.
bool task_success(const Trace& trace);

/// Bin centres over x, y in [0, 256] and r in [4, 32]; x outermost, r innermost.
std::vector<Action> quantize_actions(int x_bins, int y_bins, int r_bins);

/// Total kinetic (linear + angular) plus potential energy of dynamic objects in
/// one frame, using the simulator's density and gravity. Used by sanity checks.
double frame_energy(const Trace& trace, std::size_t frame, const SimConfig& config);

/// Mass and rotational inertia of an object at the given density.
struct MassProperties {
  double mass = 0.0;
  double inertia = 0.0;
  Vec2 centroid;
};
MassProperties mass_properties(const SceneObject& object, double density);

/// The four boundary boxes as static polygons, keyed by reserved id.
std::vector<std::pair<int, Polygon>> boundary_polygons();

}  // namespace simtrace
