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

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "simtrace/error.hpp"

namespace simtrace {

using Json = nlohmann::json;

/// Scene extent in scene units; the scene spans [0, kSceneExtent]^2 with y up.
inline constexpr double kSceneExtent = 256.0;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline Vec2 cross(double s, Vec2 a) { return {-s * a.y, s * a.x}; }
inline Vec2 cross(Vec2 a, double s) { return {s * a.y, -s * a.x}; }
inline double length(Vec2 a) { return std::sqrt(dot(a, a)); }
inline double distance(Vec2 a, Vec2 b) { return length(a - b); }
inline Vec2 lerp(Vec2 a, Vec2 b, double t) { return a + t * (b - a); }

enum class ShapeKind { Circle, Bar, Jar, StandingSticks };
enum class Color { Red, Green, Blue, Black };

std::string_view to_string(ShapeKind kind);
std::string_view to_string(Color color);
std::optional<ShapeKind> shape_from_string(std::string_view text);
std::optional<Color> color_from_string(std::string_view text);

/// Reserved ids of the implicit boundary bodies.
namespace body_id {
inline constexpr int kFloor = -1;
inline constexpr int kLeftWall = -2;
inline constexpr int kRightWall = -3;
inline constexpr int kTopWall = -4;
}  // namespace body_id

inline bool is_boundary(int id) { return id <= body_id::kFloor && id >= body_id::kTopWall; }
inline bool is_wall(int id) { return id <= body_id::kLeftWall && id >= body_id::kTopWall; }

using Polygon = std::vector<Vec2>;

/// One object as it appears in a scene listing or a frame. Circles carry
/// center/radius; every other kind carries world-space convex polygons.
struct SceneObject {
  std::string description;
  int id = 0;
  ShapeKind kind = ShapeKind::Circle;
  Color color = Color::Black;
  Vec2 velocity;
  double angle = 0.0;
  bool is_static = false;
  Vec2 center;  // circles only
  double radius = 0.0;  // circles only
  std::vector<Polygon> polygons;  // non-circles only

  /// Circle center, or the area-weighted centroid of the polygons.
  Vec2 position() const;

  static std::string make_description(Color color, ShapeKind kind, int id);

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Action {
  Vec2 position;
  double radius = 0.0;

  friend bool operator==(const Action&, const Action&) = default;
};

inline constexpr double kMinActionRadius = 4.0;
inline constexpr double kMaxActionRadius = 32.0;

struct Frame {
  double time = 0.0;
  std::vector<SceneObject> objects;  // dynamic objects only

  const SceneObject* find(int id) const;

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Event parameters keep their JSON shape (number, text, bool or list).
using Params = std::map<std::string, Json>;

namespace event_uid {
inline constexpr std::string_view kCollisionStart = "CollisionStart";
inline constexpr std::string_view kCollisionEnd = "CollisionEnd";
inline constexpr std::string_view kTaskComplete = "TaskComplete";
}  // namespace event_uid

bool is_builtin_uid(std::string_view uid);

struct TraceEvent {
  double time = 0.0;
  std::string uid;
  Params parameters;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct Trace {
  Action action;
  std::vector<SceneObject> scene;
  std::vector<Frame> frames;
  std::vector<TraceEvent> events;

  std::size_t length() const { return frames.size(); }
  const SceneObject* find_object(int id) const;

  /// Frame index nearest to a normalized time.
  std::size_t frame_index(double time) const;

  friend bool operator==(const Trace&, const Trace&) = default;
};

struct Violation {
  std::string field;
  std::optional<std::size_t> index;
  std::string rule;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

struct ValidationOptions {
  /// Event uids accepted besides the three built-ins.
  std::vector<std::string> extra_uids;
};

ValidationReport validate_trace(const Trace& trace, const ValidationOptions& options = {});

/// Lowest id matching both filters; "any" matches everything.
int object_lookup(const std::vector<SceneObject>& scene, std::string_view color, std::string_view shape);

/// Round to nine significant digits, the precision used on disk.
double canonical_double(double value);

}  // namespace simtrace
