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

#include "simtrace/trace.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

namespace simtrace {

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Circle: return "circle";
    case ShapeKind::Bar: return "bar";
    case ShapeKind::Jar: return "jar";
    case ShapeKind::StandingSticks: return "standingsticks";
  }
  return "circle";
}

std::string_view to_string(Color color) {
  switch (color) {
    case Color::Red: return "red";
    case Color::Green: return "green";
    case Color::Blue: return "blue";
    case Color::Black: return "black";
  }
  return "black";
}

std::optional<ShapeKind> shape_from_string(std::string_view text) {
  for (ShapeKind k : {ShapeKind::Circle, ShapeKind::Bar, ShapeKind::Jar, ShapeKind::StandingSticks})
    if (to_string(k) == text) return k;
  return std::nullopt;
}

std::optional<Color> color_from_string(std::string_view text) {
  for (Color c : {Color::Red, Color::Green, Color::Blue, Color::Black})
    if (to_string(c) == text) return c;
  return std::nullopt;
}

Vec2 SceneObject::position() const {
  if (kind == ShapeKind::Circle) return center;
  double total = 0.0;
  Vec2 acc;
  Vec2 vertex_sum;
  std::size_t vertex_count = 0;
  for (const Polygon& poly : polygons) {
    double area = 0.0;
    Vec2 c;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2 a = poly[i];
      const Vec2 b = poly[(i + 1) % poly.size()];
      const double w = cross(a, b);
      area += w;
      c += w * (a + b);
      vertex_sum += a;
      ++vertex_count;
    }
    area *= 0.5;
    if (std::abs(area) > 1e-12) {
      acc += (1.0 / 6.0) * c;  // area * centroid of this part
      total += area;
    }
  }
  if (std::abs(total) > 1e-12) return (1.0 / total) * acc;
  if (vertex_count == 0) return {};
  return (1.0 / static_cast<double>(vertex_count)) * vertex_sum;
}

std::string SceneObject::make_description(Color color, ShapeKind kind, int id) {
  std::string out{to_string(color)};
  out += '-';
  out += to_string(kind);
  out += '-';
  out += std::to_string(id);
  return out;
}

const SceneObject* Frame::find(int id) const {
  for (const SceneObject& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

bool is_builtin_uid(std::string_view uid) {
  return uid == event_uid::kCollisionStart || uid == event_uid::kCollisionEnd || uid == event_uid::kTaskComplete;
}

const SceneObject* Trace::find_object(int id) const {
  for (const SceneObject& o : scene)
    if (o.id == id) return &o;
  return nullptr;
}

std::size_t Trace::frame_index(double time) const {
  if (frames.empty()) return 0;
  const double n = static_cast<double>(frames.size() - 1);
  const double clamped = std::clamp(time, 0.0, 1.0);
  return static_cast<std::size_t>(std::llround(clamped * n));
}

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream out;
  for (const Violation& v : violations) {
    out << v.field;
    if (v.index) out << "[" << *v.index << "]";
    out << ": " << v.rule << "\n";
  }
  return out.str();
}

namespace {

constexpr double kCoordinateLimit = 1024.0;

bool vec_ok(Vec2 v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::abs(v.x) <= kCoordinateLimit &&
         std::abs(v.y) <= kCoordinateLimit;
}

void check_object(const SceneObject& o, const std::string& field, std::vector<Violation>& out) {
  auto add = [&](std::string rule) { out.push_back({field, std::nullopt, std::move(rule)}); };
  if (o.description != SceneObject::make_description(o.color, o.kind, o.id))
    add("description must encode color-shape-id (expected " + SceneObject::make_description(o.color, o.kind, o.id) + ")");
  if (!vec_ok(o.velocity)) add("velocity must be finite and within [-1024, 1024]");
  if (!std::isfinite(o.angle)) add("angle must be finite");
  if (o.kind == ShapeKind::Circle) {
    if (!vec_ok(o.center)) add("center must be finite and within [-1024, 1024]");
    if (!(o.radius > 0.0) || !std::isfinite(o.radius)) add("circle radius must be positive");
    if (!o.polygons.empty()) add("circles must not carry polygons");
  } else {
    if (o.polygons.empty()) add("non-circle objects need at least one polygon");
    for (const Polygon& p : o.polygons) {
      if (p.size() < 3) add("polygons need at least 3 vertices");
      for (Vec2 v : p)
        if (!vec_ok(v)) {
          add("polygon vertices must be finite and within [-1024, 1024]");
          break;
        }
    }
  }
}

bool is_integer(const Json& j) { return j.is_number_integer() || j.is_number_unsigned(); }

}  // namespace

ValidationReport validate_trace(const Trace& trace, const ValidationOptions& options) {
  ValidationReport report;
  auto& out = report.violations;
  auto add = [&](std::string field, std::optional<std::size_t> index, std::string rule) {
    out.push_back({std::move(field), index, std::move(rule)});
  };

  const Action& a = trace.action;
  if (!(a.radius >= kMinActionRadius && a.radius <= kMaxActionRadius)) add("action.radius", std::nullopt, "radius must lie in [4, 32]");
  if (!(a.position.x >= 0.0 && a.position.x <= kSceneExtent && a.position.y >= 0.0 && a.position.y <= kSceneExtent))
    add("action.position", std::nullopt, "position must lie in [0, 256]^2");

  std::map<int, const SceneObject*> by_id;
  for (std::size_t k = 0; k < trace.scene.size(); ++k) {
    const SceneObject& o = trace.scene[k];
    check_object(o, "scene.objects[" + std::to_string(k) + "]", out);
    if (!by_id.emplace(o.id, &o).second) add("scene.objects", k, "duplicate object id " + std::to_string(o.id));
  }

  const std::size_t n = trace.frames.size();
  if (n < 2) add("frames", std::nullopt, "a trace needs at least 2 frames");
  for (std::size_t i = 0; i < n; ++i) {
    const Frame& f = trace.frames[i];
    if (!(f.time >= 0.0 && f.time <= 1.0)) add("frames", i, "frame time outside [0, 1]");
    if (i > 0 && f.time < trace.frames[i - 1].time) add("frames", i, "non-monotone frame time at index " + std::to_string(i));
    for (std::size_t k = 0; k < f.objects.size(); ++k) {
      const SceneObject& o = f.objects[k];
      const std::string field = "frames[" + std::to_string(i) + "].objects[" + std::to_string(k) + "]";
      check_object(o, field, out);
      auto it = by_id.find(o.id);
      if (it == by_id.end()) {
        add(field, std::nullopt, "object id " + std::to_string(o.id) + " is not in the scene");
      } else if (it->second->is_static || o.is_static) {
        add(field, std::nullopt, "frames list dynamic objects only; id " + std::to_string(o.id) + " is static");
      }
    }
  }
  if (n >= 1 && trace.frames.front().time != 0.0) add("frames", std::size_t{0}, "first frame time must be 0");
  if (n >= 2 && trace.frames.back().time != 1.0) add("frames", n - 1, "last frame time must be 1");

  std::set<std::string> allowed(options.extra_uids.begin(), options.extra_uids.end());
  std::set<std::pair<int, int>> open;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const TraceEvent& e = trace.events[i];
    if (!(e.time >= 0.0 && e.time <= 1.0)) add("events", i, "event time outside [0, 1]");
    if (i > 0 && e.time < trace.events[i - 1].time) add("events", i, "non-monotone event time at index " + std::to_string(i));
    const bool collision = e.uid == event_uid::kCollisionStart || e.uid == event_uid::kCollisionEnd;
    if (collision) {
      const auto ai = e.parameters.find("a_id");
      const auto bi = e.parameters.find("b_id");
      const auto cp = e.parameters.find("contact_points");
      if (ai == e.parameters.end() || !is_integer(ai->second) || bi == e.parameters.end() || !is_integer(bi->second)) {
        add("events", i, "collision events need integer a_id and b_id");
        continue;
      }
      if (cp == e.parameters.end() || !cp->second.is_array()) add("events", i, "collision events need a contact_points list");
      int x = ai->second.get<int>();
      int y = bi->second.get<int>();
      const std::pair<int, int> key{std::min(x, y), std::max(x, y)};
      if (e.uid == event_uid::kCollisionStart) {
        if (!open.insert(key).second) add("events", i, "CollisionStart for an already open pair");
      } else if (open.erase(key) == 0) {
        add("events", i, "CollisionEnd without a matching CollisionStart");
      }
    } else if (e.uid == event_uid::kTaskComplete) {
      const auto s = e.parameters.find("success");
      if (s == e.parameters.end() || !s->second.is_boolean()) add("events", i, "TaskComplete needs a boolean success parameter");
      if (i + 1 != trace.events.size()) add("events", i, "TaskComplete must be the final event");
    } else if (!allowed.contains(e.uid)) {
      add("events", i, "unknown event uid '" + e.uid + "'");
    }
  }
  if (trace.events.empty() || trace.events.back().uid != event_uid::kTaskComplete)
    add("events", trace.events.empty() ? std::nullopt : std::optional<std::size_t>(trace.events.size() - 1),
        "final event must be TaskComplete");
  return report;
}

int object_lookup(const std::vector<SceneObject>& scene, std::string_view color, std::string_view shape) {
  const bool any_color = color == "any";
  const bool any_shape = shape == "any";
  std::optional<int> best;
  for (const SceneObject& o : scene) {
    if (!any_color && to_string(o.color) != color) continue;
    if (!any_shape && to_string(o.kind) != shape) continue;
    if (!best || o.id < *best) best = o.id;
  }
  if (!best)
    throw NotFoundError("no object with color '" + std::string(color) + "' and shape '" + std::string(shape) + "'");
  return *best;
}

double canonical_double(double value) {
  if (!std::isfinite(value) || value == 0.0) return value == 0.0 ? 0.0 : value;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return std::strtod(buf, nullptr);
}

}  // namespace simtrace
