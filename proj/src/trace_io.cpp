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

#include "simtrace/trace_io.hpp"

#include <fstream>
#include <sstream>

namespace simtrace {

JsonParseError::JsonParseError(std::size_t offset, const std::string& what)
    : Error("malformed JSON at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

SchemaError::SchemaError(std::string path, std::string expected)
    : Error("schema error at " + path + ": expected " + expected), path_(std::move(path)), expected_(std::move(expected)) {}

namespace {

const Json& member(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "." + key, "present field");
  return *it;
}

double number_at(const Json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "number");
  return j.get<double>();
}

Vec2 vec_at(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw SchemaError(path, "list[float] of length 2");
  return {number_at(j[0], path + "[0]"), number_at(j[1], path + "[1]")};
}

Json vec_json(Vec2 v) { return Json::array({canonical_double(v.x), canonical_double(v.y)}); }

std::string string_at(const Json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "string");
  return j.get<std::string>();
}

}  // namespace

Json object_to_json(const SceneObject& o) {
  Json params = Json::object();
  if (o.kind == ShapeKind::Circle) {
    params["center"] = vec_json(o.center);
    params["radius"] = canonical_double(o.radius);
  } else {
    for (std::size_t k = 0; k < o.polygons.size(); ++k) {
      Json poly = Json::array();
      for (Vec2 v : o.polygons[k]) poly.push_back(vec_json(v));
      params["polygon_" + std::to_string(k)] = std::move(poly);
    }
  }
  return Json{{"description", o.description},
              {"id", o.id},
              {"type", std::string(to_string(o.kind))},
              {"color", std::string(to_string(o.color))},
              {"velocity", vec_json(o.velocity)},
              {"angle", canonical_double(o.angle)},
              {"static", o.is_static},
              {"obj_params", std::move(params)}};
}

SceneObject object_from_json(const Json& j, const std::string& path) {
  SceneObject o;
  o.description = string_at(member(j, "description", path), path + ".description");
  const Json& id = member(j, "id", path);
  if (!id.is_number_integer()) throw SchemaError(path + ".id", "integer");
  o.id = id.get<int>();
  const std::string type = string_at(member(j, "type", path), path + ".type");
  auto kind = shape_from_string(type);
  if (!kind) throw SchemaError(path + ".type", "one of circle, bar, jar, standingsticks (got '" + type + "')");
  o.kind = *kind;
  const std::string color = string_at(member(j, "color", path), path + ".color");
  auto c = color_from_string(color);
  if (!c) throw SchemaError(path + ".color", "one of green, blue, red, black (got '" + color + "')");
  o.color = *c;
  o.velocity = vec_at(member(j, "velocity", path), path + ".velocity");
  o.angle = number_at(member(j, "angle", path), path + ".angle");
  const Json& st = member(j, "static", path);
  if (!st.is_boolean()) throw SchemaError(path + ".static", "bool");
  o.is_static = st.get<bool>();
  const std::string pp = path + ".obj_params";
  const Json& params = member(j, "obj_params", path);
  if (!params.is_object()) throw SchemaError(pp, "object");
  if (o.kind == ShapeKind::Circle) {
    o.center = vec_at(member(params, "center", pp), pp + ".center");
    o.radius = number_at(member(params, "radius", pp), pp + ".radius");
  } else {
    for (std::size_t k = 0;; ++k) {
      const std::string key = "polygon_" + std::to_string(k);
      auto it = params.find(key);
      if (it == params.end()) break;
      const std::string kp = pp + "." + key;
      if (!it->is_array()) throw SchemaError(kp, "list[list[float]]");
      Polygon poly;
      for (std::size_t v = 0; v < it->size(); ++v) poly.push_back(vec_at((*it)[v], kp + "[" + std::to_string(v) + "]"));
      o.polygons.push_back(std::move(poly));
    }
    if (o.polygons.empty()) throw SchemaError(pp + ".polygon_0", "polygon vertex list");
    if (params.size() != o.polygons.size()) throw SchemaError(pp, "only consecutive polygon_<k> keys");
  }
  return o;
}

Json action_to_json(const Action& a) {
  return Json{{"position", vec_json(a.position)}, {"radius", canonical_double(a.radius)}};
}

Action action_from_json(const Json& j, const std::string& path) {
  Action a;
  a.position = vec_at(member(j, "position", path), path + ".position");
  a.radius = number_at(member(j, "radius", path), path + ".radius");
  return a;
}

Json event_to_json(const TraceEvent& e) {
  Json params = Json::object();
  for (const auto& [k, v] : e.parameters) params[k] = canonicalize(v);
  return Json{{"time", canonical_double(e.time)}, {"uid", e.uid}, {"parameters", std::move(params)}};
}

TraceEvent event_from_json(const Json& j, const std::string& path) {
  TraceEvent e;
  e.time = number_at(member(j, "time", path), path + ".time");
  e.uid = string_at(member(j, "uid", path), path + ".uid");
  const Json& params = member(j, "parameters", path);
  if (!params.is_object()) throw SchemaError(path + ".parameters", "object");
  for (auto it = params.begin(); it != params.end(); ++it) e.parameters[it.key()] = it.value();
  return e;
}

Json trace_to_json(const Trace& t) {
  Json objects = Json::array();
  for (const SceneObject& o : t.scene) objects.push_back(object_to_json(o));
  Json frames = Json::array();
  for (const Frame& f : t.frames) {
    Json fo = Json::array();
    for (const SceneObject& o : f.objects) fo.push_back(object_to_json(o));
    frames.push_back(Json{{"time", canonical_double(f.time)}, {"objects", std::move(fo)}});
  }
  Json events = Json::array();
  for (const TraceEvent& e : t.events) events.push_back(event_to_json(e));
  return Json{{"action", action_to_json(t.action)},
              {"scene", Json{{"objects", std::move(objects)}}},
              {"frames", std::move(frames)},
              {"events", std::move(events)}};
}

Trace trace_from_json(const Json& j) {
  Trace t;
  if (!j.is_object()) throw SchemaError("$", "object");
  t.action = action_from_json(member(j, "action", "$"), "action");
  const Json& scene = member(j, "scene", "$");
  const Json& objects = member(scene, "objects", "scene");
  if (!objects.is_array()) throw SchemaError("scene.objects", "list");
  for (std::size_t k = 0; k < objects.size(); ++k)
    t.scene.push_back(object_from_json(objects[k], "scene.objects[" + std::to_string(k) + "]"));
  const Json& frames = member(j, "frames", "$");
  if (!frames.is_array()) throw SchemaError("frames", "list");
  t.frames.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string fp = "frames[" + std::to_string(i) + "]";
    Frame f;
    f.time = number_at(member(frames[i], "time", fp), fp + ".time");
    const Json& fo = member(frames[i], "objects", fp);
    if (!fo.is_array()) throw SchemaError(fp + ".objects", "list");
    for (std::size_t k = 0; k < fo.size(); ++k)
      f.objects.push_back(object_from_json(fo[k], fp + ".objects[" + std::to_string(k) + "]"));
    t.frames.push_back(std::move(f));
  }
  const Json& events = member(j, "events", "$");
  if (!events.is_array()) throw SchemaError("events", "list");
  for (std::size_t i = 0; i < events.size(); ++i)
    t.events.push_back(event_from_json(events[i], "events[" + std::to_string(i) + "]"));
  return t;
}

Json parse_json_text(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw JsonParseError(e.byte, e.what());
  }
}

Trace parse_trace(std::string_view text) { return trace_from_json(parse_json_text(text)); }

std::string serialize_trace(const Trace& trace) { return trace_to_json(trace).dump(); }

Json canonicalize(const Json& j) {
  if (j.is_number_float()) return canonical_double(j.get<double>());
  if (j.is_array()) {
    Json out = Json::array();
    for (const Json& v : j) out.push_back(canonicalize(v));
    return out;
  }
  if (j.is_object()) {
    Json out = Json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = canonicalize(it.value());
    return out;
  }
  return j;
}

std::string canonical_dump(const Json& json) { return canonicalize(json).dump(); }

std::string canonicalize_text(std::string_view text) { return canonical_dump(parse_json_text(text)); }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Trace load_trace(const std::filesystem::path& path) { return parse_trace(read_text_file(path)); }

void save_trace(const Trace& trace, const std::filesystem::path& path) { write_text_file(path, serialize_trace(trace)); }

}  // namespace simtrace
