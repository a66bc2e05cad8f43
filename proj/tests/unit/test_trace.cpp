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

#include <doctest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "simtrace/rng.hpp"
#include "simtrace/trace_io.hpp"

using namespace simtrace;

namespace {

bool has_rule(const ValidationReport& r, const std::string& rule) {
  return std::any_of(r.violations.begin(), r.violations.end(), [&](const Violation& v) { return v.rule == rule; });
}

// Independent restatement of the trace invariants.
bool oracle_valid(const Trace& t) {
  if (t.frames.size() < 2) return false;
  if (t.frames.front().time != 0.0 || t.frames.back().time != 1.0) return false;
  for (std::size_t i = 1; i < t.frames.size(); ++i)
    if (t.frames[i].time < t.frames[i - 1].time) return false;
  for (const Frame& f : t.frames)
    for (const SceneObject& o : f.objects) {
      const SceneObject* s = t.find_object(o.id);
      if (!s || s->is_static) return false;
    }
  if (t.events.empty() || t.events.back().uid != "TaskComplete") return false;
  for (std::size_t i = 1; i < t.events.size(); ++i)
    if (t.events[i].time < t.events[i - 1].time) return false;
  std::set<std::pair<int, int>> open;
  for (const TraceEvent& e : t.events) {
    if (e.uid == "TaskComplete") continue;
    const std::pair key{std::min(e.parameters.at("a_id").get<int>(), e.parameters.at("b_id").get<int>()),
                        std::max(e.parameters.at("a_id").get<int>(), e.parameters.at("b_id").get<int>())};
    if (e.uid == "CollisionStart" && !open.insert(key).second) return false;
    if (e.uid == "CollisionEnd" && open.erase(key) == 0) return false;
  }
  return true;
}

Trace random_trace(Rng& rng) {
  std::vector<SceneObject> scene;
  const int n = 1 + static_cast<int>(rng.index(4));
  for (int id = 0; id < n; ++id) {
    const Color c = static_cast<Color>(rng.index(4));
    if (rng.coin()) {
      scene.push_back(make_circle(id, c, {rng.uniform(10, 240), rng.uniform(10, 240)}, rng.uniform(4, 20), rng.coin(0.3)));
    } else {
      scene.push_back(make_bar(id, c, {rng.uniform(30, 220), rng.uniform(30, 220)}, rng.uniform(10, 60), rng.uniform(4, 10),
                               rng.uniform(-1, 1), rng.coin(0.3)));
    }
  }
  const int frames = 2 + static_cast<int>(rng.index(6));
  Trace t = fixtures::empty_trace(frames);
  t.scene = scene;
  t.action = {{canonical_double(rng.uniform(0, 256)), canonical_double(rng.uniform(0, 256))},
              canonical_double(rng.uniform(4, 32))};
  for (Frame& f : t.frames)
    for (const SceneObject& o : scene)
      if (!o.is_static) {
        SceneObject s = o;
        s.velocity = {canonical_double(rng.normal(0, 30)), canonical_double(rng.normal(0, 30))};
        s.angle = canonical_double(rng.normal());
        f.objects.push_back(s);
      }
  if (n >= 2 && rng.coin()) fixtures::add_contact(t, 0.25, rng.coin() ? 0.5 : -1.0, 0, 1);
  t.events.back().parameters["success"] = rng.coin();
  return t;
}

}  // namespace

TEST_CASE("validate_trace: minimal trace and named violations") {
  Trace t = fixtures::empty_trace(2);
  CHECK(validate_trace(t).ok());

  Trace bad_final = fixtures::moving_circles({make_circle(0, Color::Green, {50, 50}, 5, false),
                                              make_circle(1, Color::Blue, {60, 50}, 5, false)},
                                             5, [](int, double) { return Vec2{50, 50}; });
  bad_final.events = {{0.1, "CollisionStart", {{"a_id", 0}, {"b_id", 1}, {"contact_points", Json::array()}}},
                      {0.5, "CollisionEnd", {{"a_id", 0}, {"b_id", 1}, {"contact_points", Json::array()}}}};
  CHECK(has_rule(validate_trace(bad_final), "final event must be TaskComplete"));

  Trace nonmono = fixtures::empty_trace(6);
  nonmono.frames[3].time = 0.2;  // frames[2] is 0.4
  auto report = validate_trace(nonmono);
  CHECK(has_rule(report, "non-monotone frame time at index 3"));
  CHECK(report.violations.front().index == std::optional<std::size_t>(3));
}

TEST_CASE("validate_trace agrees with an independent checker on perturbed traces") {
  Rng rng(11);
  int mismatches = 0;
  for (int k = 0; k < 400; ++k) {
    Trace t = random_trace(rng);
    switch (rng.index(6)) {
      case 0: if (t.frames.size() > 2) std::swap(t.frames[1].time, t.frames[2].time); break;
      case 1: t.events.push_back({0.9, "CollisionEnd", {{"a_id", 0}, {"b_id", 1}, {"contact_points", Json::array()}}}); break;
      case 2: t.frames.back().time = 0.99; break;
      case 3: if (!t.scene.empty()) t.scene[0].is_static = true; break;
      default: break;
    }
    if (validate_trace(t).ok() != oracle_valid(t)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("parse_trace: circle params, schema errors, malformed JSON") {
  const Json obj = Json::parse(R"({"description":"green-circle-2","id":2,"type":"circle","color":"green",
    "velocity":[0,0],"angle":0,"static":false,"obj_params":{"center":[100.0,150.0],"radius":10.0}})");
  SceneObject o = object_from_json(obj, "objects[0]");
  CHECK(o.kind == ShapeKind::Circle);
  CHECK(o.center == Vec2{100.0, 150.0});
  CHECK(o.radius == 10.0);

  for (const char* kind : {"triangle", "Circle", "", "ball", "square", "polygon"}) {
    Json bad = obj;
    bad["type"] = kind;
    Trace t = fixtures::empty_trace(2);
    Json doc = trace_to_json(t);
    doc["scene"]["objects"] = Json::array({bad});
    try {
      trace_from_json(doc);
      FAIL("accepted shape kind " << kind);
    } catch (const SchemaError& e) {
      CHECK(e.path() == "scene.objects[0].type");
    }
  }
  for (const char* color : {"gray", "purple", "GREEN"}) {
    Json bad = obj;
    bad["color"] = color;
    CHECK_THROWS_AS(object_from_json(bad, "o"), SchemaError);
  }
  try {
    parse_trace("{\"action\": [1, 2,");
    FAIL("malformed JSON accepted");
  } catch (const JsonParseError& e) {
    CHECK(e.offset() > 0);
  }
}

TEST_CASE("serialize/parse round trip on 1000 random traces") {
  Rng rng(2024);
  for (int k = 0; k < 1000; ++k) {
    const Trace t = random_trace(rng);
    const std::string text = serialize_trace(t);
    const Trace back = parse_trace(text);
    REQUIRE(back == t);
    CHECK(serialize_trace(back) == text);
    CHECK(canonicalize_text(text) == text);
  }
}

TEST_CASE("canonicalize fixes float precision and key order") {
  const std::string doc = R"({"b":0.1234567891234,"a":[1.0000000001,2]})";
  CHECK(canonicalize_text(doc) == R"({"a":[1.0,2],"b":0.123456789})");
}

TEST_CASE("object_lookup") {
  std::vector<SceneObject> scene{make_bar(1, Color::Blue, {50, 50}, 20, 5, 0, true),
                                 make_circle(2, Color::Green, {80, 80}, 5, false),
                                 make_circle(8, Color::Red, {10, 100}, 5, false)};
  CHECK(object_lookup(scene, "green", "circle") == 2);
  CHECK(object_lookup(scene, "red", "any") == 8);
  CHECK(object_lookup(scene, "any", "any") == 1);
  CHECK_THROWS_AS(object_lookup(scene, "black", "jar"), NotFoundError);
  std::reverse(scene.begin(), scene.end());
  CHECK(object_lookup(scene, "any", "circle") == 2);
}
