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

#include <functional>
#include <vector>

#include "simtrace/rng.hpp"
#include "simtrace/scenes.hpp"
#include "simtrace/trace.hpp"

namespace fixtures {

using namespace simtrace;

inline Trace empty_trace(int frames) {
  Trace t;
  t.action = {{128.0, 200.0}, 10.0};
  for (int i = 0; i < frames; ++i) t.frames.push_back({canonical_double(double(i) / (frames - 1)), {}});
  t.frames.back().time = 1.0;
  t.events.push_back({1.0, "TaskComplete", {{"success", false}}});
  return t;
}

/// Trace whose dynamic circles follow `path(id, time)`.
inline Trace moving_circles(const std::vector<SceneObject>& scene, int frames,
                            const std::function<Vec2(int, double)>& path) {
  Trace t = empty_trace(frames);
  t.scene = scene;
  for (Frame& f : t.frames)
    for (const SceneObject& o : scene) {
      if (o.is_static) continue;
      SceneObject s = o;
      const Vec2 p = path(o.id, f.time);
      s.center = {canonical_double(p.x), canonical_double(p.y)};
      f.objects.push_back(s);
    }
  return t;
}

inline void add_contact(Trace& t, double start, double end, int a, int b) {
  Params p{{"a_id", a}, {"b_id", b}, {"contact_points", Json::array()}};
  t.events.insert(t.events.end() - 1, TraceEvent{start, "CollisionStart", p});
  if (end >= 0.0) t.events.insert(t.events.end() - 1, TraceEvent{end, "CollisionEnd", p});
  std::stable_sort(t.events.begin(), t.events.end() - 1,
                   [](const TraceEvent& x, const TraceEvent& y) { return x.time < y.time; });
}

inline SceneObject ball(int id, Color color, Vec2 center, double radius, bool is_static = false) {
  SceneObject o;
  o.id = id;
  o.kind = ShapeKind::Circle;
  o.color = color;
  o.center = center;
  o.radius = radius;
  o.is_static = is_static;
  o.description = SceneObject::make_description(color, ShapeKind::Circle, id);
  return o;
}

/// Collision-vs-no-collision family. A green ball (id 0) slides right; in
/// even-numbered traces a red ball (id 1) sits in its path and the two
/// collide, sending green back. In odd traces the red ball is out of the way.
/// Per-trace jitter is small enough that every contact lands in the same
/// tenth of the trace. With `all_hit` every trace collides, and `spread`
/// widens the jitter of the red ball's position.
inline std::vector<Trace> planted_family(std::uint64_t seed, int count = 10, int frames = 120, bool all_hit = false,
                                         double spread = 2.0) {
  std::vector<Trace> out;
  for (int k = 0; k < count; ++k) {
    Rng rng(mix_seed(seed * 1000 + static_cast<std::uint64_t>(k)));
    const bool hit = all_hit || k % 2 == 0;
    const double x0 = 40.0 + rng.uniform(-2.0, 2.0);
    const double v = 176.0 + rng.uniform(-4.0, 4.0);
    const double xc = 140.0 + rng.uniform(-spread, spread);
    const double yc = hit ? 128.0 : 200.0;
    const double uc = (xc - 16.0 - x0) / v;
    const std::vector<SceneObject> scene{ball(0, Color::Green, {x0, 128.0}, 8.0), ball(1, Color::Red, {xc, yc}, 8.0)};
    Trace t = moving_circles(scene, frames, [&](int id, double u) -> Vec2 {
      if (!hit || u <= uc) return id == 0 ? Vec2{x0 + v * u, 128.0} : Vec2{xc, yc};
      const double after = u - uc;
      return id == 0 ? Vec2{xc - 16.0 - 0.6 * v * after, 128.0} : Vec2{xc + 0.4 * v * after, yc};
    });
    const double dt = 1.0 / (frames - 1);
    for (std::size_t i = 0; i < t.frames.size(); ++i)
      for (SceneObject& o : t.frames[i].objects) {
        const SceneObject* next = i + 1 < t.frames.size() ? t.frames[i + 1].find(o.id) : nullptr;
        const SceneObject* prev = i > 0 ? t.frames[i - 1].find(o.id) : nullptr;
        const Vec2 a = prev ? prev->center : o.center;
        const Vec2 b = next ? next->center : o.center;
        const double span = dt * ((prev ? 1 : 0) + (next ? 1 : 0));
        o.velocity = {canonical_double((b.x - a.x) / span), canonical_double((b.y - a.y) / span)};
      }
    if (hit) {
      const std::size_t f = t.frame_index(uc);
      add_contact(t, t.frames[f].time, t.frames[std::min(f + 2, t.frames.size() - 1)].time, 0, 1);
    }
    t.scene = scene;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace fixtures
