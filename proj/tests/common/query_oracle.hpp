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

// Second implementation of the question templates, working from contact
// intervals rather than per-frame flags, plus a random mini-trace generator.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "simtrace/annotation.hpp"
#include "simtrace/scenes.hpp"
#include "simtrace/trace.hpp"

namespace query_oracle {

using namespace simtrace;

struct Interval {
  int a, b;          // a < b
  std::size_t from;  // first covered frame
  std::size_t to;    // one past the last covered frame
};

inline std::size_t nearest_frame(const Trace& t, double time) {
  const double n = static_cast<double>(t.frames.size() - 1);
  return static_cast<std::size_t>(std::llround(std::min(1.0, std::max(0.0, time)) * n));
}

inline std::vector<Interval> intervals(const Trace& t) {
  std::vector<Interval> open, done;
  for (const TraceEvent& e : t.events) {
    const bool start = e.uid == "CollisionStart";
    if (!start && e.uid != "CollisionEnd") continue;
    int a = e.parameters.at("a_id").get<int>(), b = e.parameters.at("b_id").get<int>();
    if (a > b) std::swap(a, b);
    const std::size_t f = nearest_frame(t, e.time);
    if (start) {
      open.erase(std::remove_if(open.begin(), open.end(), [&](const Interval& i) { return i.a == a && i.b == b; }),
                 open.end());
      open.push_back({a, b, f, f});
      continue;
    }
    for (auto it = open.begin(); it != open.end(); ++it)
      if (it->a == a && it->b == b) {
        done.push_back({a, b, it->from, f});
        open.erase(it);
        break;
      }
  }
  for (Interval i : open) {
    i.to = t.frames.size();
    done.push_back(i);
  }
  return done;
}

inline bool involves(const Interval& i, int id) { return i.a == id || i.b == id; }
inline int other(const Interval& i, int id) { return i.a == id ? i.b : i.a; }

/// Interval covers some frame at or after `s`.
inline bool reaches(const Interval& i, std::size_t s) { return std::max(i.from, s) < i.to; }

inline int lowest_of(const Trace& t, const std::string& color) {
  std::optional<int> best;
  for (const SceneObject& o : t.scene)
    if (to_string(o.color) == color && (!best || o.id < *best)) best = o.id;
  return best ? *best : -1000;
}

inline bool dynamic(const Trace& t, int id) {
  if (id < 0) return false;
  const SceneObject* o = t.find_object(id);
  return o && !o->is_static;
}

inline double speed(const Trace& t, int id, std::size_t f) {
  const SceneObject* o = t.frames[f].find(id);
  return o ? std::hypot(o->velocity.x, o->velocity.y) : 0.0;
}

inline Vec2 where(const Trace& t, int id, std::size_t f) {
  for (std::size_t k = f + 1; k-- > 0;)
    if (const SceneObject* o = t.frames[k].find(id)) return o->position();
  return t.find_object(id)->position();
}

/// C1: distinct partners over frames whose time lies in [t0, t1].
inline std::size_t c1(const Trace& t, int c, double t0, double t1) {
  std::set<int> partners;
  for (const Interval& i : intervals(t)) {
    if (!involves(i, c)) continue;
    for (std::size_t f = i.from; f < i.to; ++f)
      if (t.frames[f].time >= t0 && t.frames[f].time <= t1) {
        partners.insert(other(i, c));
        break;
      }
  }
  return partners.size();
}

/// Answer of a yes/no template, or nullopt when the question is ill-posed.
inline std::optional<bool> yes_no(const std::string& id, const Json& args, const Trace& t,
                                  const AnnotationMatrix* ast, double threshold = 0.5) {
  const double split = args.at("split").get<double>();
  std::size_t s = 0;
  while (s < t.frames.size() && t.frames[s].time <= split) ++s;
  const auto col = [&](const char* k) { return lowest_of(t, args.at(k).get<std::string>()); };
  const auto iv = intervals(t);
  const auto pair_after = [&](int x, int y) {
    for (const Interval& i : iv)
      if (involves(i, x) && involves(i, y) && x != y && reaches(i, s)) return true;
    return false;
  };
  const auto quiet = [&](std::size_t f) {
    for (const SceneObject& o : t.frames[f].objects)
      if (dynamic(t, o.id) && speed(t, o.id, f) > threshold) return false;
    return true;
  };

  if (id == "C18") return pair_after(col("color"), col("color2"));
  if (id == "C19" || id == "C20") {
    const int c = col("color"), target = lowest_of(t, id == "C19" ? "green" : "blue");
    if (c == target || target == -1000) return std::nullopt;
    return pair_after(c, target);
  }
  if (id == "C21") {
    for (const Interval& i : iv)
      for (std::size_t f = std::max(i.from, s); f < i.to; ++f)
        if (dynamic(t, i.a) && dynamic(t, i.b) && speed(t, i.a, f) > threshold && speed(t, i.b, f) > threshold)
          return true;
    return false;
  }
  if (id == "C22") {
    const std::string p = args.at("pattern").get<std::string>();
    for (const AnnotatedEvent& e : ast->events)
      if (e.uid == p && e.time > split) return true;
    return false;
  }
  if (id == "C23") {
    const int c = col("color");
    bool before = false, after = false;
    for (const Interval& i : iv) {
      if (!involves(i, c) || other(i, c) != -1 || i.from >= i.to) continue;
      before = before || i.from < s;
      after = after || reaches(i, s);
    }
    return !before && after;
  }
  if (id == "C24") {
    const int c = col("color");
    for (const Interval& i : iv)
      if (involves(i, c) && other(i, c) <= -2 && other(i, c) >= -4 && reaches(i, s)) return true;
    return false;
  }
  if (id == "C25" || id == "C26") {
    const bool vertical = id == "C25";
    const int ref = lowest_of(t, vertical ? "green" : "blue");
    if (ref == -1000) return std::nullopt;
    const Vec2 r = t.find_object(ref)->position();
    const int c = col("color");
    for (std::size_t f = std::max<std::size_t>(s, 1); f < t.frames.size(); ++f) {
      const double p0 = vertical ? where(t, c, f - 1).x - r.x : where(t, c, f - 1).y - r.y;
      const double p1 = vertical ? where(t, c, f).x - r.x : where(t, c, f).y - r.y;
      if ((p0 < 0.0) != (p1 < 0.0)) return true;
    }
    return false;
  }
  if (id == "C27") {
    for (std::size_t f = s; f < t.frames.size(); ++f)
      if (quiet(f)) return true;
    return false;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Every template

inline bool touches_at(const std::vector<Interval>& iv, int id, std::size_t f, const std::function<bool(int)>& partner) {
  for (const Interval& i : iv)
    if (involves(i, id) && i.from <= f && f < i.to && partner(other(i, id))) return true;
  return false;
}

inline double share(const Trace& t, const std::function<bool(std::size_t)>& pred) {
  int c = 0;
  for (std::size_t f = 0; f < t.frames.size(); ++f) c += pred(f) ? 1 : 0;
  return 100.0 * c / static_cast<double>(t.frames.size());
}

/// Separating-axis test of a segment against a convex polygon.
inline bool segment_hits_convex(Vec2 a, Vec2 b, const Polygon& poly) {
  std::vector<Vec2> axes{{-(b.y - a.y), b.x - a.x}};
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 e = poly[(i + 1) % poly.size()] - poly[i];
    axes.push_back({-e.y, e.x});
  }
  for (const Vec2& ax : axes) {
    const double s0 = a.x * ax.x + a.y * ax.y, s1 = b.x * ax.x + b.y * ax.y;
    double lo = 1e300, hi = -1e300;
    for (const Vec2& p : poly) {
      const double v = p.x * ax.x + p.y * ax.y;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (std::max(s0, s1) < lo || std::min(s0, s1) > hi) return false;
  }
  return true;
}

inline bool segment_hits(const SceneObject& o, Vec2 a, Vec2 b) {
  if (o.kind == ShapeKind::Circle) {
    // closest approach of the segment to the centre
    const Vec2 d = b - a;
    const double L = d.x * d.x + d.y * d.y;
    double u = L > 0 ? ((o.center.x - a.x) * d.x + (o.center.y - a.y) * d.y) / L : 0.0;
    u = std::min(1.0, std::max(0.0, u));
    return std::hypot(a.x + u * d.x - o.center.x, a.y + u * d.y - o.center.y) <= o.radius;
  }
  for (const Polygon& p : o.polygons)
    if (segment_hits_convex(a, b, p)) return true;
  return false;
}

/// Recount of any template; nullopt when the question is ill-posed.
inline std::optional<Json> recount(const std::string& id, const Json& args, const Trace& t,
                                   const AnnotationMatrix* ast, double threshold = 0.5) {
  const auto iv = intervals(t);
  const auto col = [&](const char* k) { return lowest_of(t, args.at(k).get<std::string>()); };
  const auto moving = [&](int o, std::size_t f) { return dynamic(t, o) && speed(t, o, f) > threshold; };
  const auto any = [](int) { return true; };
  if (args.contains("color") && col("color") == -1000) return std::nullopt;
  if (args.contains("color2") && col("color2") == -1000) return std::nullopt;
  // a pattern question needs the pattern among the annotation's uids
  if (args.contains("pattern") &&
      (!ast || std::find(ast->uids.begin(), ast->uids.end(), args.at("pattern").get<std::string>()) == ast->uids.end()))
    return std::nullopt;

  if (std::stoi(id.substr(1)) >= 18) {
    const auto yn = yes_no(id, args, t, ast, threshold);
    return yn ? std::optional<Json>(*yn) : std::nullopt;
  }
  if (id == "C1") {
    double t0 = args.at("t0").get<double>(), t1 = args.at("t1").get<double>();
    if (t0 > t1) return std::nullopt;
    return Json(c1(t, col("color"), t0, t1));
  }
  if (id == "C2") {
    std::set<int> ids;
    const std::string p = args.at("pattern").get<std::string>();
    for (const AnnotatedEvent& e : ast->events) {
      if (e.uid != p) continue;
      for (const auto& [k, v] : e.parameters) {
        const bool single = k == "id" || k == "object" || (k.size() > 3 && k.substr(k.size() - 3) == "_id");
        const bool many = k.size() > 4 && k.substr(k.size() - 4) == "_ids";
        if (single && v.is_number_integer()) ids.insert(v.get<int>());
        if (many && v.is_array())
          for (const Json& x : v)
            if (x.is_number_integer()) ids.insert(x.get<int>());
      }
    }
    return Json(std::vector<int>(ids.begin(), ids.end()));
  }
  if (id == "C3" || id == "C4") {
    const int c = col("color");
    const Vec2 a = t.find_object(c)->position();
    const Vec2 b = id == "C4" ? t.find_object(col("color2"))->position() : Vec2{};
    std::vector<std::pair<double, int>> cand;
    for (std::size_t k = 0; k < t.scene.size(); ++k) {
      const SceneObject& o = t.scene[k];
      if (o.id == c) continue;
      if (id == "C4" && (o.id == col("color2") || !segment_hits(o, a, b))) continue;
      cand.push_back({std::hypot(o.position().x - a.x, o.position().y - a.y), static_cast<int>(k)});
    }
    if (cand.empty()) return Json(nullptr);
    const auto best = *std::min_element(cand.begin(), cand.end());
    return Json(t.scene[best.second].id);
  }
  if (id == "C5" || id == "C6") {
    std::vector<std::pair<double, int>> cand;
    for (std::size_t k = 0; k < t.scene.size(); ++k) {
      const SceneObject& o = t.scene[k];
      if (o.is_static) continue;
      double v = 0.0;
      for (std::size_t f = 0; f < t.frames.size(); ++f) {
        if (id == "C6") {
          v = std::max(v, speed(t, o.id, f));
        } else if (f > 0) {
          const Vec2 p = where(t, o.id, f), q = where(t, o.id, f - 1);
          v += std::hypot(p.x - q.x, p.y - q.y);
        }
      }
      cand.push_back({-v, static_cast<int>(k)});  // largest value, earliest in scene order
    }
    if (cand.empty()) return Json(nullptr);
    return Json(t.scene[std::min_element(cand.begin(), cand.end())->second].id);
  }
  if (id == "C7") {
    const int c = col("color");
    const TraceEvent* first = nullptr;
    for (const TraceEvent& e : t.events)
      if (e.uid == "CollisionStart" && (e.parameters.at("a_id") == c || e.parameters.at("b_id") == c)) {
        first = &e;
        break;
      }
    if (!first) return Json(nullptr);
    const int a = first->parameters.at("a_id").get<int>(), b = first->parameters.at("b_id").get<int>();
    return Json(a == c ? b : a);
  }
  const int c = args.contains("color") ? col("color") : 0;
  const auto is_static_body = [&](int o) { return o >= 0 && !dynamic(t, o); };
  if (id == "C8") return Json(share(t, [&](std::size_t f) { return touches_at(iv, c, f, any); }));
  if (id == "C9") return Json(share(t, [&](std::size_t f) { return touches_at(iv, c, f, [](int o) { return o >= 0; }); }));
  if (id == "C10") return Json(share(t, [&](std::size_t f) { return touches_at(iv, c, f, [](int o) { return o == -1; }); }));
  if (id == "C11")
    return Json(share(t, [&](std::size_t f) {
      for (const Interval& i : iv)
        if (i.from <= f && f < i.to && moving(i.a, f) && moving(i.b, f)) return true;
      return false;
    }));
  if (id == "C12") return Json(share(t, [&](std::size_t f) { return !touches_at(iv, c, f, any); }));
  const auto still = [&](std::size_t f) {
    for (const SceneObject& o : t.frames[f].objects)
      if (moving(o.id, f)) return false;
    return true;
  };
  if (id == "C13") return Json(share(t, [&](std::size_t f) { return !still(f); }));
  if (id == "C14") return Json(share(t, still));
  if (id == "C15") {
    const int c2 = col("color2");
    return Json(share(t, [&](std::size_t f) { return touches_at(iv, c, f, [&](int o) { return o == c2 && o != c; }); }));
  }
  if (id == "C16")
    return Json(share(t, [&](std::size_t f) { return touches_at(iv, c, f, [](int o) { return o <= -2 && o >= -4; }); }));
  if (id == "C17") return Json(share(t, [&](std::size_t f) { return touches_at(iv, c, f, is_static_body); }));
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Random mini traces

/// Red (0), green (1), blue (2) dynamic balls, a black static post (3) and a
/// black static tilted bar (4).
inline std::vector<SceneObject> mini_scene() {
  return {fixtures::ball(0, Color::Red, {40, 40}, 6), fixtures::ball(1, Color::Green, {120, 40}, 6),
          fixtures::ball(2, Color::Blue, {200, 40}, 6), fixtures::ball(3, Color::Black, {128, 150}, 10, true),
          make_bar(4, Color::Black, {150, 90}, 60, 6, 0.4, true)};
}

/// Random walk with random per-frame speeds around the moving threshold and
/// random contact intervals, boundaries included.
inline Trace mini_trace(std::mt19937_64& rng, int frames = 41) {
  std::uniform_real_distribution<double> step(-6.0, 6.0), unit(0.0, 1.0);
  std::vector<Vec2> pos{{40, 40}, {120, 40}, {200, 40}};
  std::vector<std::vector<Vec2>> path(3);
  for (int f = 0; f < frames; ++f)
    for (int k = 0; k < 3; ++k) {
      path[k].push_back(pos[k]);
      pos[k] = {pos[k].x + step(rng) * 4.0, pos[k].y + step(rng) * 4.0};
    }
  Trace t = fixtures::moving_circles(mini_scene(), frames, [&](int id, double u) {
    const auto f = static_cast<std::size_t>(std::llround(u * (frames - 1)));
    return path[id][f];
  });
  for (Frame& fr : t.frames)
    for (SceneObject& o : fr.objects) o.velocity = unit(rng) < 0.6 ? Vec2{0.3, 0.0} : Vec2{0.0, 0.9};

  const std::vector<std::pair<int, int>> pairs{{0, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 3}, {2, 4}, {0, -1},
                                               {1, -1}, {2, -1}, {0, -2}, {2, -3}, {1, -4}};
  std::uniform_int_distribution<int> frame(0, frames - 1);
  for (const auto& [a, b] : pairs) {
    if (unit(rng) < 0.3) continue;
    int cursor = 0;
    while (cursor < frames) {
      const int s = cursor + frame(rng) / 3;
      if (s >= frames) break;
      const int e = s + frame(rng) / 4;
      const bool open = e >= frames;
      fixtures::add_contact(t, double(s) / (frames - 1), open ? -1.0 : double(e) / (frames - 1), a, b);
      if (open) break;
      cursor = e + 1;
    }
  }
  return t;
}

/// Annotation with a single pattern whose events carry object ids.
inline AnnotationMatrix mini_ast(std::mt19937_64& rng, const Trace& t) {
  std::uniform_int_distribution<int> obj(-1, 4), count(0, 5);
  std::uniform_real_distribution<double> when(0.0, 1.0);
  AnnotationMatrix m;
  m.frames = t.frames.size();
  m.uids = {"pat"};
  m.labels = {"Some Pattern"};
  const int n = count(rng);
  for (int k = 0; k < n; ++k) {
    AnnotatedEvent e;
    e.time = std::round(when(rng) * 40) / 40;
    e.uid = "pat";
    e.label = "Some Pattern";
    e.parameters = {{"object", obj(rng)}, {"pair_ids", Json::array({obj(rng), obj(rng)})}, {"speed", 2}};
    m.events.push_back(e);
  }
  std::sort(m.events.begin(), m.events.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return m;
}

}  // namespace query_oracle
