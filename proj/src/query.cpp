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

#include "simtrace/query.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "simtrace/parallel.hpp"
#include "simtrace/rng.hpp"
#include "simtrace/trace_io.hpp"

namespace simtrace {

std::string_view to_string(AnswerType type) {
  switch (type) {
    case AnswerType::Count: return "count";
    case AnswerType::ObjectId: return "object-id";
    case AnswerType::Percentage: return "percentage";
    case AnswerType::YesNo: return "yes-no";
    case AnswerType::ObjectSet: return "object-set";
  }
  return "count";
}

const std::vector<TemplateInfo>& question_templates() {
  using A = AnswerType;
  static const std::vector<TemplateInfo> t = {
      {"C1", {"color", "t0", "t1"}, A::Count, "Number of distinct objects the {color} object touches between t={t0} and t={t1}?"},
      {"C2", {"pattern"}, A::ObjectSet, "Which objects take part in {pattern}?"},
      {"C3", {"color"}, A::ObjectId, "Which object starts closest to the {color} object?"},
      {"C4", {"color", "color2"}, A::ObjectId, "Which object, if any, lies on the straight segment from the {color} object to the {color2} object at the start?"},
      {"C5", {}, A::ObjectId, "Which object covers the longest path?"},
      {"C6", {}, A::ObjectId, "Which object attains the largest speed?"},
      {"C7", {"color"}, A::ObjectId, "Which object does the {color} object hit first?"},
      {"C8", {"color"}, A::Percentage, "Share of frames (%) in which the {color} object touches anything, boundaries included?"},
      {"C9", {"color"}, A::Percentage, "Share of frames (%) in which the {color} object touches another scene object (boundaries excluded)?"},
      {"C10", {"color"}, A::Percentage, "Share of frames (%) in which the {color} object touches the floor?"},
      {"C11", {}, A::Percentage, "Share of frames (%) with a contact between two moving objects?"},
      {"C12", {"color"}, A::Percentage, "Share of frames (%) in which the {color} object touches nothing?"},
      {"C13", {}, A::Percentage, "Share of frames (%) in which something moves?"},
      {"C14", {}, A::Percentage, "Share of frames (%) in which nothing moves?"},
      {"C15", {"color", "color2"}, A::Percentage, "Share of frames (%) in which the {color} and {color2} objects touch?"},
      {"C16", {"color"}, A::Percentage, "Share of frames (%) in which the {color} object touches the left, right or top boundary?"},
      {"C17", {"color"}, A::Percentage, "Share of frames (%) in which the {color} object touches a static obstacle?"},
      {"C18", {"color", "color2", "split"}, A::YesNo, "After t={split}, do the {color} and {color2} objects collide?"},
      {"C19", {"color", "split"}, A::YesNo, "After t={split}, does the {color} object touch the green object?"},
      {"C20", {"color", "split"}, A::YesNo, "After t={split}, does the {color} object touch the blue object?"},
      {"C21", {"split"}, A::YesNo, "After t={split}, do two moving objects collide?"},
      {"C22", {"pattern", "split"}, A::YesNo, "After t={split}, does {pattern} occur?"},
      {"C23", {"color", "split"}, A::YesNo, "Does the {color} object first reach the floor after t={split}?"},
      {"C24", {"color", "split"}, A::YesNo, "After t={split}, does the {color} object touch a side or top boundary?"},
      {"C25", {"color", "split"}, A::YesNo, "After t={split}, does the {color} object cross the vertical line through the green object's starting point?"},
      {"C26", {"color", "split"}, A::YesNo, "After t={split}, does the {color} object cross the horizontal line through the blue object's starting point?"},
      {"C27", {"split"}, A::YesNo, "After t={split}, is there a frame in which nothing moves?"},
  };
  return t;
}

const TemplateInfo& question_template(std::string_view id) {
  for (const TemplateInfo& t : question_templates())
    if (t.id == id) return t;
  throw QuestionError("unknown question template '" + std::string(id) + "'");
}

std::string QuestionInstance::text() const {
  std::string out = question_template(template_id).question;
  for (const auto& [k, v] : args.items()) {
    const std::string slot = "{" + k + "}";
    const std::string value = v.is_string() ? v.get<std::string>() : canonical_dump(v);
    for (std::size_t p = out.find(slot); p != std::string::npos; p = out.find(slot)) out.replace(p, slot.size(), value);
  }
  return out;
}

namespace {

struct Facts {
  const Trace& trace;
  std::size_t n;
  double moving_threshold;
  // Per unordered pair: active frame flags.
  std::map<std::pair<int, int>, std::vector<char>> contact;

  Facts(const Trace& t, double threshold) : trace(t), n(t.frames.size()), moving_threshold(threshold) {
    std::map<std::pair<int, int>, std::size_t> open;
    for (const TraceEvent& e : t.events) {
      if (e.uid != event_uid::kCollisionStart && e.uid != event_uid::kCollisionEnd) continue;
      const int a = e.parameters.at("a_id").get<int>();
      const int b = e.parameters.at("b_id").get<int>();
      const auto key = std::minmax(a, b);
      const std::size_t f = t.frame_index(e.time);
      if (e.uid == event_uid::kCollisionStart) {
        open[key] = f;
      } else if (auto it = open.find(key); it != open.end()) {
        mark(key, it->second, f);
        open.erase(it);
      }
    }
    for (const auto& [key, f] : open) mark(key, f, n);
  }

  void mark(std::pair<int, int> key, std::size_t from, std::size_t to) {
    auto& flags = contact[key];
    flags.resize(n, 0);
    for (std::size_t i = from; i < std::min(to, n); ++i) flags[i] = 1;
  }

  bool touching(int a, int b, std::size_t i) const {
    auto it = contact.find(std::minmax(a, b));
    return it != contact.end() && it->second[i];
  }

  /// Ids touching `a` at frame i.
  std::vector<int> partners(int a, std::size_t i) const {
    std::vector<int> out;
    for (const auto& [key, flags] : contact)
      if (flags[i] && (key.first == a || key.second == a)) out.push_back(key.first == a ? key.second : key.first);
    return out;
  }

  const SceneObject& object(int id) const { return *trace.find_object(id); }
  bool is_static(int id) const { return is_boundary(id) || object(id).is_static; }

  double speed(int id, std::size_t i) const {
    const SceneObject* o = trace.frames[i].find(id);
    return o ? length(o->velocity) : 0.0;
  }
  bool moving(int id, std::size_t i) const { return !is_static(id) && speed(id, i) > moving_threshold; }
  bool anything_moving(std::size_t i) const {
    for (const SceneObject& o : trace.frames[i].objects)
      if (moving(o.id, i)) return true;
    return false;
  }
  bool moving_contact(std::size_t i) const {
    for (const auto& [key, flags] : contact)
      if (flags[i] && !is_boundary(key.first) && !is_boundary(key.second) && moving(key.first, i) &&
          moving(key.second, i))
        return true;
    return false;
  }

  Vec2 position(int id, std::size_t i) const {
    if (const SceneObject* o = trace.frames[i].find(id)) return o->position();
    // Hold the last known position for absent frames.
    for (std::size_t k = i; k-- > 0;)
      if (const SceneObject* o = trace.frames[k].find(id)) return o->position();
    return object(id).position();
  }

  double percent(const std::function<bool(std::size_t)>& pred) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += pred(i);
    return 100.0 * static_cast<double>(c) / static_cast<double>(n);
  }

  /// First frame strictly after the split time.
  std::size_t suffix_start(double split) const {
    std::size_t i = 0;
    while (i < n && trace.frames[i].time <= split) ++i;
    return i;
  }
  bool any_after(double split, const std::function<bool(std::size_t)>& pred) const {
    for (std::size_t i = suffix_start(split); i < n; ++i)
      if (pred(i)) return true;
    return false;
  }
};

bool point_in_polygon(Vec2 p, const Polygon& poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    if ((poly[i].y > p.y) != (poly[j].y > p.y) &&
        p.x < (poly[j].x - poly[i].x) * (p.y - poly[i].y) / (poly[j].y - poly[i].y) + poly[i].x)
      inside = !inside;
  }
  return inside;
}

bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

double segment_point_distance(Vec2 a, Vec2 b, Vec2 p) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return distance(a + t * ab, p);
}

bool blocks(const SceneObject& o, Vec2 a, Vec2 b) {
  if (o.kind == ShapeKind::Circle) return segment_point_distance(a, b, o.center) <= o.radius;
  for (const Polygon& poly : o.polygons) {
    if (point_in_polygon(a, poly) || point_in_polygon(b, poly)) return true;
    for (std::size_t i = 0; i < poly.size(); ++i)
      if (segments_cross(a, b, poly[i], poly[(i + 1) % poly.size()])) return true;
  }
  return false;
}

int colored(const Trace& t, const Json& args, const char* key) {
  if (!args.contains(key) || !args[key].is_string()) throw QuestionError(std::string("missing color argument '") + key + "'");
  try {
    return object_lookup(t.scene, args[key].get<std::string>(), "any");
  } catch (const NotFoundError&) {
    throw QuestionError("scene has no " + args[key].get<std::string>() + " object");
  }
}

double time_arg(const Json& args, const char* key) {
  if (!args.contains(key) || !args[key].is_number()) throw QuestionError(std::string("missing time argument '") + key + "'");
  const double t = args[key].get<double>();
  if (t < 0.0 || t > 1.0) throw QuestionError(std::string("time argument '") + key + "' outside [0, 1]");
  return t;
}

std::vector<const AnnotatedEvent*> pattern_events(const Json& args, const AnnotationMatrix* ast) {
  if (!ast) throw QuestionError("pattern questions need an annotated trace");
  if (!args.contains("pattern") || !args["pattern"].is_string()) throw QuestionError("missing argument 'pattern'");
  const std::string p = args["pattern"].get<std::string>();
  std::string uid;
  for (std::size_t j = 0; j < ast->uids.size(); ++j) {
    std::string a = ast->labels[j], b = p;
    std::transform(a.begin(), a.end(), a.begin(), ::tolower);
    std::transform(b.begin(), b.end(), b.begin(), ::tolower);
    if (ast->uids[j] == p || a == b) uid = ast->uids[j];
  }
  if (uid.empty()) throw QuestionError("pattern '" + p + "' is not in the annotation");
  std::vector<const AnnotatedEvent*> out;
  for (const AnnotatedEvent& e : ast->events)
    if (e.uid == uid) out.push_back(&e);
  return out;
}

bool id_key(const std::string& k) {
  return k == "id" || k == "object" || (k.size() > 3 && k.compare(k.size() - 3, 3, "_id") == 0);
}

}  // namespace

Json answer(const QuestionInstance& q, const Trace& trace, const AnnotationMatrix* ast, const QueryOptions& options) {
  const TemplateInfo& info = question_template(q.template_id);
  for (const std::string& a : info.args)
    if (!q.args.contains(a)) throw QuestionError(q.template_id + " needs argument '" + a + "'");
  if (trace.frames.empty()) throw QuestionError("trace has no frames");
  const Facts f(trace, options.moving_threshold);
  const Json& args = q.args;
  const std::string& id = info.id;
  const int c = info.args.empty() || info.args[0] != "color" ? 0 : colored(trace, args, "color");
  const bool two = std::find(info.args.begin(), info.args.end(), "color2") != info.args.end();
  const int c2 = two ? colored(trace, args, "color2") : 0;
  const double split = std::find(info.args.begin(), info.args.end(), "split") != info.args.end()
                           ? time_arg(args, "split")
                           : 0.0;
  auto with = [&](auto pred) { return [&f, pred](std::size_t i) { return pred(i); }; };

  if (id == "C1") {
    const double t0 = time_arg(args, "t0"), t1 = time_arg(args, "t1");
    if (t0 > t1) throw QuestionError("t0 must not exceed t1");
    std::set<int> touched;
    for (std::size_t i = 0; i < f.n; ++i)
      if (trace.frames[i].time >= t0 && trace.frames[i].time <= t1)
        for (int p : f.partners(c, i)) touched.insert(p);
    return touched.size();
  }
  if (id == "C2") {
    std::set<int> ids;
    for (const AnnotatedEvent* e : pattern_events(args, ast))
      for (const auto& [k, v] : e->parameters) {
        if (id_key(k) && v.is_number_integer()) ids.insert(v.get<int>());
        if (k.size() > 4 && k.compare(k.size() - 4, 4, "_ids") == 0 && v.is_array())
          for (const Json& x : v)
            if (x.is_number_integer()) ids.insert(x.get<int>());
      }
    return Json(std::vector<int>(ids.begin(), ids.end()));
  }
  if (id == "C3") {
    const Vec2 p = f.object(c).position();
    std::optional<int> best;
    double best_d = 0.0;
    for (const SceneObject& o : trace.scene) {
      if (o.id == c) continue;
      const double d = distance(o.position(), p);
      if (!best || d < best_d) best = o.id, best_d = d;
    }
    return best ? Json(*best) : Json(nullptr);
  }
  if (id == "C4") {
    const Vec2 a = f.object(c).position(), b = f.object(c2).position();
    std::optional<int> best;
    double best_d = 0.0;
    for (const SceneObject& o : trace.scene) {
      if (o.id == c || o.id == c2 || !blocks(o, a, b)) continue;
      const double d = distance(o.position(), a);
      if (!best || d < best_d) best = o.id, best_d = d;
    }
    return best ? Json(*best) : Json(nullptr);
  }
  if (id == "C5" || id == "C6") {
    std::optional<int> best;
    double best_v = 0.0;
    for (const SceneObject& o : trace.scene) {
      if (o.is_static) continue;
      double v = 0.0;
      for (std::size_t i = 0; i < f.n; ++i)
        v = id == "C5" ? v + (i ? distance(f.position(o.id, i), f.position(o.id, i - 1)) : 0.0)
                       : std::max(v, f.speed(o.id, i));
      if (!best || v > best_v) best = o.id, best_v = v;
    }
    return best ? Json(*best) : Json(nullptr);
  }
  if (id == "C7") {
    for (const TraceEvent& e : trace.events) {
      if (e.uid != event_uid::kCollisionStart) continue;
      const int a = e.parameters.at("a_id").get<int>(), b = e.parameters.at("b_id").get<int>();
      if (a == c || b == c) return a == c ? b : a;
    }
    return nullptr;
  }
  if (id == "C8") return f.percent(with([&](std::size_t i) { return !f.partners(c, i).empty(); }));
  if (id == "C9")
    return f.percent(with([&](std::size_t i) {
      for (int p : f.partners(c, i))
        if (!is_boundary(p)) return true;
      return false;
    }));
  if (id == "C10") return f.percent(with([&](std::size_t i) { return f.touching(c, body_id::kFloor, i); }));
  if (id == "C11") return f.percent(with([&](std::size_t i) { return f.moving_contact(i); }));
  if (id == "C12") return f.percent(with([&](std::size_t i) { return f.partners(c, i).empty(); }));
  if (id == "C13") return f.percent(with([&](std::size_t i) { return f.anything_moving(i); }));
  if (id == "C14") return f.percent(with([&](std::size_t i) { return !f.anything_moving(i); }));
  if (id == "C15") return f.percent(with([&](std::size_t i) { return f.touching(c, c2, i); }));
  auto walls = [&](std::size_t i) {
    for (int p : f.partners(c, i))
      if (is_wall(p)) return true;
    return false;
  };
  if (id == "C16") return f.percent(walls);
  if (id == "C17")
    return f.percent(with([&](std::size_t i) {
      for (int p : f.partners(c, i))
        if (!is_boundary(p) && f.object(p).is_static) return true;
      return false;
    }));
  if (id == "C18") return f.any_after(split, [&](std::size_t i) { return f.touching(c, c2, i); });
  if (id == "C19" || id == "C20") {
    const int other = colored(trace, Json{{"color", id == "C19" ? "green" : "blue"}}, "color");
    if (other == c) throw QuestionError(id + " needs a color other than the target object's");
    return f.any_after(split, [&](std::size_t i) { return f.touching(c, other, i); });
  }
  if (id == "C21") return f.any_after(split, [&](std::size_t i) { return f.moving_contact(i); });
  if (id == "C22") {
    for (const AnnotatedEvent* e : pattern_events(args, ast))
      if (e->time > split) return true;
    return false;
  }
  if (id == "C23") {
    const std::size_t s = f.suffix_start(split);
    for (std::size_t i = 0; i < s; ++i)
      if (f.touching(c, body_id::kFloor, i)) return false;
    return f.any_after(split, [&](std::size_t i) { return f.touching(c, body_id::kFloor, i); });
  }
  if (id == "C24") return f.any_after(split, walls);
  if (id == "C25" || id == "C26") {
    const bool vertical = id == "C25";
    const int ref = colored(trace, Json{{"color", vertical ? "green" : "blue"}}, "color");
    const Vec2 r = f.object(ref).position();
    const double line = vertical ? r.x : r.y;
    auto side = [&](std::size_t i) {
      const Vec2 p = f.position(c, i);
      return (vertical ? p.x : p.y) < line;
    };
    return f.any_after(split, [&](std::size_t i) { return i > 0 && side(i) != side(i - 1); });
  }
  if (id == "C27") return f.any_after(split, [&](std::size_t i) { return !f.anything_moving(i); });
  throw QuestionError("unhandled template " + id);
}

Json BenchmarkItem::to_json() const {
  return Json{{"scene_ref", scene_ref},
              {"action",
               {{"x", canonical_double(action.position.x)},
                {"y", canonical_double(action.position.y)},
                {"r", canonical_double(action.radius)}}},
              {"near_miss", near_miss},
              {"template_id", question.template_id},
              {"args", question.args},
              {"question", question.text()},
              {"answer", answer.is_number_float() ? Json(canonical_double(answer.get<double>())) : answer}};
}

std::vector<BenchmarkItem> generate_benchmark(const std::vector<std::pair<std::string, Scene>>& scenes,
                                              const PatternLibrary& library, const BenchmarkOptions& options) {
  for (const auto& [ref, scene] : scenes)
    if (!scene.solution) throw QuestionError("scene '" + ref + "' has no stored solution");

  auto per_scene = [&](std::size_t index) {
    const auto& [ref, scene] = scenes[index];
    Rng rng(mix_seed(options.seed * 1000003ULL + index));
    Action action = *scene.solution;
    bool near_miss = rng.coin();
    Trace trace;
    bool done = false;
    if (near_miss) {
      for (int attempt = 0; attempt < 20 && !done; ++attempt) {
        Action a = *scene.solution;
        a.position.x = std::clamp(a.position.x + rng.normal(0.0, options.sigma_position), 0.0, kSceneExtent);
        a.position.y = std::clamp(a.position.y + rng.normal(0.0, options.sigma_position), 0.0, kSceneExtent);
        a.radius = std::clamp(a.radius + rng.normal(0.0, options.sigma_radius), kMinActionRadius, kMaxActionRadius);
        try {
          trace = simulate(scene, a, options.sim);
          action = a;
          done = true;
        } catch (const InvalidPlacementError&) {
        }
      }
    }
    if (!done) {
      near_miss = false;
      trace = simulate(scene, action, options.sim);
    }
    const AnnotationMatrix ast = annotate(trace, library);

    std::vector<std::string> colors;
    for (const char* col : {"red", "green", "blue"})
      for (const SceneObject& o : trace.scene)
        if (to_string(o.color) == col) {
          colors.push_back(col);
          break;
        }
    std::vector<std::string> patterns = ast.uids;
    auto round2 = [](double v) { return std::round(v * 100.0) / 100.0; };

    std::vector<BenchmarkItem> items;
    const auto& templates = question_templates();
    for (std::size_t k = 0; k < options.per_scene;) {
      const TemplateInfo& t = templates[rng.index(templates.size())];
      QuestionInstance q{t.id, Json::object()};
      bool ok = true;
      for (const std::string& a : t.args) {
        if (a == "color" || a == "color2") {
          q.args[a] = colors[rng.index(colors.size())];
        } else if (a == "t0") {
          const double x = round2(rng.uniform()), y = round2(rng.uniform());
          q.args["t0"] = std::min(x, y);
          q.args["t1"] = std::max(x, y);
        } else if (a == "split") {
          q.args[a] = round2(rng.uniform(0.2, 0.8));
        } else if (a == "pattern") {
          if (patterns.empty()) ok = false;
          else q.args[a] = patterns[rng.index(patterns.size())];
        }
      }
      if (!ok) continue;
      Json value;
      try {
        value = answer(q, trace, &ast);
      } catch (const QuestionError&) {
        continue;  // e.g. C19 asked about the green object itself
      }
      items.push_back({ref, action, near_miss, q, value});
      ++k;
    }
    return items;
  };

  const auto chunks = parallel_map<std::vector<BenchmarkItem>>(scenes.size(), options.jobs, per_scene);
  std::vector<BenchmarkItem> out;
  for (const auto& c : chunks) out.insert(out.end(), c.begin(), c.end());
  return out;
}

}  // namespace simtrace
