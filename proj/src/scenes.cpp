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

#include "simtrace/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "simtrace/rng.hpp"
#include "simtrace/trace_io.hpp"

namespace simtrace {

namespace {

Polygon rect(Vec2 lo, Vec2 hi) { return {{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}}; }

SceneObject base(int id, Color color, ShapeKind kind, bool is_static) {
  SceneObject o;
  o.id = id;
  o.color = color;
  o.kind = kind;
  o.is_static = is_static;
  o.description = SceneObject::make_description(color, kind, id);
  return o;
}

Polygon snap(Polygon p) {
  for (Vec2& v : p) v = {canonical_double(v.x), canonical_double(v.y)};
  return p;
}

/// Generator parameter lookup with a seeded default range.
class Knobs {
 public:
  Knobs(const Json& overrides, std::uint64_t seed) : overrides_(overrides), rng_(mix_seed(seed)) {}

  double get(const std::string& name, double lo, double hi) {
    const double drawn = rng_.uniform(lo, hi);  // always drawn so overrides do not shift later knobs
    if (auto it = overrides_.find(name); it != overrides_.end()) return it->get<double>();
    return std::round(drawn * 4.0) / 4.0;
  }

  int get_int(const std::string& name, int lo, int hi) {
    const int drawn = lo + static_cast<int>(rng_.index(static_cast<std::size_t>(hi - lo + 1)));
    if (auto it = overrides_.find(name); it != overrides_.end()) return it->get<int>();
    return drawn;
  }

 private:
  const Json& overrides_;
  Rng rng_;
};

Scene ball_on_bar(Knobs& k) {
  Scene s;
  const double bar_x = k.get("bar_x", 70.0, 110.0);
  const double bar_y = k.get("bar_y", 90.0, 130.0);
  const double bar_w = k.get("bar_width", 70.0, 100.0);
  const double ball_r = k.get("ball_radius", 8.0, 12.0);
  const double blue_x = k.get("blue_x", 170.0, 220.0);
  const double blue_w = k.get("blue_width", 30.0, 50.0);
  s.objects.push_back(make_bar(0, Color::Black, {bar_x, bar_y}, bar_w, 6.0, 0.0, true));
  s.objects.push_back(make_circle(1, Color::Green, {bar_x, bar_y + 3.0 + ball_r}, ball_r, false));
  s.objects.push_back(make_bar(2, Color::Blue, {blue_x, 4.0}, blue_w, 8.0, 0.0, false));
  return s;
}

struct LeverParts {
  SceneObject pivot, plank, stop, ball;
};

// Plank resting on a pivot, tilted so one end sits just above the floor, with a
// green ball held against a stop block at the low end. `low_right` picks the
// side; `offset` shifts the plank centre from the pivot towards the low end.
LeverParts make_lever(int first_id, double pivot_x, double pivot_h, double plank_w, double offset, double ball_r,
                      bool low_right) {
  constexpr double kHalfThick = 2.0;
  const double side = low_right ? 1.0 : -1.0;
  const double arm = plank_w / 2.0 + offset;
  const double sin_t = (pivot_h - 0.5) / arm;
  const double cos_t = std::sqrt(1.0 - sin_t * sin_t);
  // The plank rests on the pivot's low-side top corner; resting on the centre
  // would sink that corner into the tilted plank.
  const Vec2 top{pivot_x + side * 4.0, pivot_h};
  const Vec2 along{side * cos_t, -sin_t};  // towards the low end
  const Vec2 up{side * sin_t, cos_t};
  const Vec2 plank_c = top + offset * along + kHalfThick * up;
  const double end_x = top.x + side * arm * cos_t;
  const Vec2 ball = top + (arm - ball_r - 1.0) * along + (2.0 * kHalfThick + ball_r + 0.05) * up;
  return {make_bar(first_id, Color::Black, {pivot_x, pivot_h / 2.0}, 8.0, pivot_h, 0.0, true),
          make_bar(first_id + 1, Color::Black, plank_c, plank_w, 2.0 * kHalfThick, -side * std::asin(sin_t), false),
          make_bar(first_id + 2, Color::Black, {end_x + side * 3.5, 7.0}, 4.0, 14.0, 0.0, true),
          make_circle(first_id + 3, Color::Green, ball, ball_r, false)};
}

Scene lever(Knobs& k) {
  Scene s;
  const double pivot_x = k.get("pivot_x", 120.0, 150.0);
  const double pivot_h = k.get("pivot_height", 16.0, 22.0);
  const double plank_w = k.get("plank_width", 110.0, 130.0);
  const double ball_r = k.get("ball_radius", 7.0, 9.0);
  const double blue_x = k.get("blue_x", 52.0, 62.0);
  LeverParts l = make_lever(0, pivot_x, pivot_h, plank_w, 0.0, ball_r, true);
  s.objects = {l.pivot, l.plank, l.stop, l.ball};
  s.objects.push_back(make_jar(4, Color::Blue, {blue_x, 0.0}, 48.0, 24.0, 4.0, false));
  return s;
}

Scene buckets3(Knobs& k) {
  Scene s;
  const double pivot_x = k.get("pivot_x", 62.0, 68.0);
  const double pivot_h = k.get("pivot_height", 14.0, 18.0);
  const double plank_w = k.get("plank_width", 88.0, 92.0);
  const double ball_r = k.get("ball_radius", 6.0, 7.0);
  const double first_x = k.get("first_bucket_x", 130.0, 136.0);
  const double gap = k.get("bucket_gap", 46.0, 50.0);
  const double width = k.get("bucket_width", 30.0, 32.0);
  const double height = k.get("bucket_height", 28.0, 34.0);
  constexpr double kWall = 4.0;
  const double offset = k.get("arm_offset", 14.0, 16.0);
  LeverParts l = make_lever(0, pivot_x, pivot_h, plank_w, offset, ball_r, false);
  s.objects = {l.pivot, l.plank, l.stop, l.ball};
  int id = 4;
  for (int b = 0; b < 3; ++b) {
    const double cx = first_x + gap * b;
    s.objects.push_back(make_jar(id++, Color::Black, {cx, 0.0}, width, height, kWall, true));
    s.targets["bucket_" + std::to_string(b)] = {canonical_double(cx), canonical_double(kWall + ball_r)};
  }
  // Blue marker lies in the last bucket, so task success means the far bucket.
  const double last_x = first_x + 2.0 * gap;
  s.objects.push_back(make_bar(id++, Color::Blue, {last_x, kWall + 1.5}, width - 2.0 * kWall - 6.0, 3.0, 0.0, false));
  return s;
}

Scene wall_bounce(Knobs& k) {
  Scene s;
  const double ball_r = k.get("ball_radius", 8.0, 11.0);
  const double ledge_y = k.get("ledge_y", 150.0, 190.0);
  const double blue_x = k.get("blue_x", 30.0, 70.0);
  s.objects.push_back(make_bar(0, Color::Black, {196.0, ledge_y}, 96.0, 6.0, 0.0, true));
  s.objects.push_back(make_circle(1, Color::Green, {160.0, ledge_y + 3.0 + ball_r}, ball_r, false));
  s.objects.push_back(make_standingsticks(2, Color::Blue, {blue_x, 0.0}, 40.0, 24.0, 4.0, false));
  return s;
}

Scene stack(Knobs& k) {
  Scene s;
  const int levels = k.get_int("levels", 2, 3);
  const double base_x = k.get("base_x", 60.0, 110.0);
  const double bar_w = k.get("bar_width", 30.0, 40.0);
  const double blue_x = k.get("blue_x", 170.0, 220.0);
  int id = 0;
  double y = 0.0;
  for (int l = 0; l < levels; ++l) {
    s.objects.push_back(make_bar(id++, Color::Black, {base_x, y + 5.0}, bar_w, 10.0, 0.0, false));
    y += 10.0;
  }
  s.objects.push_back(make_circle(id++, Color::Green, {base_x, y + 8.0}, 8.0, false));
  s.objects.push_back(make_bar(id++, Color::Blue, {blue_x, 4.0}, 40.0, 8.0, 0.0, true));
  return s;
}

const std::map<std::string, std::function<Scene(Knobs&)>>& registry() {
  static const std::map<std::string, std::function<Scene(Knobs&)>> r{
      {"ball_on_bar", ball_on_bar}, {"buckets3", buckets3}, {"lever", lever},
      {"stack", stack},             {"wall_bounce", wall_bounce}};
  return r;
}

}  // namespace

std::vector<std::string> template_ids() {
  std::vector<std::string> out;
  for (const auto& [id, fn] : registry()) out.push_back(id);
  return out;
}

Scene build_scene(const SceneTemplate& spec) {
  auto it = registry().find(spec.id);
  if (it == registry().end()) throw UnknownTemplateError("unknown template '" + spec.id + "'");
  if (!spec.parameters.is_object()) throw Error("template parameters must be an object");
  Knobs knobs(spec.parameters, spec.seed ^ fnv1a(spec.id));
  Scene s = it->second(knobs);
  s.template_id = spec.id;
  s.seed = spec.seed;
  return s;
}

SceneObject make_circle(int id, Color color, Vec2 center, double radius, bool is_static) {
  SceneObject o = base(id, color, ShapeKind::Circle, is_static);
  o.center = {canonical_double(center.x), canonical_double(center.y)};
  o.radius = canonical_double(radius);
  return o;
}

SceneObject make_bar(int id, Color color, Vec2 center, double width, double height, double angle, bool is_static) {
  SceneObject o = base(id, color, ShapeKind::Bar, is_static);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Polygon p;
  for (Vec2 v : rect({-width / 2.0, -height / 2.0}, {width / 2.0, height / 2.0}))
    p.push_back({center.x + c * v.x - s * v.y, center.y + s * v.x + c * v.y});
  o.polygons.push_back(snap(p));
  return o;
}

SceneObject make_jar(int id, Color color, Vec2 bottom_center, double width, double height, double wall,
                     bool is_static) {
  SceneObject o = base(id, color, ShapeKind::Jar, is_static);
  const double l = bottom_center.x - width / 2.0;
  const double r = bottom_center.x + width / 2.0;
  const double b = bottom_center.y;
  o.polygons.push_back(snap(rect({l, b}, {r, b + wall})));
  o.polygons.push_back(snap(rect({l, b + wall}, {l + wall, b + height})));
  o.polygons.push_back(snap(rect({r - wall, b + wall}, {r, b + height})));
  return o;
}

SceneObject make_standingsticks(int id, Color color, Vec2 bottom_center, double width, double height, double thickness,
                                bool is_static) {
  SceneObject o = base(id, color, ShapeKind::StandingSticks, is_static);
  const double l = bottom_center.x - width / 2.0;
  const double r = bottom_center.x + width / 2.0;
  const double b = bottom_center.y;
  o.polygons.push_back(snap(rect({l, b}, {l + thickness, b + height - thickness})));
  o.polygons.push_back(snap(rect({r - thickness, b}, {r, b + height - thickness})));
  o.polygons.push_back(snap(rect({l, b + height - thickness}, {r, b + height})));
  return o;
}

std::optional<Action> find_solution(const Scene& scene, const SimConfig& config, std::uint64_t seed,
                                    int random_budget) {
  auto works = [&](const Action& a) {
    try {
      return task_success(simulate(scene, a, config));
    } catch (const InvalidPlacementError&) {
      return false;
    } catch (const SimulationError&) {
      return false;
    }
  };
  for (const Action& a : quantize_actions(8, 8, 3))
    if (works(a)) return a;
  Rng rng(mix_seed(seed));
  for (int i = 0; i < random_budget; ++i) {
    Action a{{std::round(rng.uniform(0.0, kSceneExtent)), std::round(rng.uniform(0.0, kSceneExtent))},
             std::round(rng.uniform(kMinActionRadius, kMaxActionRadius))};
    if (works(a)) return a;
  }
  return std::nullopt;
}

namespace {

struct Rgb {
  unsigned char r, g, b;
};

Rgb rgb(Color c) {
  switch (c) {
    case Color::Red: return {255, 0, 0};
    case Color::Green: return {0, 255, 0};
    case Color::Blue: return {0, 0, 255};
    case Color::Black: return {0, 0, 0};
  }
  return {0, 0, 0};
}

bool inside_convex(const Polygon& p, Vec2 q) {
  bool pos = false;
  bool neg = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double c = cross(p[(i + 1) % p.size()] - p[i], q - p[i]);
    pos |= c > 0.0;
    neg |= c < 0.0;
  }
  return !(pos && neg);
}

void paint(std::string& pixels, int size, const SceneObject& o) {
  const double scale = size / kSceneExtent;
  const Rgb col = rgb(o.color);
  auto fill = [&](double xmin, double xmax, double ymin, double ymax, const auto& contains) {
    const int c0 = std::max(0, static_cast<int>(std::floor(xmin * scale)));
    const int c1 = std::min(size - 1, static_cast<int>(std::ceil(xmax * scale)));
    const int r0 = std::max(0, static_cast<int>(std::floor(ymin * scale)));
    const int r1 = std::min(size - 1, static_cast<int>(std::ceil(ymax * scale)));
    for (int row = r0; row <= r1; ++row)
      for (int colx = c0; colx <= c1; ++colx) {
        const Vec2 q{(colx + 0.5) / scale, (row + 0.5) / scale};
        if (!contains(q)) continue;
        const std::size_t at = 3 * (static_cast<std::size_t>(size - 1 - row) * size + colx);
        pixels[at] = static_cast<char>(col.r);
        pixels[at + 1] = static_cast<char>(col.g);
        pixels[at + 2] = static_cast<char>(col.b);
      }
  };
  if (o.kind == ShapeKind::Circle) {
    fill(o.center.x - o.radius, o.center.x + o.radius, o.center.y - o.radius, o.center.y + o.radius,
         [&](Vec2 q) { return distance(q, o.center) <= o.radius; });
    return;
  }
  for (const Polygon& p : o.polygons) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (Vec2 v : p) {
      xmin = std::min(xmin, v.x);
      xmax = std::max(xmax, v.x);
      ymin = std::min(ymin, v.y);
      ymax = std::max(ymax, v.y);
    }
    fill(xmin, xmax, ymin, ymax, [&](Vec2 q) { return inside_convex(p, q); });
  }
}

}  // namespace

std::string render_frame_ppm(const Trace& trace, std::size_t frame, int size) {
  if (size < 1) throw Error("image size must be positive");
  const std::string header = "P6\n" + std::to_string(size) + " " + std::to_string(size) + "\n255\n";
  std::string pixels(static_cast<std::size_t>(size) * size * 3, static_cast<char>(255));
  const Frame& f = trace.frames.at(frame);
  for (const SceneObject& o : trace.scene)
    if (o.is_static) paint(pixels, size, o);
  for (const SceneObject& o : f.objects) paint(pixels, size, o);
  return header + pixels;
}

std::size_t render_frames(const Trace& trace, const std::filesystem::path& out_dir, int size) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.ppm", i);
    write_text_file(out_dir / name, render_frame_ppm(trace, i, size));
  }
  return trace.frames.size();
}

}  // namespace simtrace
