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

#include "simtrace/physics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "simtrace/trace_io.hpp"

namespace simtrace {

void SimConfig::validate() const {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (timestep_count < 2) throw Error("timestep_count must be at least 2");
  if (substeps < 1) throw Error("substeps must be at least 1");
  if (velocity_iterations < 1 || position_iterations < 0) throw Error("solver iteration counts out of range");
  if (!finite_nonneg(gravity) || !finite_nonneg(restitution) || !finite_nonneg(friction) ||
      !finite_nonneg(restitution_threshold))
    throw Error("physics coefficients must be finite and non-negative");
  if (restitution > 1.0) throw Error("restitution must lie in [0, 1]");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw Error("duration must be positive");
  if (!(density > 0.0) || !std::isfinite(density)) throw Error("density must be positive");
}

Json sim_config_to_json(const SimConfig& c) {
  return Json{{"gravity", c.gravity},
              {"duration", c.duration},
              {"timestep_count", c.timestep_count},
              {"restitution", c.restitution},
              {"friction", c.friction},
              {"substeps", c.substeps},
              {"velocity_iterations", c.velocity_iterations},
              {"position_iterations", c.position_iterations},
              {"restitution_threshold", c.restitution_threshold},
              {"density", c.density}};
}

SimConfig sim_config_from_json(const Json& j) {
  SimConfig c;
  c.gravity = j.value("gravity", c.gravity);
  c.duration = j.value("duration", c.duration);
  c.timestep_count = j.value("timestep_count", c.timestep_count);
  c.restitution = j.value("restitution", c.restitution);
  c.friction = j.value("friction", c.friction);
  c.substeps = j.value("substeps", c.substeps);
  c.velocity_iterations = j.value("velocity_iterations", c.velocity_iterations);
  c.position_iterations = j.value("position_iterations", c.position_iterations);
  c.restitution_threshold = j.value("restitution_threshold", c.restitution_threshold);
  c.density = j.value("density", c.density);
  c.validate();
  return c;
}

Json scene_to_json(const Scene& s) {
  Json objects = Json::array();
  for (const SceneObject& o : s.objects) objects.push_back(object_to_json(o));
  Json out{{"template", s.template_id}, {"seed", s.seed}, {"objects", std::move(objects)}};
  if (s.solution) out["solution"] = action_to_json(*s.solution);
  if (!s.targets.empty()) {
    Json targets = Json::object();
    for (const auto& [name, p] : s.targets) targets[name] = Json::array({canonical_double(p.x), canonical_double(p.y)});
    out["targets"] = std::move(targets);
  }
  return out;
}

Scene scene_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("$", "object");
  Scene s;
  s.template_id = j.value("template", std::string{});
  s.seed = j.value("seed", std::uint64_t{0});
  auto it = j.find("objects");
  if (it == j.end() || !it->is_array()) throw SchemaError("objects", "list");
  for (std::size_t k = 0; k < it->size(); ++k)
    s.objects.push_back(object_from_json((*it)[k], "objects[" + std::to_string(k) + "]"));
  if (auto sol = j.find("solution"); sol != j.end() && !sol->is_null()) s.solution = action_from_json(*sol, "solution");
  if (auto t = j.find("targets"); t != j.end()) {
    if (!t->is_object()) throw SchemaError("targets", "object");
    for (auto e = t->begin(); e != t->end(); ++e) {
      if (!e->is_array() || e->size() != 2) throw SchemaError("targets." + e.key(), "[x, y]");
      s.targets[e.key()] = {(*e)[0].get<double>(), (*e)[1].get<double>()};
    }
  }
  return s;
}

std::string serialize_scene(const Scene& scene) { return scene_to_json(scene).dump(); }
Scene parse_scene(std::string_view text) { return scene_from_json(parse_json_text(text)); }

std::vector<std::pair<int, Polygon>> boundary_polygons() {
  constexpr double kThick = 64.0;
  constexpr double lo = -kThick;
  constexpr double hi = kSceneExtent + kThick;
  constexpr double e = kSceneExtent;
  return {
      {body_id::kFloor, {{lo, lo}, {hi, lo}, {hi, 0.0}, {lo, 0.0}}},
      {body_id::kLeftWall, {{lo, lo}, {0.0, lo}, {0.0, hi}, {lo, hi}}},
      {body_id::kRightWall, {{e, lo}, {hi, lo}, {hi, hi}, {e, hi}}},
      {body_id::kTopWall, {{lo, e}, {hi, e}, {hi, hi}, {lo, hi}}},
  };
}

namespace {

struct Rot {
  double c = 1.0;
  double s = 0.0;
  explicit Rot(double angle) : c(std::cos(angle)), s(std::sin(angle)) {}
  Vec2 apply(Vec2 v) const { return {c * v.x - s * v.y, s * v.x + c * v.y}; }
  Vec2 inverse(Vec2 v) const { return {c * v.x + s * v.y, -s * v.x + c * v.y}; }
};

double signed_area(const Polygon& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) a += cross(p[i], p[(i + 1) % p.size()]);
  return 0.5 * a;
}

Polygon ccw(Polygon p) {
  if (signed_area(p) < 0.0) std::reverse(p.begin(), p.end());
  return p;
}

std::vector<Vec2> outward_normals(const Polygon& p) {
  std::vector<Vec2> n(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2 e = p[(i + 1) % p.size()] - p[i];
    const double len = length(e);
    n[i] = len > 0.0 ? Vec2{e.y / len, -e.x / len} : Vec2{0.0, 1.0};
  }
  return n;
}

/// Shape part in world coordinates.
struct Part {
  bool circle = false;
  Vec2 center;
  double radius = 0.0;
  Polygon verts;
  std::vector<Vec2> normals;
};

struct ManifoldPoint {
  Vec2 point;
  double separation = 0.0;
};

struct Manifold {
  Vec2 normal;  // from the first shape towards the second
  std::vector<ManifoldPoint> points;
};

bool collide_circles(const Part& a, const Part& b, double margin, Manifold& m) {
  const Vec2 d = b.center - a.center;
  const double dist = length(d);
  const double sep = dist - a.radius - b.radius;
  if (sep > margin) return false;
  const Vec2 n = dist > 1e-12 ? (1.0 / dist) * d : Vec2{0.0, 1.0};
  const Vec2 pa = a.center + a.radius * n;
  const Vec2 pb = b.center - b.radius * n;
  m.normal = n;
  m.points.push_back({0.5 * (pa + pb), sep});
  return true;
}

// Polygon first, circle second.
bool collide_polygon_circle(const Part& poly, const Part& circle, double margin, Manifold& m) {
  const Vec2 c = circle.center;
  const double r = circle.radius;
  std::size_t best = 0;
  double best_sep = -1e300;
  const std::size_t n = poly.verts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double s = dot(poly.normals[i], c - poly.verts[i]);
    if (s > r + margin) return false;
    if (s > best_sep) {
      best_sep = s;
      best = i;
    }
  }
  const Vec2 v1 = poly.verts[best];
  const Vec2 v2 = poly.verts[(best + 1) % n];
  Vec2 normal;
  Vec2 closest;
  double dist = 0.0;
  if (best_sep < 1e-12) {
    normal = poly.normals[best];
    dist = best_sep;
    closest = c - best_sep * normal;
  } else {
    const double u1 = dot(c - v1, v2 - v1);
    const double u2 = dot(c - v2, v1 - v2);
    if (u1 <= 0.0 || u2 <= 0.0) {
      closest = u1 <= 0.0 ? v1 : v2;
      const Vec2 d = c - closest;
      dist = length(d);
      if (dist - r > margin) return false;
      normal = dist > 1e-12 ? (1.0 / dist) * d : poly.normals[best];
    } else {
      normal = poly.normals[best];
      dist = best_sep;
      closest = c - dist * normal;
    }
  }
  const double sep = dist - r;
  if (sep > margin) return false;
  m.normal = normal;
  m.points.push_back({0.5 * (closest + (c - r * normal)), sep});
  return true;
}

std::pair<std::size_t, double> max_separation(const Part& p1, const Part& p2) {
  std::size_t best = 0;
  double best_sep = -1e300;
  for (std::size_t i = 0; i < p1.verts.size(); ++i) {
    const Vec2 n = p1.normals[i];
    const Vec2 v = p1.verts[i];
    double s = 1e300;
    for (Vec2 w : p2.verts) s = std::min(s, dot(n, w - v));
    if (s > best_sep) {
      best_sep = s;
      best = i;
    }
  }
  return {best, best_sep};
}

int clip_segment(const std::array<Vec2, 2>& in, std::array<Vec2, 2>& out, Vec2 normal, double offset) {
  int count = 0;
  const double d0 = dot(normal, in[0]) - offset;
  const double d1 = dot(normal, in[1]) - offset;
  if (d0 <= 0.0) out[count++] = in[0];
  if (d1 <= 0.0) out[count++] = in[1];
  if (d0 * d1 < 0.0 && count < 2) {
    const double t = d0 / (d0 - d1);
    out[count++] = in[0] + t * (in[1] - in[0]);
  }
  return count;
}

bool collide_polygons(const Part& a, const Part& b, double margin, Manifold& m) {
  const auto [edge_a, sep_a] = max_separation(a, b);
  if (sep_a > margin) return false;
  const auto [edge_b, sep_b] = max_separation(b, a);
  if (sep_b > margin) return false;

  constexpr double kTol = 0.005;
  const bool flip = sep_b > sep_a + kTol;
  const Part& ref = flip ? b : a;
  const Part& inc = flip ? a : b;
  const std::size_t edge = flip ? edge_b : edge_a;
  const Vec2 ref_normal = ref.normals[edge];

  std::size_t inc_edge = 0;
  double min_dot = 1e300;
  for (std::size_t i = 0; i < inc.normals.size(); ++i) {
    const double d = dot(ref_normal, inc.normals[i]);
    if (d < min_dot) {
      min_dot = d;
      inc_edge = i;
    }
  }
  const std::array<Vec2, 2> incident{inc.verts[inc_edge], inc.verts[(inc_edge + 1) % inc.verts.size()]};
  const Vec2 v11 = ref.verts[edge];
  const Vec2 v12 = ref.verts[(edge + 1) % ref.verts.size()];
  const Vec2 e = v12 - v11;
  const Vec2 tangent = (1.0 / length(e)) * e;
  const double front = dot(ref_normal, v11);
  const double side1 = -dot(tangent, v11);
  const double side2 = dot(tangent, v12);

  std::array<Vec2, 2> clip1{};
  std::array<Vec2, 2> clip2{};
  if (clip_segment(incident, clip1, -tangent, side1) < 2) return false;
  if (clip_segment(clip1, clip2, tangent, side2) < 2) return false;

  m.normal = flip ? -ref_normal : ref_normal;
  for (const Vec2& p : clip2) {
    const double sep = dot(ref_normal, p) - front;
    if (sep <= margin) m.points.push_back({p - 0.5 * sep * ref_normal, sep});
  }
  return !m.points.empty();
}

bool collide(const Part& a, const Part& b, double margin, Manifold& m) {
  if (a.circle && b.circle) return collide_circles(a, b, margin, m);
  if (!a.circle && b.circle) return collide_polygon_circle(a, b, margin, m);
  if (a.circle && !b.circle) {
    if (!collide_polygon_circle(b, a, margin, m)) return false;
    m.normal = -m.normal;
    return true;
  }
  return collide_polygons(a, b, margin, m);
}

struct LocalPart {
  bool circle = false;
  Vec2 center;
  double radius = 0.0;
  Polygon verts;
};

struct Body {
  int id = 0;
  bool is_static = false;
  std::size_t object_index = 0;  // into the trace scene; unused for boundaries
  std::vector<LocalPart> local;
  std::vector<Part> world;
  double inv_mass = 0.0;
  double inv_inertia = 0.0;
  Vec2 pos;
  double angle = 0.0;
  Vec2 vel;
  double omega = 0.0;
  double bound = 0.0;

  void update_world() {
    const Rot r(angle);
    world.resize(local.size());
    for (std::size_t i = 0; i < local.size(); ++i) {
      Part& w = world[i];
      const LocalPart& l = local[i];
      w.circle = l.circle;
      w.radius = l.radius;
      if (l.circle) {
        w.center = pos + r.apply(l.center);
      } else {
        w.verts.resize(l.verts.size());
        for (std::size_t k = 0; k < l.verts.size(); ++k) w.verts[k] = pos + r.apply(l.verts[k]);
        w.normals = outward_normals(w.verts);
      }
    }
  }
};

struct PolygonMass {
  double area = 0.0;
  Vec2 centroid;
  double inertia_origin = 0.0;  // second moment about the origin, per unit density
};

PolygonMass polygon_mass(const Polygon& p) {
  PolygonMass out;
  Vec2 c;
  double inertia = 0.0;
  const Vec2 ref = p[0];
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    const Vec2 e1 = p[i] - ref;
    const Vec2 e2 = p[i + 1] - ref;
    const double d = cross(e1, e2);
    const double tri = 0.5 * d;
    out.area += tri;
    c += tri * (1.0 / 3.0) * (e1 + e2);
    const double intx2 = e1.x * e1.x + e2.x * e1.x + e2.x * e2.x;
    const double inty2 = e1.y * e1.y + e2.y * e1.y + e2.y * e2.y;
    inertia += (0.25 / 3.0) * d * (intx2 + inty2);
  }
  c = (1.0 / out.area) * c;
  out.centroid = ref + c;
  // inertia about ref -> about centroid -> about origin
  const double about_centroid = inertia - out.area * dot(c, c);
  out.inertia_origin = about_centroid + out.area * dot(out.centroid, out.centroid);
  return out;
}

}  // namespace

MassProperties mass_properties(const SceneObject& object, double density) {
  MassProperties mp;
  if (object.kind == ShapeKind::Circle) {
    mp.mass = density * M_PI * object.radius * object.radius;
    mp.inertia = 0.5 * mp.mass * object.radius * object.radius;
    mp.centroid = object.center;
    return mp;
  }
  double area = 0.0;
  Vec2 weighted;
  double inertia_origin = 0.0;
  for (const Polygon& raw : object.polygons) {
    const PolygonMass pm = polygon_mass(ccw(raw));
    area += pm.area;
    weighted += pm.area * pm.centroid;
    inertia_origin += pm.inertia_origin;
  }
  mp.centroid = (1.0 / area) * weighted;
  mp.mass = density * area;
  mp.inertia = density * (inertia_origin - area * dot(mp.centroid, mp.centroid));
  return mp;
}

namespace {

Body make_body(const SceneObject& o, std::size_t index, double density) {
  Body b;
  b.id = o.id;
  b.is_static = o.is_static;
  b.object_index = index;
  b.angle = o.angle;
  b.vel = o.is_static ? Vec2{} : o.velocity;
  const MassProperties mp = mass_properties(o, density);
  b.pos = mp.centroid;
  if (!o.is_static) {
    b.inv_mass = 1.0 / mp.mass;
    b.inv_inertia = mp.inertia > 0.0 ? 1.0 / mp.inertia : 0.0;
  }
  const Rot r(b.angle);
  if (o.kind == ShapeKind::Circle) {
    b.local.push_back({true, {}, o.radius, {}});
    b.bound = o.radius;
  } else {
    for (const Polygon& raw : o.polygons) {
      LocalPart lp;
      for (Vec2 v : ccw(raw)) {
        lp.verts.push_back(r.inverse(v - b.pos));
        b.bound = std::max(b.bound, length(v - b.pos));
      }
      b.local.push_back(std::move(lp));
    }
  }
  b.update_world();
  return b;
}

Body make_boundary(int id, const Polygon& poly) {
  Body b;
  b.id = id;
  b.is_static = true;
  double area = 0.0;
  Vec2 c;
  for (Vec2 v : poly) c += v;
  c = (1.0 / static_cast<double>(poly.size())) * c;
  (void)area;
  b.pos = c;
  LocalPart lp;
  for (Vec2 v : ccw(poly)) {
    lp.verts.push_back(v - c);
    b.bound = std::max(b.bound, length(v - c));
  }
  b.local.push_back(std::move(lp));
  b.update_world();
  return b;
}

struct ContactPoint {
  std::size_t a = 0;
  std::size_t b = 0;
  Vec2 normal;
  Vec2 ra;
  Vec2 rb;
  Vec2 local_a;
  Vec2 local_b;
  double separation = 0.0;
  double normal_mass = 0.0;
  double tangent_mass = 0.0;
  double normal_impulse = 0.0;
  double tangent_impulse = 0.0;
  double max_normal_impulse = 0.0;
  double relative_velocity = 0.0;
};

constexpr double kSpeculativeBase = 1.0;
constexpr double kLinearSlop = 0.1;
constexpr double kBaumgarte = 0.2;
constexpr double kMaxCorrection = 2.0;
constexpr double kMaxSpeed = 2000.0;

class World {
 public:
  World(std::vector<Body> bodies, const SimConfig& config) : bodies_(std::move(bodies)), config_(config) {}

  const std::vector<Body>& bodies() const { return bodies_; }

  void step(double dt) {
    for (Body& b : bodies_) {
      if (b.is_static) continue;
      b.vel.y -= config_.gravity * dt;
    }
    build_contacts(dt);
    solve_velocities(dt);
    for (Body& b : bodies_) {
      if (b.is_static) continue;
      const double speed = length(b.vel);
      if (speed > kMaxSpeed) b.vel = (kMaxSpeed / speed) * b.vel;
      b.pos += dt * b.vel;
      b.angle += dt * b.omega;
      b.update_world();
    }
    apply_restitution();
    correct_positions();
  }

  /// Touching pairs (body indices, ordered) with their contact points.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Vec2>> touching() const {
    std::map<std::pair<std::size_t, std::size_t>, std::vector<Vec2>> out;
    for_each_pair(kTouchTolerance, [&](std::size_t i, std::size_t j, const Manifold& m) {
      for (const ManifoldPoint& p : m.points)
        if (p.separation <= kTouchTolerance) out[{i, j}].push_back(p.point);
    });
    return out;
  }

 private:
  template <class Fn>
  void for_each_pair(double margin_base, Fn&& fn, double dt = 0.0) const {
    for (std::size_t i = 0; i < bodies_.size(); ++i) {
      const Body& a = bodies_[i];
      for (std::size_t j = i + 1; j < bodies_.size(); ++j) {
        const Body& b = bodies_[j];
        if (a.is_static && b.is_static) continue;
        const double margin = margin_base + dt * (length(a.vel) + std::abs(a.omega) * a.bound + length(b.vel) +
                                                  std::abs(b.omega) * b.bound);
        if (distance(a.pos, b.pos) > a.bound + b.bound + margin) continue;
        for (const Part& pa : a.world)
          for (const Part& pb : b.world) {
            Manifold m;
            if (collide(pa, pb, margin, m)) fn(i, j, m);
          }
      }
    }
  }

  void build_contacts(double dt) {
    contacts_.clear();
    for_each_pair(
        kSpeculativeBase,
        [&](std::size_t i, std::size_t j, const Manifold& m) {
          const Body& a = bodies_[i];
          const Body& b = bodies_[j];
          const Rot ra(a.angle);
          const Rot rb(b.angle);
          for (const ManifoldPoint& p : m.points) {
            ContactPoint c;
            c.a = i;
            c.b = j;
            c.normal = m.normal;
            c.separation = p.separation;
            c.ra = p.point - a.pos;
            c.rb = p.point - b.pos;
            c.local_a = ra.inverse(c.ra);
            c.local_b = rb.inverse(c.rb);
            const double rna = cross(c.ra, c.normal);
            const double rnb = cross(c.rb, c.normal);
            const double kn = a.inv_mass + b.inv_mass + a.inv_inertia * rna * rna + b.inv_inertia * rnb * rnb;
            const Vec2 t{c.normal.y, -c.normal.x};
            const double rta = cross(c.ra, t);
            const double rtb = cross(c.rb, t);
            const double kt = a.inv_mass + b.inv_mass + a.inv_inertia * rta * rta + b.inv_inertia * rtb * rtb;
            c.normal_mass = kn > 0.0 ? 1.0 / kn : 0.0;
            c.tangent_mass = kt > 0.0 ? 1.0 / kt : 0.0;
            c.relative_velocity = dot(relative_velocity(c), c.normal);
            contacts_.push_back(c);
          }
        },
        dt);
  }

  Vec2 relative_velocity(const ContactPoint& c) const {
    const Body& a = bodies_[c.a];
    const Body& b = bodies_[c.b];
    return (b.vel + cross(b.omega, c.rb)) - (a.vel + cross(a.omega, c.ra));
  }

  void apply_impulse(const ContactPoint& c, Vec2 impulse) {
    Body& a = bodies_[c.a];
    Body& b = bodies_[c.b];
    a.vel -= a.inv_mass * impulse;
    a.omega -= a.inv_inertia * cross(c.ra, impulse);
    b.vel += b.inv_mass * impulse;
    b.omega += b.inv_inertia * cross(c.rb, impulse);
  }

  void solve_velocities(double dt) {
    const double inv_dt = 1.0 / dt;
    for (int it = 0; it < config_.velocity_iterations; ++it) {
      for (ContactPoint& c : contacts_) {
        const double vn = dot(relative_velocity(c), c.normal);
        // Speculative points allow closing the gap exactly within this step.
        const double bias = c.separation > 0.0 ? c.separation * inv_dt : 0.0;
        double lambda = -c.normal_mass * (vn + bias);
        const double next = std::max(c.normal_impulse + lambda, 0.0);
        lambda = next - c.normal_impulse;
        c.normal_impulse = next;
        c.max_normal_impulse = std::max(c.max_normal_impulse, lambda);
        apply_impulse(c, lambda * c.normal);

        const Vec2 t{c.normal.y, -c.normal.x};
        const double vt = dot(relative_velocity(c), t);
        double lt = -c.tangent_mass * vt;
        const double max_f = config_.friction * c.normal_impulse;
        const double next_t = std::clamp(c.tangent_impulse + lt, -max_f, max_f);
        lt = next_t - c.tangent_impulse;
        c.tangent_impulse = next_t;
        apply_impulse(c, lt * t);
      }
    }
  }

  void apply_restitution() {
    if (config_.restitution <= 0.0) return;
    for (int it = 0; it < 3; ++it) {
      for (ContactPoint& c : contacts_) {
        if (c.relative_velocity > -config_.restitution_threshold || c.max_normal_impulse <= 0.0) continue;
        refresh_arms(c);
        const double vn = dot(relative_velocity(c), c.normal);
        double lambda = -c.normal_mass * (vn + config_.restitution * c.relative_velocity);
        const double next = std::max(c.normal_impulse + lambda, 0.0);
        lambda = next - c.normal_impulse;
        c.normal_impulse = next;
        apply_impulse(c, lambda * c.normal);
      }
    }
  }

  void refresh_arms(ContactPoint& c) const {
    c.ra = Rot(bodies_[c.a].angle).apply(c.local_a);
    c.rb = Rot(bodies_[c.b].angle).apply(c.local_b);
  }

  void correct_positions() {
    for (int it = 0; it < config_.position_iterations; ++it) {
      bool moved = false;
      for (ContactPoint& c : contacts_) {
        Body& a = bodies_[c.a];
        Body& b = bodies_[c.b];
        refresh_arms(c);
        const Vec2 pa = a.pos + c.ra;
        const Vec2 pb = b.pos + c.rb;
        // Both anchors coincided when the contact was built.
        const double sep = c.separation + dot(c.normal, pb - pa);
        if (sep >= -kLinearSlop) continue;
        const double correction = std::clamp(kBaumgarte * (sep + kLinearSlop), -kMaxCorrection, 0.0);
        const double rna = cross(c.ra, c.normal);
        const double rnb = cross(c.rb, c.normal);
        const double k = a.inv_mass + b.inv_mass + a.inv_inertia * rna * rna + b.inv_inertia * rnb * rnb;
        if (k <= 0.0) continue;
        const Vec2 p = (-correction / k) * c.normal;
        a.pos -= a.inv_mass * p;
        a.angle -= a.inv_inertia * cross(c.ra, p);
        b.pos += b.inv_mass * p;
        b.angle += b.inv_inertia * cross(c.rb, p);
        moved = true;
      }
      if (!moved) break;
    }
    for (Body& b : bodies_)
      if (!b.is_static) b.update_world();
  }

  std::vector<Body> bodies_;
  SimConfig config_;
  std::vector<ContactPoint> contacts_;
};

SceneObject snapshot(const Body& body, const SceneObject& initial) {
  SceneObject o = initial;
  o.velocity = {canonical_double(body.vel.x), canonical_double(body.vel.y)};
  o.angle = canonical_double(body.angle);
  if (o.kind == ShapeKind::Circle) {
    o.center = {canonical_double(body.world[0].center.x), canonical_double(body.world[0].center.y)};
  } else {
    o.polygons.clear();
    for (const Part& p : body.world) {
      Polygon poly;
      for (Vec2 v : p.verts) poly.push_back({canonical_double(v.x), canonical_double(v.y)});
      o.polygons.push_back(std::move(poly));
    }
  }
  return o;
}

Json points_json(const std::vector<Vec2>& points) {
  Json out = Json::array();
  for (Vec2 p : points) out.push_back(Json::array({canonical_double(p.x), canonical_double(p.y)}));
  return out;
}

SceneObject red_ball(const Action& action, int id) {
  SceneObject o;
  o.id = id;
  o.kind = ShapeKind::Circle;
  o.color = Color::Red;
  o.center = action.position;
  o.radius = action.radius;
  o.description = SceneObject::make_description(o.color, o.kind, o.id);
  return o;
}

int next_id(const Scene& scene) {
  int id = 0;
  for (const SceneObject& o : scene.objects) id = std::max(id, o.id + 1);
  return id;
}

bool circle_overlaps(const Part& ball, const Part& other) {
  Manifold m;
  if (!collide(ball, other, 0.0, m)) return false;
  for (const ManifoldPoint& p : m.points)
    if (p.separation < -1e-9) return true;
  return false;
}

}  // namespace

void check_placement(const Scene& scene, const Action& action) {
  if (!(action.radius >= kMinActionRadius && action.radius <= kMaxActionRadius))
    throw InvalidPlacementError("action radius must lie in [4, 32]");
  if (!(action.position.x >= 0.0 && action.position.x <= kSceneExtent && action.position.y >= 0.0 &&
        action.position.y <= kSceneExtent))
    throw InvalidPlacementError("action position must lie in [0, 256]^2");
  Part ball;
  ball.circle = true;
  ball.center = action.position;
  ball.radius = action.radius;
  for (const auto& [id, poly] : boundary_polygons()) {
    Body b = make_boundary(id, poly);
    if (circle_overlaps(ball, b.world[0])) throw InvalidPlacementError("red ball overlaps the scene boundary");
  }
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    Body b = make_body(scene.objects[i], i, 1.0);
    for (const Part& p : b.world)
      if (circle_overlaps(ball, p))
        throw InvalidPlacementError("red ball overlaps " + scene.objects[i].description);
  }
}

Trace simulate(const Scene& scene, const Action& action, const SimConfig& config) {
  config.validate();
  check_placement(scene, action);

  Trace trace;
  trace.action = {{canonical_double(action.position.x), canonical_double(action.position.y)},
                  canonical_double(action.radius)};
  trace.scene = scene.objects;
  trace.scene.push_back(red_ball(trace.action, next_id(scene)));

  std::vector<Body> bodies;
  for (std::size_t i = 0; i < trace.scene.size(); ++i) bodies.push_back(make_body(trace.scene[i], i, config.density));
  for (const auto& [id, poly] : boundary_polygons()) bodies.push_back(make_boundary(id, poly));
  World world(std::move(bodies), config);

  auto record_frame = [&](double time) {
    Frame f;
    f.time = time;
    for (const Body& b : world.bodies()) {
      if (b.is_static) continue;
      f.objects.push_back(snapshot(b, trace.scene[b.object_index]));
    }
    trace.frames.push_back(std::move(f));
  };

  auto ordered_ids = [&](std::size_t i, std::size_t j) {
    const Body& a = world.bodies()[i];
    const Body& b = world.bodies()[j];
    if (a.is_static != b.is_static) return a.is_static ? std::pair{b.id, a.id} : std::pair{a.id, b.id};
    return a.id < b.id ? std::pair{a.id, b.id} : std::pair{b.id, a.id};
  };

  std::map<std::pair<std::size_t, std::size_t>, std::vector<Vec2>> open;
  auto emit_contacts = [&](double time) {
    auto now = world.touching();
    for (const auto& [key, points] : open) {
      if (now.contains(key)) continue;
      const auto [a, b] = ordered_ids(key.first, key.second);
      trace.events.push_back({time, std::string(event_uid::kCollisionEnd),
                              Params{{"a_id", a}, {"b_id", b}, {"contact_points", points_json(points)}}});
    }
    for (const auto& [key, points] : now) {
      if (open.contains(key)) continue;
      const auto [a, b] = ordered_ids(key.first, key.second);
      trace.events.push_back({time, std::string(event_uid::kCollisionStart),
                              Params{{"a_id", a}, {"b_id", b}, {"contact_points", points_json(points)}}});
    }
    open = std::move(now);
  };

  const int frames = config.timestep_count;
  const double dt = config.duration / static_cast<double>(frames - 1) / static_cast<double>(config.substeps);
  record_frame(0.0);
  emit_contacts(0.0);
  for (int f = 1; f < frames; ++f) {
    for (int s = 0; s < config.substeps; ++s) world.step(dt);
    for (const Body& b : world.bodies()) {
      if (b.is_static) continue;
      const bool finite = std::isfinite(b.pos.x) && std::isfinite(b.pos.y) && std::isfinite(b.vel.x) &&
                          std::isfinite(b.vel.y) && std::isfinite(b.angle) && std::isfinite(b.omega);
      if (!finite || std::abs(b.pos.x) > 1024.0 || std::abs(b.pos.y) > 1024.0)
        throw SimulationError("simulation diverged at frame " + std::to_string(f) + " (object " + std::to_string(b.id) +
                              ")");
    }
    const double time = f == frames - 1 ? 1.0 : canonical_double(static_cast<double>(f) / (frames - 1));
    record_frame(time);
    emit_contacts(time);
  }

  bool success = false;
  for (const auto& [key, points] : open) {
    const Color ca = trace.scene[world.bodies()[key.first].object_index].color;
    const Color cb = trace.scene[world.bodies()[key.second].object_index].color;
    const bool a_obj = world.bodies()[key.first].id >= 0;
    const bool b_obj = world.bodies()[key.second].id >= 0;
    if (a_obj && b_obj &&
        ((ca == Color::Green && cb == Color::Blue) || (ca == Color::Blue && cb == Color::Green)))
      success = true;
  }
  trace.events.push_back({1.0, std::string(event_uid::kTaskComplete), Params{{"success", success}}});
  return trace;
}

bool task_success(const Trace& trace) {
  std::set<int> green;
  std::set<int> blue;
  for (const SceneObject& o : trace.scene) {
    if (o.color == Color::Green) green.insert(o.id);
    if (o.color == Color::Blue) blue.insert(o.id);
  }
  std::set<std::pair<int, int>> open;
  for (const TraceEvent& e : trace.events) {
    if (e.uid != event_uid::kCollisionStart && e.uid != event_uid::kCollisionEnd) continue;
    const int a = e.parameters.at("a_id").get<int>();
    const int b = e.parameters.at("b_id").get<int>();
    const bool goal_pair = (green.contains(a) && blue.contains(b)) || (green.contains(b) && blue.contains(a));
    if (!goal_pair) continue;
    const std::pair key{std::min(a, b), std::max(a, b)};
    if (e.uid == event_uid::kCollisionStart)
      open.insert(key);
    else
      open.erase(key);
  }
  return !open.empty();
}

std::vector<Action> quantize_actions(int x_bins, int y_bins, int r_bins) {
  if (x_bins < 1 || y_bins < 1 || r_bins < 1) throw Error("bin counts must be at least 1");
  std::vector<Action> out;
  out.reserve(static_cast<std::size_t>(x_bins) * y_bins * r_bins);
  const double r_span = kMaxActionRadius - kMinActionRadius;
  for (int i = 0; i < x_bins; ++i)
    for (int j = 0; j < y_bins; ++j)
      for (int k = 0; k < r_bins; ++k)
        out.push_back({{(i + 0.5) * kSceneExtent / x_bins, (j + 0.5) * kSceneExtent / y_bins},
                       kMinActionRadius + (k + 0.5) * r_span / r_bins});
  return out;
}

double frame_energy(const Trace& trace, std::size_t frame, const SimConfig& config) {
  const Frame& f = trace.frames.at(frame);
  const double frame_dt = config.duration / static_cast<double>(trace.frames.size() - 1);
  double energy = 0.0;
  for (const SceneObject& o : f.objects) {
    const MassProperties mp = mass_properties(o, config.density);
    double omega = 0.0;
    if (frame > 0) {
      if (const SceneObject* prev = trace.frames[frame - 1].find(o.id)) omega = (o.angle - prev->angle) / frame_dt;
    }
    energy += 0.5 * mp.mass * dot(o.velocity, o.velocity) + 0.5 * mp.inertia * omega * omega +
              mp.mass * config.gravity * mp.centroid.y;
  }
  return energy;
}

}  // namespace simtrace
