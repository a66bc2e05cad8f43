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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "simtrace/detector.hpp"
#include "simtrace/physics.hpp"
#include "simtrace/trace_io.hpp"

namespace simtrace {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

struct AnnotationContext::View {
  struct Track {
    int id = 0;
    bool is_static = false;
    bool boundary = false;
    Color color = Color::Black;
    ShapeKind kind = ShapeKind::Bar;
    std::vector<char> present;
    std::vector<Vec2> pos;
    std::vector<Vec2> vel;
    std::vector<double> angle;
  };
  std::vector<Track> tracks;
  std::map<int, std::size_t> index;
  std::vector<double> times;
  std::map<std::pair<int, int>, std::vector<std::pair<std::size_t, std::size_t>>> contacts;
  std::map<std::string, std::vector<std::size_t>> domains;  // filter -> track indices

  const Track* find(double id) const {
    if (!std::isfinite(id)) return nullptr;
    auto it = index.find(static_cast<int>(std::lround(id)));
    return it == index.end() ? nullptr : &tracks[it->second];
  }

  bool in_contact(int a, int b, std::size_t frame) const {
    if (a == b) return false;
    auto it = contacts.find({std::min(a, b), std::max(a, b)});
    if (it == contacts.end()) return false;
    for (const auto& [s, e] : it->second)
      if (frame >= s && frame < e) return true;
    return false;
  }
};

AnnotationContext::AnnotationContext(const Trace& trace) : trace_(&trace), view_(std::make_unique<View>()) {
  View& v = *view_;
  const std::size_t n = trace.frames.size();
  for (const Frame& f : trace.frames) v.times.push_back(f.time);

  auto add_track = [&](View::Track t) {
    v.index[t.id] = v.tracks.size();
    v.tracks.push_back(std::move(t));
  };
  for (const SceneObject& o : trace.scene) {
    View::Track t;
    t.id = o.id;
    t.is_static = o.is_static;
    t.color = o.color;
    t.kind = o.kind;
    t.present.assign(n, o.is_static ? 1 : 0);
    t.pos.assign(n, o.position());
    t.vel.assign(n, Vec2{});
    t.angle.assign(n, o.angle);
    if (!o.is_static) {
      for (std::size_t i = 0; i < n; ++i) {
        if (const SceneObject* s = trace.frames[i].find(o.id)) {
          t.present[i] = 1;
          t.pos[i] = s->position();
          t.vel[i] = s->velocity;
          t.angle[i] = s->angle;
        }
      }
    }
    add_track(std::move(t));
  }
  for (const auto& [id, poly] : boundary_polygons()) {
    View::Track t;
    t.id = id;
    t.is_static = true;
    t.boundary = true;
    Vec2 c;
    for (Vec2 p : poly) c += p;
    t.present.assign(n, 1);
    t.pos.assign(n, (1.0 / static_cast<double>(poly.size())) * c);
    t.vel.assign(n, Vec2{});
    t.angle.assign(n, 0.0);
    add_track(std::move(t));
  }

  for (const std::string& f : detector_filters()) {
    std::vector<std::size_t>& d = v.domains[f];
    for (std::size_t k = 0; k < v.tracks.size(); ++k) {
      const View::Track& t = v.tracks[k];
      bool keep = false;
      if (f == "any") keep = true;
      else if (f == "body") keep = !t.boundary;
      else if (f == "dynamic") keep = !t.is_static;
      else if (f == "static") keep = t.is_static;
      else if (f == "wall") keep = is_wall(t.id);
      else if (f == "floor") keep = t.id == body_id::kFloor;
      else if (auto c = color_from_string(f)) keep = !t.boundary && t.color == *c;
      else if (auto s = shape_from_string(f)) keep = !t.boundary && t.kind == *s;
      if (keep) d.push_back(k);
    }
  }

  std::map<std::pair<int, int>, std::size_t> open;
  for (const TraceEvent& e : trace.events) {
    ContextEvent ce{e.time, n ? trace.frame_index(e.time) : 0, e.uid, e.uid, e.parameters};
    uids_.insert(e.uid);
    labels_.insert(lower(e.uid));
    if (e.uid == event_uid::kCollisionStart || e.uid == event_uid::kCollisionEnd) {
      auto a = e.parameters.find("a_id");
      auto b = e.parameters.find("b_id");
      if (a != e.parameters.end() && b != e.parameters.end() && a->second.is_number() && b->second.is_number()) {
        const int ia = a->second.get<int>();
        const int ib = b->second.get<int>();
        const std::pair key{std::min(ia, ib), std::max(ia, ib)};
        if (e.uid == event_uid::kCollisionStart) {
          open.try_emplace(key, ce.frame);
        } else if (auto it = open.find(key); it != open.end()) {
          v.contacts[key].push_back({it->second, ce.frame});
          open.erase(it);
        }
      }
    }
    events_.push_back(std::move(ce));
  }
  for (const auto& [key, start] : open) v.contacts[key].push_back({start, n});
  for (std::string_view uid : {event_uid::kCollisionStart, event_uid::kCollisionEnd, event_uid::kTaskComplete}) {
    uids_.insert(std::string(uid));
    labels_.insert(lower(uid));
  }
  reindex();
}

AnnotationContext::~AnnotationContext() = default;

void AnnotationContext::add(const std::string& uid, const std::string& label, const std::vector<EmittedEvent>& events) {
  for (const EmittedEvent& e : events)
    events_.push_back({e.time, frame_count() ? trace_->frame_index(e.time) : 0, uid, label, e.parameters});
  std::stable_sort(events_.begin(), events_.end(),
                   [](const ContextEvent& a, const ContextEvent& b) { return a.time < b.time; });
  uids_.insert(uid);
  labels_.insert(lower(label));
  reindex();
}

bool AnnotationContext::available(std::string_view uid_or_label) const {
  return uids_.contains(std::string(uid_or_label)) || labels_.contains(lower(uid_or_label));
}

const std::vector<const ContextEvent*>& AnnotationContext::events_at(std::size_t frame) const {
  static const std::vector<const ContextEvent*> none;
  return frame < by_frame_.size() ? by_frame_[frame] : none;
}

void AnnotationContext::reindex() {
  by_frame_.assign(frame_count(), {});
  for (const ContextEvent& e : events_)
    if (e.frame < by_frame_.size()) by_frame_[e.frame].push_back(&e);
}

namespace {

using View = AnnotationContext::View;

struct Value {
  DType type = DType::Num;
  double num = 0.0;
  bool truth = false;
  const std::string* str = nullptr;
};

Value num(double v) { return {DType::Num, v, false, nullptr}; }
Value boolean(bool b) { return {DType::Bool, 0.0, b, nullptr}; }

bool json_matches(const Json& have, const Value& want) {
  switch (want.type) {
    case DType::Num: return have.is_number() && std::abs(have.get<double>() - want.num) <= 1e-9;
    case DType::Bool: return have.is_boolean() && have.get<bool>() == want.truth;
    case DType::Str: return have.is_string() && lower(have.get<std::string>()) == lower(*want.str);
    case DType::Dict: return false;
  }
  return false;
}

class Evaluator {
 public:
  Evaluator(const AnnotationContext& ctx, std::uint64_t budget) : ctx_(ctx), view_(ctx.view()), budget_(budget) {}

  std::uint64_t steps() const { return steps_; }

  Value eval(const DNode& n, std::size_t f) {
    if (++steps_ > budget_) throw BudgetExceededError("step budget of " + std::to_string(budget_) + " exceeded");
    using K = DNode::Kind;
    switch (n.kind) {
      case K::Bool: return boolean(n.boolean);
      case K::Num: return num(n.number);
      case K::Str: return {DType::Str, 0.0, false, &n.text};
      case K::Var: return num(lookup(n.text));
      case K::Dict: return {DType::Dict, 0.0, false, nullptr};
      case K::Unary: {
        const Value v = eval(n.children[0], f);
        return n.text == "not" ? boolean(!v.truth) : num(-v.num);
      }
      case K::Binary: return binary(n, f);
      case K::Call: return call(n, f);
      case K::Quant: {
        const bool all = n.text == "forall_object";
        for (std::size_t k : view_.domains.at(n.filter)) {
          const View::Track& t = view_.tracks[k];
          if (!t.present[f]) continue;
          env_.emplace_back(&n.binder, t.id);
          const bool v = eval(n.children[0], f).truth;
          env_.pop_back();
          if (all && !v) return boolean(false);
          if (!all && v) return boolean(true);
        }
        return boolean(all);
      }
    }
    return boolean(false);
  }

  void bind(const std::string* name, int id) { env_.emplace_back(name, id); }
  void unbind() { env_.pop_back(); }

 private:
  double lookup(const std::string& name) const {
    for (auto it = env_.rbegin(); it != env_.rend(); ++it)
      if (*it->first == name) return it->second;
    return 0.0;
  }

  Value binary(const DNode& n, std::size_t f) {
    const std::string& op = n.text;
    if (op == "and") {
      if (!eval(n.children[0], f).truth) return boolean(false);
      return boolean(eval(n.children[1], f).truth);
    }
    if (op == "or") {
      if (eval(n.children[0], f).truth) return boolean(true);
      return boolean(eval(n.children[1], f).truth);
    }
    const Value a = eval(n.children[0], f);
    const Value b = eval(n.children[1], f);
    if (op == "==" || op == "!=") {
      bool eq = false;
      if (a.type == DType::Num) eq = a.num == b.num;
      else if (a.type == DType::Bool) eq = a.truth == b.truth;
      else if (a.type == DType::Str) eq = *a.str == *b.str;
      return boolean(op == "==" ? eq : !eq);
    }
    if (op == "<") return boolean(a.num < b.num);
    if (op == "<=") return boolean(a.num <= b.num);
    if (op == ">") return boolean(a.num > b.num);
    if (op == ">=") return boolean(a.num >= b.num);
    if (op == "+") return num(a.num + b.num);
    if (op == "-") return num(a.num - b.num);
    if (op == "*") return num(a.num * b.num);
    if (op == "/") return num(b.num == 0.0 ? 0.0 : a.num / b.num);
    return num(0.0);
  }

  double time(std::size_t f) const { return view_.times[f]; }

  Value call(const DNode& n, std::size_t f) {
    const std::string& name = n.text;
    const auto& c = n.children;
    auto track_value = [&](auto&& get) {
      const View::Track* t = view_.find(eval(c[0], f).num);
      return num(t && t->present[f] ? get(*t) : 0.0);
    };
    if (name == "speed") return track_value([&](const View::Track& t) { return length(t.vel[f]); });
    if (name == "pos_x") return track_value([&](const View::Track& t) { return t.pos[f].x; });
    if (name == "pos_y") return track_value([&](const View::Track& t) { return t.pos[f].y; });
    if (name == "vel_x") return track_value([&](const View::Track& t) { return t.vel[f].x; });
    if (name == "vel_y") return track_value([&](const View::Track& t) { return t.vel[f].y; });
    if (name == "angle") return track_value([&](const View::Track& t) { return t.angle[f]; });
    if (name == "is_static") {
      const View::Track* t = view_.find(eval(c[0], f).num);
      return boolean(t && t->is_static);
    }
    if (name == "contact") {
      const View::Track* a = view_.find(eval(c[0], f).num);
      const View::Track* b = view_.find(eval(c[1], f).num);
      return boolean(a && b && a->present[f] && b->present[f] && view_.in_contact(a->id, b->id, f));
    }
    if (name == "distance") {
      const View::Track* a = view_.find(eval(c[0], f).num);
      const View::Track* b = view_.find(eval(c[1], f).num);
      if (!a || !b || !a->present[f] || !b->present[f]) return num(0.0);
      return num(distance(a->pos[f], b->pos[f]));
    }
    if (name == "grid_cell") {
      const View::Track* t = view_.find(eval(c[0], f).num);
      const double g_raw = eval(c[1], f).num;
      if (!t || !t->present[f]) return num(0.0);
      const long g = std::max(1L, std::lround(std::isfinite(g_raw) ? g_raw : 1.0));
      auto cell = [&](double v) {
        return std::clamp(static_cast<long>(std::floor(v / kSceneExtent * static_cast<double>(g))), 0L, g - 1);
      };
      return num(static_cast<double>(cell(t->pos[f].y) * g + cell(t->pos[f].x)));
    }
    if (name == "event_active") return boolean(event_active(n, f));
    if (name == "frame_time") return num(time(f));
    if (name == "delta") {
      if (f == 0) return num(0.0);
      const double cur = eval(c[0], f).num;
      return num(cur - eval(c[0], f - 1).num);
    }
    if (name == "sign_flip") {
      if (f == 0) return boolean(false);
      const double prev = eval(c[0], f - 1).num;
      const double cur = eval(c[0], f).num;
      return boolean(prev * cur < 0.0 && std::abs(prev) > 1e-6);
    }
    if (name == "rising_edge") {
      if (!eval(c[0], f).truth) return boolean(false);
      return boolean(f == 0 || !eval(c[0], f - 1).truth);
    }
    if (name == "sustained") {
      const double d = eval(c[1], f).num;
      if (time(f) + 1e-12 < d) return boolean(false);
      for (std::size_t j = f + 1; j-- > 0;) {
        if (time(j) < time(f) - d - 1e-12) break;
        if (!eval(c[0], j).truth) return boolean(false);
      }
      return boolean(true);
    }
    if (name == "within_after") {
      if (!eval(c[1], f).truth) return boolean(false);
      const double w = eval(c[2], f).num;
      for (std::size_t j = f + 1; j-- > 0;) {
        if (time(j) < time(f) - w - 1e-12) break;
        if (eval(c[0], j).truth) return boolean(true);
      }
      return boolean(false);
    }
    if (name == "count_since") {
      const double t0 = eval(c[1], f).num;
      double count = 0.0;
      for (std::size_t j = 0; j <= f; ++j)
        if (time(j) >= t0 - 1e-12 && eval(c[0], j).truth) count += 1.0;
      return num(count);
    }
    if (name == "variance") {
      const double w = eval(c[1], f).num;
      double sum = 0.0;
      double sum2 = 0.0;
      double k = 0.0;
      for (std::size_t j = f + 1; j-- > 0;) {
        if (time(j) < time(f) - w - 1e-12) break;
        const double v = eval(c[0], j).num;
        sum += v;
        sum2 += v * v;
        k += 1.0;
      }
      const double mean = sum / k;
      return num(std::max(0.0, sum2 / k - mean * mean));
    }
    if (name == "abs") return num(std::abs(eval(c[0], f).num));
    if (name == "min") return num(std::min(eval(c[0], f).num, eval(c[1], f).num));
    if (name == "max") return num(std::max(eval(c[0], f).num, eval(c[1], f).num));
    return boolean(false);
  }

  bool event_active(const DNode& n, std::size_t f) {
    const std::string& uid = n.children[0].text;
    const std::string uid_lower = lower(uid);
    std::vector<std::pair<const std::string*, Value>> wanted;
    if (n.children.size() > 1) {
      const DNode& d = n.children[1];
      for (std::size_t i = 0; i < d.children.size(); ++i) wanted.emplace_back(&d.keys[i], eval(d.children[i], f));
    }
    for (const ContextEvent* e : ctx_.events_at(f)) {
      if (e->uid != uid && lower(e->label) != uid_lower) continue;
      bool ok = true;
      for (const auto& [key, want] : wanted) {
        auto it = e->parameters.find(*key);
        if (it == e->parameters.end() || !json_matches(it->second, want)) {
          ok = false;
          break;
        }
      }
      if (ok) return true;
    }
    return false;
  }

  const AnnotationContext& ctx_;
  const View& view_;
  std::uint64_t budget_;
  std::uint64_t steps_ = 0;
  std::vector<std::pair<const std::string*, int>> env_;
};

Json emit_value(const Value& v, const std::string& type) {
  if (type == "int") return Json(static_cast<std::int64_t>(std::llround(v.type == DType::Bool ? (v.truth ? 1 : 0) : v.num)));
  if (type == "bool") return Json(v.type == DType::Bool ? v.truth : v.num != 0.0);
  if (type == "str") return Json(v.type == DType::Str ? *v.str : v.type == DType::Bool ? (v.truth ? "true" : "false") : canonical_dump(Json(canonical_double(v.num))));
  if (type == "list") return Json::array({v.type == DType::Bool ? Json(v.truth) : Json(canonical_double(v.num))});
  return Json(v.type == DType::Bool ? (v.truth ? 1.0 : 0.0) : canonical_double(v.num));
}

}  // namespace

RunResult run_detector(const DetectorProgram& program, const Trace& trace, const AnnotationContext& context,
                       const RunOptions& options) {
  if (&context.trace() != &trace) throw Error("annotation context was built for a different trace");
  for (const std::string& dep : program.depends_on)
    if (!context.available(dep))
      throw DependencyError("detector '" + program.name + "' depends on unavailable event uid '" + dep + "'");

  const auto started = std::chrono::steady_clock::now();
  Evaluator ev(context, options.step_budget);
  const View& view = context.view();

  std::vector<const DNode*> chain;
  const DNode* body = &program.where;
  while (body->kind == DNode::Kind::Quant && body->text == "exists_object") {
    chain.push_back(body);
    body = &body->children[0];
  }
  std::map<std::string, std::string> types;
  for (const ParamDecl& d : program.params) types[d.name] = d.type;

  RunResult result;
  std::set<std::pair<double, std::string>> seen;
  const std::size_t n = trace.frames.size();
  for (std::size_t f = 0; f < n; ++f) {
    bool fired = false;
    auto emit = [&]() {
      Params params;
      for (const auto& [key, expr] : program.emit) params[key] = emit_value(ev.eval(expr, f), types[key]);
      const double t = trace.frames[f].time;
      if (!seen.emplace(t, canonical_dump(Json(params))).second) return;
      result.events.push_back({t, program.name, std::move(params)});
      fired = true;
    };
    auto descend = [&](auto&& self, std::size_t level) -> void {
      if (level == chain.size()) {
        if (ev.eval(*body, f).truth) emit();
        return;
      }
      const DNode& q = *chain[level];
      for (std::size_t k : view.domains.at(q.filter)) {
        const auto& t = view.tracks[k];
        if (!t.present[f]) continue;
        ev.bind(&q.binder, t.id);
        self(self, level + 1);
        ev.unbind();
      }
    };
    descend(descend, 0);
    if (fired) result.active_frames.push_back(f);
  }
  result.steps = ev.steps();
  result.fires_every_frame = n > 0 && result.active_frames.size() == n;
  result.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace simtrace
