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
#include <cmath>
#include <set>

#include "simtrace/detector.hpp"
#include "simtrace/rng.hpp"

namespace simtrace {

namespace {

constexpr double kJitter[] = {-0.5, -0.25, -0.1, 0.1, 0.25, 0.5};
constexpr double kConstants[] = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 150.0, 200.0};
constexpr double kWindows[] = {0.02, 0.05, 0.1, 0.2};
constexpr int kMaxNodes = 60;

struct Site {
  DNode* node;
  std::vector<std::string> scope;
  bool object_slot = false;  // argument position that expects an object id
};

bool is_object_arg(const DNode& call, std::size_t i) {
  if (call.kind != DNode::Kind::Call) return false;
  static const std::set<std::string> unary{"speed", "pos_x", "pos_y", "vel_x", "vel_y", "angle", "is_static"};
  if (unary.contains(call.text) || call.text == "grid_cell") return i == 0;
  return call.text == "contact" || call.text == "distance";
}

void collect(DNode& n, std::vector<std::string>& scope, std::vector<Site>& out, bool object_slot = false) {
  out.push_back({&n, scope, object_slot});
  const bool binds = n.kind == DNode::Kind::Quant;
  if (binds) scope.push_back(n.binder);
  for (std::size_t i = 0; i < n.children.size(); ++i) collect(n.children[i], scope, out, is_object_arg(n, i));
  if (binds) scope.pop_back();
}

void free_vars(const DNode& n, std::vector<std::string>& bound, std::set<std::string>& out) {
  if (n.kind == DNode::Kind::Var && std::find(bound.begin(), bound.end(), n.text) == bound.end()) out.insert(n.text);
  if (n.kind == DNode::Kind::Quant) bound.push_back(n.binder);
  for (const DNode& c : n.children) free_vars(c, bound, out);
  if (n.kind == DNode::Kind::Quant) bound.pop_back();
}

bool closed_under(const DNode& n, const std::vector<std::string>& scope) {
  std::vector<std::string> bound;
  std::set<std::string> fv;
  free_vars(n, bound, fv);
  return std::all_of(fv.begin(), fv.end(),
                     [&](const std::string& v) { return std::find(scope.begin(), scope.end(), v) != scope.end(); });
}

double round_sig(double v) {
  if (v == 0.0) return 0.0;
  const double mag = std::pow(10.0, std::floor(std::log10(std::abs(v))) - 3);
  return std::round(v / mag) * mag;
}

DNode leaf_num(double v) {
  DNode n;
  n.kind = DNode::Kind::Num;
  n.number = v;
  n.type = DType::Num;
  return n;
}

DNode call(std::string name, std::vector<DNode> args, DType type) {
  DNode n;
  n.kind = DNode::Kind::Call;
  n.text = std::move(name);
  n.children = std::move(args);
  n.type = type;
  return n;
}

DNode binary(std::string op, DNode a, DNode b, DType type) {
  DNode n;
  n.kind = DNode::Kind::Binary;
  n.text = std::move(op);
  n.children = {std::move(a), std::move(b)};
  n.type = type;
  return n;
}

class Generator {
 public:
  Generator(Rng& rng, std::vector<std::string> uids) : rng_(rng), uids_(std::move(uids)) {}

  DNode object(const std::vector<std::string>& scope) {
    if (scope.empty() || rng_.coin(0.1)) return leaf_num(-1.0);  // the floor
    DNode n;
    n.kind = DNode::Kind::Var;
    n.text = scope[rng_.index(scope.size())];
    n.type = DType::Num;
    return n;
  }

  DNode constant() { return leaf_num(kConstants[rng_.index(std::size(kConstants))]); }
  DNode window() { return leaf_num(kWindows[rng_.index(std::size(kWindows))]); }

  DNode number(int depth, const std::vector<std::string>& scope) {
    static const char* signals[] = {"speed", "pos_x", "pos_y", "vel_x", "vel_y", "angle"};
    const std::size_t choice = rng_.index(depth > 0 ? 10 : 7);
    if (choice < 6) return call(signals[choice], {object(scope)}, DType::Num);
    if (choice == 6) return constant();
    if (choice == 7) return call(rng_.coin() ? "delta" : "abs", {number(depth - 1, scope)}, DType::Num);
    if (choice == 8) return call("distance", {object(scope), object(scope)}, DType::Num);
    return call("grid_cell", {object(scope), leaf_num(10.0)}, DType::Num);
  }

  DNode condition(int depth, const std::vector<std::string>& scope) {
    const std::size_t choice = rng_.index(depth > 0 ? 9 : 4);
    switch (choice) {
      case 0: {
        static const char* ops[] = {"<", "<=", ">", ">="};
        return binary(ops[rng_.index(4)], number(depth > 0 ? 1 : 0, scope), constant(), DType::Bool);
      }
      case 1: {
        DNode uid;
        uid.kind = DNode::Kind::Str;
        uid.text = uids_[rng_.index(uids_.size())];
        uid.type = DType::Str;
        std::vector<DNode> args{uid};
        if (!scope.empty() && rng_.coin(0.7)) {
          DNode dict;
          dict.kind = DNode::Kind::Dict;
          dict.type = DType::Dict;
          dict.keys.push_back(rng_.coin() ? "a_id" : "b_id");
          dict.children.push_back(object(scope));
          args.push_back(std::move(dict));
        }
        return call("event_active", std::move(args), DType::Bool);
      }
      case 2: return call("contact", {object(scope), object(scope)}, DType::Bool);
      case 3: return call("sign_flip", {call(rng_.coin() ? "vel_y" : "vel_x", {object(scope)}, DType::Num)}, DType::Bool);
      case 4: return call("rising_edge", {condition(depth - 1, scope)}, DType::Bool);
      case 5: {
        DNode n;
        n.kind = DNode::Kind::Unary;
        n.text = "not";
        n.type = DType::Bool;
        n.children = {condition(depth - 1, scope)};
        return n;
      }
      case 6:
        return binary(rng_.coin() ? "and" : "or", condition(depth - 1, scope), condition(depth - 1, scope), DType::Bool);
      case 7: return call("sustained", {condition(depth - 1, scope), window()}, DType::Bool);
      default:
        return call("within_after", {condition(depth - 1, scope), condition(depth - 1, scope), window()}, DType::Bool);
    }
  }

  DNode of_type(DType type, const std::vector<std::string>& scope) {
    return type == DType::Bool ? condition(1, scope) : number(1, scope);
  }

 private:
  Rng& rng_;
  std::vector<std::string> uids_;
};

DNode& body_of(DetectorProgram& p, std::vector<std::string>& scope) {
  DNode* n = &p.where;
  while (n->kind == DNode::Kind::Quant && n->text == "exists_object") {
    scope.push_back(n->binder);
    n = &n->children[0];
  }
  return *n;
}

std::vector<Site> sites_of(DetectorProgram& p) {
  std::vector<std::string> scope;
  DNode& body = body_of(p, scope);
  std::vector<Site> out;
  collect(body, scope, out);
  return out;
}

bool mutate_once(DetectorProgram& child, const std::vector<DetectorProgram>& parents, Rng& rng, Generator& gen) {
  std::vector<Site> sites = sites_of(child);
  auto pick = [&](auto&& pred) -> Site* {
    std::vector<Site*> ok;
    for (Site& s : sites)
      if (!s.object_slot && pred(*s.node)) ok.push_back(&s);
    return ok.empty() ? nullptr : ok[rng.index(ok.size())];
  };
  const std::size_t op = rng.index(6);
  switch (op) {
    case 0: {  // threshold jitter
      Site* s = pick([](const DNode& n) { return n.kind == DNode::Kind::Num; });
      if (!s) return false;
      const double v = s->node->number;
      s->node->number = round_sig(v + kJitter[rng.index(std::size(kJitter))] * std::max(1.0, std::abs(v)));
      return true;
    }
    case 1: {  // type-directed subtree replacement; object slots get another object
      std::vector<Site*> ok;
      for (Site& s : sites)
        if (s.node->type == DType::Bool || s.node->type == DType::Num) ok.push_back(&s);
      if (ok.empty()) return false;
      Site* s = ok[rng.index(ok.size())];
      *s->node = s->object_slot ? gen.object(s->scope) : gen.of_type(s->node->type, s->scope);
      return true;
    }
    case 2: {  // crossover with another parent, respecting variable scope
      if (parents.size() < 2) return false;
      Site* s = pick([](const DNode& n) { return n.type == DType::Bool || n.type == DType::Num; });
      if (!s) return false;
      DetectorProgram donor = parents[1 + rng.index(parents.size() - 1)];
      std::vector<Site> donor_sites = sites_of(donor);
      std::vector<const DNode*> ok;
      for (const Site& d : donor_sites)
        if (!d.object_slot && d.node->type == s->node->type && closed_under(*d.node, s->scope)) ok.push_back(d.node);
      if (ok.empty()) return false;
      *s->node = *ok[rng.index(ok.size())];
      return true;
    }
    case 3: {  // wrap a condition
      Site* s = pick([](const DNode& n) { return n.type == DType::Bool; });
      if (!s) return false;
      DNode inner = *s->node;
      switch (rng.index(4)) {
        case 0: *s->node = call("rising_edge", {std::move(inner)}, DType::Bool); break;
        case 1: *s->node = call("sustained", {std::move(inner), gen.window()}, DType::Bool); break;
        case 2: *s->node = binary("and", std::move(inner), gen.condition(0, s->scope), DType::Bool); break;
        default: *s->node = binary("or", std::move(inner), gen.condition(0, s->scope), DType::Bool); break;
      }
      return true;
    }
    case 4: {  // comparison flip
      Site* s = pick([](const DNode& n) {
        return n.kind == DNode::Kind::Binary && (n.text == "<" || n.text == "<=" || n.text == ">" || n.text == ">=");
      });
      if (!s) return false;
      static const char* ops[] = {"<", "<=", ">", ">="};
      s->node->text = ops[rng.index(4)];
      return true;
    }
    default: {  // shrink to a same-typed child
      Site* s = pick([](const DNode& n) {
        return std::any_of(n.children.begin(), n.children.end(),
                           [&](const DNode& c) { return c.type == n.type && c.kind != DNode::Kind::Var; });
      });
      if (!s) return false;
      std::vector<const DNode*> same;
      for (const DNode& c : s->node->children)
        if (c.type == s->node->type && c.kind != DNode::Kind::Var) same.push_back(&c);
      DNode keep = *same[rng.index(same.size())];
      *s->node = std::move(keep);
      return true;
    }
  }
}

void uid_literals(const DNode& n, std::set<std::string>& out) {
  if (n.kind == DNode::Kind::Call && n.text == "event_active") out.insert(n.children[0].text);
  for (const DNode& c : n.children) uid_literals(c, out);
}

}  // namespace

std::string grammar_mutate(const std::vector<DetectorProgram>& parents, std::uint64_t seed) {
  if (parents.empty()) throw Error("grammar_mutate needs at least one parent");
  Rng rng(mix_seed(seed));
  std::set<std::string> uids{"CollisionStart", "CollisionEnd"};
  for (const DetectorProgram& p : parents) uid_literals(p.where, uids);
  Generator gen(rng, {uids.begin(), uids.end()});
  const std::string fallback = print_detector(parents.front());

  for (int attempt = 0; attempt < 16; ++attempt) {
    DetectorProgram child = parents.front();
    const int edits = 1 + static_cast<int>(rng.index(2));
    bool changed = false;
    for (int e = 0; e < edits; ++e) changed |= mutate_once(child, parents, rng, gen);
    if (!changed) continue;
    const std::string text = print_detector(child);
    if (text == fallback) continue;
    try {
      const DetectorProgram parsed = parse_detector(text);
      if (parsed.node_count > kMaxNodes) continue;
      return text;
    } catch (const DetectorError&) {
      continue;
    }
  }
  return fallback;
}

}  // namespace simtrace
