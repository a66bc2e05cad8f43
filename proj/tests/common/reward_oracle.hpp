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

// Brute-force reference semantics for reward programs over synthetic event
// streams. Nothing here calls into the evaluator under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "simtrace/reward.hpp"

namespace reward_oracle {

using namespace simtrace;

inline std::string uid_name(int k) { return "u" + std::to_string(k); }
inline std::string label_name(int k) { return "Label " + std::to_string(k); }

// ---------------------------------------------------------------------------
// Boolean trees

struct Tree {
  enum Op { Event, Not, And, Or } op = Event;
  int uid = 0;
  int a = -1;  // child indices into the pool
  int b = -1;
};

/// Every tree of depth <= `depth` over EVENT leaves on `alphabet` uids, with
/// binary AND/OR and unary NOT. Children always come from shallower levels.
inline std::vector<Tree> enumerate_trees(int alphabet, int depth) {
  std::vector<Tree> pool;
  for (int u = 0; u < alphabet; ++u) pool.push_back({Tree::Event, u});
  std::size_t prev = pool.size();
  for (int d = 2; d <= depth; ++d) {
    const int n = static_cast<int>(prev);
    for (int i = 0; i < n; ++i) pool.push_back({Tree::Not, 0, i});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        pool.push_back({Tree::And, 0, i, j});
        pool.push_back({Tree::Or, 0, i, j});
      }
    prev = pool.size();
  }
  return pool;
}

inline std::string render(const std::vector<Tree>& pool, int i) {
  const Tree& t = pool[i];
  switch (t.op) {
    case Tree::Event:
      return "EVENT(\"" + uid_name(t.uid) + "\")";
    case Tree::Not:
      return "NOT(" + render(pool, t.a) + ")";
    case Tree::And:
      return "AND(" + render(pool, t.a) + ", " + render(pool, t.b) + ")";
    case Tree::Or:
      return "OR(" + render(pool, t.a) + ", " + render(pool, t.b) + ")";
  }
  return {};
}

/// Truth given the bitmask of uids present in the stream.
inline bool truth(const std::vector<Tree>& pool, int i, unsigned present) {
  const Tree& t = pool[i];
  switch (t.op) {
    case Tree::Event:
      return (present >> t.uid) & 1u;
    case Tree::Not:
      return !truth(pool, t.a, present);
    case Tree::And:
      return truth(pool, t.a, present) && truth(pool, t.b, present);
    case Tree::Or:
      return truth(pool, t.a, present) || truth(pool, t.b, present);
  }
  return false;
}

/// All sequences of length 0..max_len over `alphabet` symbols.
inline std::vector<std::vector<int>> enumerate_streams(int alphabet, int max_len) {
  std::vector<std::vector<int>> out{{}};
  std::vector<std::vector<int>> layer{{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto& s : layer)
      for (int u = 0; u < alphabet; ++u) {
        auto t = s;
        t.push_back(u);
        next.push_back(std::move(t));
      }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

inline unsigned present_mask(const std::vector<int>& stream) {
  unsigned m = 0;
  for (int u : stream) m |= 1u << u;
  return m;
}

// ---------------------------------------------------------------------------
// Event streams with times and parameters

struct Ev {
  int uid;
  double time;
  int k;  // value of the "k" parameter
};

inline EvalContext context(const std::vector<Ev>& stream, int alphabet, const Trace* trace = nullptr) {
  EvalContext ctx;
  ctx.trace = trace;
  for (const Ev& e : stream) {
    AnnotatedEvent a;
    a.time = e.time;
    a.uid = uid_name(e.uid);
    a.label = label_name(e.uid);
    a.parameters = {{"k", e.k}};
    ctx.events.push_back(a);
  }
  std::stable_sort(ctx.events.begin(), ctx.events.end(),
                   [](const AnnotatedEvent& x, const AnnotatedEvent& y) { return x.time < y.time; });
  for (int u = 0; u < alphabet; ++u) ctx.known.emplace_back(uid_name(u), label_name(u));
  return ctx;
}

/// Stream i-th element at time (i+1)/(n+1), all with k = 0.
inline std::vector<Ev> timed(const std::vector<int>& uids) {
  std::vector<Ev> out;
  const double n = static_cast<double>(uids.size());
  for (std::size_t i = 0; i < uids.size(); ++i) out.push_back({uids[i], (static_cast<double>(i) + 1.0) / (n + 1.0), 0});
  return out;
}

inline bool matches(const Ev& e, int uid, std::optional<int> k) { return e.uid == uid && (!k || e.k == *k); }

/// a occurs strictly after b, with the gap inside [lo, hi].
inline bool after(const std::vector<Ev>& s, int a, int b, double lo, double hi, std::optional<int> ka = {},
                  std::optional<int> kb = {}) {
  for (const Ev& x : s)
    for (const Ev& y : s) {
      if (!matches(x, a, ka) || !matches(y, b, kb)) continue;
      const double d = x.time - y.time;
      if (d > 0.0 && d >= lo && d <= hi) return true;
    }
  return false;
}

inline int count(const std::vector<Ev>& s, int uid, std::optional<int> k = {}) {
  int c = 0;
  for (const Ev& e : s) c += matches(e, uid, k);
  return c;
}

// ---------------------------------------------------------------------------
// Shaping, written out from the closed forms

inline double nearby_score(double dist, double strength) {
  const double thr = strength * 256.0;
  if (dist <= thr) return 1.0;
  const double v = 1.0 - std::log(1.0 + (dist - thr)) / std::log(257.0);
  return std::min(1.0, std::max(0.0, v));
}

inline double count_score(double deviation) {
  const double v = 1.0 - std::log(1.0 + std::fabs(deviation)) / std::log(11.0);
  return std::min(1.0, std::max(0.0, v));
}

// ---------------------------------------------------------------------------
// Random AND programs with a known score

/// A single dynamic circle (id 0) moving on x = 20 + 128u, y = 30 + 64u.
/// With 129 frames every stored position is exact, so the interpolated
/// position at any t is the analytic one.
inline Trace linear_trace() {
  const std::vector<SceneObject> scene{fixtures::ball(0, Color::Green, {20.0, 30.0}, 6.0)};
  return fixtures::moving_circles(scene, 129, [](int, double u) { return Vec2{20.0 + 128.0 * u, 30.0 + 64.0 * u}; });
}

struct RandomProgram {
  std::string text;
  std::vector<double> clause_scores;
  double score = 0.0;
  bool satisfied = false;
};

/// Random AND over a fixed stream. Clause kinds cover every predicate.
inline RandomProgram random_and(std::mt19937_64& rng, const std::vector<Ev>& stream, int alphabet) {
  std::uniform_int_distribution<int> kind(0, 8), uid(0, alphabet - 1), small(0, 4), coin(0, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0), coord(0.0, 256.0), strength(0.02, 0.3);
  const auto num = [](double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  const auto q = [](int u) { return "\"" + uid_name(u) + "\""; };

  RandomProgram p;
  const int k = 1 + small(rng);
  std::string body;
  for (int c = 0; c < k; ++c) {
    std::string clause;
    double score = 0.0;
    switch (kind(rng)) {
      case 0: {
        const int u = uid(rng);
        if (coin(rng)) {
          const int kv = coin(rng);
          clause = "EVENT(" + q(u) + ", {\"k\": " + std::to_string(kv) + "})";
          score = count(stream, u, kv) > 0;
        } else {
          clause = "EVENT(" + q(u) + ")";
          score = count(stream, u) > 0;
        }
        break;
      }
      case 1: {
        const int u = uid(rng);
        clause = "NOT(EVENT(" + q(u) + "))";
        score = count(stream, u) == 0;
        break;
      }
      case 2: {
        const int a = uid(rng), b = uid(rng);
        clause = "OR(EVENT(" + q(a) + "), EVENT(" + q(b) + "))";
        score = count(stream, a) > 0 || count(stream, b) > 0;
        break;
      }
      case 3: {
        const int a = uid(rng), b = uid(rng);
        const double lo = coin(rng) ? 0.0 : 0.3 * unit(rng);
        const double hi = coin(rng) ? std::numeric_limits<double>::infinity() : lo + 0.5 * unit(rng);
        clause = "AFTER(" + q(a) + ", " + q(b) + ", min_delta=" + num(lo);
        if (std::isfinite(hi)) clause += ", max_delta=" + num(hi);
        clause += ")";
        score = after(stream, a, b, lo, hi);
        break;
      }
      case 4: {
        const int a = uid(rng), b = uid(rng);
        const double w = unit(rng);
        clause = "WITHIN(" + q(a) + ", " + q(b) + ", " + num(w) + ")";
        score = after(stream, a, b, 0.0, w);
        break;
      }
      case 5:
      case 6:
      case 7: {
        static const char* names[] = {"COUNT", "GT", "LT"};
        const int which = c % 3;
        const int u = uid(rng), want = small(rng);
        const int have = count(stream, u);
        clause = std::string(names[which]) + "(" + q(u) + ", " + std::to_string(want) + ")";
        const bool ok = which == 0 ? have == want : which == 1 ? have > want : have < want;
        const double dev = which == 0 ? std::abs(have - want) : which == 1 ? want + 1 - have : have - want + 1;
        score = ok ? 1.0 : count_score(dev);
        break;
      }
      default: {
        const double t = unit(rng), x = coord(rng), y = coord(rng), s = strength(rng);
        clause = "NEARBY_AT(0, " + num(x) + ", " + num(y) + ", " + num(t) + ", threshold_strength=" + num(s) + ")";
        const double d = std::hypot(20.0 + 128.0 * t - x, 30.0 + 64.0 * t - y);
        score = nearby_score(d, s);
        break;
      }
    }
    body += (c ? ", " : "") + clause;
    p.clause_scores.push_back(score);
  }
  p.text = "AND(" + body + ")";
  double total = 0.0;
  p.satisfied = true;
  for (double s : p.clause_scores) {
    total += s;
    p.satisfied = p.satisfied && s == 1.0;
  }
  p.score = total / static_cast<double>(k);
  return p;
}

}  // namespace reward_oracle
