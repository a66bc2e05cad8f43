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

#include "simtrace/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace simtrace {

namespace {

// Position of `id` at normalized time u, holding the last seen position when
// the object is missing from a frame.
std::vector<Vec2> resample(const Trace& t, int id, std::size_t samples) {
  const std::size_t n = t.frames.size();
  std::vector<Vec2> track(n);
  const SceneObject* initial = t.find_object(id);
  Vec2 last = initial ? initial->position() : Vec2{};
  for (std::size_t i = 0; i < n; ++i) {
    if (const SceneObject* o = t.frames[i].find(id)) last = o->position();
    track[i] = last;
  }
  std::vector<Vec2> out(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    if (n == 1) {
      out[k] = track[0];
      continue;
    }
    const double u = samples > 1 ? static_cast<double>(k) / static_cast<double>(samples - 1) : 0.0;
    const double f = u * static_cast<double>(n - 1);
    const auto i = std::min(static_cast<std::size_t>(f), n - 2);
    out[k] = lerp(track[i], track[i + 1], f - static_cast<double>(i));
  }
  return out;
}

std::set<int> dynamic_ids(const Trace& t) {
  std::set<int> ids;
  for (const SceneObject& o : t.scene)
    if (!o.is_static) ids.insert(o.id);
  return ids;
}

}  // namespace

double trace_distance(const Trace& a, const Trace& b, std::size_t samples) {
  if (samples == 0) throw Error("sample count must be positive");
  if (a.frames.empty() || b.frames.empty()) throw UndefinedDistanceError("trace distance needs non-empty traces");
  std::vector<int> shared;
  const std::set<int> ib = dynamic_ids(b);
  for (int id : dynamic_ids(a))
    if (ib.contains(id)) shared.push_back(id);
  if (shared.empty()) throw UndefinedDistanceError("traces share no dynamic object ids");
  double total = 0.0;
  for (int id : shared) {
    const auto pa = resample(a, id, samples);
    const auto pb = resample(b, id, samples);
    for (std::size_t k = 0; k < samples; ++k) total += distance(pa[k], pb[k]);
  }
  return total / static_cast<double>(shared.size() * samples) / kSceneExtent;
}

Histogram pattern_histogram(const std::vector<std::size_t>& activations, std::size_t frames, std::size_t bins) {
  if (bins < 2) throw Error("histogram needs at least 2 bins");
  Histogram h{std::vector<double>(bins, 0.0)};
  if (activations.empty()) {
    for (double& w : h.bins) w = 1.0 / static_cast<double>(bins);
    return h;
  }
  for (std::size_t f : activations) {
    if (f >= frames) throw Error("activation frame " + std::to_string(f) + " outside [0, " + std::to_string(frames) + ")");
    const double u = frames > 1 ? static_cast<double>(f) / static_cast<double>(frames - 1) : 0.0;
    const auto bin = std::min(static_cast<std::size_t>(u * static_cast<double>(bins)), bins - 1);
    h.bins[bin] += 1.0;
  }
  const double n = static_cast<double>(activations.size());
  const double norm = 1.0 + static_cast<double>(bins) * kHistogramEpsilon;
  for (double& w : h.bins) w = (w / n + kHistogramEpsilon) / norm;
  return h;
}

double cross_entropy(const Histogram& p, const Histogram& q) {
  if (p.size() != q.size()) throw Error("histograms differ in bin count");
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) h -= p.bins[i] * std::log(q.bins[i]);
  return h;
}

double symmetric_cross_entropy(const Histogram& p, const Histogram& q) {
  return 0.5 * (cross_entropy(p, q) + cross_entropy(q, p));
}

double column_distance(const std::vector<std::size_t>& a, std::size_t frames_a, const std::vector<std::size_t>& b,
                       std::size_t frames_b, std::size_t bins, bool directional) {
  const Histogram ha = pattern_histogram(a, frames_a, bins);
  const Histogram hb = pattern_histogram(b, frames_b, bins);
  return directional ? cross_entropy(ha, hb) : symmetric_cross_entropy(ha, hb);
}

double annotation_distance(const AnnotationMatrix& a, const AnnotationMatrix& b, std::size_t bins, bool directional) {
  if (bins < 2) throw Error("histogram needs at least 2 bins");
  std::set<std::string> uids(a.uids.begin(), a.uids.end());
  uids.insert(b.uids.begin(), b.uids.end());
  if (uids.empty()) return 0.0;
  double total = 0.0;
  for (const std::string& uid : uids)
    total += column_distance(a.column(uid), a.frames, b.column(uid), b.frames, bins, directional);
  return total / static_cast<double>(uids.size());
}

double correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw Error("correlation inputs differ in length");
  if (xs.size() < 2) throw Error("correlation needs at least 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  // Constant inputs leave rounding residue in the sums; treat that as zero.
  if (sxx <= 1e-24 * n * std::max(1.0, mx * mx) || syy <= 1e-24 * n * std::max(1.0, my * my)) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace simtrace
