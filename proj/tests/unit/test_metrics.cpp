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

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "simtrace/annotation.hpp"
#include "simtrace/metrics.hpp"
#include "simtrace/rng.hpp"

using namespace simtrace;

namespace {

Histogram h(std::vector<double> bins) { return Histogram{std::move(bins)}; }

std::vector<double> random_distribution(Rng& rng, std::size_t b) {
  std::vector<double> v(b);
  double s = 0;
  for (double& x : v) s += (x = rng.uniform(0.01, 1.0));
  for (double& x : v) x /= s;
  return v;
}

}  // namespace

TEST_CASE("histogram binning") {
  std::vector<std::size_t> all(100);
  for (std::size_t i = 0; i < 100; ++i) all[i] = i;
  for (double v : pattern_histogram(all, 100, 4).bins) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  const double eps = kHistogramEpsilon;
  const Histogram point = pattern_histogram({0}, 100, 4);
  CHECK(point.bins[0] == doctest::Approx((1 + eps) / (1 + 4 * eps)).epsilon(1e-12));
  for (int k = 1; k < 4; ++k) CHECK(point.bins[k] == doctest::Approx(eps / (1 + 4 * eps)).epsilon(1e-12));
  for (double v : pattern_histogram({}, 100, 4).bins) CHECK(v == 0.25);
  CHECK(pattern_histogram({99}, 100, 4).bins[3] > 0.99);
  CHECK_THROWS(pattern_histogram({0}, 100, 1));
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.index(200);
    std::vector<std::size_t> act;
    for (std::size_t i = 0; i < n; ++i)
      if (rng.coin(0.2)) act.push_back(i);
    const std::size_t b = 2 + rng.index(12);
    const auto want = oracles::histogram(act, n, b);
    const auto got = pattern_histogram(act, n, b).bins;
    for (std::size_t k = 0; k < b; ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
  }
}

TEST_CASE("cross entropy closed forms") {
  const Histogram u = h({0.25, 0.25, 0.25, 0.25});
  CHECK(std::abs(symmetric_cross_entropy(u, u) - std::log(4.0)) < 1e-9);
  CHECK(std::abs(column_distance({}, 50, {}, 80, 4) - std::log(4.0)) < 1e-9);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_distribution(rng, 4);
    const auto q = random_distribution(rng, 4);
    CHECK(std::abs(cross_entropy(h(p), h(q)) - oracles::cross_entropy(p, q)) < 1e-9);
    CHECK(std::abs(symmetric_cross_entropy(h(p), h(q)) - oracles::symmetric_ce(p, q)) < 1e-9);
    CHECK(symmetric_cross_entropy(h(p), h(q)) == symmetric_cross_entropy(h(q), h(p)));
  }
  const double eps = kHistogramEpsilon;
  const double a = (1 + eps) / (1 + 4 * eps), e = eps / (1 + 4 * eps);
  const double want = oracles::symmetric_ce({a, e, e, e}, {e, e, e, a});
  CHECK(std::abs(column_distance({0}, 100, {99}, 100, 4) - want) < 1e-9);
  CHECK(want > 0.9 * std::log(1.0 / eps) / 2.0);
  CHECK_THROWS(cross_entropy(h({0.5, 0.5}), u));
}

TEST_CASE("annotation distance averages over the outer join") {
  AnnotationMatrix a, b;
  a.frames = 100;
  b.frames = 60;
  a.uids = {"u1"};
  a.labels = {"one"};
  a.columns = {{0, 5, 10}};
  b.uids = {"u1", "u2"};
  b.labels = {"one", "two"};
  b.columns = {{30, 59}, {1}};
  const double d1 = oracles::symmetric_ce(oracles::histogram({0, 5, 10}, 100, 10), oracles::histogram({30, 59}, 60, 10));
  const double d2 = oracles::symmetric_ce(oracles::histogram({}, 100, 10), oracles::histogram({1}, 60, 10));
  CHECK(std::abs(annotation_distance(a, b) - (d1 + d2) / 2.0) < 1e-9);
  CHECK(annotation_distance(AnnotationMatrix{}, AnnotationMatrix{}) == 0.0);
  const double dir = oracles::cross_entropy(oracles::histogram({0, 5, 10}, 100, 10), oracles::histogram({30, 59}, 60, 10));
  CHECK(std::abs(column_distance({0, 5, 10}, 100, {30, 59}, 60, 10, true) - dir) < 1e-9);
}

TEST_CASE("trace distance") {
  using fixtures::ball;
  const std::vector<SceneObject> scene{ball(0, Color::Green, {10, 10}, 5), ball(1, Color::Red, {50, 50}, 5),
                                       ball(2, Color::Black, {100, 10}, 5, true)};
  auto path = [](int id, double u) { return Vec2{20 + 100 * u + 30 * id, 40 + 60 * u * (1 - u)}; };
  const Trace a = fixtures::moving_circles(scene, 40, path);
  const Trace b = fixtures::moving_circles(scene, 40, [&](int id, double u) { return path(id, u) + Vec2{25.6, 0}; });
  CHECK(std::abs(trace_distance(a, b) - 0.1) < 1e-6);
  CHECK(trace_distance(a, a) == 0.0);
  CHECK(trace_distance(a, b) == trace_distance(b, a));

  // different lengths, linear paths: resampling is exact, so the oracle is analytic
  auto lin_a = [](int id, double u) { return Vec2{10 + 200 * u, 30.0 + id}; };
  auto lin_b = [](int id, double u) { return Vec2{10 + 100 * u, 90.0 + id}; };
  const Trace la = fixtures::moving_circles(scene, 31, lin_a);
  const Trace lb = fixtures::moving_circles(scene, 77, lin_b);
  double want = 0;
  const std::size_t samples = 50;
  for (std::size_t k = 0; k < samples; ++k) {
    const double u = double(k) / (samples - 1);
    want += 2 * distance(lin_a(0, u), lin_b(0, u));
  }
  want /= 2.0 * samples * 256.0;
  CHECK(trace_distance(la, lb, samples) == doctest::Approx(want).epsilon(1e-6));

  const Trace other = fixtures::moving_circles({ball(7, Color::Blue, {1, 1}, 2)}, 10, path);
  CHECK_THROWS_AS(trace_distance(a, other), UndefinedDistanceError);
}

TEST_CASE("correlation") {
  CHECK(correlation({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
  CHECK(correlation({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(correlation({4, 4, 4}, {1, 2, 3}) == 0.0);
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + rng.index(60);
    std::vector<double> x(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] = rng.normal() * 10;
      y[k] = 0.3 * x[k] + rng.normal();
    }
    CHECK(std::abs(correlation(x, y) - oracles::pearson(x, y)) < 1e-9);
  }
  CHECK_THROWS(correlation({1, 2}, {1}));
}
