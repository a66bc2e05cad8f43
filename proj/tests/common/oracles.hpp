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

// Independent reference implementations used as test oracles.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracles {

inline double cross_entropy(const std::vector<double>& p, const std::vector<double>& q) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) h += -p[i] * std::log(q[i]);
  return h;
}

inline double symmetric_ce(const std::vector<double>& p, const std::vector<double>& q) {
  return (cross_entropy(p, q) + cross_entropy(q, p)) / 2.0;
}

/// Textbook Pearson: two-pass means, then covariance over the product of
/// standard deviations.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Smoothed activation histogram written out from the definition.
inline std::vector<double> histogram(const std::vector<std::size_t>& frames, std::size_t n, std::size_t b,
                                     double eps = 1e-6) {
  std::vector<double> h(b, 0.0);
  if (frames.empty()) return std::vector<double>(b, 1.0 / b);
  for (std::size_t f : frames) {
    std::size_t k = static_cast<std::size_t>(std::floor(static_cast<double>(f) / (n - 1) * b));
    if (k >= b) k = b - 1;
    h[k] += 1.0;
  }
  for (double& v : h) v = (v / frames.size() + eps) / (1.0 + b * eps);
  return h;
}

}  // namespace oracles
