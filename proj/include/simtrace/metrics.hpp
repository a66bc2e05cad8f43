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

#include <vector>

#include "simtrace/annotation.hpp"
#include "simtrace/trace.hpp"

namespace simtrace {

inline constexpr double kHistogramEpsilon = 1e-6;
inline constexpr std::size_t kDefaultBins = 10;
inline constexpr std::size_t kDefaultSamples = 100;

struct Histogram {
  std::vector<double> bins;
  std::size_t size() const { return bins.size(); }
};

class UndefinedDistanceError : public Error {
 public:
  using Error::Error;
};

/// Mean distance of shared dynamic objects over resampled normalized time, in
/// scene-extent units.
double trace_distance(const Trace& a, const Trace& b, std::size_t samples = kDefaultSamples);

Histogram pattern_histogram(const std::vector<std::size_t>& activations, std::size_t frames,
                            std::size_t bins = kDefaultBins);

/// H(p, q) = -sum p_i ln q_i.
double cross_entropy(const Histogram& p, const Histogram& q);
double symmetric_cross_entropy(const Histogram& p, const Histogram& q);

/// Per-column distance; `directional` uses H(p, q) alone.
double column_distance(const std::vector<std::size_t>& a, std::size_t frames_a, const std::vector<std::size_t>& b,
                       std::size_t frames_b, std::size_t bins = kDefaultBins, bool directional = false);

/// Mean column distance over the outer join of both matrices' uids.
double annotation_distance(const AnnotationMatrix& a, const AnnotationMatrix& b, std::size_t bins = kDefaultBins,
                           bool directional = false);

/// Pearson correlation; 0 when either side has zero variance.
double correlation(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace simtrace
