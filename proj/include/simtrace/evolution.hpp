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

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "simtrace/annotation.hpp"
#include "simtrace/metrics.hpp"

namespace simtrace {

inline constexpr double kDegenerate = -std::numeric_limits<double>::infinity();

/// ln(min(lines, 1000)) / 5.
double length_penalty(std::size_t lines);
/// 0 up to mu, linear to 1 at 2 mu; mu <= 0 means no reference, penalty 0.
double time_penalty(double t, double mu);

struct FitnessReport {
  double rho = 0.0;
  double eta = 0.0;
  double eta_raw = 0.0;
  double lambda = 0.0;
  double psi = 0.0;
  double nu = kDegenerate;
  bool degenerate = false;
  std::string diagnostic;

  /// One entry per unordered trace pair (l < m), in lexicographic pair order.
  std::vector<double> dx;
  std::vector<double> dp;
  /// Two entries per pair: novelty on trace l, then on trace m.
  std::vector<double> dnovel;
  /// Candidate time proxy (interpreter steps per trace) and library mean.
  double candidate_cost = 0.0;
  double library_cost = 0.0;
  /// Active frame indices of the candidate per trace.
  std::vector<std::vector<std::size_t>> activations;

  Json to_json() const;
};

struct FitnessOptions {
  std::size_t bins = kDefaultBins;
  std::size_t samples = kDefaultSamples;
  bool directional = false;
  std::uint64_t step_budget = 1'000'000;
  /// Fraction of frames above which a candidate is degenerate.
  double max_fire_rate = 0.9;
};

/// Holds per-trace library annotations and pairwise trace distances so that
/// many candidates can be scored against the same setting.
class FitnessEvaluator {
 public:
  FitnessEvaluator(std::vector<Trace> traces, PatternLibrary library, FitnessOptions options = {});
  ~FitnessEvaluator();
  FitnessEvaluator(const FitnessEvaluator&) = delete;
  FitnessEvaluator& operator=(const FitnessEvaluator&) = delete;

  FitnessReport evaluate(const DetectorProgram& candidate) const;

  const std::vector<Trace>& traces() const { return traces_; }
  const PatternLibrary& library() const { return library_; }
  const std::vector<AnnotationMatrix>& annotations() const { return annotations_; }
  const FitnessOptions& options() const { return options_; }
  /// Mean interpreter steps per trace over library detectors; 0 when empty.
  double library_cost() const { return library_cost_; }

 private:
  std::vector<Trace> traces_;
  PatternLibrary library_;
  FitnessOptions options_;
  std::vector<std::unique_ptr<AnnotationContext>> contexts_;
  std::vector<AnnotationMatrix> annotations_;
  std::vector<double> pair_dx_;
  double library_cost_ = 0.0;
};

FitnessReport evaluate_fitness(const std::vector<Trace>& traces, const DetectorProgram& candidate,
                               const PatternLibrary& library, const FitnessOptions& options = {});

struct MutationRequest {
  std::vector<DetectorProgram> parents;
  std::uint64_t seed = 0;
  std::string label;
  std::string description;
  std::vector<std::string> library_labels;
  /// Parameter formats of the events a detector may read.
  std::string formattings;
};

struct Mutator {
  std::string name;
  /// False when proposals must be serialized (e.g. a shared transcript).
  bool concurrent_safe = true;
  std::function<std::string(const MutationRequest&)> propose;
};

Mutator grammar_mutator();
Mutator identity_mutator();

struct EvolutionConfig {
  std::size_t islands = 4;
  std::size_t prompt_size = 2;
  std::size_t reset_period = 50;
  std::size_t budget = 500;
  double delta = 0.3;
  double temperature = 0.5;
  std::size_t max_island_size = 50;
  std::uint64_t seed = 0;

  void validate() const;
  Json to_json() const;
};

struct ScoredProgram {
  DetectorProgram program;
  FitnessReport report;
};

struct Island {
  std::vector<ScoredProgram> programs;
  std::size_t best = 0;

  double best_score() const { return programs.empty() ? kDegenerate : programs[best].report.nu; }
  void insert(ScoredProgram p, std::size_t max_size);
};

/// Resets the `count` islands with the lowest best score (ties: lower index
/// first) to a single clone of `global_best`. Returns the reset indices.
std::vector<std::size_t> reset_worst_islands(std::vector<Island>& islands, std::size_t count,
                                             const ScoredProgram& global_best);

struct IterationLog {
  std::size_t iteration = 0;
  std::size_t island = 0;
  bool parsed = false;
  bool inserted = false;
  FitnessReport report;
  double best_so_far = kDegenerate;
  std::string source;
  std::string note;
};

struct FunsearchResult {
  ScoredProgram best;
  std::vector<double> best_history;  // best-so-far after each iteration
  std::vector<IterationLog> log;
};

using FitnessFunction = std::function<FitnessReport(const DetectorProgram&)>;

FunsearchResult funsearch(const FitnessFunction& evaluate, const DetectorProgram& g0, const Mutator& mutator,
                          const EvolutionConfig& config, const MutationRequest& context = {});

struct LabelSpec {
  std::string label;
  std::string description;
};

struct LabelOutcome {
  LabelSpec label;
  bool accepted = false;
  std::string uid;
  ScoredProgram best;
  std::vector<IterationLog> log;
};

struct DiscoveryResult {
  PatternLibrary library;
  std::vector<LabelOutcome> outcomes;

  /// JSON lines: one record per iteration per label.
  std::string log_jsonl() const;
};

/// Uid assigned to an accepted label.
std::string discovered_uid(const std::string& label);

DiscoveryResult discover(const std::vector<Trace>& traces, const std::vector<LabelSpec>& labels,
                         const DetectorProgram& g0, const Mutator& mutator, const EvolutionConfig& config,
                         const PatternLibrary& initial = {}, const FitnessOptions& fitness = {});

}  // namespace simtrace
