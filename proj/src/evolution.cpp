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

#include "simtrace/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "simtrace/rng.hpp"
#include "simtrace/trace_io.hpp"

namespace simtrace {

double length_penalty(std::size_t lines) {
  if (lines < 1) throw Error("line count must be at least 1");
  return std::log(static_cast<double>(std::min<std::size_t>(lines, 1000))) / 5.0;
}

double time_penalty(double t, double mu) {
  if (t < 0.0) throw Error("time must be non-negative");
  if (mu <= 0.0 || t <= mu) return 0.0;
  if (t >= 2.0 * mu) return 1.0;
  return (t - mu) / mu;
}

namespace {

Json finite_or_null(double v) { return std::isfinite(v) ? Json(canonical_double(v)) : Json(nullptr); }

}  // namespace

Json FitnessReport::to_json() const {
  return Json{{"nu", finite_or_null(nu)},   {"rho", finite_or_null(rho)},       {"eta", finite_or_null(eta)},
              {"lambda", finite_or_null(lambda)}, {"psi", finite_or_null(psi)}, {"degenerate", degenerate},
              {"diagnostic", diagnostic}};
}

FitnessEvaluator::FitnessEvaluator(std::vector<Trace> traces, PatternLibrary library, FitnessOptions options)
    : traces_(std::move(traces)), library_(std::move(library)), options_(options) {
  if (traces_.size() < 2) throw Error("fitness evaluation needs at least 2 traces");
  std::uint64_t steps = 0;
  std::size_t runs = 0;
  for (const Trace& t : traces_) {
    contexts_.push_back(std::make_unique<AnnotationContext>(t));
    std::vector<DetectorTiming> timings;
    annotations_.push_back(annotate_in_context(library_, *contexts_.back(), {true, options_.step_budget}, &timings));
    for (const DetectorTiming& d : timings) {
      steps += d.steps;
      ++runs;
    }
  }
  library_cost_ = runs ? static_cast<double>(steps) / static_cast<double>(runs) : 0.0;
  for (std::size_t l = 0; l < traces_.size(); ++l)
    for (std::size_t m = l + 1; m < traces_.size(); ++m)
      pair_dx_.push_back(trace_distance(traces_[l], traces_[m], options_.samples));
}

FitnessEvaluator::~FitnessEvaluator() = default;

FitnessReport FitnessEvaluator::evaluate(const DetectorProgram& candidate) const {
  FitnessReport r;
  r.lambda = length_penalty(static_cast<std::size_t>(program_length(candidate)));
  const std::size_t n = traces_.size();
  std::uint64_t steps = 0;
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    RunResult run;
    try {
      run = run_detector(candidate, traces_[i], *contexts_[i], {options_.step_budget});
    } catch (const Error& e) {
      r.degenerate = true;
      r.diagnostic = "trace " + std::to_string(i) + ": " + e.what();
      return r;
    }
    steps += run.steps;
    const double frames = static_cast<double>(traces_[i].frames.size());
    if (static_cast<double>(run.active_frames.size()) > options_.max_fire_rate * frames) {
      r.degenerate = true;
      r.diagnostic = "fires on more than " + std::to_string(static_cast<int>(options_.max_fire_rate * 100)) +
                     "% of frames on trace " + std::to_string(i);
      return r;
    }
    any = any || !run.active_frames.empty();
    r.activations.push_back(std::move(run.active_frames));
  }
  if (!any) {
    r.degenerate = true;
    r.diagnostic = "never fires";
    return r;
  }
  r.candidate_cost = static_cast<double>(steps) / static_cast<double>(n);
  r.library_cost = library_cost_;
  r.psi = time_penalty(r.candidate_cost, library_cost_);

  auto novelty = [&](std::size_t i) {
    const AnnotationMatrix& a = annotations_[i];
    double total = 0.0;
    for (const auto& col : a.columns)
      total += column_distance(r.activations[i], a.frames, col, a.frames, options_.bins, options_.directional);
    return total / static_cast<double>(a.columns.size());
  };
  std::size_t k = 0;
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t m = l + 1; m < n; ++m, ++k) {
      r.dx.push_back(pair_dx_[k]);
      r.dp.push_back(column_distance(r.activations[l], traces_[l].frames.size(), r.activations[m],
                                     traces_[m].frames.size(), options_.bins, options_.directional));
      if (!library_.detectors.empty()) {
        r.dnovel.push_back(novelty(l));
        r.dnovel.push_back(novelty(m));
      }
    }
  r.rho = correlation(r.dx, r.dp);
  if (library_.detectors.empty()) {
    r.eta_raw = 0.0;
    r.eta = 1.0;
  } else {
    double sum = 0.0;
    for (double v : r.dnovel) sum += v;
    r.eta_raw = sum / static_cast<double>(r.dnovel.size());
    r.eta = r.eta_raw / (r.eta_raw + std::log(static_cast<double>(options_.bins)));
  }
  r.nu = r.rho + r.eta - r.lambda - r.psi;
  return r;
}

FitnessReport evaluate_fitness(const std::vector<Trace>& traces, const DetectorProgram& candidate,
                               const PatternLibrary& library, const FitnessOptions& options) {
  return FitnessEvaluator(traces, library, options).evaluate(candidate);
}

Mutator grammar_mutator() {
  return {"grammar", true, [](const MutationRequest& req) { return grammar_mutate(req.parents, req.seed); }};
}

Mutator identity_mutator() {
  return {"identity", true, [](const MutationRequest& req) { return req.parents.front().source; }};
}

void EvolutionConfig::validate() const {
  if (islands < 2) throw Error("evolution needs at least 2 islands");
  if (prompt_size < 1) throw Error("prompt size must be at least 1");
  if (budget < islands) throw Error("budget must be at least the island count");
  if (reset_period < 1) throw Error("reset period must be at least 1");
  if (temperature <= 0.0) throw Error("island temperature must be positive");
  if (max_island_size < prompt_size) throw Error("island size must hold a full prompt");
}

Json EvolutionConfig::to_json() const {
  return Json{{"islands", islands},         {"prompt_size", prompt_size},
              {"reset_period", reset_period}, {"budget", budget},
              {"delta", delta},             {"temperature", temperature},
              {"max_island_size", max_island_size}, {"seed", seed}};
}

void Island::insert(ScoredProgram p, std::size_t max_size) {
  programs.push_back(std::move(p));
  if (programs.size() > max_size) {
    std::size_t worst = 0;
    for (std::size_t i = 1; i < programs.size(); ++i)
      if (programs[i].report.nu <= programs[worst].report.nu) worst = i;
    programs.erase(programs.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  best = 0;
  for (std::size_t i = 1; i < programs.size(); ++i)
    if (programs[i].report.nu > programs[best].report.nu) best = i;
}

std::vector<std::size_t> reset_worst_islands(std::vector<Island>& islands, std::size_t count,
                                             const ScoredProgram& global_best) {
  std::vector<std::size_t> order(islands.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return islands[a].best_score() < islands[b].best_score(); });
  order.resize(std::min(count, order.size()));
  std::sort(order.begin(), order.end());
  for (std::size_t i : order) {
    islands[i].programs = {global_best};
    islands[i].best = 0;
  }
  return order;
}

FunsearchResult funsearch(const FitnessFunction& evaluate, const DetectorProgram& g0, const Mutator& mutator,
                          const EvolutionConfig& config, const MutationRequest& context) {
  config.validate();
  std::map<std::string, FitnessReport> cache;
  auto score = [&](const DetectorProgram& p) {
    const std::string key = print_detector(p);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, evaluate(p)).first;
    return it->second;
  };

  FunsearchResult out;
  out.best = {g0, score(g0)};
  std::vector<Island> islands(config.islands);
  for (Island& island : islands) island.insert(out.best, config.max_island_size);

  Rng rng(mix_seed(config.seed));
  for (std::size_t iter = 0; iter < config.budget; ++iter) {
    IterationLog entry;
    entry.iteration = iter;

    // Softmax over island best scores; islands without a finite score only
    // compete when no island has one.
    double top = kDegenerate;
    for (const Island& island : islands) top = std::max(top, island.best_score());
    std::vector<double> weights;
    double total = 0.0;
    for (const Island& island : islands) {
      const double w = std::isfinite(top) ? std::exp((island.best_score() - top) / config.temperature) : 1.0;
      weights.push_back(w);
      total += w;
    }
    double pick = rng.uniform() * total;
    std::size_t chosen = islands.size() - 1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (pick < weights[i]) {
        chosen = i;
        break;
      }
      pick -= weights[i];
    }
    entry.island = chosen;

    std::vector<const ScoredProgram*> ranked;
    for (const ScoredProgram& p : islands[chosen].programs) ranked.push_back(&p);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const ScoredProgram* a, const ScoredProgram* b) { return a->report.nu > b->report.nu; });
    MutationRequest req = context;
    req.parents.clear();
    for (std::size_t k = 0; k < std::min(config.prompt_size, ranked.size()); ++k)
      req.parents.push_back(ranked[k]->program);
    req.seed = mix_seed(config.seed ^ mix_seed(iter + 1));

    try {
      entry.source = mutator.propose(req);
      DetectorProgram child = parse_detector(entry.source);
      entry.parsed = true;
      entry.report = score(child);
      if (!entry.report.degenerate) {
        islands[chosen].insert({child, entry.report}, config.max_island_size);
        entry.inserted = true;
        if (entry.report.nu > out.best.report.nu) out.best = {child, entry.report};
      } else {
        entry.note = entry.report.diagnostic;
      }
    } catch (const Error& e) {
      entry.note = e.what();
    }

    if ((iter + 1) % config.reset_period == 0) reset_worst_islands(islands, config.islands / 2, out.best);
    entry.best_so_far = out.best.report.nu;
    out.best_history.push_back(out.best.report.nu);
    out.log.push_back(std::move(entry));
  }
  return out;
}

std::string discovered_uid(const std::string& label) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "abstraction_%06llu", static_cast<unsigned long long>(fnv1a(label) % 1000000ULL));
  return buf;
}

std::string DiscoveryResult::log_jsonl() const {
  std::string out;
  for (const LabelOutcome& o : outcomes)
    for (const IterationLog& e : o.log) {
      Json line = e.report.to_json();
      line["label"] = o.label.label;
      line["iteration"] = e.iteration;
      line["island"] = e.island;
      line["parsed"] = e.parsed;
      line["inserted"] = e.inserted;
      line["best_so_far"] = finite_or_null(e.best_so_far);
      out += canonical_dump(line) + "\n";
    }
  return out;
}

DiscoveryResult discover(const std::vector<Trace>& traces, const std::vector<LabelSpec>& labels,
                         const DetectorProgram& g0, const Mutator& mutator, const EvolutionConfig& config,
                         const PatternLibrary& initial, const FitnessOptions& fitness) {
  if (labels.empty()) throw Error("discovery needs at least one label");
  DiscoveryResult result;
  result.library = initial;
  for (std::size_t li = 0; li < labels.size(); ++li) {
    const LabelSpec& spec = labels[li];
    FitnessEvaluator evaluator(traces, result.library, fitness);
    MutationRequest context;
    context.label = spec.label;
    context.description = spec.description;
    context.library_labels = result.library.labels();
    Json formats = Json::array();
    for (const Json& d : library_to_json(result.library))
      formats.push_back(Json{{"uid", d["uid"]}, {"label", d["label"]}, {"parameters", d["parameters_schema"]}});
    context.formattings = formats.dump(2);
    EvolutionConfig cfg = config;
    cfg.seed = mix_seed(config.seed + li);
    FunsearchResult run = funsearch([&](const DetectorProgram& p) { return evaluator.evaluate(p); }, g0, mutator,
                                    cfg, context);
    LabelOutcome outcome;
    outcome.label = spec;
    outcome.best = run.best;
    outcome.log = std::move(run.log);
    if (!run.best.report.degenerate && run.best.report.nu > config.delta) {
      std::string uid = discovered_uid(spec.label);
      while (result.library.find(uid)) uid += "_";
      result.library.detectors.push_back(
          make_detector(uid, spec.label, spec.description, Origin::Guided, print_detector(run.best.program)));
      link_library(result.library);
      outcome.accepted = true;
      outcome.uid = uid;
    }
    result.outcomes.push_back(std::move(outcome));
  }
  return result;
}

}  // namespace simtrace
