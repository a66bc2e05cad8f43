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

#include "fitness_oracle.hpp"
#include "fixtures.hpp"
#include "simtrace/evolution.hpp"
#include "simtrace/rng.hpp"
#include "simtrace/trace_io.hpp"

using namespace simtrace;

namespace {

constexpr const char* kCollision = R"(DETECT hit WHERE event_active("CollisionStart"))";
constexpr const char* kNever = "DETECT g WHERE speed(1) > 1000";

PatternLibrary fast_library() {
  PatternLibrary lib;
  lib.detectors.push_back(make_detector("abstraction_000001", "fast green", "green moves fast", Origin::Guided,
                                        "DETECT fast WHERE speed(0) > 150"));
  link_library(lib);
  return lib;
}

ScoredProgram scored(const std::string& src, double nu) {
  ScoredProgram p{parse_detector(src), {}};
  p.report.nu = nu;
  return p;
}

}  // namespace

TEST_CASE("length penalty") {
  CHECK(length_penalty(1) == 0.0);
  CHECK(std::abs(length_penalty(1000) - 1.3816) < 1e-3);
  CHECK(length_penalty(148) == doctest::Approx(std::log(148.0) / 5.0));
  CHECK(std::abs(length_penalty(148) - 0.9996) < 1e-3);
  CHECK(length_penalty(5000) == length_penalty(1000));
  for (std::size_t n = 1; n < 1200; ++n) CHECK(length_penalty(n + 1) >= length_penalty(n));
}

TEST_CASE("time penalty") {
  CHECK(time_penalty(2.0, 2.0) == 0.0);
  CHECK(time_penalty(1.0, 2.0) == 0.0);
  CHECK(time_penalty(3.0, 2.0) == 0.5);
  CHECK(time_penalty(4.0, 2.0) == 1.0);
  CHECK(time_penalty(6.0, 2.0) == 1.0);
  CHECK(time_penalty(5.0, 0.0) == 0.0);
}

TEST_CASE("fitness decomposition matches the oracle") {
  Rng rng(77);
  const std::vector<std::string> pool{"DETECT fast WHERE speed(0) > 150",
                                      "DETECT slow PARAMS {object_id:int} WHERE exists_object(o, dynamic, "
                                      "speed(o) < 20) EMIT {object_id:o}",
                                      kCollision};
  DetectorProgram seed = parse_detector("DETECT s WHERE exists_object(o, dynamic, pos_x(o) > 100)");
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto traces = fixtures::planted_family(rng.index(1000), 3 + static_cast<int>(rng.index(3)), 60 + 20 * static_cast<int>(rng.index(3)),
                                                 rng.coin(), 2.0 + rng.uniform(0, 20));
    PatternLibrary lib;
    const std::size_t nlib = rng.index(3);
    for (std::size_t j = 0; j < nlib; ++j)
      lib.detectors.push_back(make_detector("u" + std::to_string(j), "p" + std::to_string(j), "", Origin::Guided,
                                            pool[(trial + j) % pool.size()]));
    link_library(lib);
    DetectorProgram cand = trial % 3 == 0 ? parse_detector(pool[rng.index(pool.size())]) : seed;
    if (trial % 3 != 0)
      for (int m = 0; m < 1 + static_cast<int>(rng.index(4)); ++m) cand = parse_detector(grammar_mutate({cand, parse_detector(kCollision)}, rng.index(1u << 30)));
    const FitnessReport r = evaluate_fitness(traces, cand, lib);
    const oracles::FitnessTerms o = oracles::fitness(traces, cand, lib);
    REQUIRE(r.degenerate == o.degenerate);
    if (r.degenerate) {
      CHECK(r.nu == kDegenerate);
      continue;
    }
    ++checked;
    CHECK(std::abs(r.nu - (r.rho + r.eta - r.lambda - r.psi)) < 1e-12);
    CHECK(std::abs(r.rho - o.rho) < 1e-9);
    CHECK(std::abs(r.eta - o.eta) < 1e-9);
    CHECK(std::abs(r.lambda - o.lambda) < 1e-12);
    CHECK(std::abs(r.psi - o.psi) < 1e-12);
    CHECK(std::abs(r.nu - o.nu) < 1e-9);
  }
  CHECK(checked >= 20);
}

TEST_CASE("degenerate candidates") {
  const auto traces = fixtures::planted_family(1, 4, 60);
  const FitnessReport every = evaluate_fitness(traces, parse_detector("DETECT x WHERE true"), {});
  CHECK(every.degenerate);
  CHECK(every.nu == kDegenerate);
  const FitnessReport never = evaluate_fitness(traces, parse_detector(kNever), {});
  CHECK(never.degenerate);
  CHECK(never.diagnostic == "never fires");
  CHECK(evaluate_fitness(traces, parse_detector(R"(DETECT x WHERE event_active("missing"))"), {}).degenerate);
}

TEST_CASE("a behavioural twin of a library detector sits at the self-comparison value") {
  const auto traces = fixtures::planted_family(2, 6, 80);
  PatternLibrary lib;
  lib.detectors.push_back(make_detector("twin", "twin", "", Origin::Guided, kCollision));
  link_library(lib);
  const FitnessReport r = evaluate_fitness(traces, parse_detector(kCollision), lib);
  REQUIRE(!r.degenerate);
  // d_novel per trace is H(p, p), the entropy of the column's own histogram
  std::size_t k = 0;
  for (std::size_t l = 0; l < traces.size(); ++l)
    for (std::size_t m = l + 1; m < traces.size(); ++m)
      for (std::size_t i : {l, m}) {
        const auto h = oracles::histogram(r.activations[i], traces[i].frames.size(), 10);
        CHECK(r.dnovel[k++] == doctest::Approx(oracles::cross_entropy(h, h)).epsilon(1e-12));
      }
}

TEST_CASE("planted collision detector correlates with trace distance") {
  const auto traces = fixtures::planted_family(5, 10, 120);
  const FitnessReport r = evaluate_fitness(traces, parse_detector(kCollision), fast_library());
  REQUIRE(!r.degenerate);
  CHECK(r.rho >= 0.9);
  std::size_t k = 0;
  for (std::size_t l = 0; l < traces.size(); ++l)
    for (std::size_t m = l + 1; m < traces.size(); ++m, ++k)
      CHECK(std::abs(r.dx[k] - oracles::trace_distance(traces[l], traces[m], 100)) < 1e-12);
}

TEST_CASE("island reset follows the worst ranking") {
  std::vector<Island> islands(4);
  const double best[] = {3, 1, 2, 0};
  for (int i = 0; i < 4; ++i) islands[i].insert(scored("DETECT i" + std::to_string(i) + " WHERE true", best[i]), 10);
  const ScoredProgram global = scored("DETECT top WHERE true", 5);
  const auto reset = reset_worst_islands(islands, 2, global);
  CHECK(std::set<std::size_t>(reset.begin(), reset.end()) == std::set<std::size_t>{1, 3});
  for (std::size_t i : {1u, 3u}) {
    REQUIRE(islands[i].programs.size() == 1);
    CHECK(islands[i].best_score() == 5);
    CHECK(islands[i].programs[0].program.name == "top");
  }
  CHECK(islands[0].best_score() == 3);
  CHECK(islands[2].best_score() == 2);

  std::vector<Island> tied(4);
  for (auto& isl : tied) isl.insert(scored("DETECT t WHERE true", 1), 10);
  const auto r2 = reset_worst_islands(tied, 2, global);
  CHECK(std::set<std::size_t>(r2.begin(), r2.end()) == std::set<std::size_t>{0, 1});
}

TEST_CASE("identity mutator is a fixed point") {
  const auto traces = fixtures::planted_family(3, 6, 80);
  FitnessEvaluator ev(traces, fast_library());
  const DetectorProgram g0 = parse_detector(kCollision);
  EvolutionConfig cfg;
  cfg.budget = 40;
  cfg.reset_period = 10;
  const FunsearchResult r = funsearch([&](const DetectorProgram& p) { return ev.evaluate(p); }, g0,
                                      identity_mutator(), cfg);
  CHECK(print_detector(r.best.program) == print_detector(g0));
  CHECK(r.best.report.nu == ev.evaluate(g0).nu);
  CHECK(r.best_history.size() == cfg.budget);
  for (double v : r.best_history) CHECK(v == r.best.report.nu);
}

TEST_CASE("funsearch recovers the planted detector, monotone and reproducible") {
  const auto traces = fixtures::planted_family(7, 10, 120);
  FitnessEvaluator ev(traces, fast_library());
  EvolutionConfig cfg;
  cfg.seed = 7;
  cfg.budget = 500;
  auto eval = [&](const DetectorProgram& p) { return ev.evaluate(p); };
  const FunsearchResult a = funsearch(eval, parse_detector(kNever), grammar_mutator(), cfg);
  const FunsearchResult b = funsearch(eval, parse_detector(kNever), grammar_mutator(), cfg);
  CHECK(a.best.report.nu >= cfg.delta);
  CHECK(print_detector(a.best.program) == print_detector(b.best.program));
  CHECK(a.best_history == b.best_history);
  for (std::size_t i = 1; i < a.best_history.size(); ++i) CHECK(a.best_history[i] >= a.best_history[i - 1]);
  CHECK(a.log.size() == cfg.budget);
}

TEST_CASE("config validation") {
  EvolutionConfig c;
  c.islands = 1;
  CHECK_THROWS(c.validate());
  EvolutionConfig d;
  d.budget = 2;
  CHECK_THROWS(d.validate());
  CHECK_NOTHROW(EvolutionConfig{}.validate());
}

TEST_CASE("discovery gate") {
  const auto traces = fixtures::planted_family(11, 8, 100);
  EvolutionConfig cfg;
  cfg.budget = 200;
  cfg.seed = 3;
  const DetectorProgram g0 = parse_detector(kNever);
  cfg.delta = std::numeric_limits<double>::infinity();
  CHECK(discover(traces, {{"collision", "two balls meet"}}, g0, grammar_mutator(), cfg).library.detectors.empty());

  cfg.delta = 0.3;
  const DiscoveryResult one = discover(traces, {{"collision", "two balls meet"}}, g0, grammar_mutator(), cfg);
  REQUIRE(one.library.detectors.size() == 1);
  CHECK(one.library.detectors[0].uid == discovered_uid("collision"));
  CHECK(one.library.detectors[0].origin == Origin::Guided);
  CHECK(one.outcomes[0].accepted);
  const DiscoveryResult again = discover(traces, {{"collision", "two balls meet"}}, g0, grammar_mutator(), cfg);
  CHECK(canonical_dump(library_to_json(again.library)) == canonical_dump(library_to_json(one.library)));
  CHECK(again.log_jsonl() == one.log_jsonl());
}

TEST_CASE("a redundant second label is rejected through low novelty") {
  // Every trace collides, at different places, so the collision column is a
  // point mass everywhere and a twin scores eta close to 0.
  const auto traces = fixtures::planted_family(13, 8, 100, true, 25.0);
  EvolutionConfig cfg;
  cfg.budget = 10;
  cfg.delta = 0.9;
  const DetectorProgram g0 = parse_detector(kCollision);
  const DiscoveryResult r =
      discover(traces, {{"collision", "balls meet"}, {"impact", "balls meet again"}}, g0, identity_mutator(), cfg);
  REQUIRE(r.outcomes.size() == 2);
  CHECK(r.outcomes[0].accepted);
  CHECK_FALSE(r.outcomes[1].accepted);
  CHECK(r.library.detectors.size() == 1);
  PatternLibrary first;
  first.detectors.push_back(r.library.detectors[0]);
  const oracles::FitnessTerms o = oracles::fitness(traces, g0, first);
  CHECK(o.eta < 0.01);
  CHECK(r.outcomes[1].best.report.eta == doctest::Approx(o.eta).epsilon(1e-9));
  CHECK(r.outcomes[1].best.report.nu <= cfg.delta);
}
