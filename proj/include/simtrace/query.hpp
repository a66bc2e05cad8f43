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

#include <optional>
#include <string>
#include <vector>

#include "simtrace/annotation.hpp"
#include "simtrace/physics.hpp"

namespace simtrace {

/// Speed above which an object counts as moving, in scene units per unit of
/// normalized time. Shared by every template.
inline constexpr double kMovingThreshold = 0.5;

enum class AnswerType { Count, ObjectId, Percentage, YesNo, ObjectSet };
std::string_view to_string(AnswerType type);

struct TemplateInfo {
  std::string id;  // C1 .. C27
  std::vector<std::string> args;  // subset of color, color2, t0, t1, split, pattern
  AnswerType answer;
  std::string question;  // phrasing with {slot} placeholders
};

const std::vector<TemplateInfo>& question_templates();
const TemplateInfo& question_template(std::string_view id);

struct QuestionInstance {
  std::string template_id;
  Json args = Json::object();

  std::string text() const;
};

class QuestionError : public Error {
 public:
  using Error::Error;
};

struct QueryOptions {
  double moving_threshold = kMovingThreshold;
};

/// Counts and percentages are numbers, ids are integers (null when there is
/// none), yes/no is a boolean, object sets are sorted id lists.
Json answer(const QuestionInstance& q, const Trace& trace, const AnnotationMatrix* ast = nullptr,
            const QueryOptions& options = {});

struct BenchmarkItem {
  std::string scene_ref;
  Action action;
  bool near_miss = false;
  QuestionInstance question;
  Json answer;

  Json to_json() const;
};

struct BenchmarkOptions {
  std::size_t per_scene = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  double sigma_position = 8.0;
  double sigma_radius = 2.0;
  SimConfig sim;
};

/// `scenes` pairs a reference name with a scene that carries a solution.
std::vector<BenchmarkItem> generate_benchmark(const std::vector<std::pair<std::string, Scene>>& scenes,
                                              const PatternLibrary& library, const BenchmarkOptions& options);

}  // namespace simtrace
