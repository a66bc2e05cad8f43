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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "simtrace/annotation.hpp"

namespace simtrace {

enum class RKind { Literal, Call };

/// Reward expression: a call such as AND(...) or a literal argument value
/// (string, number, bool, None, dict, list).
struct RNode {
  RKind kind = RKind::Literal;
  std::string name;  // call name, upper case
  Json value;        // literal value; dicts/lists may not contain calls
  /// Dict or list literal entries that are calls (OBJECT_ID), by JSON pointer.
  std::vector<std::pair<std::string, std::shared_ptr<RNode>>> embedded;
  /// Bound arguments in signature order; null where an optional was omitted.
  std::vector<std::shared_ptr<RNode>> args;
  int line = 1;
  int column = 1;
};

struct RewardProgram {
  std::string source;
  std::shared_ptr<RNode> root;
  /// Score as {0, 1} from boolean satisfaction only.
  bool binary = false;
};

class RewardSyntaxError : public Error {
 public:
  RewardSyntaxError(int line, int column, std::string expected, std::string found, std::string hint);
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }
  const std::string& hint() const { return hint_; }

 private:
  int line_;
  int column_;
  std::string expected_;
  std::string found_;
  std::string hint_;
};

/// Unknown identifier or ill-typed argument found at evaluation time.
class RewardValidationError : public Error {
 public:
  using Error::Error;
};

/// `#` comments are stripped before parsing.
RewardProgram parse_reward(std::string_view source);
RewardProgram binary_reward(RewardProgram program);
std::string print_reward(const RewardProgram& program);
std::string print_reward(const RNode& node);

/// Names of the predicates and their parameter lists.
std::vector<std::string> reward_predicates();

struct EvalContext {
  const Trace* trace = nullptr;
  std::vector<AnnotatedEvent> events;  // sorted by time
  /// (uid, label) pairs that may be referenced besides the built-ins.
  std::vector<std::pair<std::string, std::string>> known;
  /// Read AFTER(a, b) as "a before b" instead of "a after b".
  bool swap_after = false;

  static EvalContext make(const Trace& trace, const AnnotationMatrix& matrix, const PatternLibrary* library = nullptr);
};

bool match_params(const Params& event, const Json& query);
bool match_event(const AnnotatedEvent& event, std::string_view uid_or_label, const Json& params = Json());

struct ClauseScore {
  std::string text;
  bool satisfied = false;
  double score = 0.0;
};

struct RewardResult {
  bool satisfied = false;
  double score = 0.0;
  std::vector<ClauseScore> clauses;

  Json to_json() const;
};

bool eval_bool(const RewardProgram& program, const EvalContext& ctx);
double eval_partial(const RewardProgram& program, const EvalContext& ctx);
RewardResult evaluate_reward(const RewardProgram& program, const EvalContext& ctx);

/// Graded-leaf shaping functions.
double nearby_grade(double distance, double threshold);
double count_grade(double deviation);

/// Throws RewardValidationError when an identifier names nothing known.
void validate_reward(const RewardProgram& program, const EvalContext& ctx);

/// Identifier check alone, without a trace.
void validate_identifiers(const RewardProgram& program, const std::vector<std::pair<std::string, std::string>>& known);

}  // namespace simtrace
