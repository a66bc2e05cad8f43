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

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "simtrace/trace.hpp"

namespace simtrace {

/// Static value types of DetectorScript expressions.
enum class DType { Bool, Num, Str, Dict };
std::string_view to_string(DType type);

struct DNode {
  enum class Kind { Bool, Num, Str, Var, Dict, Unary, Binary, Call, Quant };
  Kind kind = Kind::Bool;
  /// Operator, primitive name, variable name or string literal.
  std::string text;
  double number = 0.0;
  bool boolean = false;
  /// Quantifier binder and filter.
  std::string binder;
  std::string filter;
  /// Dict keys, parallel to children.
  std::vector<std::string> keys;
  std::vector<DNode> children;
  DType type = DType::Bool;
  int line = 0;
  int column = 0;

  friend bool operator==(const DNode&, const DNode&) = default;
};

struct ParamDecl {
  std::string name;
  std::string type;  // int, float, bool, str, list

  friend bool operator==(const ParamDecl&, const ParamDecl&) = default;
};

struct DetectorProgram {
  std::string source;
  std::string name;
  std::vector<ParamDecl> params;
  DNode where;
  std::vector<std::pair<std::string, DNode>> emit;
  /// Every AST node in WHERE and EMIT expressions.
  int node_count = 0;
  /// Uid or label literals referenced through event_active, sorted.
  std::vector<std::string> depends_on;
};

class DetectorError : public Error {
 public:
  DetectorError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class DetectorSyntaxError : public DetectorError {
 public:
  DetectorSyntaxError(int line, int column, std::vector<std::string> expected, std::string found);
  const std::vector<std::string>& expected() const { return expected_; }
  const std::string& found() const { return found_; }

 private:
  std::vector<std::string> expected_;
  std::string found_;
};

class UnknownPrimitiveError : public DetectorError {
 public:
  UnknownPrimitiveError(int line, int column, const std::string& name);
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Wrong number or type of arguments.
class ArityError : public DetectorError {
 public:
  using DetectorError::DetectorError;
};

/// EMIT key absent from PARAMS, or an unbound variable.
class UndeclaredParameterError : public DetectorError {
 public:
  using DetectorError::DetectorError;
};

class BudgetExceededError : public Error {
 public:
  using Error::Error;
};

class DependencyError : public Error {
 public:
  using Error::Error;
};

DetectorProgram parse_detector(std::string_view source);

/// Canonical source text; parse(print(p)) reproduces the AST.
std::string print_detector(const DetectorProgram& program);
std::string print_expr(const DNode& node);

int program_length(const DetectorProgram& program);

/// Names usable as quantifier filters.
const std::vector<std::string>& detector_filters();
/// Names of the built-in primitives.
std::vector<std::string> detector_primitives();

/// The grammar in EBNF, for documentation and prompts.
std::string_view detector_grammar();

struct EmittedEvent {
  double time = 0.0;
  std::string description;
  Params parameters;

  friend bool operator==(const EmittedEvent&, const EmittedEvent&) = default;
};

struct ContextEvent {
  double time = 0.0;
  std::size_t frame = 0;
  std::string uid;
  std::string label;
  Params parameters;
};

/// Per-trace state shared by detector runs: object tracks, contact intervals,
/// and every event emitted so far (built-ins plus library detectors).
class AnnotationContext {
 public:
  /// The trace must outlive the context.
  explicit AnnotationContext(const Trace& trace);
  AnnotationContext(const AnnotationContext&) = delete;
  AnnotationContext& operator=(const AnnotationContext&) = delete;
  ~AnnotationContext();

  const Trace& trace() const { return *trace_; }
  std::size_t frame_count() const { return trace_->frames.size(); }

  /// Registers a computed detector column; its uid becomes available.
  void add(const std::string& uid, const std::string& label, const std::vector<EmittedEvent>& events);

  /// True when a uid, or a label compared case-insensitively, is known.
  bool available(std::string_view uid_or_label) const;

  const std::vector<ContextEvent>& events() const { return events_; }
  const std::vector<const ContextEvent*>& events_at(std::size_t frame) const;

  struct View;
  const View& view() const { return *view_; }

 private:
  const Trace* trace_;
  std::vector<ContextEvent> events_;
  std::vector<std::vector<const ContextEvent*>> by_frame_;
  std::set<std::string> uids_;
  std::set<std::string> labels_;  // lower-cased
  std::unique_ptr<View> view_;
  void reindex();
};

struct RunOptions {
  std::uint64_t step_budget = 1'000'000;
};

struct RunResult {
  std::vector<EmittedEvent> events;
  double elapsed_seconds = 0.0;
  std::uint64_t steps = 0;
  /// Distinct frames with at least one emission.
  std::vector<std::size_t> active_frames;
  bool fires_every_frame = false;
};

RunResult run_detector(const DetectorProgram& program, const Trace& trace, const AnnotationContext& context,
                       const RunOptions& options = {});

/// LM-free mutation: threshold jitter, type-directed subtree replacement and
/// crossover. Always returns parseable source (falls back to a parent).
std::string grammar_mutate(const std::vector<DetectorProgram>& parents, std::uint64_t seed);

}  // namespace simtrace
