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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "simtrace/detector.hpp"

namespace simtrace {

enum class Origin { Guided, Automatic };
std::string_view to_string(Origin origin);

struct PatternDetector {
  std::string uid;
  std::string label;
  std::string description;
  Origin origin = Origin::Guided;
  DetectorProgram program;
  /// Event uids the program reads: built-ins and library uids (labels resolved).
  std::vector<std::string> depends_on;
};

struct PatternLibrary {
  std::vector<PatternDetector> detectors;

  const PatternDetector* find(std::string_view uid) const;
  /// Library uid for a uid or a case-insensitive label; nullopt otherwise.
  std::optional<std::string> resolve(std::string_view uid_or_label) const;
  std::vector<std::string> labels() const;
};

PatternDetector make_detector(std::string uid, std::string label, std::string description, Origin origin,
                              std::string_view source);

/// Recomputes every detector's depends_on against the library contents.
/// Throws DependencyError for literals that name nothing known.
void link_library(PatternLibrary& library);

class CycleError : public Error {
 public:
  explicit CycleError(std::vector<std::string> cycle);
  const std::vector<std::string>& cycle() const { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

/// Dependencies first; ties broken by uid.
std::vector<std::string> resolve_order(const PatternLibrary& library);

/// Removes `uid` and everything that transitively depends on it.
PatternLibrary ablate(const PatternLibrary& library, std::string_view uid);

Json library_to_json(const PatternLibrary& library);
PatternLibrary library_from_json(const Json& json);
PatternLibrary load_library(const std::filesystem::path& path);
void save_library(const PatternLibrary& library, const std::filesystem::path& path);

struct AnnotatedEvent {
  double time = 0.0;
  std::size_t frame = 0;
  std::string uid;
  std::string label;
  Params parameters;
  bool builtin = false;
};

struct AnnotationMatrix {
  std::size_t frames = 0;
  /// Column order = resolved detector order.
  std::vector<std::string> uids;
  std::vector<std::string> labels;
  /// Sorted, distinct active frame indices per column.
  std::vector<std::vector<std::size_t>> columns;
  /// Built-in and detector events, sorted by time.
  std::vector<AnnotatedEvent> events;
  std::vector<std::string> warnings;

  std::optional<std::size_t> column_index(std::string_view uid) const;
  bool at(std::size_t frame, std::size_t column) const;
  /// Activations of a column, empty when the uid is absent.
  std::vector<std::size_t> column(std::string_view uid) const;
};

struct AnnotateOptions {
  /// Strict mode propagates detector errors; otherwise the column stays empty
  /// and a warning is recorded.
  bool strict = true;
  std::uint64_t step_budget = 1'000'000;
};

AnnotationMatrix annotate(const Trace& trace, const PatternLibrary& library, const AnnotateOptions& options = {});

/// Annotation with per-detector run statistics, used by fitness evaluation.
struct DetectorTiming {
  std::string uid;
  double seconds = 0.0;
  std::uint64_t steps = 0;
};
AnnotationMatrix annotate_with_timing(const Trace& trace, const PatternLibrary& library, const AnnotateOptions& options,
                                      std::vector<DetectorTiming>& timings);

/// Runs the library into a caller-owned context, so later programs can read
/// the library's events.
AnnotationMatrix annotate_in_context(const PatternLibrary& library, AnnotationContext& context,
                                     const AnnotateOptions& options, std::vector<DetectorTiming>* timings = nullptr);

/// `t=<time> <label> <parameters-json>` per detector event, by time then label.
std::string render_annotations(const AnnotationMatrix& matrix, const PatternLibrary& library);

/// Annotated simulation trace export: events, run-length encoded columns.
Json ast_to_json(const AnnotationMatrix& matrix, const std::string& trace_ref);
AnnotationMatrix ast_from_json(const Json& json);
std::string ast_trace_ref(const Json& json);

}  // namespace simtrace
