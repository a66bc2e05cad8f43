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

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "simtrace/trace.hpp"

namespace simtrace {

/// Malformed JSON text; carries the byte offset reported by the tokenizer.
class JsonParseError : public Error {
 public:
  JsonParseError(std::size_t offset, const std::string& what);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed JSON that does not match the trace schema.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, std::string expected);
  const std::string& path() const { return path_; }
  const std::string& expected() const { return expected_; }

 private:
  std::string path_;
  std::string expected_;
};

Json object_to_json(const SceneObject& object);
SceneObject object_from_json(const Json& json, const std::string& path);
Json action_to_json(const Action& action);
Action action_from_json(const Json& json, const std::string& path);
Json event_to_json(const TraceEvent& event);
TraceEvent event_from_json(const Json& json, const std::string& path);

Json trace_to_json(const Trace& trace);
Trace trace_from_json(const Json& json);

Trace parse_trace(std::string_view text);
std::string serialize_trace(const Trace& trace);

/// Rewrites every float to nine significant digits; keys are already sorted by Json.
Json canonicalize(const Json& json);
std::string canonical_dump(const Json& json);
std::string canonicalize_text(std::string_view text);

Json parse_json_text(std::string_view text);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

Trace load_trace(const std::filesystem::path& path);
void save_trace(const Trace& trace, const std::filesystem::path& path);

}  // namespace simtrace
