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

#include "simtrace/annotation.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <queue>
#include <set>

#include "simtrace/trace_io.hpp"

namespace simtrace {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

}  // namespace

std::string_view to_string(Origin origin) { return origin == Origin::Guided ? "guided" : "automatic"; }

const PatternDetector* PatternLibrary::find(std::string_view uid) const {
  for (const PatternDetector& d : detectors)
    if (d.uid == uid) return &d;
  return nullptr;
}

std::optional<std::string> PatternLibrary::resolve(std::string_view uid_or_label) const {
  if (find(uid_or_label)) return std::string(uid_or_label);
  const std::string want = lower(uid_or_label);
  for (const PatternDetector& d : detectors)
    if (lower(d.label) == want) return d.uid;
  return std::nullopt;
}

std::vector<std::string> PatternLibrary::labels() const {
  std::vector<std::string> out;
  for (const PatternDetector& d : detectors) out.push_back(d.label);
  return out;
}

PatternDetector make_detector(std::string uid, std::string label, std::string description, Origin origin,
                              std::string_view source) {
  if (uid.empty()) throw Error("detector uid must be non-empty");
  if (label.empty()) throw Error("detector '" + uid + "' needs a non-empty label");
  PatternDetector d;
  d.uid = std::move(uid);
  d.label = std::move(label);
  d.description = std::move(description);
  d.origin = origin;
  d.program = parse_detector(source);
  d.depends_on = d.program.depends_on;
  return d;
}

void link_library(PatternLibrary& library) {
  std::set<std::string> seen;
  for (const PatternDetector& d : library.detectors)
    if (!seen.insert(d.uid).second) throw Error("duplicate detector uid '" + d.uid + "'");
  for (PatternDetector& d : library.detectors) {
    std::set<std::string> deps;
    for (const std::string& lit : d.program.depends_on) {
      if (is_builtin_uid(lit)) {
        deps.insert(lit);
      } else if (auto uid = library.resolve(lit)) {
        deps.insert(*uid);
      } else {
        throw DependencyError("detector '" + d.uid + "' depends on unknown event uid '" + lit + "'");
      }
    }
    d.depends_on.assign(deps.begin(), deps.end());
  }
}

CycleError::CycleError(std::vector<std::string> cycle)
    : Error("dependency cycle: " + join(cycle, " -> ")), cycle_(std::move(cycle)) {}

std::vector<std::string> resolve_order(const PatternLibrary& library) {
  std::map<std::string, std::set<std::string>> deps;  // uid -> library uids it needs
  std::map<std::string, std::set<std::string>> users;
  for (const PatternDetector& d : library.detectors) {
    deps[d.uid];
    for (const std::string& dep : d.depends_on)
      if (library.find(dep)) {
        deps[d.uid].insert(dep);
        users[dep].insert(d.uid);
      }
  }
  std::map<std::string, std::size_t> pending;
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [uid, ds] : deps) {
    pending[uid] = ds.size();
    if (ds.empty()) ready.push(uid);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    const std::string uid = ready.top();
    ready.pop();
    order.push_back(uid);
    for (const std::string& u : users[uid])
      if (--pending[u] == 0) ready.push(u);
  }
  if (order.size() == deps.size()) return order;

  // Walk unresolved dependencies until a node repeats.
  std::string start;
  for (const auto& [uid, n] : pending)
    if (n > 0) {
      start = uid;
      break;
    }
  std::vector<std::string> path;
  std::map<std::string, std::size_t> at;
  std::string cur = start;
  while (!at.contains(cur)) {
    at[cur] = path.size();
    path.push_back(cur);
    for (const std::string& d : deps[cur])
      if (pending[d] > 0) {
        cur = d;
        break;
      }
  }
  std::vector<std::string> cycle(path.begin() + static_cast<std::ptrdiff_t>(at[cur]), path.end());
  cycle.push_back(cur);
  throw CycleError(cycle);
}

PatternLibrary ablate(const PatternLibrary& library, std::string_view uid) {
  if (!library.find(uid)) throw NotFoundError("no detector with uid '" + std::string(uid) + "'");
  std::set<std::string> removed{std::string(uid)};
  for (bool grew = true; grew;) {
    grew = false;
    for (const PatternDetector& d : library.detectors) {
      if (removed.contains(d.uid)) continue;
      for (const std::string& dep : d.depends_on)
        if (removed.contains(dep)) {
          removed.insert(d.uid);
          grew = true;
          break;
        }
    }
  }
  PatternLibrary out;
  for (const PatternDetector& d : library.detectors)
    if (!removed.contains(d.uid)) out.detectors.push_back(d);
  return out;
}

Json library_to_json(const PatternLibrary& library) {
  Json out = Json::array();
  for (const PatternDetector& d : library.detectors) {
    Json schema = Json::object();
    for (const ParamDecl& p : d.program.params) schema[p.name] = p.type;
    out.push_back(Json{{"uid", d.uid},
                       {"label", d.label},
                       {"description", d.description},
                       {"origin", std::string(to_string(d.origin))},
                       {"source", d.program.source},
                       {"parameters_schema", schema},
                       {"depends_on", d.depends_on}});
  }
  return out;
}

PatternLibrary library_from_json(const Json& json) {
  if (!json.is_array()) throw SchemaError("$", "list of detectors");
  PatternLibrary lib;
  for (std::size_t i = 0; i < json.size(); ++i) {
    const Json& j = json[i];
    const std::string path = "[" + std::to_string(i) + "]";
    for (const char* key : {"uid", "label", "source"})
      if (!j.contains(key) || !j[key].is_string()) throw SchemaError(path + "." + key, "string");
    const std::string origin = j.value("origin", std::string("guided"));
    if (origin != "guided" && origin != "automatic") throw SchemaError(path + ".origin", "guided or automatic");
    lib.detectors.push_back(make_detector(j["uid"].get<std::string>(), j["label"].get<std::string>(),
                                          j.value("description", std::string{}),
                                          origin == "guided" ? Origin::Guided : Origin::Automatic,
                                          j["source"].get<std::string>()));
  }
  link_library(lib);
  return lib;
}

PatternLibrary load_library(const std::filesystem::path& path) {
  return library_from_json(parse_json_text(read_text_file(path)));
}

void save_library(const PatternLibrary& library, const std::filesystem::path& path) {
  write_text_file(path, library_to_json(library).dump(2) + "\n");
}

std::optional<std::size_t> AnnotationMatrix::column_index(std::string_view uid) const {
  for (std::size_t j = 0; j < uids.size(); ++j)
    if (uids[j] == uid) return j;
  return std::nullopt;
}

bool AnnotationMatrix::at(std::size_t frame, std::size_t column) const {
  const auto& c = columns.at(column);
  return std::binary_search(c.begin(), c.end(), frame);
}

std::vector<std::size_t> AnnotationMatrix::column(std::string_view uid) const {
  if (auto j = column_index(uid)) return columns[*j];
  return {};
}

AnnotationMatrix annotate_in_context(const PatternLibrary& library, AnnotationContext& ctx,
                                     const AnnotateOptions& options, std::vector<DetectorTiming>* timings) {
  const Trace& trace = ctx.trace();
  AnnotationMatrix m;
  m.frames = trace.frames.size();
  for (const ContextEvent& e : ctx.events()) m.events.push_back({e.time, e.frame, e.uid, e.label, e.parameters, true});

  for (const std::string& uid : resolve_order(library)) {
    const PatternDetector& d = *library.find(uid);
    m.uids.push_back(uid);
    m.labels.push_back(d.label);
    std::vector<std::size_t> active;
    try {
      RunResult r = run_detector(d.program, trace, ctx, {options.step_budget});
      if (timings) timings->push_back({uid, r.elapsed_seconds, r.steps});
      for (const EmittedEvent& e : r.events) {
        m.events.push_back({e.time, trace.frame_index(e.time), uid, d.label, e.parameters, false});
        active.push_back(trace.frame_index(e.time));
      }
      ctx.add(uid, d.label, r.events);
    } catch (const Error& e) {
      if (options.strict) throw Error("detector '" + uid + "': " + e.what());
      m.warnings.push_back("detector '" + uid + "' failed: " + std::string(e.what()));
      if (timings) timings->push_back({uid, 0.0, 0});
      ctx.add(uid, d.label, {});
    }
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    m.columns.push_back(std::move(active));
  }
  std::stable_sort(m.events.begin(), m.events.end(),
                   [](const AnnotatedEvent& a, const AnnotatedEvent& b) { return a.time < b.time; });
  return m;
}

AnnotationMatrix annotate_with_timing(const Trace& trace, const PatternLibrary& library, const AnnotateOptions& options,
                                      std::vector<DetectorTiming>& timings) {
  AnnotationContext ctx(trace);
  return annotate_in_context(library, ctx, options, &timings);
}

AnnotationMatrix annotate(const Trace& trace, const PatternLibrary& library, const AnnotateOptions& options) {
  std::vector<DetectorTiming> timings;
  return annotate_with_timing(trace, library, options, timings);
}

std::string render_annotations(const AnnotationMatrix& matrix, const PatternLibrary& library) {
  std::vector<std::pair<std::pair<double, std::string>, std::string>> lines;
  for (const AnnotatedEvent& e : matrix.events) {
    if (e.builtin) continue;
    const PatternDetector* d = library.find(e.uid);
    const std::string label = d ? d->label : e.label;
    char t[32];
    std::snprintf(t, sizeof t, "t=%.3f ", e.time);
    lines.push_back({{e.time, label}, t + label + " " + canonical_dump(Json(e.parameters))});
  }
  std::stable_sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  for (const auto& [key, line] : lines) out += line + "\n";
  return out;
}

Json ast_to_json(const AnnotationMatrix& m, const std::string& trace_ref) {
  Json events = Json::array();
  for (const AnnotatedEvent& e : m.events) {
    Json params = Json::object();
    for (const auto& [k, v] : e.parameters) params[k] = canonicalize(v);
    events.push_back(
        Json{{"uid", e.uid}, {"label", e.label}, {"time", canonical_double(e.time)}, {"parameters", params}});
  }
  Json columns = Json::array();
  for (std::size_t j = 0; j < m.uids.size(); ++j) {
    Json runs = Json::array();
    const auto& c = m.columns[j];
    for (std::size_t k = 0; k < c.size();) {
      std::size_t len = 1;
      while (k + len < c.size() && c[k + len] == c[k] + len) ++len;
      runs.push_back(Json::array({c[k], len}));
      k += len;
    }
    columns.push_back(Json{{"uid", m.uids[j]}, {"label", m.labels[j]}, {"runs", runs}});
  }
  return Json{{"trace_ref", trace_ref}, {"N", m.frames}, {"events", events}, {"matrix", columns}};
}

AnnotationMatrix ast_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("$", "object");
  AnnotationMatrix m;
  if (!j.contains("N") || !j["N"].is_number_integer()) throw SchemaError("N", "integer");
  m.frames = j["N"].get<std::size_t>();
  const auto n = m.frames;
  std::set<std::string> builtin{"CollisionStart", "CollisionEnd", "TaskComplete"};
  if (!j.contains("events") || !j["events"].is_array()) throw SchemaError("events", "list");
  for (std::size_t i = 0; i < j["events"].size(); ++i) {
    const Json& e = j["events"][i];
    const std::string path = "events[" + std::to_string(i) + "]";
    TraceEvent te = event_from_json(e, path);
    const double t = te.time;
    const std::size_t frame = n > 1 ? static_cast<std::size_t>(std::llround(t * static_cast<double>(n - 1))) : 0;
    m.events.push_back({t, frame, te.uid, e.value("label", te.uid), te.parameters, builtin.contains(te.uid)});
  }
  if (j.contains("matrix")) {
    if (!j["matrix"].is_array()) throw SchemaError("matrix", "list of columns");
    for (std::size_t i = 0; i < j["matrix"].size(); ++i) {
      const Json& c = j["matrix"][i];
      const std::string path = "matrix[" + std::to_string(i) + "]";
      if (!c.contains("uid") || !c["uid"].is_string()) throw SchemaError(path + ".uid", "string");
      m.uids.push_back(c["uid"].get<std::string>());
      m.labels.push_back(c.value("label", m.uids.back()));
      std::vector<std::size_t> active;
      for (const Json& run : c.value("runs", Json::array())) {
        if (!run.is_array() || run.size() != 2) throw SchemaError(path + ".runs", "[start, length] pairs");
        for (std::size_t k = 0; k < run[1].get<std::size_t>(); ++k) active.push_back(run[0].get<std::size_t>() + k);
      }
      m.columns.push_back(std::move(active));
    }
  }
  return m;
}

std::string ast_trace_ref(const Json& json) { return json.value("trace_ref", std::string{}); }

}  // namespace simtrace
