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

#include "simtrace/lm_bridge.hpp"

#include <cstdio>
#include <cstdlib>
#include <regex>

#include "simtrace/rng.hpp"
#include "simtrace/trace_io.hpp"

namespace simtrace {

namespace detail {
const std::map<std::string, std::string>& embedded_prompts();
}

std::string_view to_string(RequestKind kind) {
  switch (kind) {
    case RequestKind::DetectorEvolution: return "detector-evolution";
    case RequestKind::RewardSynthesis: return "reward-synthesis";
    case RequestKind::LabelSuggestion: return "label-suggestion";
  }
  return "reward-synthesis";
}

EndpointConfig EndpointConfig::from_env() {
  EndpointConfig c;
  auto env = [](const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  c.url = env("LM_ENDPOINT");
  c.model = env("LM_MODEL");
  c.api_key = env("LM_API_KEY");
  return c;
}

Json EndpointConfig::to_json() const {
  return Json{{"url", url},
              {"model", model},
              {"api_key_set", !api_key.empty()},
              {"temperature", temperature},
              {"max_tokens", max_tokens},
              {"timeout_seconds", timeout_seconds},
              {"retries", retries},
              {"requests_per_minute", requests_per_minute}};
}

SynthesisError::SynthesisError(std::vector<std::string> chain)
    : LmError("reward synthesis failed after " + std::to_string(chain.size()) + " attempts" +
              (chain.empty() ? std::string() : "; last error: " + chain.back())),
      chain_(std::move(chain)) {}

namespace {

std::string hex_hash(const std::string& text) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
  return buf;
}

std::string request_text(const ChatRequest& r) {
  Json messages = Json::array();
  for (const ChatMessage& m : r.messages) messages.push_back(Json{{"role", m.role}, {"content", m.content}});
  return Json{{"kind", std::string(to_string(r.kind))}, {"messages", messages}}.dump();
}

}  // namespace

std::string Backend::complete(const ChatRequest& request) {
  int attempts = 1;
  std::string response = do_complete(request, attempts);
  std::lock_guard lock(mu_);
  records_.push_back({std::string(to_string(request.kind)), hex_hash(request_text(request)), hex_hash(response), attempts});
  return response;
}

std::vector<ExchangeRecord> Backend::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

Json Backend::manifest() const {
  Json exchanges = Json::array();
  for (const ExchangeRecord& r : records())
    exchanges.push_back(
        Json{{"kind", r.kind}, {"request", r.request_hash}, {"response", r.response_hash}, {"attempts", r.attempts}});
  return Json{{"backend", name()}, {"exchanges", exchanges}};
}

MockBackend::MockBackend(const Json& transcript) {
  if (!transcript.is_object()) throw SchemaError("$", "object mapping request kinds to response lists");
  for (const auto& [kind, list] : transcript.items()) {
    if (kind != "detector-evolution" && kind != "reward-synthesis" && kind != "label-suggestion")
      throw SchemaError(kind, "one of detector-evolution, reward-synthesis, label-suggestion");
    if (!list.is_array()) throw SchemaError(kind, "list of response texts");
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].is_string()) throw SchemaError(kind + "[" + std::to_string(i) + "]", "string");
      queues_[kind].push_back(list[i].get<std::string>());
    }
  }
}

std::unique_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  return std::make_unique<MockBackend>(parse_json_text(read_text_file(path)));
}

bool MockBackend::grammar_detectors() const { return remaining(RequestKind::DetectorEvolution) == 0; }

std::size_t MockBackend::remaining(RequestKind kind) const {
  std::lock_guard lock(queue_mu_);
  auto it = queues_.find(std::string(to_string(kind)));
  return it == queues_.end() ? 0 : it->second.size();
}

std::string MockBackend::do_complete(const ChatRequest& request, int&) {
  std::lock_guard lock(queue_mu_);
  auto& q = queues_[std::string(to_string(request.kind))];
  if (q.empty()) throw LmError("mock transcript has no " + std::string(to_string(request.kind)) + " response left");
  std::string out = std::move(q.front());
  q.pop_front();
  return out;
}

std::unique_ptr<Backend> make_backend(const std::string& spec) {
  if (spec == "mock") return std::make_unique<MockBackend>();
  if (spec.rfind("mock:", 0) == 0) return MockBackend::from_file(spec.substr(5));
  if (spec == "http") {
    EndpointConfig c = EndpointConfig::from_env();
    if (c.url.empty()) throw LmError("LM_ENDPOINT is not set");
    return std::make_unique<HttpBackend>(c);
  }
  throw LmError("unknown backend '" + spec + "' (use mock, mock:<transcript.json> or http)");
}

const std::string& prompt_template(const std::string& name) {
  const auto& all = detail::embedded_prompts();
  auto it = all.find(name);
  if (it == all.end()) throw NotFoundError("no prompt template '" + name + "'");
  return it->second;
}

std::string render_prompt(const std::string& name, const std::map<std::string, std::string>& slots) {
  const std::string& tpl = prompt_template(name);
  static const std::regex slot(R"(\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\})");
  std::string out;
  auto begin = std::sregex_iterator(tpl.begin(), tpl.end(), slot);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const std::string key = (*it)[1].str();
    auto v = slots.find(key);
    if (v == slots.end()) throw Error("prompt '" + name + "' needs slot '" + key + "'");
    out.append(tpl, last, static_cast<std::size_t>(it->position()) - last);
    out += v->second;
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(tpl, last, std::string::npos);
  return out;
}

std::string extract_code(const std::string& text, FenceKind kind) {
  std::string scope = text;
  const auto open = text.find("<answer>");
  if (open != std::string::npos) {
    const auto close = text.find("</answer>", open);
    scope = text.substr(open + 8, close == std::string::npos ? std::string::npos : close - open - 8);
  }
  std::vector<std::string> tags;
  switch (kind) {
    case FenceKind::Detector: tags = {"detector", "detectorscript"}; break;
    case FenceKind::Dsl: tags = {"dsl"}; break;
    case FenceKind::Json: tags = {"json"}; break;
  }
  // First fence whose info string matches; an untagged fence is accepted when
  // no tagged one exists.
  std::optional<std::string> untagged;
  for (std::size_t pos = scope.find("```"); pos != std::string::npos;) {
    const auto eol = scope.find('\n', pos);
    if (eol == std::string::npos) break;
    std::string info = scope.substr(pos + 3, eol - pos - 3);
    while (!info.empty() && std::isspace(static_cast<unsigned char>(info.back()))) info.pop_back();
    for (char& c : info) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    const auto end = scope.find("```", eol + 1);
    if (end == std::string::npos) break;
    std::string body = scope.substr(eol + 1, end - eol - 1);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    if (std::find(tags.begin(), tags.end(), info) != tags.end()) return body;
    if (info.empty() && !untagged) untagged = body;
    pos = scope.find("```", end + 3);
  }
  if (untagged) return *untagged;
  const char* name = kind == FenceKind::Dsl ? "dsl" : kind == FenceKind::Json ? "json" : "detector";
  throw ExtractionError(std::string("no ```") + name + " fenced block in the response");
}

DetectorResponse extract_detector(const std::string& text) {
  DetectorResponse r;
  r.code = extract_code(text, FenceKind::Detector);
  // The schema fence follows the closing fence of the code block.
  const auto at = text.find(r.code);
  std::string rest = at == std::string::npos ? text : text.substr(at + r.code.size());
  if (const auto close = rest.find("```"); close != std::string::npos) rest = rest.substr(close + 3);
  try {
    const std::string schema = extract_code(rest, FenceKind::Json);
    Json j = Json::parse(schema, nullptr, false);
    if (!j.is_discarded() && j.is_object()) r.parameters = j;
  } catch (const ExtractionError&) {
  }
  return r;
}

std::string library_summary(const PatternLibrary& library) {
  if (library.detectors.empty()) return "(empty library; only the built-in events exist)";
  std::string out;
  for (const PatternDetector& d : library.detectors) {
    Json schema = Json::object();
    for (const ParamDecl& p : d.program.params) schema[p.name] = p.type;
    out += "- uid: " + d.uid + "; label: " + d.label + "; description: " + d.description +
           "; parameters: " + schema.dump() + "\n";
  }
  out.pop_back();
  return out;
}

std::string scene_summary(const Scene& scene) {
  std::string out;
  for (const SceneObject& o : scene.objects) {
    const Vec2 p = o.position();
    char buf[160];
    std::snprintf(buf, sizeof buf, "- %s: id %d, %s %s at (%.1f, %.1f), %s\n", o.description.c_str(), o.id,
                  std::string(to_string(o.color)).c_str(), std::string(to_string(o.kind)).c_str(), p.x, p.y,
                  o.is_static ? "static" : "dynamic");
    out += buf;
  }
  out += "- the red ball placed by the action gets id " +
         std::to_string(scene.objects.empty() ? 0 : scene.objects.back().id + 1);
  return out;
}

std::string library_formattings(const PatternLibrary& library) {
  Json formats = Json::array();
  formats.push_back(Json{{"uid", "CollisionStart"}, {"parameters", {{"a_id", "int"}, {"b_id", "int"}, {"contact_points", "list"}}}});
  formats.push_back(Json{{"uid", "CollisionEnd"}, {"parameters", {{"a_id", "int"}, {"b_id", "int"}, {"contact_points", "list"}}}});
  formats.push_back(Json{{"uid", "TaskComplete"}, {"parameters", {{"success", "bool"}}}});
  for (const Json& d : library_to_json(library))
    formats.push_back(Json{{"uid", d["uid"]}, {"label", d["label"]}, {"parameters", d["parameters_schema"]}});
  return formats.dump(2);
}

std::string detector_prompt(const MutationRequest& request, const std::string& errors) {
  return render_prompt("detector_evolution.txt",
                       {{"label", request.label},
                        {"description", request.description},
                        {"trace_spec", prompt_template("trace_spec.txt")},
                        {"formattings", request.formattings.empty() ? library_formattings({}) : request.formattings},
                        {"grammar", std::string(detector_grammar())},
                        {"extra_constraints", ""},
                        {"parent_code", request.parents.empty() ? "" : print_detector(request.parents.front())},
                        {"errors", errors.empty() ? "none" : errors}});
}

Mutator lm_mutator(Backend& backend) {
  Mutator m;
  m.name = "lm:" + backend.name();
  m.concurrent_safe = backend.concurrent_safe();
  m.propose = [&backend](const MutationRequest& req) -> std::string {
    if (backend.grammar_detectors()) return grammar_mutate(req.parents, req.seed);
    ChatRequest chat{RequestKind::DetectorEvolution, {{"user", detector_prompt(req)}}};
    return extract_detector(backend.complete(chat)).code;
  };
  return m;
}

std::vector<FewShot> default_few_shots() {
  std::vector<FewShot> out;
  for (const Json& j : Json::parse(prompt_template("few_shot.json")))
    out.push_back({j["goal"].get<std::string>(), j["program"].get<std::string>()});
  return out;
}

std::string reward_prompt(const std::string& goal, const PatternLibrary& library, const Scene& scene,
                          const std::vector<FewShot>& shots) {
  std::string guide = prompt_template("dsl_guide.txt");
  if (!shots.empty()) {
    guide += "\nWorked goals and programs:\n";
    for (const FewShot& s : shots) guide += "Goal: " + s.goal + "\nProgram: " + s.program + "\n";
  }
  while (!guide.empty() && guide.back() == '\n') guide.pop_back();
  return render_prompt("reward_synthesis.txt", {{"goal", goal},
                                                {"dsl_guide", guide},
                                                {"library_summary", library_summary(library)},
                                                {"scene_summary", scene_summary(scene)}});
}

SynthesisResult synthesize_reward(const std::string& goal, const PatternLibrary& library, const Scene& scene,
                                  Backend& backend, int retry_limit, const std::vector<FewShot>& shots) {
  if (retry_limit < 0) throw Error("retry limit must be non-negative");
  SynthesisResult result;
  result.prompt = reward_prompt(goal, library, scene, shots);
  ChatRequest chat{RequestKind::RewardSynthesis, {{"user", result.prompt}}};
  std::vector<std::pair<std::string, std::string>> known;
  for (const PatternDetector& d : library.detectors) known.emplace_back(d.uid, d.label);

  for (int attempt = 0; attempt <= retry_limit; ++attempt) {
    ++result.attempts;
    const std::string response = backend.complete(chat);
    std::string candidate;
    try {
      candidate = extract_code(response, FenceKind::Dsl);
      RewardProgram p = parse_reward(candidate);
      validate_identifiers(p, known);
      result.program = std::move(p);
      return result;
    } catch (const Error& e) {
      result.errors.push_back(e.what());
      chat.messages.push_back({"assistant", response});
      chat.messages.push_back(
          {"user", render_prompt("reward_repair.txt", {{"candidate", candidate.empty() ? response : candidate},
                                                       {"error", e.what()}})});
    }
  }
  throw SynthesisError(result.errors);
}

std::string label_prompt(const PatternLibrary& library, const std::vector<std::string>& snippets, int k) {
  std::string table;
  for (const PatternDetector& d : library.detectors) table += d.uid + " | " + d.label + " | " + d.description + "\n";
  if (table.empty()) table = "(empty)\n";
  table.pop_back();
  std::string thinks;
  for (const std::string& s : snippets) thinks += "<think>" + s + "</think>\n";
  if (thinks.empty()) thinks = "(none)\n";
  thinks.pop_back();
  return render_prompt("label_suggestion.txt",
                       {{"trace_spec", prompt_template("trace_spec.txt")},
                        {"library_table", table},
                        {"rl_thinks", thinks},
                        {"abstract_guidance", "- Favour patterns that describe how objects move and interact."},
                        {"K", std::to_string(k)}});
}

std::vector<LabelSuggestion> propose_labels(const PatternLibrary& library, const std::vector<std::string>& snippets,
                                            int k, Backend& backend, int retries) {
  if (k < 1) throw Error("label count must be at least 1");
  ChatRequest chat{RequestKind::LabelSuggestion, {{"user", label_prompt(library, snippets, k)}}};
  std::string last_error;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    const std::string response = backend.complete(chat);
    Json items;
    try {
      items = Json::parse(extract_code(response, FenceKind::Json));
      if (!items.is_array()) throw LmError("expected a JSON array of patterns");
    } catch (const std::exception& e) {
      last_error = e.what();
      chat.messages.push_back({"assistant", response});
      chat.messages.push_back({"user", "The output could not be read (" + last_error +
                                           "). Output only the JSON array inside ```json fences."});
      continue;
    }
    std::vector<LabelSuggestion> out;
    std::set<std::string> seen;
    for (const std::string& l : library.labels()) {
      std::string low = l;
      for (char& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      seen.insert(low);
    }
    for (const Json& item : items) {
      if (!item.is_object()) continue;
      LabelSuggestion s;
      s.label = item.value("label", std::string{});
      s.description = item.value("description", std::string{});
      s.reason = item.value("reason", std::string{});
      if (s.label.empty() || s.description.empty() || s.reason.empty()) continue;
      std::string low = s.label;
      for (char& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (!seen.insert(low).second) continue;
      out.push_back(std::move(s));
    }
    return out;
  }
  throw LmError("label suggestion failed after " + std::to_string(retries + 1) + " attempts: " + last_error);
}

}  // namespace simtrace
