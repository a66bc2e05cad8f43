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

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "simtrace/lm_bridge.hpp"
#include "simtrace/scenes.hpp"

using namespace simtrace;

namespace {

const char* kSecret = "sk-test-7f3c9a1e55d2";

PatternLibrary small_library() {
  PatternLibrary lib;
  lib.detectors.push_back(make_detector("b0a1", "Ball Bounce", "a ball hits the floor and rises again", Origin::Guided,
                                        "DETECT bounce WHERE exists_object(o, dynamic, speed(o) > 50)\n"));
  lib.detectors.push_back(make_detector("c2d3", "Lever Launch", "the lever throws a ball upwards", Origin::Guided,
                                        "DETECT launch WHERE exists_object(o, dynamic, speed(o) > 200)\n"));
  return lib;
}

std::string fenced(const std::string& kind, const std::string& body) { return "```" + kind + "\n" + body + "\n```"; }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_golden(const std::string& name, const std::string& got) {
  const auto path = std::filesystem::path(SIMTRACE_TEST_DATA) / "golden" / name;
  if (std::getenv("SIMTRACE_UPDATE_GOLDEN")) std::ofstream(path, std::ios::binary) << got;
  REQUIRE_MESSAGE(std::filesystem::exists(path), name);
  CHECK_MESSAGE(read_file(path) == got, name);
}

/// Local chat-completion endpoint answering with a scripted status sequence.
struct FakeEndpoint {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};
  std::vector<int> statuses;
  std::string reply = "hello";
  std::string last_auth;
  std::string last_body;
  std::mutex mu;

  explicit FakeEndpoint(std::vector<int> s) : statuses(std::move(s)) {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int i = hits++;
      {
        std::lock_guard lock(mu);
        last_auth = req.get_header_value("Authorization");
        last_body = req.body;
      }
      const int status = i < static_cast<int>(statuses.size()) ? statuses[i] : 200;
      res.status = status;
      if (status == 200) {
        const Json j{{"choices", Json::array({Json{{"message", Json{{"role", "assistant"}, {"content", reply}}}}})}};
        res.set_content(j.dump(), "application/json");
      } else {
        res.set_content("{\"error\": \"scripted\"}", "application/json");
      }
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeEndpoint() {
    server.stop();
    thread.join();
  }

  EndpointConfig config() const {
    EndpointConfig c;
    c.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    c.model = "test-model";
    c.api_key = kSecret;
    c.retries = 3;
    c.backoff_seconds = 0.01;
    c.requests_per_minute = 0.0;
    c.timeout_seconds = 5.0;
    return c;
  }
};

}  // namespace

TEST_CASE("lm: mock backend replays canned responses") {
  MockBackend mock(Json{{"reward-synthesis", {"first", "second"}}});
  ChatRequest req{RequestKind::RewardSynthesis, {{"user", "hi"}}};
  CHECK(mock.complete(req) == "first");
  CHECK(mock.complete(req) == "second");
  CHECK_THROWS_AS(mock.complete(req), LmError);
  CHECK(mock.grammar_detectors());
  CHECK_THROWS_AS(mock.complete({RequestKind::LabelSuggestion, {}}), LmError);
  CHECK_THROWS(MockBackend(Json{{"unknown-kind", {"x"}}}));

  const Json m = mock.manifest();
  CHECK(m["backend"] == "mock");
  REQUIRE(m["exchanges"].size() == 2);
  CHECK(m["exchanges"][0]["kind"] == "reward-synthesis");
  CHECK(m["exchanges"][0]["request"] == m["exchanges"][1]["request"]);
  CHECK(m["exchanges"][0]["response"] != m["exchanges"][1]["response"]);

  MockBackend with_detectors(Json{{"detector-evolution", {"x"}}});
  CHECK_FALSE(with_detectors.grammar_detectors());
  CHECK(make_backend("mock")->name() == "mock");
  CHECK_THROWS(make_backend("carrier-pigeon"));
}

TEST_CASE("lm: http backend retries server errors") {
  FakeEndpoint ep({500, 500, 200});
  HttpBackend backend(ep.config());
  const std::string out = backend.complete({RequestKind::LabelSuggestion, {{"system", "s"}, {"user", "u"}}});
  CHECK(out == "hello");
  CHECK(ep.hits == 3);
  REQUIRE(backend.records().size() == 1);
  CHECK(backend.records()[0].attempts == 3);
  CHECK(ep.last_auth == std::string("Bearer ") + kSecret);
  const Json body = Json::parse(ep.last_body);
  CHECK(body["model"] == "test-model");
  CHECK(body["messages"].size() == 2);
  CHECK(body["messages"][1]["role"] == "user");
  CHECK(body.contains("temperature"));
  CHECK(body.contains("max_tokens"));

  // no secret in anything that gets written out
  CHECK(backend.manifest().dump().find(kSecret) == std::string::npos);
  CHECK(backend.config().to_json().dump().find(kSecret) == std::string::npos);
  CHECK(backend.config().to_json()["api_key_set"] == true);
}

TEST_CASE("lm: http backend gives up and reports errors") {
  {
    FakeEndpoint ep({503, 503, 503, 503, 503});
    HttpBackend backend(ep.config());
    CHECK_THROWS_AS(backend.complete({RequestKind::RewardSynthesis, {{"user", "u"}}}), TransportError);
    CHECK(ep.hits == 4);
  }
  {
    FakeEndpoint ep({401});
    HttpBackend backend(ep.config());
    try {
      backend.complete({RequestKind::RewardSynthesis, {{"user", "u"}}});
      FAIL("expected an auth error");
    } catch (const AuthError& e) {
      CHECK(std::string(e.what()).find(kSecret) == std::string::npos);
    }
    CHECK(ep.hits == 1);
  }
  {
    FakeEndpoint ep({});
    ep.reply = "";
    HttpBackend backend(ep.config());
    CHECK(backend.complete({RequestKind::RewardSynthesis, {{"user", "u"}}}).empty());
  }

  // unreachable: bind a port, then close it
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  EndpointConfig c;
  c.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  c.retries = 2;
  c.backoff_seconds = 0.01;
  c.requests_per_minute = 0.0;
  c.timeout_seconds = 1.0;
  c.api_key = kSecret;
  HttpBackend backend(c);
  try {
    backend.complete({RequestKind::RewardSynthesis, {{"user", "u"}}});
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("3 attempts") != std::string::npos);
    CHECK(msg.find(kSecret) == std::string::npos);
  }
  CHECK(backend.records().empty());
  CHECK_THROWS_AS(HttpBackend(EndpointConfig{}), LmError);
}

TEST_CASE("lm: rate limiting spaces requests") {
  FakeEndpoint ep({});
  EndpointConfig c = ep.config();
  c.requests_per_minute = 600.0;  // one every 0.1 s
  HttpBackend backend(c);
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) backend.complete({RequestKind::RewardSynthesis, {{"user", "u"}}});
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed >= 0.29);
}

TEST_CASE("lm: endpoint config from the environment") {
  setenv("LM_ENDPOINT", "http://example.invalid/v1/chat/completions", 1);
  setenv("LM_MODEL", "m1", 1);
  setenv("LM_API_KEY", kSecret, 1);
  const EndpointConfig c = EndpointConfig::from_env();
  CHECK(c.url == "http://example.invalid/v1/chat/completions");
  CHECK(c.model == "m1");
  CHECK(c.api_key == kSecret);
  CHECK(c.to_json().dump().find(kSecret) == std::string::npos);
  unsetenv("LM_API_KEY");
  CHECK(EndpointConfig::from_env().to_json()["api_key_set"] == false);
  unsetenv("LM_ENDPOINT");
  unsetenv("LM_MODEL");
}

TEST_CASE("lm: code extraction") {
  CHECK(extract_code("Here you go:\n```dsl\nEVENT(\"a\")\n```\nbye", FenceKind::Dsl) == "EVENT(\"a\")");
  const std::string wrapped =
      "<think>maybe ```dsl\nEVENT(\"draft\")\n``` first</think>\n<answer>\n```dsl\nAND(EVENT(\"a\"), EVENT(\"b\"))\n```\n"
      "</answer>";
  CHECK(extract_code(wrapped, FenceKind::Dsl) == "AND(EVENT(\"a\"), EVENT(\"b\"))");
  CHECK_THROWS_AS(extract_code("EVENT(\"a\") with no fences", FenceKind::Dsl), ExtractionError);
  CHECK_THROWS_AS(extract_code("```dsl\nEVENT(\"a\")", FenceKind::Dsl), ExtractionError);
  // tagged fence wins over an earlier untagged one; untagged is the fallback
  CHECK(extract_code("```\nx\n```\n```json\n[1]\n```", FenceKind::Json) == "[1]");
  CHECK(extract_code("```\nx\n```", FenceKind::Json) == "x");
  CHECK(extract_code("```python\nx\n```\n```DSL\ny\n```", FenceKind::Dsl) == "y");
  CHECK_THROWS_AS(extract_code("```python\nx\n```", FenceKind::Dsl), ExtractionError);

  const DetectorResponse d = extract_detector(
      "<answer>\n" + fenced("detector", "DETECT hop WHERE true") + "\n" +
      fenced("json", "{\"object\": \"int\", \"height\": \"float\"}") + "\n</answer>");
  CHECK(d.code == "DETECT hop WHERE true");
  REQUIRE(d.parameters);
  CHECK((*d.parameters)["height"] == "float");
  CHECK_FALSE(extract_detector(fenced("detector", "DETECT hop WHERE true")).parameters);
}

TEST_CASE("lm: reward synthesis repair loop") {
  const PatternLibrary lib = small_library();
  const Scene scene = build_scene({"buckets3", Json::object(), 0});
  const std::string good = fenced("dsl", "AND(EVENT(\"Lever Launch\"), NEARBY_AT(\"green ball\", 134.5, 10.5, 1.0))");

  SUBCASE("valid first try") {
    MockBackend mock(Json{{"reward-synthesis", {"<answer>" + good + "</answer>"}}});
    const SynthesisResult r = synthesize_reward("launch the ball", lib, scene, mock);
    CHECK(r.attempts == 1);
    CHECK(r.errors.empty());
    CHECK(r.program.root->name == "AND");
    CHECK(mock.remaining(RequestKind::RewardSynthesis) == 0);
  }
  SUBCASE("unknown uid is repaired once") {
    MockBackend mock(Json{{"reward-synthesis", {fenced("dsl", "EVENT(\"made up\")"), good}}});
    const SynthesisResult r = synthesize_reward("launch the ball", lib, scene, mock);
    CHECK(r.attempts == 2);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].find("made up") != std::string::npos);
    REQUIRE(mock.records().size() == 2);
    CHECK(mock.records()[0].request_hash != mock.records()[1].request_hash);
  }
  SUBCASE("garbage exhausts the retry limit") {
    MockBackend mock(Json{{"reward-synthesis", {"no idea", fenced("dsl", "AND(("), "```dsl\nFOO(1)\n```",
                                                "still nothing", "unused"}}});
    try {
      synthesize_reward("launch the ball", lib, scene, mock, 3);
      FAIL("expected synthesis failure");
    } catch (const SynthesisError& e) {
      CHECK(e.chain().size() == 4);
    }
    CHECK(mock.records().size() == 4);
    CHECK(mock.remaining(RequestKind::RewardSynthesis) == 1);
  }
  SUBCASE("retry limit zero") {
    MockBackend mock(Json{{"reward-synthesis", {"nothing", good}}});
    CHECK_THROWS_AS(synthesize_reward("g", lib, scene, mock, 0), SynthesisError);
    CHECK(mock.records().size() == 1);
    CHECK_THROWS(synthesize_reward("g", lib, scene, mock, -1));
  }
}

TEST_CASE("lm: label proposals") {
  const PatternLibrary lib = small_library();
  const auto item = [](const std::string& label) {
    return Json{{"reason", "seen in the reasoning"}, {"description", label + " happens"}, {"label", label}};
  };
  SUBCASE("duplicates of existing labels are dropped") {
    const Json arr = Json::array({item("Roll Off Edge"), item("ball bounce"), item("Stack Topple")});
    MockBackend mock(Json{{"label-suggestion", {fenced("json", arr.dump(2))}}});
    const auto out = propose_labels(lib, {"the ball rolls off the edge"}, 3, mock);
    REQUIRE(out.size() == 2);
    CHECK(out[0].label == "Roll Off Edge");
    CHECK(out[1].label == "Stack Topple");
  }
  SUBCASE("K = 5") {
    Json arr = Json::array();
    for (const char* l : {"A1", "B2", "C3", "D4", "E5"}) arr.push_back(item(l));
    MockBackend mock(Json{{"label-suggestion", {"<answer>" + fenced("json", arr.dump()) + "</answer>"}}});
    const auto out = propose_labels(lib, {}, 5, mock);
    REQUIRE(out.size() == 5);
    for (const auto& s : out) {
      CHECK_FALSE(s.label.empty());
      CHECK_FALSE(s.description.empty());
      CHECK_FALSE(s.reason.empty());
    }
  }
  SUBCASE("incomplete items and duplicates within the batch") {
    const Json arr = Json::array({item("New One"), Json{{"label", "No Reason"}, {"description", "d"}}, item("new one")});
    MockBackend mock(Json{{"label-suggestion", {fenced("json", arr.dump())}}});
    CHECK(propose_labels(lib, {}, 3, mock).size() == 1);
  }
  SUBCASE("non-JSON output fails after retries") {
    MockBackend mock(Json{{"label-suggestion", {"sorry", fenced("json", "{not json"), fenced("json", "{}")}}});
    CHECK_THROWS_AS(propose_labels(lib, {}, 3, mock, 2), LmError);
    CHECK(mock.records().size() == 3);
  }
  SUBCASE("malformed then valid") {
    MockBackend mock(Json{{"label-suggestion", {"sorry", fenced("json", Json::array({item("Z")}).dump())}}});
    CHECK(propose_labels(lib, {}, 1, mock).size() == 1);
  }
  MockBackend none;
  CHECK_THROWS(propose_labels(lib, {}, 0, none));
}

TEST_CASE("lm: mutator uses the grammar fallback or the model") {
  MutationRequest req;
  req.parents = {parse_detector("DETECT a WHERE speed(0) > 10")};
  req.seed = 3;
  req.label = "Fast";
  req.description = "something moves fast";

  MockBackend empty;
  const Mutator g = lm_mutator(empty);
  CHECK(g.propose(req) == grammar_mutate(req.parents, req.seed));

  MockBackend scripted(Json{{"detector-evolution", {fenced("detector", "DETECT b WHERE speed(0) > 20")}}});
  const Mutator m = lm_mutator(scripted);
  CHECK_FALSE(m.concurrent_safe);
  CHECK(m.propose(req) == "DETECT b WHERE speed(0) > 20");
}

TEST_CASE("lm: prompts render every slot and match golden files") {
  for (const char* name : {"detector_evolution.txt", "reward_synthesis.txt", "reward_repair.txt",
                           "label_suggestion.txt", "dsl_guide.txt", "trace_spec.txt", "few_shot.json"})
    CHECK_FALSE(prompt_template(name).empty());
  CHECK_THROWS_AS(prompt_template("nope.txt"), NotFoundError);
  CHECK_THROWS(render_prompt("reward_repair.txt", {{"candidate", "x"}}));
  CHECK(default_few_shots().size() == 3);
  for (const FewShot& s : default_few_shots()) CHECK_NOTHROW(parse_reward(s.program));

  const PatternLibrary lib = small_library();
  const Scene scene = build_scene({"buckets3", Json::object(), 0});
  const std::string reward = reward_prompt("Launch the green ball into the second bucket.", lib, scene,
                                           default_few_shots());
  MutationRequest req;
  req.parents = {parse_detector("DETECT a WHERE speed(0) > 10")};
  req.label = "Ball Bounce";
  req.description = "a ball hits the floor and rises again";
  req.library_labels = {"Lever Launch"};
  req.formattings = library_formattings(lib);
  const std::string detector = detector_prompt(req, "line 1: expected WHERE");
  const std::string labels = label_prompt(lib, {"the red ball wedges between the bars", "it rolls back"}, 5);
  const std::string repair =
      render_prompt("reward_repair.txt", {{"candidate", "EVENT(\"x\")"}, {"error", "unknown identifier 'x'"}});

  for (const std::string* p : {&reward, &detector, &labels, &repair}) {
    CHECK(p->find("{{") == std::string::npos);
    CHECK(p->find("}}") == std::string::npos);
  }
  CHECK(reward.find("Launch the green ball into the second bucket.") != std::string::npos);
  CHECK(reward.find("Lever Launch") != std::string::npos);
  CHECK(detector.find(print_detector(req.parents.front())) != std::string::npos);
  CHECK(detector.find("line 1: expected WHERE") != std::string::npos);
  CHECK(labels.find("5") != std::string::npos);

  check_golden("prompt_reward_synthesis.txt", reward);
  check_golden("prompt_detector_evolution.txt", detector);
  check_golden("prompt_label_suggestion.txt", labels);
  check_golden("prompt_reward_repair.txt", repair);
}
