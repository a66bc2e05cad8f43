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

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "simtrace/evolution.hpp"
#include "simtrace/physics.hpp"
#include "simtrace/reward.hpp"

namespace simtrace {

enum class RequestKind { DetectorEvolution, RewardSynthesis, LabelSuggestion };
std::string_view to_string(RequestKind kind);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  RequestKind kind = RequestKind::RewardSynthesis;
  std::vector<ChatMessage> messages;
};

/// Chat-completion endpoint. `url` is the full route, e.g.
/// http://localhost:8000/v1/chat/completions.
struct EndpointConfig {
  std::string url;
  std::string model;
  std::string api_key;
  double temperature = 0.7;
  int max_tokens = 2048;
  double timeout_seconds = 60.0;
  int retries = 3;
  double backoff_seconds = 0.5;
  /// 0 disables rate limiting.
  double requests_per_minute = 60.0;

  /// Reads LM_ENDPOINT, LM_MODEL and LM_API_KEY.
  static EndpointConfig from_env();
  /// Never includes the token.
  Json to_json() const;
};

class LmError : public Error {
 public:
  using Error::Error;
};
class TransportError : public LmError {
 public:
  using LmError::LmError;
};
class AuthError : public LmError {
 public:
  using LmError::LmError;
};
class ExtractionError : public LmError {
 public:
  using LmError::LmError;
};

class SynthesisError : public LmError {
 public:
  explicit SynthesisError(std::vector<std::string> chain);
  const std::vector<std::string>& chain() const { return chain_; }

 private:
  std::vector<std::string> chain_;
};

struct ExchangeRecord {
  std::string kind;
  std::string request_hash;
  std::string response_hash;
  int attempts = 1;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  /// Raw model text.
  std::string complete(const ChatRequest& request);
  /// True when detector evolution should use the grammar mutator.
  virtual bool grammar_detectors() const { return false; }
  virtual bool concurrent_safe() const { return true; }

  std::vector<ExchangeRecord> records() const;
  /// Reproducibility manifest: backend name and request/response hashes.
  Json manifest() const;

 protected:
  virtual std::string do_complete(const ChatRequest& request, int& attempts) = 0;

 private:
  mutable std::mutex mu_;
  std::vector<ExchangeRecord> records_;
};

/// Replays canned responses. The transcript is a JSON object mapping request
/// kinds ("detector-evolution", "reward-synthesis", "label-suggestion") to
/// lists of response texts, consumed in order. Detector evolution with no
/// queued response falls back to the grammar mutator.
class MockBackend : public Backend {
 public:
  MockBackend() = default;
  explicit MockBackend(const Json& transcript);
  static std::unique_ptr<MockBackend> from_file(const std::filesystem::path& path);

  std::string name() const override { return "mock"; }
  bool grammar_detectors() const override;
  bool concurrent_safe() const override { return false; }
  std::size_t remaining(RequestKind kind) const;

 protected:
  std::string do_complete(const ChatRequest& request, int& attempts) override;

 private:
  mutable std::mutex queue_mu_;
  std::map<std::string, std::deque<std::string>> queues_;
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(EndpointConfig config);
  std::string name() const override { return "http"; }
  const EndpointConfig& config() const { return config_; }

 protected:
  std::string do_complete(const ChatRequest& request, int& attempts) override;

 private:
  EndpointConfig config_;
  std::mutex rate_mu_;
  double next_slot_ = 0.0;  // steady-clock seconds
  void wait_for_slot();
};

/// "mock", "mock:<transcript.json>" or "http" (endpoint from the environment).
std::unique_ptr<Backend> make_backend(const std::string& spec);

/// Raw template text by file name, e.g. "reward_synthesis.txt".
const std::string& prompt_template(const std::string& name);
/// Substitutes {{ slot }} placeholders; every slot must be supplied.
std::string render_prompt(const std::string& name, const std::map<std::string, std::string>& slots);

enum class FenceKind { Detector, Dsl, Json };

/// Content of the first fenced block of the given kind, searching inside
/// <answer> ... </answer> when present.
std::string extract_code(const std::string& text, FenceKind kind);

struct DetectorResponse {
  std::string code;
  std::optional<Json> parameters;
};
DetectorResponse extract_detector(const std::string& text);

std::string library_summary(const PatternLibrary& library);
std::string scene_summary(const Scene& scene);
/// Parameter formats of built-in and library events.
std::string library_formattings(const PatternLibrary& library);

std::string detector_prompt(const MutationRequest& request, const std::string& errors = "");

/// Detector mutator backed by a language model (or the grammar mutator when
/// the backend asks for it). The backend must outlive the mutator.
Mutator lm_mutator(Backend& backend);

struct FewShot {
  std::string goal;
  std::string program;
};
std::vector<FewShot> default_few_shots();

struct SynthesisResult {
  RewardProgram program;
  int attempts = 0;
  std::vector<std::string> errors;  // one per failed attempt
  std::string prompt;
};

std::string reward_prompt(const std::string& goal, const PatternLibrary& library, const Scene& scene,
                          const std::vector<FewShot>& shots);

SynthesisResult synthesize_reward(const std::string& goal, const PatternLibrary& library, const Scene& scene,
                                  Backend& backend, int retry_limit = 3,
                                  const std::vector<FewShot>& shots = default_few_shots());

struct LabelSuggestion {
  std::string label;
  std::string description;
  std::string reason;
};

std::string label_prompt(const PatternLibrary& library, const std::vector<std::string>& snippets, int k);

std::vector<LabelSuggestion> propose_labels(const PatternLibrary& library, const std::vector<std::string>& snippets,
                                            int k, Backend& backend, int retries = 2);

}  // namespace simtrace
