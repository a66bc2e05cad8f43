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

#include <chrono>
#include <thread>

#include <httplib.h>

#include "simtrace/lm_bridge.hpp"

namespace simtrace {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw LmError("endpoint URL needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

HttpBackend::HttpBackend(EndpointConfig config) : config_(std::move(config)) {
  if (config_.url.empty()) throw LmError("endpoint URL is empty");
  split_url(config_.url);
}

void HttpBackend::wait_for_slot() {
  if (config_.requests_per_minute <= 0.0) return;
  double wait = 0.0;
  {
    std::lock_guard lock(rate_mu_);
    const double now = now_seconds();
    const double slot = std::max(now, next_slot_);
    next_slot_ = slot + 60.0 / config_.requests_per_minute;
    wait = slot - now;
  }
  if (wait > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(wait));
}

std::string HttpBackend::do_complete(const ChatRequest& request, int& attempts) {
  const Url url = split_url(config_.url);
  Json messages = Json::array();
  for (const ChatMessage& m : request.messages) messages.push_back(Json{{"role", m.role}, {"content", m.content}});
  const std::string body = Json{{"model", config_.model},
                                {"messages", messages},
                                {"temperature", config_.temperature},
                                {"max_tokens", config_.max_tokens}}
                               .dump();
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last;
  const int total = std::max(1, config_.retries + 1);
  for (attempts = 1; attempts <= total; ++attempts) {
    if (attempts > 1)
      std::this_thread::sleep_for(
          std::chrono::duration<double>(config_.backoff_seconds * static_cast<double>(1 << std::min(attempts - 2, 10))));
    wait_for_slot();
    httplib::Client client(url.origin);
    const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      last = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw AuthError("endpoint rejected the credentials (HTTP " + std::to_string(res->status) + ")");
    if (res->status == 429 || res->status >= 500) {
      last = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw LmError("endpoint returned HTTP " + std::to_string(res->status));
    Json reply = Json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty())
      throw LmError("endpoint reply is not a chat completion");
    const Json& msg = reply["choices"][0]["message"];
    if (!msg.contains("content") || !msg["content"].is_string()) throw LmError("chat completion has no text content");
    return msg["content"].get<std::string>();
  }
  --attempts;
  throw TransportError("no response after " + std::to_string(total) + " attempts (" + last + ")");
}

}  // namespace simtrace
