/* Copyright 2026 The PVIR Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "pvir/http_backend.h"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

namespace pvir {

HttpBackendOptions HttpBackendOptions::FromEnvironment() {
  HttpBackendOptions options;
  if (const char* url = std::getenv("PVIR_BACKEND_URL")) {
    options.base_url = url;
  }
  if (const char* timeout = std::getenv("PVIR_BACKEND_TIMEOUT_S")) {
    char* end = nullptr;
    const double value = std::strtod(timeout, &end);
    if (end != timeout && value > 0.0) options.timeout_s = value;
  }
  return options;
}

HttpBackend::HttpBackend(HttpBackendOptions options)
    : HttpBackend(std::move(options), [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
      }) {}

HttpBackend::HttpBackend(HttpBackendOptions options, Sleeper sleeper)
    : options_(std::move(options)), sleeper_(std::move(sleeper)) {
  if (options_.base_url.empty()) {
    throw Error(ErrorCode::kConfig, "HTTP backend needs a base URL");
  }
  if (options_.max_attempts < 1) {
    throw Error(ErrorCode::kConfig, "max_attempts must be at least 1");
  }
  if (!(options_.timeout_s > 0.0)) {
    throw Error(ErrorCode::kConfig, "timeout_s must be positive");
  }
}

GenerateResponse HttpBackend::Generate(const GenerateRequest& request) {
  ValidateRequest(request);
  const std::string fp = Fingerprint(request);
  const std::string body = RequestToJson(request).dump();

  httplib::Client client(options_.base_url);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(options_.timeout_s));
  const auto secs = static_cast<time_t>(timeout.count() / 1000000);
  const auto usecs = static_cast<time_t>(timeout.count() % 1000000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (options_.bearer_token) {
    headers.emplace("Authorization", "Bearer " + *options_.bearer_token);
  }

  auto delay = options_.initial_backoff;
  BackendErrorKind last_kind = BackendErrorKind::kTimeout;
  std::string last_message;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) {
      sleeper_(delay);
      delay = std::chrono::milliseconds(static_cast<long long>(
          std::llround(delay.count() * options_.backoff_multiplier)));
    }
    const auto started = std::chrono::steady_clock::now();
    auto result =
        client.Post("/v1/generate", headers, body, "application/json");
    if (!result) {
      last_kind = BackendErrorKind::kTimeout;
      last_message = fmt::format("attempt {}: transport error ({})", attempt,
                                 httplib::to_string(result.error()));
      continue;
    }
    if (result->status >= 500) {
      last_kind = BackendErrorKind::kProtocol;
      last_message =
          fmt::format("attempt {}: HTTP {}", attempt, result->status);
      continue;
    }
    if (result->status != 200) {
      throw BackendError(BackendErrorKind::kProtocol, fp,
                         fmt::format("HTTP {}: {}", result->status,
                                     result->body.substr(0, 200)));
    }
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::parse_error&) {
      throw BackendError(BackendErrorKind::kProtocol, fp,
                         "response body is not JSON");
    }
    GenerateResponse response = ResponseFromJson(parsed, fp);
    if (response.finish_reason == FinishReason::kError) {
      throw BackendError(BackendErrorKind::kProtocol, fp,
                         "server reported finish_reason=error");
    }
    if (response.latency_ms == 0.0) {
      response.latency_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - started)
                                .count();
    }
    return response;
  }
  throw BackendError(last_kind, fp,
                     fmt::format("gave up after {} attempts; last: {}",
                                 options_.max_attempts, last_message));
}

}  // namespace pvir
