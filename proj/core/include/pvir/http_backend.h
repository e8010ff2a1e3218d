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

#ifndef PVIR_HTTP_BACKEND_H_
#define PVIR_HTTP_BACKEND_H_

#include <chrono>
#include <functional>
#include <optional>
#include <string>

#include "pvir/backend.h"

namespace pvir {

struct HttpBackendOptions {
  // scheme://host[:port], e.g. "http://127.0.0.1:8080".
  std::string base_url;
  double timeout_s = 120.0;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
  // Sent as "Authorization: Bearer <token>" when set.
  std::optional<std::string> bearer_token;

  // PVIR_BACKEND_URL and PVIR_BACKEND_TIMEOUT_S override the defaults.
  static HttpBackendOptions FromEnvironment();
};

// Talks to an inference server over POST /v1/generate. Timeouts, transport
// failures and 5xx responses are retried with geometric backoff up to
// max_attempts; 4xx and malformed bodies fail immediately.
class HttpBackend : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpBackend(HttpBackendOptions options);
  // The sleeper is injectable so tests can observe the backoff schedule.
  HttpBackend(HttpBackendOptions options, Sleeper sleeper);

  GenerateResponse Generate(const GenerateRequest& request) override;

  const HttpBackendOptions& options() const { return options_; }

 private:
  HttpBackendOptions options_;
  Sleeper sleeper_;
};

}  // namespace pvir

#endif  // PVIR_HTTP_BACKEND_H_
