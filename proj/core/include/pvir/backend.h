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

#ifndef PVIR_BACKEND_H_
#define PVIR_BACKEND_H_

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pvir/core_model.h"
#include "pvir/errors.h"

namespace pvir {

struct GenerateParams {
  double temperature = 0.0;
  int max_tokens = 1024;
  std::uint64_t seed = 0;

  friend bool operator==(const GenerateParams&,
                         const GenerateParams&) = default;
};

// Which model a stage talks to and how it samples.
struct ModelOptions {
  std::string model_id;
  GenerateParams params;
};

// A media entry plus the view it came from; prompts keep the provenance,
// requests only carry the MediaRef.
struct PromptMedia {
  MediaRef ref;
  std::string view_id;
  ViewKind kind = ViewKind::kOverhead;
};

struct GenerateRequest {
  std::string model_id;
  std::string prompt_text;
  std::vector<MediaRef> media;
  GenerateParams params;

  friend bool operator==(const GenerateRequest&,
                         const GenerateRequest&) = default;
};

enum class FinishReason { kStop, kLength, kError };
std::string_view FinishReasonName(FinishReason reason);

struct GenerateResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::kStop;
  double latency_ms = 0.0;
};

// Throws Error(kInvalidArgument) for inverted media bounds or fps <= 0.
void ValidateRequest(const GenerateRequest& request);

// SHA-256 (hex) over the prompt text and the ordered (uri, start, end) media
// list. Model id and generation params are deliberately excluded so fixtures
// survive parameter changes.
std::string Fingerprint(const GenerateRequest& request);

// Wire format of POST /v1/generate.
nlohmann::json RequestToJson(const GenerateRequest& request);
GenerateRequest RequestFromJson(const nlohmann::json& j);
nlohmann::json ResponseToJson(const GenerateResponse& response);
// Throws BackendError(kProtocol) on malformed documents.
GenerateResponse ResponseFromJson(const nlohmann::json& j,
                                  const std::string& fingerprint);

// Model inference contract shared by the grounding, reasoning and synthesis
// stages. Implementations must be safe to call from several threads.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual GenerateResponse Generate(const GenerateRequest& request) = 0;
};

// Deterministic test double. Responses are keyed by request fingerprint;
// scripted sequences are consumed first, one entry per call, and may inject
// failures.
class MockBackend : public Backend {
 public:
  struct Failure {
    BackendErrorKind kind = BackendErrorKind::kTimeout;
  };
  using ScriptStep = std::variant<std::string, Failure>;

  MockBackend() = default;

  void AddFixture(const std::string& fingerprint, std::string text);
  void AddFixture(const GenerateRequest& request, std::string text) {
    AddFixture(Fingerprint(request), std::move(text));
  }
  void Script(const std::string& fingerprint, std::vector<ScriptStep> steps);
  // Text returned for any request without a fixture or script.
  void SetFallback(std::string text);

  // Loads every <fingerprint>.txt in `dir`. An optional index.json maps
  // human-readable names to fingerprints and is kept for lookup by name.
  void LoadDirectory(const std::filesystem::path& dir);
  // Writes fixtures back in the same layout.
  void SaveDirectory(const std::filesystem::path& dir) const;
  void NameFixture(const std::string& name, const std::string& fingerprint);
  std::optional<std::string> FingerprintForName(const std::string& name) const;

  GenerateResponse Generate(const GenerateRequest& request) override;

  std::size_t call_count() const;
  std::vector<GenerateRequest> calls() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> fixtures_;
  std::map<std::string, std::deque<ScriptStep>> scripts_;
  std::map<std::string, std::string> names_;
  std::optional<std::string> fallback_;
  std::vector<GenerateRequest> calls_;
};

// Bounds the number of in-flight requests across every user of the wrapped
// backend.
class ConcurrencyLimitedBackend : public Backend {
 public:
  ConcurrencyLimitedBackend(std::shared_ptr<Backend> inner,
                            std::shared_ptr<std::counting_semaphore<>> slots)
      : inner_(std::move(inner)), slots_(std::move(slots)) {}

  GenerateResponse Generate(const GenerateRequest& request) override;

 private:
  std::shared_ptr<Backend> inner_;
  std::shared_ptr<std::counting_semaphore<>> slots_;
};

}  // namespace pvir

#endif  // PVIR_BACKEND_H_
