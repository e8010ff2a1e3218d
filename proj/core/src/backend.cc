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

#include "pvir/backend.h"

#include <chrono>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "io_util.h"

namespace pvir {

std::string_view FinishReasonName(FinishReason reason) {
  switch (reason) {
    case FinishReason::kStop: return "stop";
    case FinishReason::kLength: return "length";
    case FinishReason::kError: return "error";
  }
  return "error";
}

void ValidateRequest(const GenerateRequest& request) {
  for (std::size_t i = 0; i < request.media.size(); ++i) {
    const MediaRef& m = request.media[i];
    if (!(m.start_s >= 0.0) || !(m.start_s <= m.end_s)) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("media[{}]: invalid interval ({}, {})", i,
                              m.start_s, m.end_s));
    }
    if (!(m.fps > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("media[{}]: fps must be positive", i));
    }
  }
}

std::string Fingerprint(const GenerateRequest& request) {
  // Length-prefixed fields so distinct requests never share a byte stream.
  std::string canonical;
  auto field = [&canonical](std::string_view s) {
    canonical += fmt::format("{}:", s.size());
    canonical += s;
  };
  field("pvir-request-v1");
  field(request.prompt_text);
  canonical += fmt::format("{}|", request.media.size());
  for (const MediaRef& m : request.media) {
    field(m.uri);
    field(fmt::format("{}", m.start_s));
    field(fmt::format("{}", m.end_s));
  }

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(canonical.data(), canonical.size(), digest, &length,
             EVP_sha256(), nullptr);
  std::string hex;
  hex.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    hex += fmt::format("{:02x}", digest[i]);
  }
  return hex;
}

nlohmann::json RequestToJson(const GenerateRequest& request) {
  nlohmann::json media = nlohmann::json::array();
  for (const MediaRef& m : request.media) {
    media.push_back({{"uri", m.uri},
                     {"start_s", m.start_s},
                     {"end_s", m.end_s},
                     {"fps", m.fps},
                     {"max_pixels", m.max_pixels}});
  }
  return {{"model_id", request.model_id},
          {"prompt_text", request.prompt_text},
          {"media", std::move(media)},
          {"params",
           {{"temperature", request.params.temperature},
            {"max_tokens", request.params.max_tokens},
            {"seed", request.params.seed}}}};
}

GenerateRequest RequestFromJson(const nlohmann::json& j) {
  GenerateRequest r;
  try {
    r.model_id = j.value("model_id", "");
    r.prompt_text = j.at("prompt_text").get<std::string>();
    for (const auto& m : j.value("media", nlohmann::json::array())) {
      MediaRef ref;
      ref.uri = m.at("uri").get<std::string>();
      ref.start_s = m.at("start_s").get<double>();
      ref.end_s = m.at("end_s").get<double>();
      ref.fps = m.value("fps", 2.0);
      ref.max_pixels = m.value("max_pixels", 6400);
      r.media.push_back(std::move(ref));
    }
    if (j.contains("params")) {
      const auto& p = j.at("params");
      r.params.temperature = p.value("temperature", 0.0);
      r.params.max_tokens = p.value("max_tokens", 1024);
      r.params.seed = p.value("seed", std::uint64_t{0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("request", e.what());
  }
  return r;
}

nlohmann::json ResponseToJson(const GenerateResponse& response) {
  return {{"text", response.text},
          {"finish_reason", FinishReasonName(response.finish_reason)},
          {"latency_ms", response.latency_ms}};
}

GenerateResponse ResponseFromJson(const nlohmann::json& j,
                                  const std::string& fingerprint) {
  auto fail = [&](const std::string& why) {
    return BackendError(BackendErrorKind::kProtocol, fingerprint,
                        "malformed response: " + why);
  };
  if (!j.is_object()) throw fail("expected a JSON object");
  GenerateResponse r;
  const std::string reason = j.value("finish_reason", "stop");
  if (reason == "stop") {
    r.finish_reason = FinishReason::kStop;
  } else if (reason == "length") {
    r.finish_reason = FinishReason::kLength;
  } else if (reason == "error") {
    r.finish_reason = FinishReason::kError;
  } else {
    throw fail("unknown finish_reason '" + reason + "'");
  }
  auto text = j.find("text");
  if (text != j.end() && text->is_string()) {
    r.text = text->get<std::string>();
  } else if (r.finish_reason != FinishReason::kError) {
    throw fail("missing text");
  }
  auto latency = j.find("latency_ms");
  if (latency != j.end() && latency->is_number()) {
    r.latency_ms = latency->get<double>();
  }
  return r;
}

// ---------------------------------------------------------------------------

void MockBackend::AddFixture(const std::string& fingerprint, std::string text) {
  std::lock_guard lock(mu_);
  fixtures_[fingerprint] = std::move(text);
}

void MockBackend::Script(const std::string& fingerprint,
                         std::vector<ScriptStep> steps) {
  std::lock_guard lock(mu_);
  auto& queue = scripts_[fingerprint];
  for (auto& step : steps) queue.push_back(std::move(step));
}

void MockBackend::SetFallback(std::string text) {
  std::lock_guard lock(mu_);
  fallback_ = std::move(text);
}

void MockBackend::NameFixture(const std::string& name,
                              const std::string& fingerprint) {
  std::lock_guard lock(mu_);
  names_[name] = fingerprint;
}

std::optional<std::string> MockBackend::FingerprintForName(
    const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = names_.find(name);
  if (it == names_.end()) return std::nullopt;
  return it->second;
}

void MockBackend::LoadDirectory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kIo,
                fmt::format("fixture directory '{}' not found", dir.string()));
  }
  std::lock_guard lock(mu_);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    fixtures_[file.stem().string()] = internal::ReadFile(file);
  }
  const fs::path index = dir / "index.json";
  if (fs::exists(index)) {
    const nlohmann::json j = internal::ParseJsonFile(index);
    if (!j.is_object()) throw SchemaError("index.json", "expected object");
    for (const auto& [name, fp] : j.items()) {
      if (!fp.is_string()) {
        throw SchemaError("index.json." + name, "expected fingerprint string");
      }
      names_[name] = fp.get<std::string>();
    }
  }
}

void MockBackend::SaveDirectory(const std::filesystem::path& dir) const {
  std::lock_guard lock(mu_);
  std::filesystem::create_directories(dir);
  for (const auto& [fp, text] : fixtures_) {
    internal::WriteFileAtomic(dir / (fp + ".txt"), text);
  }
  if (!names_.empty()) {
    nlohmann::json index(names_);
    internal::WriteFileAtomic(dir / "index.json", index.dump(2) + "\n");
  }
}

GenerateResponse MockBackend::Generate(const GenerateRequest& request) {
  ValidateRequest(request);
  const std::string fp = Fingerprint(request);
  std::lock_guard lock(mu_);
  calls_.push_back(request);
  auto script = scripts_.find(fp);
  if (script != scripts_.end() && !script->second.empty()) {
    ScriptStep step = std::move(script->second.front());
    script->second.pop_front();
    if (const auto* failure = std::get_if<Failure>(&step)) {
      throw BackendError(failure->kind, fp, "scripted failure");
    }
    return {std::get<std::string>(std::move(step)), FinishReason::kStop, 0.0};
  }
  auto fixture = fixtures_.find(fp);
  if (fixture != fixtures_.end()) {
    return {fixture->second, FinishReason::kStop, 0.0};
  }
  if (fallback_) return {*fallback_, FinishReason::kStop, 0.0};
  throw BackendError(BackendErrorKind::kNoFixture, fp,
                     "no fixture for request");
}

std::size_t MockBackend::call_count() const {
  std::lock_guard lock(mu_);
  return calls_.size();
}

std::vector<GenerateRequest> MockBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

GenerateResponse ConcurrencyLimitedBackend::Generate(
    const GenerateRequest& request) {
  slots_->acquire();
  struct Release {
    std::counting_semaphore<>* s;
    ~Release() { s->release(); }
  } release{slots_.get()};
  return inner_->Generate(request);
}

}  // namespace pvir
