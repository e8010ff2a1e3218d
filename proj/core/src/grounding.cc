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

#include "pvir/grounding.h"

#include <cstdlib>
#include <map>
#include <optional>
#include <regex>

#include <fmt/format.h>

#include "pvir/errors.h"

namespace pvir {

using nlohmann::json;

PhaseDefinitionSet PhaseDefinitionSet::Standard() {
  return PhaseDefinitionSet({
      "Phase 0 (Pre-recognition): The timing before the start of environment "
      "awareness (crosswalks, traffic signals, vehicles, etc.).",
      "Phase 1 (Recognition): The timing from the start of environment "
      "awareness (crosswalks, traffic signals, vehicles, etc.) until a "
      "judgment is made.",
      "Phase 2 (Judgment): In principle, the moment from which environmental "
      "awareness is completed until the start of an action.",
      "Phase 3 (Action): Start of movement of any part of the body (excluding "
      "eyes and ears) up to the time a result (e.g., collision) occurs.",
      "Phase 4 (Avoidance): The time after avoidability is clear until the "
      "time of avoidance happened or failure to avoid.",
  });
}

PhaseDefinitionSet::PhaseDefinitionSet(std::vector<std::string> definitions) {
  if (definitions.size() != kPhaseCount) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("expected {} phase definitions, got {}",
                            kPhaseCount, definitions.size()));
  }
  for (std::size_t i = 0; i < definitions.size(); ++i) {
    if (definitions[i].empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("phase definition {} is empty", i));
    }
    definitions_[i] = std::move(definitions[i]);
  }
}

GroundingPrompt BuildGroundingPrompt(const MultiViewEvent& event,
                                     const PhaseDefinitionSet& definitions) {
  GroundingPrompt prompt;
  std::string& text = prompt.system_text;
  text =
      "You are provided with multiple synchronized videos of a traffic event "
      "from different viewpoints. Your task is to identify and locate the "
      "temporal boundaries for five distinct phases based on the following "
      "definitions:\n";
  for (const auto& definition : definitions.all()) {
    text += definition;
    text += '\n';
  }
  text += "Provide the start and end timestamps for each phase in seconds.";

  for (const Clip& clip : FullEventClips(event)) {
    prompt.media.push_back({{clip.view.video_uri, clip.interval.start_s,
                             clip.interval.end_s},
                            clip.view.view_id,
                            clip.view.kind});
  }
  return prompt;
}

GenerateRequest ToRequest(const GroundingPrompt& prompt,
                          const ModelOptions& model) {
  GenerateRequest request;
  request.model_id = model.model_id;
  request.prompt_text = prompt.system_text;
  request.params = model.params;
  for (const auto& m : prompt.media) request.media.push_back(m.ref);
  return request;
}

// ---------------------------------------------------------------------------

std::string RenderSegmentationResponse(const PhaseSegmentation& seg,
                                       ResponseSyntax syntax) {
  std::string out;
  if (syntax == ResponseSyntax::kJson) {
    json j = json::object();
    for (PhaseLabel phase : kAllPhases) {
      if (const auto& iv = seg.get(phase)) {
        j[fmt::format("phase_{}", PhaseIndex(phase))] = {
            {"start", iv->start_s}, {"end", iv->end_s}};
      }
    }
    return j.dump(2);
  }
  for (PhaseLabel phase : kAllPhases) {
    const auto& iv = seg.get(phase);
    if (!iv) continue;
    if (syntax == ResponseSyntax::kLabeledLines) {
      out += fmt::format("Phase {} ({}): {} - {}\n", PhaseIndex(phase),
                         PhaseName(phase), iv->start_s, iv->end_s);
    } else {
      out += fmt::format("Phase {}: start={}, end={}\n", PhaseIndex(phase),
                         iv->start_s, iv->end_s);
    }
  }
  return out;
}

namespace {

using RawBoundaries = std::map<PhaseLabel, TimeInterval>;

const std::regex& PhaseTokenRe() {
  static const std::regex re(
      R"((?:phase[\s_#]*([0-4])(?![0-9.])|(pre[\s_-]?recognition|recognition|judge?ment|action|avoidance)))",
      std::regex::icase);
  return re;
}

const std::regex& KeyValueRe() {
  static const std::regex re(
      R"(start(?:_s|_time)?\s*[=:]\s*(-?\d+(?:\.\d+)?)[\s\S]*?end(?:_s|_time)?\s*[=:]\s*(-?\d+(?:\.\d+)?))",
      std::regex::icase);
  return re;
}

const std::regex& RangeRe() {
  static const std::regex re(
      R"((-?\d+(?:\.\d+)?)\s*(?:s|sec|secs|seconds)?\s*(?:--?|)"
      "\u2013|\u2014"  // en and em dash
      R"(|to|~)\s*(-?\d+(?:\.\d+)?))",
      std::regex::icase);
  return re;
}

std::optional<double> JsonSeconds(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (end != s.c_str()) return d;
  }
  return std::nullopt;
}

std::optional<TimeInterval> JsonInterval(const json& v) {
  if (v.is_array() && v.size() == 2) {
    auto s = JsonSeconds(v[0]), e = JsonSeconds(v[1]);
    if (s && e) return TimeInterval{*s, *e};
    return std::nullopt;
  }
  if (!v.is_object()) return std::nullopt;
  auto pick = [&v](std::initializer_list<const char*> keys)
      -> std::optional<double> {
    for (const char* key : keys) {
      auto it = v.find(key);
      if (it != v.end()) {
        if (auto d = JsonSeconds(*it)) return d;
      }
    }
    return std::nullopt;
  };
  auto s = pick({"start", "start_s", "start_time"});
  auto e = pick({"end", "end_s", "end_time"});
  if (s && e) return TimeInterval{*s, *e};
  return std::nullopt;
}

void AddPhaseEntry(const json& entry, RawBoundaries& out) {
  if (!entry.is_object()) return;
  auto phase_it = entry.find("phase");
  if (phase_it == entry.end()) return;
  std::optional<PhaseLabel> phase;
  if (phase_it->is_number_integer()) {
    phase = PhaseFromIndex(phase_it->get<int>());
  } else if (phase_it->is_string()) {
    phase = ParsePhase(phase_it->get<std::string>());
  }
  auto iv = JsonInterval(entry);
  if (phase && iv) out.emplace(*phase, *iv);
}

RawBoundaries ParseJsonForm(std::string_view text) {
  RawBoundaries out;
  const auto open = text.find_first_of("{[");
  const auto close = text.find_last_of("}]");
  if (open == std::string_view::npos || close == std::string_view::npos ||
      close < open) {
    return out;
  }
  json j = json::parse(text.substr(open, close - open + 1), nullptr,
                       /*allow_exceptions=*/false);
  if (j.is_discarded()) return out;
  if (j.is_object() && j.contains("phases")) j = j["phases"];
  if (j.is_array()) {
    for (const auto& entry : j) AddPhaseEntry(entry, out);
    return out;
  }
  if (!j.is_object()) return out;
  for (const auto& [key, value] : j.items()) {
    auto phase = ParsePhase(key);
    if (!phase) continue;
    if (auto iv = JsonInterval(value)) out.emplace(*phase, *iv);
  }
  return out;
}

RawBoundaries ParseLineForms(std::string_view text) {
  RawBoundaries out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const std::string line(text.substr(start, nl - start));
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

    std::smatch phase_match;
    if (!std::regex_search(line, phase_match, PhaseTokenRe())) continue;
    const auto phase = ParsePhase(phase_match[1].matched
                                      ? phase_match[1].str()
                                      : phase_match[2].str());
    if (!phase || out.count(*phase)) continue;

    // Skip a trailing "(Name)" so its text is never read as a timestamp.
    std::string rest = phase_match.suffix().str();
    static const std::regex paren(R"(^\s*\([^)]*\))");
    rest = std::regex_replace(rest, paren, "", std::regex_constants::format_first_only);

    std::smatch m;
    if (std::regex_search(rest, m, KeyValueRe()) ||
        std::regex_search(rest, m, RangeRe())) {
      out.emplace(*phase, TimeInterval{std::strtod(m[1].str().c_str(), nullptr),
                                       std::strtod(m[2].str().c_str(), nullptr)});
    }
  }
  return out;
}

}  // namespace

PhaseSegmentation ParseSegmentationResponse(std::string_view text,
                                            double duration_s) {
  RawBoundaries raw = ParseJsonForm(text);
  if (raw.empty()) raw = ParseLineForms(text);
  if (raw.empty()) throw UnparseableResponse(std::string(text));
  return ValidateSegmentation(raw, duration_s);
}

PhaseSegmentation SegmentEvent(Backend& backend, const MultiViewEvent& event,
                               const PhaseDefinitionSet& definitions,
                               const ModelOptions& model,
                               const StageRecorder* recorder) {
  const GenerateRequest request =
      ToRequest(BuildGroundingPrompt(event, definitions), model);
  const std::string fp = Fingerprint(request);
  json payload = {{"request_fingerprint", fp}};
  auto record = [&] {
    if (recorder) recorder->Record(Stage::kSegmentation, payload);
  };

  GenerateResponse response;
  try {
    response = backend.Generate(request);
  } catch (const Error& e) {
    payload["error"] = e.what();
    record();
    throw;
  }
  payload["raw_response"] = response.text;
  try {
    PhaseSegmentation seg =
        ParseSegmentationResponse(response.text, event.duration_s);
    payload["segmentation"] = SegmentationToJson(seg);
    record();
    return seg;
  } catch (const UnparseableResponse& e) {
    payload["error"] = e.what();
    record();
    throw;
  }
}

}  // namespace pvir
