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

#ifndef PVIR_SYNTHESIS_H_
#define PVIR_SYNTHESIS_H_

// Event information assembly, the expert synthesis prompt, incident report
// validation, and the validate-and-retry loop.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pvir/backend.h"
#include "pvir/core_model.h"
#include "pvir/errors.h"
#include "pvir/ingest.h"

namespace pvir {

// Orders captions and answers by phase (environment answers last), keeping
// the given order within a phase. Throws Error(kUnknownPhase) for an
// analysis whose phase is not present in `segmentation`.
EventInfoSet AssembleEventInfo(const PhaseSegmentation& segmentation,
                               const std::vector<PhaseAnalysis>& analyses);

struct SynthesisPrompt {
  std::string role_text;
  std::string input_block;
  std::string instruction_block;
  std::string output_schema_text;

  // Blocks joined by blank lines.
  std::string Render() const;
};

// `view_kinds` maps view ids to their camera kind so the input block can
// label sources as egocentric or exocentric; unknown ids are listed as-is.
// Throws Error(kEmptyInfo) when the set has no phase, caption or answer.
SynthesisPrompt BuildSynthesisPrompt(
    const EventInfoSet& info,
    const std::map<std::string, ViewKind>& view_kinds = {});

// Canonical report JSON:
// {
//   "scene_understanding": str,
//   "behavior_analysis": {
//     "phase_table": [{"phase": name, "time": str, "pedestrian_state": str,
//                      "vehicle_action": str, "risk_level": str}],
//     "interaction_dynamics": {"initial_separation", "convergence_pattern",
//                              "communication", "mutual_awareness",
//                              "critical_failure"}},
//   "event_diagnosis": {
//     "classification": str, "severity": str,
//     "causal_chain": [{"phase": "0".."4", "factor": str}],
//     "contributing_factors": {"primary": [str], "environmental": [str]}},
//   "summary": str
// }
nlohmann::json ReportToJson(const IncidentReport& report);
std::string SerializeReport(const IncidentReport& report);  // 2-space, sorted

// Lists every violation as "path: rule"; empty when the report is valid.
// Accepts a ```-fenced wrapper and prose around the JSON object.
std::vector<SchemaViolation> CheckReport(std::string_view text);

// Throws SchemaViolationsError with all violations.
IncidentReport ValidateReport(std::string_view text);

std::string RenderReportText(const IncidentReport& report);

struct RetryPolicy {
  int max_attempts = 3;

  // Throws Error(kInvalidArgument) for max_attempts < 1.
  void Validate() const;
};

inline constexpr std::string_view kRetryFeedbackHeader =
    "The previous response was rejected by the report validator. Correct "
    "these problems and return the complete JSON object:";

// `base` followed, for every rejected attempt in order, by a blank line,
// kRetryFeedbackHeader and the violations as a numbered list.
std::string RetryPrompt(
    const std::string& base,
    const std::vector<std::vector<SchemaViolation>>& rejected);

struct SynthesisAttempt {
  int number = 0;
  std::string request_fingerprint;
  std::string raw_response;
  std::vector<SchemaViolation> violations;
};

// Calls the backend at most policy.max_attempts times, appending the
// violation feedback of every rejected attempt to the next prompt. Every
// attempt is persisted to the synthesis artifact when a recorder is given.
// Throws ExhaustedRetriesError and BackendError.
IncidentReport SynthesizeReport(
    Backend& backend, const EventInfoSet& info, const RetryPolicy& policy,
    const ModelOptions& model, const StageRecorder* recorder = nullptr,
    const std::map<std::string, ViewKind>& view_kinds = {},
    std::vector<SynthesisAttempt>* attempts_out = nullptr);

}  // namespace pvir

#endif  // PVIR_SYNTHESIS_H_
