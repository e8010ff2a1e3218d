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

#ifndef PVIR_GROUNDING_H_
#define PVIR_GROUNDING_H_

// Multi-view temporal grounding of the five behavioral phases: prompt
// construction, response parsing, and the backend round trip.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "pvir/backend.h"
#include "pvir/core_model.h"
#include "pvir/ingest.h"

namespace pvir {

// The five phase definitions in phase order.
class PhaseDefinitionSet {
 public:
  // Standard definitions for the pedestrian behavior taxonomy.
  static PhaseDefinitionSet Standard();

  // Throws Error(kInvalidArgument) unless exactly five non-empty texts.
  explicit PhaseDefinitionSet(std::vector<std::string> definitions);

  const std::string& at(PhaseLabel phase) const {
    return definitions_[PhaseIndex(phase)];
  }
  const std::array<std::string, kPhaseCount>& all() const {
    return definitions_;
  }

 private:
  std::array<std::string, kPhaseCount> definitions_;
};

struct GroundingPrompt {
  std::string system_text;
  // Temporal serialization order: exactly the event's view order.
  std::vector<PromptMedia> media;
};

GroundingPrompt BuildGroundingPrompt(const MultiViewEvent& event,
                                     const PhaseDefinitionSet& definitions);

GenerateRequest ToRequest(const GroundingPrompt& prompt,
                          const ModelOptions& model);

// Accepted response syntaxes:
//   labeled lines   "Phase 2 (Judgment): 30.7 - 32.5" (also "30.7s to 32.5s",
//                   "30.7--32.5", or a phase name instead of "Phase N")
//   JSON            {"phase_2": {"start": 30.7, "end": 32.5}, ...}, with keys
//                   "2"/"phase 2"/names, values {start,end} or [start,end],
//                   or {"phases": [{"phase": 2, "start_s": .., "end_s": ..}]}
//   key/value       "Phase 2: start=30.7, end=32.5"
enum class ResponseSyntax { kLabeledLines, kJson, kKeyValue };

// Renders a segmentation in one of the accepted syntaxes (used for mock
// fixtures and round-trip checks).
std::string RenderSegmentationResponse(const PhaseSegmentation& seg,
                                       ResponseSyntax syntax);

// First occurrence of each phase wins. Result goes through
// ValidateSegmentation. Throws UnparseableResponse when no pair is found.
PhaseSegmentation ParseSegmentationResponse(std::string_view text,
                                            double duration_s);

// build prompt -> backend -> parse. When a recorder is given, the request
// fingerprint and raw response are persisted as the segmentation artifact
// whether or not parsing succeeds. Throws BackendError / UnparseableResponse.
PhaseSegmentation SegmentEvent(Backend& backend, const MultiViewEvent& event,
                               const PhaseDefinitionSet& definitions,
                               const ModelOptions& model,
                               const StageRecorder* recorder = nullptr);

}  // namespace pvir

#endif  // PVIR_GROUNDING_H_
