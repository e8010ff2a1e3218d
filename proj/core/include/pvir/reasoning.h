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

#ifndef PVIR_REASONING_H_
#define PVIR_REASONING_H_

// Per-phase multi-view captioning and multiple-choice question answering.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pvir/backend.h"
#include "pvir/core_model.h"
#include "pvir/ingest.h"

namespace pvir {

inline constexpr std::string_view kPedestrianCaptionTemplate =
    "Could you describe this video with caption for pedestrian?";
inline constexpr std::string_view kVehicleCaptionTemplate =
    "Could you describe this video with caption for vehicle?";
inline constexpr std::string_view kAnswerDirective =
    "Please output your final answer after `answer_choice': .";

struct ReasoningTask {
  AnalysisTask kind = AnalysisTask::kCaption;
  Perspective perspective = Perspective::kPedestrian;  // captions only
  std::string qa_id;                                   // VQA only

  friend bool operator==(const ReasoningTask&, const ReasoningTask&) = default;
};

struct ReasoningPrompt {
  std::string text;
  std::vector<PromptMedia> media;
  ReasoningTask task;
};

// Throws Error(kEmptyInput) for no clips.
ReasoningPrompt BuildCaptionPrompt(const std::vector<Clip>& clips,
                                   Perspective perspective);

// Question, options "a. ..".."d. .." one per line, then kAnswerDirective.
// Throws Error(kEmptyInput) for no clips.
ReasoningPrompt BuildVqaPrompt(const QAItem& item,
                               const std::vector<Clip>& clips);

// Clips a question is asked over: vehicle-view / overhead-view questions get
// the matching views of their phase, environment questions get every view
// over the whole event. Throws Error(kPhaseAbsent) when the question's phase
// is not segmented and Error(kInvalidArgument) when no view matches.
std::vector<Clip> ClipsForQuestion(const MultiViewEvent& event,
                                   const PhaseSegmentation& segmentation,
                                   const QAItem& item);

GenerateRequest ToRequest(const ReasoningPrompt& prompt,
                          const ModelOptions& model);

// Case-insensitive cascade, first hit wins:
//   "answer_choice: X", "answer: X", "choice: X", a standalone letter a-d.
std::optional<Choice> ExtractAnswerChoice(std::string_view raw_text);

// Captions for both perspectives plus one answer per question. Every
// question must be scoped to `phase` (Error(kInvalidArgument) otherwise).
// A failing item is recorded in PhaseAnalysis::errors and the rest proceed.
// Throws Error(kPhaseAbsent) when `phase` is not segmented.
PhaseAnalysis AnalyzePhase(Backend& backend, const MultiViewEvent& event,
                           const PhaseSegmentation& segmentation,
                           PhaseLabel phase,
                           const std::vector<QAItem>& questions,
                           const ModelOptions& model);

// Environment-scope questions over the full event. The result has no phase
// and no captions.
PhaseAnalysis AnalyzeEnvironment(Backend& backend, const MultiViewEvent& event,
                                 const std::vector<QAItem>& questions,
                                 const ModelOptions& model);

}  // namespace pvir

#endif  // PVIR_REASONING_H_
