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

#include "pvir/reasoning.h"

#include <regex>

#include <fmt/format.h>

#include "pvir/errors.h"

namespace pvir {

namespace {

std::vector<PromptMedia> MediaFor(const std::vector<Clip>& clips) {
  if (clips.empty()) {
    throw Error(ErrorCode::kEmptyInput, "prompt needs at least one clip");
  }
  std::vector<PromptMedia> media;
  media.reserve(clips.size());
  for (const Clip& clip : clips) {
    media.push_back({{clip.view.video_uri, clip.interval.start_s,
                      clip.interval.end_s},
                     clip.view.view_id,
                     clip.view.kind});
  }
  return media;
}

std::vector<std::string> ViewIds(const std::vector<PromptMedia>& media) {
  std::vector<std::string> ids;
  for (const auto& m : media) ids.push_back(m.view_id);
  return ids;
}

}  // namespace

ReasoningPrompt BuildCaptionPrompt(const std::vector<Clip>& clips,
                                   Perspective perspective) {
  ReasoningPrompt prompt;
  prompt.media = MediaFor(clips);
  prompt.text = std::string(perspective == Perspective::kPedestrian
                                ? kPedestrianCaptionTemplate
                                : kVehicleCaptionTemplate);
  prompt.task = {AnalysisTask::kCaption, perspective, ""};
  return prompt;
}

ReasoningPrompt BuildVqaPrompt(const QAItem& item,
                               const std::vector<Clip>& clips) {
  ReasoningPrompt prompt;
  prompt.media = MediaFor(clips);
  std::string text = item.question;
  text += '\n';
  for (std::size_t i = 0; i < kAllChoices.size(); ++i) {
    text += fmt::format("{}. {}\n", ChoiceLetter(kAllChoices[i]),
                        item.options[i]);
  }
  text += kAnswerDirective;
  prompt.text = std::move(text);
  prompt.task = {AnalysisTask::kVqa, Perspective::kPedestrian, item.qa_id};
  return prompt;
}

std::vector<Clip> ClipsForQuestion(const MultiViewEvent& event,
                                   const PhaseSegmentation& segmentation,
                                   const QAItem& item) {
  if (item.scope == QAScope::kEnvironment) return FullEventClips(event);
  if (!item.phase) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("question {} has no phase", item.qa_id));
  }
  const ViewKind wanted = item.scope == QAScope::kVehicleView
                              ? ViewKind::kVehicle
                              : ViewKind::kOverhead;
  std::vector<Clip> clips;
  for (Clip& clip : PhaseSlice(event, segmentation, *item.phase)) {
    if (clip.view.kind == wanted) clips.push_back(std::move(clip));
  }
  if (clips.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("question {}: event has no {} view", item.qa_id,
                            ViewKindName(wanted)));
  }
  return clips;
}

GenerateRequest ToRequest(const ReasoningPrompt& prompt,
                          const ModelOptions& model) {
  GenerateRequest request;
  request.model_id = model.model_id;
  request.prompt_text = prompt.text;
  request.params = model.params;
  for (const auto& m : prompt.media) request.media.push_back(m.ref);
  return request;
}

std::optional<Choice> ExtractAnswerChoice(std::string_view raw_text) {
  static const std::regex kPatterns[] = {
      std::regex(R"(answer_choice['"`]?\s*[:=]\s*['"`(\[]?([a-d])\b)",
                 std::regex::icase),
      std::regex(R"(\banswer['"`]?\s*[:=]\s*['"`(\[]?([a-d])\b)",
                 std::regex::icase),
      std::regex(R"(\bchoice['"`]?\s*[:=]\s*['"`(\[]?([a-d])\b)",
                 std::regex::icase),
      std::regex(R"((?:^|[^A-Za-z0-9_'])([a-dA-D])(?![A-Za-z0-9_']))"),
  };
  const std::string text(raw_text);
  for (const auto& re : kPatterns) {
    std::smatch m;
    if (std::regex_search(text, m, re)) {
      return ChoiceFromLetter(m[1].str()[0]);
    }
  }
  return std::nullopt;
}

namespace {

void AnswerQuestions(Backend& backend, const MultiViewEvent& event,
                     const PhaseSegmentation& segmentation,
                     const std::vector<QAItem>& questions,
                     const ModelOptions& model, PhaseAnalysis& out) {
  for (const QAItem& item : questions) {
    try {
      const ReasoningPrompt prompt =
          BuildVqaPrompt(item, ClipsForQuestion(event, segmentation, item));
      const GenerateResponse response =
          backend.Generate(ToRequest(prompt, model));
      AnswerRecord answer{item.qa_id, response.text,
                          ExtractAnswerChoice(response.text),
                          ViewIds(prompt.media)};
      out.answers.push_back({item, std::move(answer)});
    } catch (const Error& e) {
      out.errors.push_back({AnalysisTask::kVqa, item.qa_id, e.what()});
    }
  }
}

}  // namespace

PhaseAnalysis AnalyzePhase(Backend& backend, const MultiViewEvent& event,
                           const PhaseSegmentation& segmentation,
                           PhaseLabel phase,
                           const std::vector<QAItem>& questions,
                           const ModelOptions& model) {
  for (const QAItem& item : questions) {
    if (item.scope == QAScope::kEnvironment || item.phase != phase) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("question {} is not scoped to phase {}",
                              item.qa_id, PhaseIndex(phase)));
    }
  }
  const std::vector<Clip> clips = PhaseSlice(event, segmentation, phase);

  PhaseAnalysis analysis;
  analysis.phase = phase;
  for (Perspective perspective :
       {Perspective::kPedestrian, Perspective::kVehicle}) {
    try {
      const ReasoningPrompt prompt = BuildCaptionPrompt(clips, perspective);
      const GenerateResponse response =
          backend.Generate(ToRequest(prompt, model));
      analysis.captions.push_back(
          {phase, perspective, response.text, ViewIds(prompt.media)});
    } catch (const Error& e) {
      analysis.errors.push_back({AnalysisTask::kCaption,
                                 std::string(PerspectiveName(perspective)),
                                 e.what()});
    }
  }
  AnswerQuestions(backend, event, segmentation, questions, model, analysis);
  return analysis;
}

PhaseAnalysis AnalyzeEnvironment(Backend& backend, const MultiViewEvent& event,
                                 const std::vector<QAItem>& questions,
                                 const ModelOptions& model) {
  for (const QAItem& item : questions) {
    if (item.scope != QAScope::kEnvironment) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("question {} is not an environment question",
                              item.qa_id));
    }
  }
  PhaseAnalysis analysis;
  // Environment questions never consult the segmentation.
  AnswerQuestions(backend, event, PhaseSegmentation(), questions, model,
                  analysis);
  return analysis;
}

}  // namespace pvir
