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

#include <gtest/gtest.h>

#include <random>

#include "pvir/errors.h"
#include "support/test_support.h"

namespace pvir {
namespace {

MultiViewEvent FourViews() {
  MultiViewEvent e;
  e.event_id = "ev";
  e.duration_s = 45.0;
  e.views = {{"overhead_1", ViewKind::kOverhead, "o1.mp4", std::nullopt, 0.0},
             {"overhead_2", ViewKind::kOverhead, "o2.mp4", std::nullopt, 0.0},
             {"overhead_3", ViewKind::kOverhead, "o3.mp4", std::nullopt, 0.0},
             {"vehicle", ViewKind::kVehicle, "veh.mp4", std::nullopt, 1.5}};
  return e;
}

PhaseSegmentation Seg() {
  return testing::Segmentation({{PhaseLabel::kPreRecognition, {28.8, 29.9}},
                                {PhaseLabel::kRecognition, {29.8, 30.8}},
                                {PhaseLabel::kJudgment, {30.7, 32.5}},
                                {PhaseLabel::kAction, {32.6, 37.8}},
                                {PhaseLabel::kAvoidance, {37.8, 43.7}}},
                               45.0);
}

QAItem Question(const std::string& id, QAScope scope,
                std::optional<PhaseLabel> phase) {
  return {id, scope, phase, "What is the pedestrian doing?",
          {"walking", "standing", "running", "falling"}, Choice::kA};
}

TEST(CaptionPromptTest, TemplatesAndMediaOrder) {
  const auto clips = PhaseSlice(FourViews(), Seg(), PhaseLabel::kAction);
  const auto ped = BuildCaptionPrompt(clips, Perspective::kPedestrian);
  const auto veh = BuildCaptionPrompt(clips, Perspective::kVehicle);
  EXPECT_EQ(ped.text,
            "Could you describe this video with caption for pedestrian?");
  EXPECT_EQ(veh.text, "Could you describe this video with caption for vehicle?");
  ASSERT_EQ(ped.media.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(ped.media[i].view_id, clips[i].view.view_id);
    EXPECT_DOUBLE_EQ(ped.media[i].ref.start_s, clips[i].interval.start_s);
  }
  // The vehicle camera runs 1.5 s ahead of event time.
  EXPECT_DOUBLE_EQ(ped.media[3].ref.start_s, 32.6 + 1.5);
  EXPECT_THROW(BuildCaptionPrompt({}, Perspective::kVehicle), Error);
}

TEST(VqaPromptTest, QuestionOptionsDirective) {
  const QAItem q = Question("q1", QAScope::kOverheadView, PhaseLabel::kAction);
  const auto prompt = BuildVqaPrompt(
      q, PhaseSlice(FourViews(), Seg(), PhaseLabel::kAction));
  EXPECT_EQ(prompt.text,
            "What is the pedestrian doing?\na. walking\nb. standing\n"
            "c. running\nd. falling\n"
            "Please output your final answer after `answer_choice': .");
  EXPECT_EQ(prompt.task.kind, AnalysisTask::kVqa);
  EXPECT_EQ(prompt.task.qa_id, "q1");
}

TEST(VqaPromptTest, EnvironmentScopeUsesWholeEvent) {
  const MultiViewEvent e = FourViews();
  const QAItem q = Question("env", QAScope::kEnvironment, std::nullopt);
  const auto clips = ClipsForQuestion(e, PhaseSegmentation(), q);
  ASSERT_EQ(clips.size(), 4u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(clips[i].interval, (TimeInterval{0.0, 45.0}));
  }
}

TEST(VqaPromptTest, VehicleScopeAttachesOnlyVehicleClip) {
  const QAItem q = Question("v", QAScope::kVehicleView, PhaseLabel::kAction);
  const auto clips = ClipsForQuestion(FourViews(), Seg(), q);
  ASSERT_EQ(clips.size(), 1u);
  EXPECT_EQ(clips[0].view.view_id, "vehicle");
  EXPECT_EQ(clips[0].interval, (TimeInterval{34.1, 39.3}));

  const QAItem o = Question("o", QAScope::kOverheadView, PhaseLabel::kAction);
  EXPECT_EQ(ClipsForQuestion(FourViews(), Seg(), o).size(), 3u);
}

TEST(VqaPromptTest, ScopeErrors) {
  MultiViewEvent overhead_only = FourViews();
  overhead_only.views.pop_back();
  const QAItem v = Question("v", QAScope::kVehicleView, PhaseLabel::kAction);
  EXPECT_THROW(ClipsForQuestion(overhead_only, Seg(), v), Error);
  const QAItem no_phase = Question("x", QAScope::kVehicleView, std::nullopt);
  EXPECT_THROW(ClipsForQuestion(FourViews(), Seg(), no_phase), Error);
  std::map<PhaseLabel, TimeInterval> partial = {
      {PhaseLabel::kPreRecognition, {1, 2}}};
  try {
    ClipsForQuestion(FourViews(), testing::Segmentation(partial, 45.0), v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPhaseAbsent);
  }
}

TEST(PromptTest, Deterministic) {
  const QAItem q = Question("q", QAScope::kOverheadView, PhaseLabel::kJudgment);
  const ModelOptions model{"vlm", {}};
  const auto a = ToRequest(
      BuildVqaPrompt(q, ClipsForQuestion(FourViews(), Seg(), q)), model);
  const auto b = ToRequest(
      BuildVqaPrompt(q, ClipsForQuestion(FourViews(), Seg(), q)), model);
  EXPECT_EQ(a, b);
  EXPECT_EQ(Fingerprint(a), Fingerprint(b));
}

struct ExtractionCase {
  const char* text;
  std::optional<Choice> expected;
};

class ExtractionTest : public ::testing::TestWithParam<ExtractionCase> {};

TEST_P(ExtractionTest, Battery) {
  EXPECT_EQ(ExtractAnswerChoice(GetParam().text), GetParam().expected)
      << GetParam().text;
}

INSTANTIATE_TEST_SUITE_P(
    Patterns, ExtractionTest,
    ::testing::Values(
        ExtractionCase{"answer_choice: b", Choice::kB},
        ExtractionCase{"I think the Choice: C is right", Choice::kC},
        ExtractionCase{"The pedestrian crossed.", std::nullopt},
        ExtractionCase{"answer: a", Choice::kA},
        ExtractionCase{"choice: b", Choice::kB},
        ExtractionCase{"ANSWER_CHOICE: D", Choice::kD},
        ExtractionCase{"`answer_choice': c", Choice::kC},
        ExtractionCase{"d", Choice::kD},
        ExtractionCase{"(b) the vehicle reverses", Choice::kB},
        ExtractionCase{"answer_choice: a, although b is close", Choice::kA},
        ExtractionCase{"b is tempting. answer: c", Choice::kC},
        ExtractionCase{"b is tempting. Choice: d", Choice::kD},
        ExtractionCase{"answer: e", std::nullopt},
        ExtractionCase{"", std::nullopt},
        ExtractionCase{"Both vehicles stopped.", std::nullopt}));

TEST(ExtractionPropertyTest, OnlyLettersAndIdempotent) {
  std::mt19937_64 rng(11);
  const std::string alphabet = "abcdexyzABCDE :_'`()=.,\n";
  const std::vector<std::string> chunks = {"answer", "choice", "answer_choice",
                                           "the", "is", ": "};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    const int len = static_cast<int>(rng() % 30);
    for (int i = 0; i < len; ++i) {
      if (rng() % 4 == 0) {
        text += chunks[rng() % chunks.size()];
      } else {
        text += alphabet[rng() % alphabet.size()];
      }
    }
    const auto first = ExtractAnswerChoice(text);
    EXPECT_EQ(first, ExtractAnswerChoice(text));
    if (first) {
      const char c = ChoiceLetter(*first);
      EXPECT_TRUE(c >= 'a' && c <= 'd');
      // Feeding the extracted letter back yields the same letter.
      EXPECT_EQ(ExtractAnswerChoice(std::string(1, c)), first);
    }
  }
}

TEST(AnalyzePhaseTest, CaptionsAndAnswers) {
  testing::SequenceBackend backend(
      {"ped caption", "veh caption", "answer_choice: b", "no idea"});
  const std::vector<QAItem> qs = {
      Question("q1", QAScope::kOverheadView, PhaseLabel::kAction),
      Question("q2", QAScope::kVehicleView, PhaseLabel::kAction)};
  const PhaseAnalysis a = AnalyzePhase(backend, FourViews(), Seg(),
                                       PhaseLabel::kAction, qs, {"vlm", {}});
  EXPECT_EQ(a.phase, PhaseLabel::kAction);
  ASSERT_EQ(a.captions.size(), 2u);
  EXPECT_EQ(a.captions[0].perspective, Perspective::kPedestrian);
  EXPECT_EQ(a.captions[0].text, "ped caption");
  EXPECT_EQ(a.captions[1].perspective, Perspective::kVehicle);
  EXPECT_EQ(a.captions[0].source_views.size(), 4u);
  ASSERT_EQ(a.answers.size(), 2u);
  EXPECT_EQ(a.answers[0].answer.extracted, Choice::kB);
  EXPECT_EQ(a.answers[0].answer.source_views.size(), 3u);
  EXPECT_EQ(a.answers[1].answer.raw_text, "no idea");
  EXPECT_EQ(a.answers[1].answer.extracted, std::nullopt);
  EXPECT_EQ(a.answers[1].answer.source_views,
            std::vector<std::string>{"vehicle"});
  EXPECT_TRUE(a.errors.empty());
  EXPECT_EQ(backend.calls(), 4u);
}

TEST(AnalyzePhaseTest, NoQuestionsCaptionsOnly) {
  testing::SequenceBackend backend({"caption"});
  const PhaseAnalysis a = AnalyzePhase(backend, FourViews(), Seg(),
                                       PhaseLabel::kJudgment, {}, {"vlm", {}});
  EXPECT_EQ(a.captions.size(), 2u);
  EXPECT_TRUE(a.answers.empty());
}

TEST(AnalyzePhaseTest, FailingQuestionIsIsolated) {
  const MultiViewEvent e = FourViews();
  const std::vector<QAItem> qs = {
      Question("q1", QAScope::kOverheadView, PhaseLabel::kAction),
      Question("q2", QAScope::kVehicleView, PhaseLabel::kAction)};
  const ModelOptions model{"vlm", {}};
  const std::string fp = Fingerprint(ToRequest(
      BuildVqaPrompt(qs[0], ClipsForQuestion(e, Seg(), qs[0])), model));
  MockBackend mock;
  mock.SetFallback("answer: c");
  mock.Script(fp, {MockBackend::Failure{BackendErrorKind::kProtocol}});
  const PhaseAnalysis a =
      AnalyzePhase(mock, e, Seg(), PhaseLabel::kAction, qs, model);
  EXPECT_EQ(a.captions.size(), 2u);
  ASSERT_EQ(a.answers.size(), 1u);
  EXPECT_EQ(a.answers[0].item.qa_id, "q2");
  EXPECT_EQ(a.answers[0].answer.extracted, Choice::kC);
  ASSERT_EQ(a.errors.size(), 1u);
  EXPECT_EQ(a.errors[0].task, AnalysisTask::kVqa);
  EXPECT_EQ(a.errors[0].item, "q1");
}

TEST(AnalyzePhaseTest, Errors) {
  testing::SequenceBackend backend({"x"});
  const PhaseSegmentation partial = testing::Segmentation(
      {{PhaseLabel::kPreRecognition, {1, 2}}}, 45.0);
  try {
    AnalyzePhase(backend, FourViews(), partial, PhaseLabel::kAction, {},
                 {"vlm", {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPhaseAbsent);
  }
  const std::vector<QAItem> wrong = {
      Question("q", QAScope::kOverheadView, PhaseLabel::kJudgment)};
  EXPECT_THROW(AnalyzePhase(backend, FourViews(), Seg(), PhaseLabel::kAction,
                            wrong, {"vlm", {}}),
               Error);
  EXPECT_EQ(backend.calls(), 0u);
}

TEST(AnalyzeEnvironmentTest, AnswersOnly) {
  testing::SequenceBackend backend({"answer_choice: d"});
  const std::vector<QAItem> qs = {
      Question("env1", QAScope::kEnvironment, std::nullopt)};
  const PhaseAnalysis a =
      AnalyzeEnvironment(backend, FourViews(), qs, {"vlm", {}});
  EXPECT_FALSE(a.phase);
  EXPECT_TRUE(a.captions.empty());
  ASSERT_EQ(a.answers.size(), 1u);
  EXPECT_EQ(a.answers[0].answer.extracted, Choice::kD);
  EXPECT_EQ(a.answers[0].answer.source_views.size(), 4u);
  EXPECT_THROW(
      AnalyzeEnvironment(backend, FourViews(),
                         {Question("p", QAScope::kVehicleView,
                                   PhaseLabel::kAction)},
                         {"vlm", {}}),
      Error);
}

}  // namespace
}  // namespace pvir
