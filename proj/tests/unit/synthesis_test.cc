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

#include "pvir/synthesis.h"

#include <gtest/gtest.h>

#include <algorithm>

#include "sample/sample_scenario.h"
#include "support/test_support.h"

namespace pvir {
namespace {

using nlohmann::json;

PhaseSegmentation FullSeg() { return testing::Segmentation(sample::CollisionPhases(), 45.0); }

QAItem Question(const std::string& id, QAScope scope,
                std::optional<PhaseLabel> phase) {
  return {id, scope, phase, "Where is the pedestrian looking?",
          {"at a phone", "at the vehicle", "ahead", "behind"}, Choice::kA};
}

// Two captions and one answer per phase, plus one environment answer,
// supplied in scrambled phase order.
std::vector<PhaseAnalysis> Analyses() {
  std::vector<PhaseAnalysis> out;
  for (int i : {3, 0, 4, 1, 2}) {
    const PhaseLabel p = *PhaseFromIndex(i);
    PhaseAnalysis a;
    a.phase = p;
    a.captions = {{p, Perspective::kPedestrian, "ped " + std::to_string(i),
                   {"overhead_1", "vehicle"}},
                  {p, Perspective::kVehicle, "veh " + std::to_string(i),
                   {"overhead_1", "vehicle"}}};
    a.answers = {{Question("q" + std::to_string(i), QAScope::kOverheadView, p),
                  {"q" + std::to_string(i), "answer_choice: a", Choice::kA,
                   {"overhead_1"}}}};
    out.push_back(std::move(a));
  }
  PhaseAnalysis env;
  env.answers = {{Question("env", QAScope::kEnvironment, std::nullopt),
                  {"env", "?", std::nullopt, {"overhead_1", "vehicle"}}}};
  out.insert(out.begin() + 2, env);
  return out;
}

const std::map<std::string, ViewKind> kKinds = {
    {"overhead_1", ViewKind::kOverhead}, {"vehicle", ViewKind::kVehicle}};

TEST(AssembleEventInfoTest, CardinalityAndOrder) {
  const EventInfoSet info = AssembleEventInfo(FullSeg(), Analyses());
  ASSERT_EQ(info.captions.size(), 10u);
  EXPECT_EQ(info.answers.size(), 6u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(PhaseIndex(info.captions[i].phase), static_cast<int>(i / 2));
    EXPECT_EQ(info.captions[i].perspective,
              i % 2 ? Perspective::kVehicle : Perspective::kPedestrian);
  }
  EXPECT_EQ(info.answers.back().item.qa_id, "env");
  EXPECT_EQ(info.answers.front().item.qa_id, "q0");
  EXPECT_EQ(info.segmentation, FullSeg());
}

TEST(AssembleEventInfoTest, UnknownPhaseAndEmptyAnswers) {
  auto partial = sample::CollisionPhases();
  partial.erase(PhaseLabel::kAvoidance);
  try {
    AssembleEventInfo(testing::Segmentation(partial, 45.0), Analyses());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownPhase);
  }
  auto analyses = Analyses();
  for (auto& a : analyses) a.answers.clear();
  const EventInfoSet info = AssembleEventInfo(FullSeg(), analyses);
  EXPECT_EQ(info.captions.size(), 10u);
  EXPECT_TRUE(info.answers.empty());
}

TEST(SynthesisPromptTest, Content) {
  const EventInfoSet info = AssembleEventInfo(FullSeg(), Analyses());
  const SynthesisPrompt p = BuildSynthesisPrompt(info, kKinds);
  EXPECT_NE(p.role_text.find("domain expert in pedestrian-vehicle interaction"),
            std::string::npos);
  EXPECT_NE(p.input_block.find("egocentric (vehicle view)"), std::string::npos);
  EXPECT_NE(p.input_block.find("exocentric (overhead view)"),
            std::string::npos);
  for (const char* task : {"Scene comprehension", "Behavior interpretation",
                           "Causal inference", "Diagnostic synthesis"}) {
    EXPECT_NE(p.instruction_block.find(task), std::string::npos) << task;
  }
  for (const char* key : {"scene_understanding", "phase_table",
                          "interaction_dynamics", "causal_chain",
                          "contributing_factors", "summary"}) {
    EXPECT_NE(p.output_schema_text.find(key), std::string::npos) << key;
  }
  EXPECT_NE(p.input_block.find("Phase 3 (Action): 32.6 - 37.8 s"),
            std::string::npos);
  EXPECT_NE(p.input_block.find("[views: overhead_1 (exocentric, overhead "
                               "view), vehicle (egocentric, vehicle view)]"),
            std::string::npos);
  EXPECT_NE(p.input_block.find("A: (no valid choice)"), std::string::npos);
  EXPECT_NE(p.input_block.find("A: a. at a phone"), std::string::npos);
  // Blocks appear in order in the rendering.
  const std::string r = p.Render();
  EXPECT_LT(r.find("ROLE"), r.find("INPUT"));
  EXPECT_LT(r.find("INPUT"), r.find("TASKS"));
  EXPECT_LT(r.find("TASKS"), r.find("OUTPUT"));
}

TEST(SynthesisPromptTest, GapsAreNotedAndOutputIsDeterministic) {
  const PhaseSegmentation three = testing::Segmentation(
      {{PhaseLabel::kPreRecognition, {1, 2}},
       {PhaseLabel::kJudgment, {3, 4}},
       {PhaseLabel::kAvoidance, {5, 6}}},
      10.0);
  const EventInfoSet info = AssembleEventInfo(three, {});
  const SynthesisPrompt p = BuildSynthesisPrompt(info);
  EXPECT_NE(p.input_block.find(
                "Phase 1 (Recognition): not identified (gap in the timeline)"),
            std::string::npos);
  EXPECT_NE(p.input_block.find(
                "Phase 3 (Action): not identified (gap in the timeline)"),
            std::string::npos);
  EXPECT_EQ(p.Render(), BuildSynthesisPrompt(info).Render());
  EXPECT_THROW(BuildSynthesisPrompt(EventInfoSet{}), Error);
}

// A report written the way a model would write it, including a code fence
// and a numeric causal phase.
constexpr char kRawReport[] = R"(Here is the analysis.
```json
{
  "scene_understanding": "Clear day on a residential road without sidewalks.",
  "behavior_analysis": {
    "phase_table": [
      {"phase": "Pre-recognition", "time": "28.8-29.9", "pedestrian_state": "Standing, distracted", "vehicle_action": "Preparing", "risk_level": "Moderate"},
      {"phase": "Recognition", "time": "29.8-30.8", "pedestrian_state": "Still, distracted", "vehicle_action": "About to reverse", "risk_level": "High"},
      {"phase": "Judgment", "time": "30.7-32.5", "pedestrian_state": "Moving forward", "vehicle_action": "Reversing 5 km/h", "risk_level": "High"},
      {"phase": "Action", "time": "32.6-37.8", "pedestrian_state": "In vehicle lane", "vehicle_action": "Reversing 5 km/h", "risk_level": "Critical"},
      {"phase": "Avoidance", "time": "37.8-43.7", "pedestrian_state": "Thrown back", "vehicle_action": "Collision", "risk_level": "Impact"}
    ],
    "interaction_dynamics": {
      "initial_separation": "Near distance",
      "convergence_pattern": "Vehicle reversing while pedestrian walked forward",
      "communication": "None",
      "mutual_awareness": "Neither party aware",
      "critical_failure": "Distraction combined with reversing"
    }
  },
  "event_diagnosis": {
    "classification": "Collision",
    "severity": "Potential injury",
    "causal_chain": [
      {"phase": "0", "factor": "Pedestrian on smartphone"},
      {"phase": 1, "factor": "Vehicle prepared to reverse"},
      {"phase": "2", "factor": "Pedestrian walked forward"},
      {"phase": "3", "factor": "Converging paths"},
      {"phase": "4", "factor": "Impact"}
    ],
    "contributing_factors": {
      "primary": ["Smartphone distraction", "Reversing without a clear path"],
      "environmental": ["No sidewalks"]
    }
  },
  "summary": "A distracted pedestrian was struck by a reversing vehicle."
}
```
Let me know if you need more.)";

TEST(CheckReportTest, RawReportIsValid) {
  EXPECT_TRUE(CheckReport(kRawReport).empty());
  const IncidentReport r = ValidateReport(kRawReport);
  EXPECT_EQ(r.classification, "Collision");
  ASSERT_EQ(r.phase_table.size(), 5u);
  EXPECT_EQ(r.phase_table[3].risk_level, RiskLevel::kCritical);
  ASSERT_EQ(r.causal_chain.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(PhaseIndex(r.causal_chain[i].phase), i);
}

std::string Mutate(const std::function<void(json&)>& edit) {
  json j = ReportToJson(sample::CollisionReport());
  edit(j);
  return j.dump();
}

TEST(CheckReportTest, ViolationsByPath) {
  const auto out_of_order = CheckReport(Mutate([](json& j) {
    auto& chain = j["event_diagnosis"]["causal_chain"];
    std::swap(chain[1], chain[2]);
  }));
  EXPECT_EQ(out_of_order,
            (std::vector<SchemaViolation>{
                {"event_diagnosis.causal_chain", "phase order"}}));

  const auto missing = CheckReport(Mutate([](json& j) {
    j["event_diagnosis"]["contributing_factors"].erase("environmental");
  }));
  EXPECT_EQ(missing, (std::vector<SchemaViolation>{
                         {"event_diagnosis.contributing_factors.environmental",
                          "missing"}}));

  const auto several = CheckReport(Mutate([](json& j) {
    j["summary"] = "";
    j["behavior_analysis"]["phase_table"][0]["risk_level"] = "Extreme";
    j["behavior_analysis"]["phase_table"][1]["phase"] = "Wandering";
    j["scene_understanding"] = 7;
  }));
  EXPECT_EQ(several,
            (std::vector<SchemaViolation>{
                {"scene_understanding", "expected string"},
                {"behavior_analysis.phase_table[0].risk_level",
                 "unknown risk level"},
                {"behavior_analysis.phase_table[1].phase", "unknown phase"},
                {"summary", "empty"}}));

  EXPECT_EQ(CheckReport("no json here"),
            (std::vector<SchemaViolation>{{"$", "invalid JSON"}}));
  EXPECT_EQ(CheckReport("[1, 2]"),
            (std::vector<SchemaViolation>{{"$", "invalid JSON"}}));
  try {
    ValidateReport("{}");
    FAIL();
  } catch (const SchemaViolationsError& e) {
    EXPECT_EQ(e.violations().size(), 4u);
  }
}

TEST(CheckReportTest, FieldDeletionFuzz) {
  // Deleting any single leaf yields at least one violation. Dropping the
  // trailing entry of a factor list only shortens it, so those are skipped.
  const json base = ReportToJson(sample::CollisionReport());
  const json flat = base.flatten();
  for (const auto& [pointer, value] : flat.items()) {
    if (pointer.find("contributing_factors") != std::string::npos &&
        pointer.back() == '2') {
      continue;
    }
    json j = base.flatten();
    j.erase(pointer);
    const json doc = j.unflatten();
    const auto v = CheckReport(doc.dump());
    EXPECT_FALSE(v.empty()) << pointer;
  }
}

TEST(SerializeReportTest, RoundTripAndCanonical) {
  const IncidentReport r = sample::CollisionReport();
  const std::string text = SerializeReport(r);
  EXPECT_EQ(ValidateReport(text), r);
  EXPECT_EQ(SerializeReport(ValidateReport(text)), text);
  const std::string rendered = RenderReportText(r);
  EXPECT_NE(rendered.find("Collision"), std::string::npos);
  EXPECT_NE(rendered.find("Impact"), std::string::npos);
}

TEST(RetryTest, PolicyValidation) {
  EXPECT_THROW(RetryPolicy{0}.Validate(), Error);
  EXPECT_NO_THROW(RetryPolicy{1}.Validate());
}

TEST(RetryTest, RetryPromptAppendsNumberedFeedback) {
  const std::string p =
      RetryPrompt("BASE", {{{"summary", "empty"}},
                           {{"a", "missing"}, {"b", "expected string"}}});
  EXPECT_EQ(p, "BASE\n\n" + std::string(kRetryFeedbackHeader) +
                   "\n1. summary: empty\n\n" + std::string(kRetryFeedbackHeader) +
                   "\n1. a: missing\n2. b: expected string");
  EXPECT_EQ(RetryPrompt("BASE", {}), "BASE");
}

const std::string& ValidText() {
  static const std::string text = SerializeReport(sample::CollisionReport());
  return text;
}

TEST(RetryTest, ValidFirstAttempt) {
  testing::SequenceBackend backend({ValidText()});
  const EventInfoSet info = AssembleEventInfo(FullSeg(), Analyses());
  EXPECT_EQ(SynthesizeReport(backend, info, {}, {"llm", {}}),
            sample::CollisionReport());
  EXPECT_EQ(backend.calls(), 1u);
}

TEST(RetryTest, InvalidThenValidFeedsViolationsBack) {
  testing::SequenceBackend backend({"not json", ValidText()});
  const EventInfoSet info = AssembleEventInfo(FullSeg(), Analyses());
  std::vector<SynthesisAttempt> attempts;
  SynthesizeReport(backend, info, {}, {"llm", {}}, nullptr, {}, &attempts);
  ASSERT_EQ(backend.calls(), 2u);
  const auto requests = backend.requests();
  EXPECT_EQ(requests[0].prompt_text.find(kRetryFeedbackHeader),
            std::string::npos);
  EXPECT_NE(requests[1].prompt_text.find("1. $: invalid JSON"),
            std::string::npos);
  ASSERT_EQ(attempts.size(), 2u);
  EXPECT_EQ(attempts[0].violations.size(), 1u);
  EXPECT_TRUE(attempts[1].violations.empty());
}

TEST(RetryTest, AlwaysInvalidExhaustsAndPersistsAttempts) {
  testing::SequenceBackend backend({"{}"});
  const EventInfoSet info = AssembleEventInfo(FullSeg(), Analyses());
  testing::TempDir dir;
  ArtifactStore store(dir.path());
  StageRecorder recorder(store, "r", "ev");
  try {
    SynthesizeReport(backend, info, {3}, {"llm", {}}, &recorder);
    FAIL();
  } catch (const ExhaustedRetriesError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kExhaustedRetries);
    EXPECT_EQ(e.attempts(), 3);
    EXPECT_FALSE(e.last_violations().empty());
  }
  EXPECT_EQ(backend.calls(), 3u);
  // Each prompt extends the previous one.
  const auto requests = backend.requests();
  for (std::size_t i = 1; i < requests.size(); ++i) {
    EXPECT_EQ(requests[i].prompt_text.rfind(requests[i - 1].prompt_text, 0), 0u);
    EXPECT_GT(requests[i].prompt_text.size(),
              requests[i - 1].prompt_text.size());
  }
  const auto artifact = store.Load("r", "ev", Stage::kSynthesis);
  ASSERT_TRUE(artifact);
  EXPECT_EQ(artifact->at("attempts").size(), 3u);
  EXPECT_TRUE(artifact->contains("error"));
  EXPECT_FALSE(artifact->contains("report"));
}

TEST(RetryTest, BackendErrorIsNotRetried) {
  MockBackend mock;  // no fixtures: every call fails with kNoFixture
  const EventInfoSet info = AssembleEventInfo(FullSeg(), Analyses());
  EXPECT_THROW(SynthesizeReport(mock, info, {3}, {"llm", {}}), BackendError);
  EXPECT_EQ(mock.call_count(), 1u);
}

}  // namespace
}  // namespace pvir
