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

#include "sample_scenario.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pvir/backend.h"
#include "pvir/grounding.h"
#include "pvir/ingest.h"
#include "pvir/pipeline.h"
#include "pvir/reasoning.h"
#include "pvir/synthesis.h"

namespace pvir::sample {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kEnergyRateHz = 10.0;

void WriteText(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

void WriteJson(const fs::path& path, const json& j) {
  WriteText(path, j.dump(2) + "\n");
}

struct ScenarioEvent {
  MultiViewEvent event;
  std::string grounding_text;
  std::map<std::pair<PhaseLabel, Perspective>, std::string> captions;
  std::map<std::string, std::string> answers;  // question -> raw response
  std::string synthesis_text;
  // Original view offsets, used to place caption clips back on the event
  // clock when identifying their phase.
  std::map<std::string, double> offsets;
};

QAItem Question(std::string id, QAScope scope, std::optional<PhaseLabel> phase,
                std::string question, std::array<std::string, 4> options,
                Choice answer) {
  return {std::move(id), scope,     phase, std::move(question),
          std::move(options), answer};
}

CaptionRecord Caption(PhaseLabel phase, Perspective p, std::string text) {
  return {phase, p, std::move(text), {}};
}

// ---------------------------------------------------------------------------
// Reversing-vehicle collision
// ---------------------------------------------------------------------------

ScenarioEvent CollisionScenario() {
  using P = PhaseLabel;
  ScenarioEvent s;
  MultiViewEvent& e = s.event;
  e.event_id = kCollisionEventId;
  e.duration_s = 45.0;
  e.trajectory_uri = "trajectories/reversing_collision.csv";
  e.views = {
      {"overhead_1", ViewKind::kOverhead,
       "videos/reversing_collision/overhead_1.mp4",
       "energy/reversing_collision/overhead_1.csv", 0.0},
      {"overhead_2", ViewKind::kOverhead,
       "videos/reversing_collision/overhead_2.mp4",
       "energy/reversing_collision/overhead_2.csv", 0.8},
      {"vehicle_1", ViewKind::kVehicle,
       "videos/reversing_collision/vehicle_1.mp4",
       "energy/reversing_collision/vehicle_1.csv", 1.5},
  };
  for (const auto& v : e.views) s.offsets[v.view_id] = v.offset_s;

  GroundTruth gt;
  gt.segmentation = ValidateSegmentation({{P::kPreRecognition, {28.5, 29.8}},
                                          {P::kRecognition, {29.8, 30.9}},
                                          {P::kJudgment, {30.9, 32.4}},
                                          {P::kAction, {32.4, 37.9}},
                                          {P::kAvoidance, {37.9, 43.2}}},
                                         e.duration_s);
  gt.captions = {
      Caption(P::kPreRecognition, Perspective::kPedestrian,
              "A man in his 30s dressed in black stands behind the parked "
              "vehicle and looks down at his smartphone."),
      Caption(P::kPreRecognition, Perspective::kVehicle,
              "The vehicle is stopped on the residential road and the driver "
              "is preparing to move."),
      Caption(P::kRecognition, Perspective::kPedestrian,
              "The pedestrian stays still behind the vehicle, still focused "
              "on his smartphone."),
      Caption(P::kRecognition, Perspective::kVehicle,
              "The vehicle is about to reverse with the pedestrian behind "
              "it."),
      Caption(P::kJudgment, Perspective::kPedestrian,
              "The pedestrian starts walking forward toward the vehicle "
              "without looking up."),
      Caption(P::kJudgment, Perspective::kVehicle,
              "The vehicle begins reversing slowly at about 5 km/h."),
      Caption(P::kAction, Perspective::kPedestrian,
              "The pedestrian walks in the vehicle lane directly behind the "
              "reversing vehicle."),
      Caption(P::kAction, Perspective::kVehicle,
              "The vehicle keeps reversing at 5 km/h toward the pedestrian."),
      Caption(P::kAvoidance, Perspective::kPedestrian,
              "The pedestrian is hit, thrown back and falls to the road."),
      Caption(P::kAvoidance, Perspective::kVehicle,
              "The reversing vehicle collides with the pedestrian."),
  };
  gt.qa = {
      Question("rc_q1", QAScope::kVehicleView, P::kAction,
               "What is the vehicle doing during this phase?",
               {"Moving forward", "Reversing slowly", "Stopped",
                "Turning left"},
               Choice::kB),
      Question("rc_q2", QAScope::kOverheadView, P::kPreRecognition,
               "What is the pedestrian doing?",
               {"Crossing the road", "Running",
                "Standing and using a smartphone", "Waving at the driver"},
               Choice::kC),
      Question("rc_q3", QAScope::kOverheadView, P::kAvoidance,
               "What happens to the pedestrian?",
               {"Stops safely", "Is thrown back after contact",
                "Jumps aside", "Keeps walking"},
               Choice::kB),
      Question("rc_q4", QAScope::kEnvironment, std::nullopt,
               "Is there a sidewalk along the road?",
               {"Yes, on both sides", "Yes, on one side", "No sidewalk",
                "The sidewalk is blocked"},
               Choice::kC),
      Question("rc_q5", QAScope::kEnvironment, std::nullopt,
               "What is the weather?",
               {"Rainy", "Snowy", "Foggy", "Clear"}, Choice::kD),
  };
  e.ground_truth = gt;

  s.grounding_text =
      "Phase 0 (Pre-recognition): 28.8--29.9\n"
      "Phase 1 (Recognition): 29.8--30.8\n"
      "Phase 2 (Judgement): 30.7--32.5\n"
      "Phase 3 (Action): 32.6--37.8\n"
      "Phase 4 (Avoidance): 37.8--43.7\n";

  auto cap = [&s](PhaseLabel p, const char* ped, const char* veh) {
    s.captions[{p, Perspective::kPedestrian}] = ped;
    s.captions[{p, Perspective::kVehicle}] = veh;
  };
  cap(P::kPreRecognition,
      "A male pedestrian in his 30s wearing black clothes is standing behind "
      "the vehicle and is distracted by his smartphone.",
      "The vehicle is stationary and preparing to move.");
  cap(P::kRecognition,
      "The pedestrian is still standing behind the vehicle, distracted by his "
      "smartphone.",
      "The vehicle is about to reverse.");
  cap(P::kJudgment,
      "The pedestrian begins moving forward while looking at his smartphone.",
      "The vehicle is reversing at 5 km/h.");
  cap(P::kAction,
      "The pedestrian is in the vehicle lane behind the reversing vehicle.",
      "The vehicle continues reversing at 5 km/h.");
  cap(P::kAvoidance,
      "The pedestrian is struck, thrown back and falls down.",
      "The vehicle collides with the pedestrian.");

  s.answers = {
      {"What is the vehicle doing during this phase?", "answer_choice: b"},
      {"What is the pedestrian doing?",
       "The pedestrian is looking at a phone. answer_choice: c"},
      {"What happens to the pedestrian?", "I am not sure what happens."},
      {"Is there a sidewalk along the road?", "Answer: C"},
      {"What is the weather?", "choice: a"},
  };
  s.synthesis_text = "```json\n" + SerializeReport(CollisionReport()) + "```\n";
  return s;
}

// ---------------------------------------------------------------------------
// Crossing near miss
// ---------------------------------------------------------------------------

IncidentReport CrossingReport() {
  IncidentReport r;
  r.scene_understanding =
      "Overcast afternoon at a signalized urban intersection with moderate "
      "traffic and a marked crosswalk.";
  r.phase_table = {
      {PhaseLabel::kPreRecognition, "0.0-3.1", "Waiting at curb",
       "Approaching", RiskLevel::kModerate},
      {PhaseLabel::kRecognition, "3.1-4.9", "Looking at traffic",
       "Turning right", RiskLevel::kModerate},
      {PhaseLabel::kJudgment, "4.9-6.2", "Stepping onto crosswalk",
       "Turning right", RiskLevel::kHigh},
      {PhaseLabel::kAction, "6.2-8.6", "Crossing", "Braking",
       RiskLevel::kCritical},
      {PhaseLabel::kAvoidance, "8.6-11.5", "Stopped, stepped back",
       "Stopped", RiskLevel::kHigh},
  };
  r.interaction_dynamics = {
      "Vehicle approaching the crosswalk from the pedestrian's left",
      "Turning vehicle and crossing pedestrian converged on the crosswalk",
      "Pedestrian raised a hand toward the driver",
      "Pedestrian noticed the vehicle before the driver noticed him",
      "Driver's late detection of the pedestrian while turning"};
  r.classification = "Near miss";
  r.severity = "No contact - pedestrian stepped back in time";
  r.causal_chain = {
      {PhaseLabel::kPreRecognition, "Pedestrian waiting while vehicle approached"},
      {PhaseLabel::kJudgment, "Pedestrian started crossing as vehicle turned"},
      {PhaseLabel::kAction, "Vehicle braked late at the crosswalk"},
      {PhaseLabel::kAvoidance, "Pedestrian stepped back and avoided contact"}};
  r.primary_factors = {"Driver attention on oncoming traffic while turning"};
  r.environmental_factors = {"Crosswalk partly hidden by a parked truck"};
  r.summary =
      "A right-turning vehicle nearly struck a pedestrian on the crosswalk. "
      "Earlier detection by the driver and clearing the sight line at the "
      "corner would prevent a repeat.";
  return r;
}

ScenarioEvent CrossingScenario() {
  using P = PhaseLabel;
  ScenarioEvent s;
  MultiViewEvent& e = s.event;
  e.event_id = kCrossingEventId;
  e.duration_s = 12.0;
  e.views = {
      {"overhead_1", ViewKind::kOverhead,
       "videos/crossing_near_miss/overhead_1.mp4", std::nullopt, 0.0},
      {"vehicle_1", ViewKind::kVehicle,
       "videos/crossing_near_miss/vehicle_1.mp4", std::nullopt, 0.0},
  };
  for (const auto& v : e.views) s.offsets[v.view_id] = v.offset_s;
  GroundTruth gt;
  gt.segmentation = ValidateSegmentation({{P::kPreRecognition, {0.0, 3.0}},
                                          {P::kRecognition, {3.0, 5.0}},
                                          {P::kJudgment, {5.0, 6.0}},
                                          {P::kAction, {6.0, 9.0}},
                                          {P::kAvoidance, {9.0, 12.0}}},
                                         e.duration_s);
  gt.captions = {
      Caption(P::kAction, Perspective::kPedestrian,
              "The pedestrian crosses on the crosswalk in front of the "
              "turning vehicle."),
      Caption(P::kAction, Perspective::kVehicle,
              "The vehicle turns right and brakes hard near the crosswalk."),
  };
  gt.qa = {Question("cn_q1", QAScope::kVehicleView, P::kAction,
                    "Does the vehicle stop before the crosswalk?",
                    {"Yes, well before it", "Yes, at the last moment",
                     "No, it drives through", "It reverses"},
                    Choice::kB)};
  e.ground_truth = gt;

  s.grounding_text =
      R"({"phase_0": [0.0, 3.1], "phase_1": [3.1, 4.9], "phase_2": [4.9, 6.2],)"
      R"( "phase_3": [6.2, 8.6], "phase_4": [8.6, 11.5]})";
  for (PhaseLabel p : kAllPhases) {
    s.captions[{p, Perspective::kPedestrian}] = fmt::format(
        "The pedestrian near the crosswalk during the {} phase.", PhaseName(p));
    s.captions[{p, Perspective::kVehicle}] = fmt::format(
        "The turning vehicle during the {} phase.", PhaseName(p));
  }
  s.captions[{P::kAction, Perspective::kPedestrian}] =
      "The pedestrian walks on the crosswalk in front of the turning vehicle.";
  s.captions[{P::kAction, Perspective::kVehicle}] =
      "The vehicle turns right and brakes sharply before the crosswalk.";
  s.answers = {{"Does the vehicle stop before the crosswalk?",
                "The answer_choice: b"}};
  s.synthesis_text = SerializeReport(CrossingReport());
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic sensor inputs
// ---------------------------------------------------------------------------

// Pedestrian walks forward from t = 30.7 s while the vehicle reverses at
// 5 km/h from t = 30.8 s; they meet near t = 37.8 s and stop.
std::string CollisionTrajectoryCsv() {
  std::string out = "t_s,actor_id,actor_class,x_m,y_m\n";
  const double reverse_mps = 5.0 / 3.6;
  const double walk_mps = 1.2;
  double ped_x = 0.0, veh_x = 18.2;
  bool collided = false;
  for (int i = 0; i <= 450; ++i) {
    const double t = i / 10.0;
    if (!collided) {
      ped_x = t > 30.7 ? walk_mps * (t - 30.7) : 0.0;
      veh_x = t > 30.8 ? 18.2 - reverse_mps * (t - 30.8) : 18.2;
      if (veh_x - ped_x <= 0.3) {
        collided = true;
        ped_x -= 1.0;  // thrown back
      }
    }
    out += fmt::format("{},ped_1,pedestrian,{:.3f},0\n", t, ped_x);
    out += fmt::format("{},veh_1,vehicle,{:.3f},0.5\n", t, veh_x);
  }
  return out;
}

std::vector<double> EnergyNoise(std::mt19937& gen, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = 0.5 + static_cast<double>(gen() >> 8) / (1 << 24);
  return v;
}

std::string EnergyCsv(const std::vector<double>& values) {
  std::string out = fmt::format("sample_rate_hz,{}\n", kEnergyRateHz);
  for (double v : values) out += fmt::format("{:.6f}\n", v);
  return out;
}

// Reference signal plus copies delayed by each view's offset.
void WriteCollisionEnergy(const fs::path& data_dir, const ScenarioEvent& s) {
  std::mt19937 gen(20260707u);
  const auto n = static_cast<std::size_t>(s.event.duration_s * kEnergyRateHz);
  const std::vector<double> ref = EnergyNoise(gen, n);
  for (const auto& view : s.event.views) {
    const int lag = static_cast<int>(std::lround(view.offset_s * kEnergyRateHz));
    std::vector<double> v = EnergyNoise(gen, n);
    for (std::size_t m = 0; m < n; ++m) {
      const long src = static_cast<long>(m) - lag;
      if (src >= 0 && src < static_cast<long>(n)) v[m] = ref[src];
    }
    WriteText(data_dir / *view.motion_energy_uri, EnergyCsv(v));
  }
}

// ---------------------------------------------------------------------------
// Fixture recording
// ---------------------------------------------------------------------------

class ResponderBackend : public Backend {
 public:
  using Responder = std::function<std::string(const GenerateRequest&)>;

  ResponderBackend(Responder responder, std::shared_ptr<MockBackend> sink,
                   std::string stage)
      : responder_(std::move(responder)),
        sink_(std::move(sink)),
        stage_(std::move(stage)) {}

  GenerateResponse Generate(const GenerateRequest& request) override {
    std::string text = responder_(request);
    const std::string fp = Fingerprint(request);
    sink_->AddFixture(fp, text);
    GenerateResponse r;
    r.text = std::move(text);
    return r;
  }

 private:
  Responder responder_;
  std::shared_ptr<MockBackend> sink_;
  std::string stage_;
};

const ScenarioEvent& EventForUri(const std::vector<ScenarioEvent>& events,
                                 const std::string& uri) {
  for (const auto& s : events) {
    if (uri.find("/" + s.event.event_id + "/") != std::string::npos) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "no scenario event for " + uri);
}

PhaseLabel PhaseForClip(const ScenarioEvent& s, const MediaRef& media,
                        const PhaseSegmentation& seg) {
  double offset = 0.0;
  for (const auto& v : s.event.views) {
    if (v.video_uri == media.uri) offset = s.offsets.at(v.view_id);
  }
  const double mid = 0.5 * (media.start_s + media.end_s) - offset;
  PhaseLabel best = PhaseLabel::kPreRecognition;
  double best_d = 1e300;
  for (PhaseLabel p : kAllPhases) {
    if (!seg.has(p)) continue;
    const auto& iv = seg.at(p);
    const double d = std::abs(0.5 * (iv.start_s + iv.end_s) - mid);
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

json BackendJson(const std::string& dir, const std::string& model_id) {
  return {{"kind", "mock"}, {"fixtures", dir}, {"model_id", model_id}};
}

}  // namespace

std::map<PhaseLabel, TimeInterval> CollisionPhases() {
  return {{PhaseLabel::kPreRecognition, {28.8, 29.9}},
          {PhaseLabel::kRecognition, {29.8, 30.8}},
          {PhaseLabel::kJudgment, {30.7, 32.5}},
          {PhaseLabel::kAction, {32.6, 37.8}},
          {PhaseLabel::kAvoidance, {37.8, 43.7}}};
}

IncidentReport CollisionReport() {
  IncidentReport r;
  r.scene_understanding =
      "Clear, bright day on a straight residential road segment with light "
      "traffic. No sidewalks or designated pedestrian crossings are present, "
      "and the flat road design gives no separation between pedestrian and "
      "vehicle zones.";
  r.phase_table = {
      {PhaseLabel::kPreRecognition, "28.8-29.9", "Standing, distracted",
       "Preparing", RiskLevel::kModerate},
      {PhaseLabel::kRecognition, "29.8-30.8", "Still, distracted",
       "About to reverse", RiskLevel::kHigh},
      {PhaseLabel::kJudgment, "30.7-32.5", "Moving forward",
       "Reversing 5 km/h", RiskLevel::kHigh},
      {PhaseLabel::kAction, "32.6-37.8", "In vehicle lane",
       "Reversing 5 km/h", RiskLevel::kCritical},
      {PhaseLabel::kAvoidance, "37.8-43.7", "Thrown back", "Collision",
       RiskLevel::kImpact},
  };
  r.interaction_dynamics = {
      "Near distance with pedestrian behind vehicle",
      "Vehicle reversing while pedestrian walked forward",
      "No communication attempts observed",
      "Neither party aware of the other until impact",
      "Pedestrian smartphone distraction combined with vehicle reversing"};
  r.classification = "Collision";
  r.severity = "Pedestrian thrown back and fell - potential injury";
  r.causal_chain = {
      {PhaseLabel::kPreRecognition,
       "Pedestrian standing behind vehicle while using smartphone"},
      {PhaseLabel::kRecognition,
       "Vehicle prepared to reverse while pedestrian remained distracted"},
      {PhaseLabel::kJudgment,
       "Pedestrian began walking forward while vehicle started reversing"},
      {PhaseLabel::kAction,
       "Both parties converged on collision path with no awareness"},
      {PhaseLabel::kAvoidance,
       "Collision occurred before either party could react"},
  };
  r.primary_factors = {"Pedestrian distraction due to smartphone use",
                       "Vehicle reversing without ensuring clear path",
                       "Lack of mutual awareness between parties"};
  r.environmental_factors = {
      "No sidewalks forcing pedestrian to use vehicle lane",
      "Flat pedestrian-vehicle division with no barriers",
      "Residential road with shared space design"};
  r.summary =
      "A pedestrian absorbed in a smartphone walked into the path of a "
      "vehicle reversing at walking speed on a residential road without "
      "sidewalks, and neither party noticed the other before impact. "
      "Rear detection with automatic braking on the vehicle, pedestrian "
      "awareness of phone use in shared spaces, and a separated walking "
      "zone along the road address the contributing factors.";
  return r;
}

SampleLayout WriteSampleDataset(const fs::path& root,
                                const SampleOptions& options) {
  std::vector<ScenarioEvent> events = {CollisionScenario()};
  if (options.include_crossing_event) events.push_back(CrossingScenario());

  SampleLayout layout;
  layout.root = fs::absolute(root);
  const fs::path data = layout.root / "data";
  layout.manifest = data / "manifest.json";
  layout.config = layout.root / "config.json";

  WriteText(data / *events[0].event.trajectory_uri, CollisionTrajectoryCsv());
  WriteCollisionEnergy(data, events[0]);

  json manifest_events = json::array();
  for (const auto& s : events) {
    const std::string rel = s.event.event_id + ".json";
    WriteJson(data / rel, EventToJson(s.event));
    manifest_events.push_back(rel);
    layout.event_ids.push_back(s.event.event_id);
  }
  WriteJson(layout.manifest, {{"dataset_id", "pvir-sample"},
                              {"split", "test"},
                              {"events", manifest_events}});

  const fs::path fixtures = layout.root / "fixtures";
  for (const char* stage : {"grounding", "reasoning", "synthesis"}) {
    fs::remove_all(fixtures / stage);
    fs::create_directories(fixtures / stage);
  }
  json config = {
      {"dataset", "data/manifest.json"},
      {"output_dir", "out"},
      {"run_id", options.run_id},
      {"max_concurrency", options.max_concurrency},
      {"backends",
       {{"grounding", BackendJson("fixtures/grounding", "tg-vlm")},
        {"reasoning", BackendJson("fixtures/reasoning", "phavr-vlm")},
        {"synthesis", BackendJson("fixtures/synthesis", "report-llm")}}},
      {"trigger",
       {{"distance_threshold_m", 10.0},
        {"closing_speed_threshold_mps", 0.5},
        {"sustain_samples", 3},
        {"lookback_s", 30.0},
        {"max_lag_s", 5.0}}},
      {"retry", {{"max_attempts", 3}}},
  };
  WriteJson(layout.config, config);

  // Responders keyed on request content.
  auto grounding_sink = std::make_shared<MockBackend>();
  auto reasoning_sink = std::make_shared<MockBackend>();
  auto synthesis_sink = std::make_shared<MockBackend>();
  std::map<std::string, PhaseSegmentation> parsed;
  std::mutex parsed_mu;

  auto ground = [&](const GenerateRequest& req) {
    const ScenarioEvent& s = EventForUri(events, req.media.at(0).uri);
    std::string text = s.grounding_text;
    for (const auto& id : options.unparseable_grounding) {
      if (id == s.event.event_id) text = "The video does not show any pedestrian.";
    }
    std::lock_guard lock(parsed_mu);
    try {
      parsed[s.event.event_id] = SegmentationFromJson(SegmentationToJson(
          ParseSegmentationResponse(text, s.event.duration_s)));
    } catch (const UnparseableResponse&) {
    }
    return text;
  };
  auto reason = [&](const GenerateRequest& req) -> std::string {
    const ScenarioEvent& s = EventForUri(events, req.media.at(0).uri);
    for (Perspective p : {Perspective::kPedestrian, Perspective::kVehicle}) {
      const std::string_view tmpl = p == Perspective::kPedestrian
                                        ? kPedestrianCaptionTemplate
                                        : kVehicleCaptionTemplate;
      if (req.prompt_text == tmpl) {
        std::lock_guard lock(parsed_mu);
        const PhaseLabel phase =
            PhaseForClip(s, req.media[0], parsed.at(s.event.event_id));
        return s.captions.at({phase, p});
      }
    }
    for (const auto& [question, answer] : s.answers) {
      if (req.prompt_text.rfind(question + "\n", 0) == 0) return answer;
    }
    throw Error(ErrorCode::kInvalidArgument, "unscripted reasoning prompt");
  };
  auto synthesize = [&](const GenerateRequest& req) -> std::string {
    for (const auto& s : events) {
      const auto& first = s.captions.begin()->second;
      if (req.prompt_text.find(first) != std::string::npos) {
        return s.synthesis_text;
      }
    }
    throw Error(ErrorCode::kInvalidArgument, "unscripted synthesis prompt");
  };

  RunConfig run_config = LoadRunConfig(layout.config);
  const fs::path scratch = layout.root / ".record";
  fs::remove_all(scratch);
  run_config.output_dir = scratch;
  StageBackends backends{
      std::make_shared<ResponderBackend>(ground, grounding_sink, "grounding"),
      std::make_shared<ResponderBackend>(reason, reasoning_sink, "reasoning"),
      std::make_shared<ResponderBackend>(synthesize, synthesis_sink,
                                         "synthesis")};
  const RunSummary summary = RunPipeline(run_config, RunOptions{}, backends);
  fs::remove_all(scratch);
  for (const auto& e : summary.events) {
    const bool expected_failure =
        std::find(options.unparseable_grounding.begin(),
                  options.unparseable_grounding.end(),
                  e.event_id) != options.unparseable_grounding.end();
    if (e.status == EventStatus::kFailed && !expected_failure) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("recording {} failed: {}", e.event_id, e.error));
    }
  }

  grounding_sink->SaveDirectory(fixtures / "grounding");
  reasoning_sink->SaveDirectory(fixtures / "reasoning");
  synthesis_sink->SaveDirectory(fixtures / "synthesis");
  return layout;
}

}  // namespace pvir::sample
