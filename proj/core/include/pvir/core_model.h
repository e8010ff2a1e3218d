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

#ifndef PVIR_CORE_MODEL_H_
#define PVIR_CORE_MODEL_H_

// Domain types shared by every pipeline stage: behavioral phases, temporal
// segmentations, multi-view events, captions, QA items, incident reports and
// evaluation summaries. All types are plain values; none of them owns any
// video data, media are referenced by URI only.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pvir {

// ---------------------------------------------------------------------------
// Phases
// ---------------------------------------------------------------------------

enum class PhaseLabel : int {
  kPreRecognition = 0,
  kRecognition = 1,
  kJudgment = 2,
  kAction = 3,
  kAvoidance = 4,
};

inline constexpr int kPhaseCount = 5;

inline constexpr std::array<PhaseLabel, kPhaseCount> kAllPhases = {
    PhaseLabel::kPreRecognition, PhaseLabel::kRecognition,
    PhaseLabel::kJudgment, PhaseLabel::kAction, PhaseLabel::kAvoidance};

constexpr int PhaseIndex(PhaseLabel phase) { return static_cast<int>(phase); }

std::optional<PhaseLabel> PhaseFromIndex(int index);

// Display name, e.g. "Pre-recognition".
std::string_view PhaseName(PhaseLabel phase);

// Accepts "0".."4", "phase 3", "phase_3", and display names in any case
// ("judgement" is accepted as a spelling of Judgment).
std::optional<PhaseLabel> ParsePhase(std::string_view text);

// ---------------------------------------------------------------------------
// Time
// ---------------------------------------------------------------------------

struct TimeInterval {
  double start_s = 0.0;
  double end_s = 0.0;

  double length() const { return end_s - start_s; }
  // A usable phase boundary needs start < end; start == end is representable
  // but flagged.
  bool is_degenerate() const { return !(start_s < end_s); }

  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

enum class ViolationKind {
  kClampedStart,
  kClampedEnd,
  kMissingPhase,
  kDegenerate,
  kInvertedInterval,
  kOrderInversion,
};

std::string_view ViolationKindName(ViolationKind kind);

struct SegmentationViolation {
  ViolationKind kind;
  PhaseLabel phase;

  // "ClampedStart(3)"
  std::string ToString() const;
  friend bool operator==(const SegmentationViolation&,
                         const SegmentationViolation&) = default;
};

// Boundary set for the five phases of one event. Built only through
// ValidateSegmentation, so every present interval lies in [0, duration_s].
class PhaseSegmentation {
 public:
  PhaseSegmentation() = default;

  double duration_s() const { return duration_s_; }
  bool has(PhaseLabel phase) const {
    return entries_[PhaseIndex(phase)].has_value();
  }
  // Throws Error(kPhaseAbsent) when the phase is missing.
  const TimeInterval& at(PhaseLabel phase) const;
  const std::optional<TimeInterval>& get(PhaseLabel phase) const {
    return entries_[PhaseIndex(phase)];
  }
  const std::vector<SegmentationViolation>& violations() const {
    return violations_;
  }
  int present_count() const;

  friend bool operator==(const PhaseSegmentation&,
                         const PhaseSegmentation&) = default;

 private:
  friend PhaseSegmentation ValidateSegmentation(
      const std::map<PhaseLabel, TimeInterval>& raw, double duration_s);

  std::array<std::optional<TimeInterval>, kPhaseCount> entries_{};
  double duration_s_ = 0.0;
  std::vector<SegmentationViolation> violations_;
};

// Total: clamps every interval into [0, duration_s], swaps inverted
// endpoints, and records each correction plus missing, degenerate and
// out-of-order phases as violations. Throws Error(kInvalidArgument) only when
// duration_s is not positive.
PhaseSegmentation ValidateSegmentation(
    const std::map<PhaseLabel, TimeInterval>& raw, double duration_s);

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

enum class ViewKind { kOverhead, kVehicle };
std::string_view ViewKindName(ViewKind kind);  // "overhead" / "vehicle"

struct ViewStream {
  std::string view_id;
  ViewKind kind = ViewKind::kOverhead;
  std::string video_uri;
  std::optional<std::string> motion_energy_uri;
  // Event time t is view time t + offset_s.
  double offset_s = 0.0;

  friend bool operator==(const ViewStream&, const ViewStream&) = default;
};

enum class Perspective { kPedestrian, kVehicle };
std::string_view PerspectiveName(Perspective p);  // "pedestrian" / "vehicle"

struct CaptionRecord {
  PhaseLabel phase = PhaseLabel::kPreRecognition;
  Perspective perspective = Perspective::kPedestrian;
  std::string text;
  // View ids of the clips the caption was produced from; empty for
  // ground-truth annotations.
  std::vector<std::string> source_views;

  friend bool operator==(const CaptionRecord&, const CaptionRecord&) = default;
};

enum class Choice : char { kA = 'a', kB = 'b', kC = 'c', kD = 'd' };

inline constexpr std::array<Choice, 4> kAllChoices = {Choice::kA, Choice::kB,
                                                      Choice::kC, Choice::kD};

constexpr char ChoiceLetter(Choice c) { return static_cast<char>(c); }
// Case-insensitive; anything outside a-d yields nullopt.
std::optional<Choice> ChoiceFromLetter(char letter);

enum class QAScope { kVehicleView, kOverheadView, kEnvironment };
// "vehicle_view" / "overhead_view" / "environment"
std::string_view QAScopeName(QAScope scope);

struct QAItem {
  std::string qa_id;
  QAScope scope = QAScope::kEnvironment;
  std::optional<PhaseLabel> phase;  // absent for environment questions
  std::string question;
  std::array<std::string, 4> options;  // indexed a..d
  std::optional<Choice> answer;        // ground truth, when known

  friend bool operator==(const QAItem&, const QAItem&) = default;
};

struct AnswerRecord {
  std::string qa_id;
  std::string raw_text;
  std::optional<Choice> extracted;
  std::vector<std::string> source_views;

  friend bool operator==(const AnswerRecord&, const AnswerRecord&) = default;
};

struct GroundTruth {
  std::optional<PhaseSegmentation> segmentation;
  std::vector<CaptionRecord> captions;
  std::vector<QAItem> qa;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct MultiViewEvent {
  std::string event_id;
  double duration_s = 0.0;
  std::vector<ViewStream> views;
  std::optional<GroundTruth> ground_truth;
  // Optional synthetic kinematics for the trigger stage.
  std::optional<std::string> trajectory_uri;

  friend bool operator==(const MultiViewEvent&,
                         const MultiViewEvent&) = default;
};

// Media reference handed to a model backend. Pixels are never shipped; the
// inference server decodes `uri` between the two bounds.
struct MediaRef {
  std::string uri;
  double start_s = 0.0;
  double end_s = 0.0;
  double fps = 2.0;
  int max_pixels = 6400;

  friend bool operator==(const MediaRef&, const MediaRef&) = default;
};

struct Clip {
  ViewStream view;
  TimeInterval interval;  // in the view's own clock
};

// Maps an event-time interval onto one view's clock: shifts by offset_s and
// clamps to the view's extent [max(0, offset_s), offset_s + duration_s].
TimeInterval ToViewInterval(const ViewStream& view,
                            const TimeInterval& event_interval,
                            double duration_s);

// One clip per view for `phase`. Throws Error(kPhaseAbsent).
std::vector<Clip> PhaseSlice(const MultiViewEvent& event,
                             const PhaseSegmentation& segmentation,
                             PhaseLabel phase);

// One clip per view spanning the whole event.
std::vector<Clip> FullEventClips(const MultiViewEvent& event);

// ---------------------------------------------------------------------------
// Stage outputs
// ---------------------------------------------------------------------------

enum class AnalysisTask { kCaption, kVqa };

struct ItemError {
  AnalysisTask task = AnalysisTask::kCaption;
  std::string item;  // perspective name or qa_id
  std::string message;

  friend bool operator==(const ItemError&, const ItemError&) = default;
};

struct QAAnswer {
  QAItem item;
  AnswerRecord answer;

  friend bool operator==(const QAAnswer&, const QAAnswer&) = default;
};

// Stage 3 output for a single phase (or for the whole event when `phase` is
// empty, which holds environment questions).
struct PhaseAnalysis {
  std::optional<PhaseLabel> phase;
  std::vector<CaptionRecord> captions;
  std::vector<QAAnswer> answers;
  std::vector<ItemError> errors;

  friend bool operator==(const PhaseAnalysis&, const PhaseAnalysis&) = default;
};

struct EventInfoSet {
  PhaseSegmentation segmentation;
  std::vector<CaptionRecord> captions;
  std::vector<QAAnswer> answers;

  friend bool operator==(const EventInfoSet&, const EventInfoSet&) = default;
};

enum class RiskLevel { kModerate, kHigh, kCritical, kImpact };
std::string_view RiskLevelName(RiskLevel level);
std::optional<RiskLevel> ParseRiskLevel(std::string_view text);

struct PhaseTableRow {
  PhaseLabel phase = PhaseLabel::kPreRecognition;
  std::string time;
  std::string pedestrian_state;
  std::string vehicle_action;
  RiskLevel risk_level = RiskLevel::kModerate;

  friend bool operator==(const PhaseTableRow&, const PhaseTableRow&) = default;
};

struct InteractionDynamics {
  std::string initial_separation;
  std::string convergence_pattern;
  std::string communication;
  std::string mutual_awareness;
  std::string critical_failure;

  friend bool operator==(const InteractionDynamics&,
                         const InteractionDynamics&) = default;
};

struct CausalLink {
  PhaseLabel phase = PhaseLabel::kPreRecognition;
  std::string factor;

  friend bool operator==(const CausalLink&, const CausalLink&) = default;
};

struct IncidentReport {
  std::string scene_understanding;
  std::vector<PhaseTableRow> phase_table;
  InteractionDynamics interaction_dynamics;
  std::string classification;
  std::string severity;
  std::vector<CausalLink> causal_chain;
  std::vector<std::string> primary_factors;
  std::vector<std::string> environmental_factors;
  std::string summary;

  friend bool operator==(const IncidentReport&,
                         const IncidentReport&) = default;
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct CaptionMetrics {
  double bleu = 0.0;
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  double score = 0.0;
  std::size_t pairs = 0;
};

struct VqaMetrics {
  double accuracy_pct = 0.0;
  double valid_rate_pct = 0.0;
  std::size_t items = 0;
};

// overall_miou is derived from the per-phase values at construction and is
// never stored independently.
class EvaluationSummary {
 public:
  EvaluationSummary(std::array<double, kPhaseCount> per_phase_miou,
                    CaptionMetrics caption,
                    std::map<QAScope, VqaMetrics> vqa);

  const std::array<double, kPhaseCount>& per_phase_miou() const {
    return per_phase_miou_;
  }
  double overall_miou() const { return overall_miou_; }
  const CaptionMetrics& caption() const { return caption_; }
  const std::map<QAScope, VqaMetrics>& vqa() const { return vqa_; }

 private:
  std::array<double, kPhaseCount> per_phase_miou_;
  double overall_miou_;
  CaptionMetrics caption_;
  std::map<QAScope, VqaMetrics> vqa_;
};

// Arithmetic mean of the five per-phase values.
double OverallMiou(const std::array<double, kPhaseCount>& per_phase);

}  // namespace pvir

#endif  // PVIR_CORE_MODEL_H_
