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

#include "pvir/core_model.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "pvir/errors.h"

namespace pvir {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kSchema: return "SchemaError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kPhaseAbsent: return "PhaseAbsent";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kRateMismatch: return "RateMismatch";
    case ErrorCode::kDegenerateSignal: return "DegenerateSignal";
    case ErrorCode::kMissingOffset: return "MissingOffset";
    case ErrorCode::kUnparseable: return "Unparseable";
    case ErrorCode::kBackend: return "BackendError";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::kUnknownPhase: return "UnknownPhase";
    case ErrorCode::kEmptyInfo: return "EmptyInfo";
    case ErrorCode::kSchemaViolations: return "SchemaViolations";
    case ErrorCode::kExhaustedRetries: return "ExhaustedRetries";
  }
  return "Unknown";
}

std::string_view BackendErrorKindName(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::kTimeout: return "Timeout";
    case BackendErrorKind::kProtocol: return "Protocol";
    case BackendErrorKind::kNoFixture: return "NoFixture";
  }
  return "Unknown";
}

namespace {

std::string JoinViolations(const std::vector<SchemaViolation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.ToString();
  }
  return out;
}

std::string Lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

SchemaViolationsError::SchemaViolationsError(
    std::vector<SchemaViolation> violations)
    : Error(ErrorCode::kSchemaViolations,
            "report schema violations: " + JoinViolations(violations)),
      violations_(std::move(violations)) {}

ExhaustedRetriesError::ExhaustedRetriesError(int attempts,
                                             std::vector<SchemaViolation> last)
    : Error(ErrorCode::kExhaustedRetries,
            fmt::format("no valid report after {} attempts; last: {}",
                        attempts, JoinViolations(last))),
      attempts_(attempts),
      last_violations_(std::move(last)) {}

// ---------------------------------------------------------------------------

std::optional<PhaseLabel> PhaseFromIndex(int index) {
  if (index < 0 || index >= kPhaseCount) return std::nullopt;
  return static_cast<PhaseLabel>(index);
}

std::string_view PhaseName(PhaseLabel phase) {
  switch (phase) {
    case PhaseLabel::kPreRecognition: return "Pre-recognition";
    case PhaseLabel::kRecognition: return "Recognition";
    case PhaseLabel::kJudgment: return "Judgment";
    case PhaseLabel::kAction: return "Action";
    case PhaseLabel::kAvoidance: return "Avoidance";
  }
  return "?";
}

std::optional<PhaseLabel> ParsePhase(std::string_view text) {
  std::string s = Lower(Trim(text));
  if (s.rfind("phase", 0) == 0) {
    s.erase(0, 5);
    while (!s.empty() && (s.front() == ' ' || s.front() == '_')) {
      s.erase(0, 1);
    }
  }
  if (s.size() == 1 && s[0] >= '0' && s[0] <= '4') {
    return PhaseFromIndex(s[0] - '0');
  }
  std::string compact;
  for (char c : s) {
    if (std::isalpha(static_cast<unsigned char>(c))) compact += c;
  }
  if (compact == "prerecognition") return PhaseLabel::kPreRecognition;
  if (compact == "recognition") return PhaseLabel::kRecognition;
  if (compact == "judgment" || compact == "judgement") {
    return PhaseLabel::kJudgment;
  }
  if (compact == "action") return PhaseLabel::kAction;
  if (compact == "avoidance") return PhaseLabel::kAvoidance;
  return std::nullopt;
}

std::string_view ViolationKindName(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kClampedStart: return "ClampedStart";
    case ViolationKind::kClampedEnd: return "ClampedEnd";
    case ViolationKind::kMissingPhase: return "MissingPhase";
    case ViolationKind::kDegenerate: return "Degenerate";
    case ViolationKind::kInvertedInterval: return "InvertedInterval";
    case ViolationKind::kOrderInversion: return "OrderInversion";
  }
  return "?";
}

std::string SegmentationViolation::ToString() const {
  return fmt::format("{}({})", ViolationKindName(kind), PhaseIndex(phase));
}

const TimeInterval& PhaseSegmentation::at(PhaseLabel phase) const {
  const auto& entry = entries_[PhaseIndex(phase)];
  if (!entry) {
    throw Error(ErrorCode::kPhaseAbsent,
                fmt::format("segmentation has no phase {} ({})",
                            PhaseIndex(phase), PhaseName(phase)));
  }
  return *entry;
}

int PhaseSegmentation::present_count() const {
  return static_cast<int>(std::count_if(
      entries_.begin(), entries_.end(),
      [](const auto& e) { return e.has_value(); }));
}

PhaseSegmentation ValidateSegmentation(
    const std::map<PhaseLabel, TimeInterval>& raw, double duration_s) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("duration_s must be positive, got {}", duration_s));
  }
  PhaseSegmentation seg;
  seg.duration_s_ = duration_s;
  auto flag = [&seg](ViolationKind kind, PhaseLabel phase) {
    seg.violations_.push_back({kind, phase});
  };

  for (PhaseLabel phase : kAllPhases) {
    auto it = raw.find(phase);
    if (it == raw.end() || !std::isfinite(it->second.start_s) ||
        !std::isfinite(it->second.end_s)) {
      flag(ViolationKind::kMissingPhase, phase);
      continue;
    }
    TimeInterval iv = it->second;
    if (iv.start_s > iv.end_s) {
      std::swap(iv.start_s, iv.end_s);
      flag(ViolationKind::kInvertedInterval, phase);
    }
    if (iv.start_s < 0.0) {
      iv.start_s = 0.0;
      flag(ViolationKind::kClampedStart, phase);
    } else if (iv.start_s > duration_s) {
      iv.start_s = duration_s;
      flag(ViolationKind::kClampedStart, phase);
    }
    if (iv.end_s > duration_s) {
      iv.end_s = duration_s;
      flag(ViolationKind::kClampedEnd, phase);
    } else if (iv.end_s < 0.0) {
      iv.end_s = 0.0;
      flag(ViolationKind::kClampedEnd, phase);
    }
    if (iv.is_degenerate()) flag(ViolationKind::kDegenerate, phase);
    seg.entries_[PhaseIndex(phase)] = iv;
  }

  // Phases are consecutive: a phase starting before an earlier phase is an
  // inversion. Overlap alone is not.
  std::optional<double> previous_start;
  for (PhaseLabel phase : kAllPhases) {
    const auto& entry = seg.entries_[PhaseIndex(phase)];
    if (!entry) continue;
    if (previous_start && entry->start_s < *previous_start) {
      flag(ViolationKind::kOrderInversion, phase);
    }
    previous_start = previous_start ? std::max(*previous_start, entry->start_s)
                                    : entry->start_s;
  }
  return seg;
}

// ---------------------------------------------------------------------------

std::string_view ViewKindName(ViewKind kind) {
  return kind == ViewKind::kOverhead ? "overhead" : "vehicle";
}

std::string_view PerspectiveName(Perspective p) {
  return p == Perspective::kPedestrian ? "pedestrian" : "vehicle";
}

std::optional<Choice> ChoiceFromLetter(char letter) {
  switch (std::tolower(static_cast<unsigned char>(letter))) {
    case 'a': return Choice::kA;
    case 'b': return Choice::kB;
    case 'c': return Choice::kC;
    case 'd': return Choice::kD;
    default: return std::nullopt;
  }
}

std::string_view QAScopeName(QAScope scope) {
  switch (scope) {
    case QAScope::kVehicleView: return "vehicle_view";
    case QAScope::kOverheadView: return "overhead_view";
    case QAScope::kEnvironment: return "environment";
  }
  return "?";
}

TimeInterval ToViewInterval(const ViewStream& view,
                            const TimeInterval& event_interval,
                            double duration_s) {
  const double lo = std::max(0.0, view.offset_s);
  const double hi = std::max(lo, view.offset_s + duration_s);
  auto clamp = [&](double t) { return std::clamp(t, lo, hi); };
  return {clamp(event_interval.start_s + view.offset_s),
          clamp(event_interval.end_s + view.offset_s)};
}

std::vector<Clip> PhaseSlice(const MultiViewEvent& event,
                             const PhaseSegmentation& segmentation,
                             PhaseLabel phase) {
  const TimeInterval& interval = segmentation.at(phase);
  std::vector<Clip> clips;
  clips.reserve(event.views.size());
  for (const auto& view : event.views) {
    clips.push_back({view, ToViewInterval(view, interval, event.duration_s)});
  }
  return clips;
}

std::vector<Clip> FullEventClips(const MultiViewEvent& event) {
  std::vector<Clip> clips;
  clips.reserve(event.views.size());
  for (const auto& view : event.views) {
    clips.push_back({view, ToViewInterval(view, {0.0, event.duration_s},
                                          event.duration_s)});
  }
  return clips;
}

// ---------------------------------------------------------------------------

std::string_view RiskLevelName(RiskLevel level) {
  switch (level) {
    case RiskLevel::kModerate: return "Moderate";
    case RiskLevel::kHigh: return "High";
    case RiskLevel::kCritical: return "Critical";
    case RiskLevel::kImpact: return "Impact";
  }
  return "?";
}

std::optional<RiskLevel> ParseRiskLevel(std::string_view text) {
  for (RiskLevel level : {RiskLevel::kModerate, RiskLevel::kHigh,
                          RiskLevel::kCritical, RiskLevel::kImpact}) {
    if (text == RiskLevelName(level)) return level;
  }
  return std::nullopt;
}

double OverallMiou(const std::array<double, kPhaseCount>& per_phase) {
  return std::accumulate(per_phase.begin(), per_phase.end(), 0.0) /
         kPhaseCount;
}

EvaluationSummary::EvaluationSummary(
    std::array<double, kPhaseCount> per_phase_miou, CaptionMetrics caption,
    std::map<QAScope, VqaMetrics> vqa)
    : per_phase_miou_(per_phase_miou),
      overall_miou_(OverallMiou(per_phase_miou)),
      caption_(caption),
      vqa_(std::move(vqa)) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  auto pct = [](double v) { return v >= 0.0 && v <= 100.0; };
  for (double v : per_phase_miou_) {
    if (!unit(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("per-phase mIoU {} outside [0,1]", v));
    }
  }
  if (!unit(caption_.bleu) || !unit(caption_.meteor) ||
      !unit(caption_.rouge_l) || !(caption_.cider >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "caption metric component out of range");
  }
  for (const auto& [scope, m] : vqa_) {
    if (!pct(m.accuracy_pct) || !pct(m.valid_rate_pct)) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("{} rates outside [0,100]", QAScopeName(scope)));
    }
  }
}

}  // namespace pvir
