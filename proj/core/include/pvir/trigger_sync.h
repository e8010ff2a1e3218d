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

#ifndef PVIR_TRIGGER_SYNC_H_
#define PVIR_TRIGGER_SYNC_H_

// Event triggering from actor trajectories and clock alignment of views by
// motion-energy cross-correlation.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pvir/core_model.h"

namespace pvir {

enum class ActorClass { kPedestrian, kVehicle };

struct TrajectorySample {
  double t_s = 0.0;
  std::string actor_id;
  ActorClass actor_class = ActorClass::kPedestrian;
  double x_m = 0.0;
  double y_m = 0.0;
};

struct TriggerParams {
  double distance_threshold_m = 10.0;
  double closing_speed_threshold_mps = 0.5;
  int sustain_samples = 3;
  double lookback_s = 30.0;

  // Throws Error(kInvalidArgument) unless every field is strictly positive.
  void Validate() const;
};

struct TriggerWindow {
  std::string pedestrian_id;
  std::string vehicle_id;
  double trigger_t_s = 0.0;
  // [max(0, trigger - lookback), time the condition lapsed (or the last
  // shared sample if it never did)].
  TimeInterval window;

  friend bool operator==(const TriggerWindow&, const TriggerWindow&) = default;
};

// Per shared timestamp of one pedestrian/vehicle pair: distance and closing
// speed (-d distance/dt; central differences inside, one-sided at the ends).
struct PairKinematics {
  std::vector<double> t_s;
  std::vector<double> distance_m;
  std::vector<double> closing_mps;
};

PairKinematics ComputePairKinematics(
    const std::vector<TrajectorySample>& pedestrian,
    const std::vector<TrajectorySample>& vehicle);

// A pair triggers when distance < threshold and closing speed > threshold
// hold on `sustain_samples` consecutive shared timestamps. Overlapping
// windows of the same pair are merged. Output is sorted by (trigger time,
// pedestrian id, vehicle id). Throws Error(kEmptyInput) for no samples and
// Error(kInvalidArgument) for non-increasing per-actor timestamps.
std::vector<TriggerWindow> DetectTriggers(
    const std::vector<TrajectorySample>& samples, const TriggerParams& params);

// CSV with header t_s,actor_id,actor_class,x_m,y_m; actor_class is
// "pedestrian" or "vehicle". Throws Error(kIo) / ParseError("line N").
std::vector<TrajectorySample> LoadTrajectoryCsv(
    const std::filesystem::path& path);
std::vector<TrajectorySample> ParseTrajectoryCsv(std::string_view text);

// ---------------------------------------------------------------------------

struct MotionEnergySignal {
  double sample_rate_hz = 0.0;
  std::vector<double> values;    // as supplied
  std::vector<double> centered;  // values minus their mean
};

// Throws Error(kTooShort) below two samples, Error(kInvalidArgument) for a
// non-positive rate or negative values.
MotionEnergySignal MotionEnergyFromFrameDiffs(std::vector<double> frame_diffs,
                                              double sample_rate_hz);

// Sidecar CSV: first line "sample_rate_hz,<rate>", then one value per line.
MotionEnergySignal LoadMotionEnergyCsv(const std::filesystem::path& path);
MotionEnergySignal ParseMotionEnergyCsv(std::string_view text);

struct OffsetEstimate {
  // Shifting `b` by +offset_s aligns it with `a`: b(t + offset_s) ~ a(t).
  double offset_s = 0.0;
  // Peak Pearson correlation, clamped to [0, 1].
  double confidence = 0.0;
  int lag_samples = 0;
};

// Scans integer lags |k| <= max_lag_s * rate, scoring each by the Pearson
// correlation of the overlapping samples, then refines the best lag with a
// parabola through its neighbours. Throws Error(kRateMismatch),
// Error(kDegenerateSignal) for zero variance, and Error(kInvalidArgument)
// when the lag range leaves fewer than two overlapping samples.
OffsetEstimate EstimateOffset(const MotionEnergySignal& a,
                              const MotionEnergySignal& b, double max_lag_s);

// Builds the aligned event for a trigger window. The first raw view is the
// reference; every other view needs an entry in `offsets_s` (keyed by view
// id). A reference entry, if given, is used as-is. Throws
// Error(kMissingOffset) and Error(kInvalidArgument) for no views.
MultiViewEvent BuildSynchronizedEvent(
    const std::string& event_id, const std::vector<ViewStream>& raw_views,
    const TriggerWindow& window,
    const std::map<std::string, double>& offsets_s);

}  // namespace pvir

#endif  // PVIR_TRIGGER_SYNC_H_
