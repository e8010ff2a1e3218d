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

#ifndef PVIR_TOOLS_SAMPLE_SCENARIO_H_
#define PVIR_TOOLS_SAMPLE_SCENARIO_H_

// Writes a small self-contained dataset (events, trajectories, motion
// energy, mock fixtures and a run config) built around a reversing-vehicle
// collision and a second, milder crossing event.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pvir/core_model.h"

namespace pvir::sample {

inline constexpr char kCollisionEventId[] = "reversing_collision";
inline constexpr char kCrossingEventId[] = "crossing_near_miss";

struct SampleOptions {
  bool include_crossing_event = true;
  // Events whose grounding fixture is replaced by text without timestamps.
  std::vector<std::string> unparseable_grounding;
  std::string run_id = "sample";
  int max_concurrency = 2;
};

struct SampleLayout {
  std::filesystem::path root;
  std::filesystem::path config;
  std::filesystem::path manifest;
  std::vector<std::string> event_ids;
};

// Creates (or overwrites) the dataset under `root`. Fixtures are recorded by
// running the pipeline against scripted responders, so they match the
// requests a later `run` issues byte for byte.
SampleLayout WriteSampleDataset(const std::filesystem::path& root,
                                const SampleOptions& options = {});

// Phase boundaries the collision event's grounding fixture reports.
std::map<PhaseLabel, TimeInterval> CollisionPhases();

// The report the collision event's synthesis fixture returns.
IncidentReport CollisionReport();

}  // namespace pvir::sample

#endif  // PVIR_TOOLS_SAMPLE_SCENARIO_H_
