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

#ifndef PVIR_PIPELINE_H_
#define PVIR_PIPELINE_H_

// End-to-end orchestration: run configuration, per-event stage execution
// with isolated failures, and evaluation of persisted runs.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pvir/backend.h"
#include "pvir/ingest.h"
#include "pvir/metrics.h"
#include "pvir/synthesis.h"
#include "pvir/trigger_sync.h"

namespace pvir {

struct BackendConfig {
  enum class Kind { kMock, kHttp };
  Kind kind = Kind::kMock;
  std::filesystem::path fixtures;  // mock: directory of <fingerprint>.txt
  std::string url;                 // http
  double timeout_s = 120.0;        // http
  int max_attempts = 3;            // http
  ModelOptions model;
};

// Config file (UTF-8 JSON; relative paths resolve against its directory):
// {
//   "dataset": "data/manifest.json",
//   "output_dir": "out",
//   "run_id": "run",                          (optional)
//   "max_concurrency": 4,                     (optional)
//   "backends": {"grounding": B, "reasoning": B, "synthesis": B},
//   "trigger": {"distance_threshold_m", "closing_speed_threshold_mps",
//               "sustain_samples", "lookback_s", "max_lag_s"},  (optional)
//   "retry": {"max_attempts": 3}              (optional)
// }
// B = {"kind": "mock", "fixtures": dir, "model_id": str, "params": {...}}
//   | {"kind": "http", "url": str, "model_id": str, "timeout_s": num,
//      "max_attempts": int, "params": {...}}
struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path output_dir;
  std::string run_id = "run";
  int max_concurrency = 4;
  BackendConfig grounding;
  BackendConfig reasoning;
  BackendConfig synthesis;
  TriggerParams trigger;
  double max_lag_s = 10.0;
  RetryPolicy retry;
};

// Throws Error(kConfig) for malformed or inconsistent settings and for
// referenced paths that do not exist, ParseError for invalid JSON.
RunConfig LoadRunConfig(const std::filesystem::path& path);
RunConfig RunConfigFromJson(const nlohmann::json& j,
                            const std::filesystem::path& base_dir);

// Points every stage at an HTTP server, keeping model ids and params.
void OverrideBackendUrl(RunConfig& config, const std::string& url);

// Throws Error(kConfig) when a backend cannot be constructed.
std::shared_ptr<Backend> MakeBackend(const BackendConfig& config);

// "trigger", "sync", "segment", "analyze", "synthesize" (stage artifact
// names are accepted too). Throws Error(kConfig) otherwise.
Stage ParseStageArg(std::string_view text);

enum class EventStatus { kCompleted, kFailed };

struct EventOutcome {
  std::string event_id;
  EventStatus status = EventStatus::kCompleted;
  std::optional<Stage> failed_stage;
  std::string error;
  std::vector<Stage> stages_run;
  int item_errors = 0;           // isolated per-caption / per-question errors
  std::string classification;   // set once a report exists
};

struct RunSummary {
  std::string run_id;
  std::vector<EventOutcome> events;  // manifest order

  bool any_failed() const;
};

struct RunOptions {
  // Stages before `first` are loaded from the run's existing artifacts.
  Stage first = Stage::kTrigger;
  Stage last = Stage::kSynthesis;
  std::vector<std::string> event_ids;  // empty: every event in the manifest
  std::function<void(std::string_view)> log;
};

// Processes events in parallel (up to max_concurrency); stages within one
// event run in order. Trigger detection runs for events with a trajectory
// and clock alignment for events whose views all carry motion energy.
// Artifacts go to <output_dir>/runs/<run_id>/<event_id>/<stage>.json, plus
// report.txt next to a synthesized report and summary.json for the run.
// Throws Error(kConfig) for unknown event ids; per-event failures are
// reported in the summary.
RunSummary RunPipeline(const RunConfig& config, const RunOptions& options);

// Same as above with caller-supplied backends instead of the configured ones
// (null entries are only allowed for stages that do not run).
struct StageBackends {
  std::shared_ptr<Backend> grounding;
  std::shared_ptr<Backend> reasoning;
  std::shared_ptr<Backend> synthesis;
};
RunSummary RunPipeline(const RunConfig& config, const RunOptions& options,
                       const StageBackends& backends);

nlohmann::json RunSummaryToJson(const RunSummary& summary);
std::string RenderRunSummary(const RunSummary& summary);

// Predictions reconstructed from a run's segmentation and reasoning
// artifacts. Events without artifacts yield an empty prediction.
std::vector<EventPrediction> LoadRunPredictions(
    const ArtifactStore& store, const std::string& run_id,
    const std::vector<MultiViewEvent>& events);

// Loads the manifest's annotated events (optionally filtered), scores the
// persisted run, and writes <output_dir>/runs/<run_id>/evaluation.json.
EvaluationSummary EvaluateStoredRun(const RunConfig& config,
                                    const std::vector<std::string>& event_ids);

nlohmann::json EvaluationToJson(const EvaluationSummary& summary);

}  // namespace pvir

#endif  // PVIR_PIPELINE_H_
