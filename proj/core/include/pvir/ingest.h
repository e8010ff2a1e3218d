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

#ifndef PVIR_INGEST_H_
#define PVIR_INGEST_H_

// Dataset manifests, event annotation files, and persisted run artifacts.
//
// Event file (UTF-8 JSON, one document per event):
//
//   {
//     "event_id": "20230707_12_SN17_T1",
//     "duration_s": 43.7,
//     "trajectory_uri": "trajectories.csv",          // optional
//     "views": [
//       {"view_id": "overhead_1", "kind": "overhead",
//        "video_uri": "videos/overhead_1.mp4",
//        "motion_energy_uri": "energy/overhead_1.csv",  // optional
//        "offset_s": 0.0}                                // optional
//     ],
//     "annotations": {                                   // optional
//       "phases":   [{"phase": 0, "start_s": 28.8, "end_s": 29.9}, ...],
//       "captions": [{"phase": 0, "perspective": "pedestrian", "text": "..."}],
//       "qa": [{"qa_id": "q1", "scope": "vehicle_view", "phase": 3,
//               "question": "...",
//               "options": {"a": "...", "b": "...", "c": "...", "d": "..."},
//               "answer": "b"}]
//     }
//   }
//
// Manifest: {"dataset_id": "...", "split": "train|test|other",
//            "events": ["relative/path.json", ...]}
//
// Run artifacts: <root>/runs/<run_id>/<event_id>/<stage>.json

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pvir/core_model.h"

namespace pvir {

enum class Split { kTrain, kTest, kOther };
std::string_view SplitName(Split split);

struct DatasetManifest {
  std::string dataset_id;
  Split split = Split::kOther;
  // Absolute (resolved against the manifest's directory).
  std::vector<std::filesystem::path> events;
};

// Throws Error(kIo) or ParseError (location names the field, e.g. "split" or
// "events[2]").
DatasetManifest LoadManifest(const std::filesystem::path& path);
nlohmann::json ManifestToJson(const DatasetManifest& manifest,
                              const std::filesystem::path& relative_to);

// Throws Error(kIo), ParseError, or SchemaError naming the offending field.
// Video URIs are kept verbatim; relative trajectory and motion-energy paths
// are resolved against the event file's directory.
MultiViewEvent LoadEvent(const std::filesystem::path& path);
MultiViewEvent EventFromJson(const nlohmann::json& j);
nlohmann::json EventToJson(const MultiViewEvent& event);

// JSON forms of stage outputs. Timestamps are written at millisecond
// precision.
nlohmann::json SegmentationToJson(const PhaseSegmentation& seg);
// Re-validates, so violations are recomputed from the stored intervals.
PhaseSegmentation SegmentationFromJson(const nlohmann::json& j);
nlohmann::json QAItemToJson(const QAItem& item);
QAItem QAItemFromJson(const nlohmann::json& j, const std::string& path);
nlohmann::json AnswerToJson(const AnswerRecord& answer);
AnswerRecord AnswerFromJson(const nlohmann::json& j);
nlohmann::json CaptionToJson(const CaptionRecord& caption);
CaptionRecord CaptionFromJson(const nlohmann::json& j, const std::string& path);
nlohmann::json AnalysisToJson(const PhaseAnalysis& analysis);
PhaseAnalysis AnalysisFromJson(const nlohmann::json& j);

// ---------------------------------------------------------------------------

enum class Stage { kTrigger, kSync, kSegmentation, kReasoning, kSynthesis };
std::string_view StageName(Stage stage);  // also the artifact file stem

struct RunArtifact {
  std::string run_id;
  std::string event_id;
  Stage stage = Stage::kSegmentation;
  std::filesystem::path path;
  std::chrono::system_clock::time_point created_at;
};

// Writes stage payloads atomically (temp file + rename). Writes to the same
// (run, event, stage) key are serialized; the last write wins.
class ArtifactStore {
 public:
  explicit ArtifactStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path PathFor(std::string_view run_id,
                                std::string_view event_id, Stage stage) const;

  // Throws Error(kIo), or Error(kInvalidArgument) for ids that are not
  // plain path components.
  RunArtifact Persist(const std::string& run_id, const std::string& event_id,
                      Stage stage, const nlohmann::json& payload);
  std::optional<nlohmann::json> Load(std::string_view run_id,
                                     std::string_view event_id,
                                     Stage stage) const;

 private:
  std::mutex& KeyMutex(const std::string& key);

  std::filesystem::path root_;
  std::mutex table_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> key_mu_;
};

// Binds a store to one (run, event) so stages can persist without knowing
// the run layout.
class StageRecorder {
 public:
  StageRecorder(ArtifactStore& store, std::string run_id, std::string event_id)
      : store_(&store),
        run_id_(std::move(run_id)),
        event_id_(std::move(event_id)) {}

  RunArtifact Record(Stage stage, const nlohmann::json& payload) const {
    return store_->Persist(run_id_, event_id_, stage, payload);
  }

 private:
  ArtifactStore* store_;
  std::string run_id_;
  std::string event_id_;
};

}  // namespace pvir

#endif  // PVIR_INGEST_H_
