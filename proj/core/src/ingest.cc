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

#include "pvir/ingest.h"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "io_util.h"
#include "pvir/errors.h"

namespace pvir {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string Child(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string Index(const std::string& path, std::size_t i) {
  return fmt::format("{}[{}]", path, i);
}

// Typed access into a JSON object; every failure names the field path.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw SchemaError(path_.empty() ? "$" : path_, "expected object");
    }
  }

  bool Has(std::string_view key) const {
    auto it = j_.find(key);
    return it != j_.end() && !it->is_null();
  }

  const json& Require(std::string_view key) const {
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) {
      throw SchemaError(Child(path_, key), "missing");
    }
    return *it;
  }

  std::string String(std::string_view key, bool non_empty = true) const {
    const json& v = Require(key);
    if (!v.is_string()) throw SchemaError(Child(path_, key), "expected string");
    std::string s = v.get<std::string>();
    if (non_empty && s.empty()) throw SchemaError(Child(path_, key), "empty");
    return s;
  }

  std::optional<std::string> OptString(std::string_view key) const {
    if (!Has(key)) return std::nullopt;
    return String(key);
  }

  double Number(std::string_view key) const {
    const json& v = Require(key);
    if (!v.is_number()) throw SchemaError(Child(path_, key), "expected number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaError(Child(path_, key), "not finite");
    return d;
  }

  const json& Array(std::string_view key) const {
    const json& v = Require(key);
    if (!v.is_array()) throw SchemaError(Child(path_, key), "expected array");
    return v;
  }

  PhaseLabel Phase(std::string_view key) const {
    const json& v = Require(key);
    std::optional<PhaseLabel> phase;
    if (v.is_number_integer()) {
      phase = PhaseFromIndex(v.get<int>());
    } else if (v.is_string()) {
      phase = ParsePhase(v.get<std::string>());
    }
    if (!phase) {
      throw SchemaError(Child(path_, key), "expected phase 0-4");
    }
    return *phase;
  }

  std::string path(std::string_view key) const { return Child(path_, key); }

 private:
  const json& j_;
  std::string path_;
};

ViewKind ParseViewKind(const std::string& s, const std::string& path) {
  if (s == "overhead") return ViewKind::kOverhead;
  if (s == "vehicle") return ViewKind::kVehicle;
  throw SchemaError(path, "expected 'overhead' or 'vehicle'");
}

Perspective ParsePerspective(const std::string& s, const std::string& path) {
  if (s == "pedestrian") return Perspective::kPedestrian;
  if (s == "vehicle") return Perspective::kVehicle;
  throw SchemaError(path, "expected 'pedestrian' or 'vehicle'");
}

QAScope ParseScope(const std::string& s, const std::string& path) {
  for (QAScope scope :
       {QAScope::kVehicleView, QAScope::kOverheadView, QAScope::kEnvironment}) {
    if (s == QAScopeName(scope)) return scope;
  }
  throw SchemaError(path,
                    "expected 'vehicle_view', 'overhead_view' or 'environment'");
}

Choice ParseChoice(const json& v, const std::string& path) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.size() == 1) {
      if (auto c = ChoiceFromLetter(s[0])) return *c;
    }
  }
  throw SchemaError(path, "expected one of a, b, c, d");
}

json Seconds(double s) { return internal::RoundMillis(s); }

json StringArray(const std::vector<std::string>& values) {
  return json(values);
}

std::vector<std::string> ReadStringArray(const json& j,
                                         const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw SchemaError(Index(path, i), "expected string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

std::map<PhaseLabel, TimeInterval> ReadPhaseArray(const json& phases,
                                                  const std::string& path) {
  std::map<PhaseLabel, TimeInterval> raw;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    ObjectReader p(phases[i], Index(path, i));
    const PhaseLabel phase = p.Phase("phase");
    if (raw.count(phase)) {
      throw SchemaError(p.path("phase"),
                        fmt::format("duplicate phase {}", PhaseIndex(phase)));
    }
    raw[phase] = {p.Number("start_s"), p.Number("end_s")};
  }
  return raw;
}

void CheckIdComponent(std::string_view id, std::string_view what) {
  if (id.empty() || id == "." || id == ".." ||
      id.find_first_of("/\\") != std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{} '{}' is not a valid path component", what, id));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kOther: return "other";
  }
  return "other";
}

DatasetManifest LoadManifest(const fs::path& path) {
  const json j = internal::ParseJsonFile(path);
  if (!j.is_object()) throw ParseError("$", "expected object");
  DatasetManifest manifest;

  auto require = [&j](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) throw ParseError(key, "missing field");
    return *it;
  };
  const json& id = require("dataset_id");
  if (!id.is_string()) throw ParseError("dataset_id", "expected string");
  manifest.dataset_id = id.get<std::string>();

  const json& split = require("split");
  const std::string split_name = split.is_string() ? split.get<std::string>()
                                                   : std::string();
  if (split_name == "train") {
    manifest.split = Split::kTrain;
  } else if (split_name == "test") {
    manifest.split = Split::kTest;
  } else if (split_name == "other") {
    manifest.split = Split::kOther;
  } else {
    throw ParseError("split", "expected 'train', 'test' or 'other'");
  }

  const json& events = require("events");
  if (!events.is_array()) throw ParseError("events", "expected array");
  const fs::path base = path.parent_path();
  std::set<fs::path> seen;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!events[i].is_string()) {
      throw ParseError(Index("events", i), "expected string");
    }
    fs::path event_path(events[i].get<std::string>());
    if (event_path.is_relative()) event_path = base / event_path;
    event_path = event_path.lexically_normal();
    if (!seen.insert(event_path).second) {
      throw ParseError(Index("events", i),
                       "duplicate event path '" + event_path.string() + "'");
    }
    manifest.events.push_back(std::move(event_path));
  }
  return manifest;
}

json ManifestToJson(const DatasetManifest& manifest,
                    const fs::path& relative_to) {
  json events = json::array();
  for (const auto& p : manifest.events) {
    events.push_back(p.lexically_relative(relative_to).generic_string());
  }
  return {{"dataset_id", manifest.dataset_id},
          {"split", SplitName(manifest.split)},
          {"events", std::move(events)}};
}

// ---------------------------------------------------------------------------

QAItem QAItemFromJson(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  QAItem item;
  item.qa_id = r.String("qa_id");
  item.scope = ParseScope(r.String("scope"), r.path("scope"));
  if (r.Has("phase")) item.phase = r.Phase("phase");
  if (item.scope == QAScope::kEnvironment && item.phase) {
    throw SchemaError(r.path("phase"),
                      "environment questions span the whole event");
  }
  if (item.scope != QAScope::kEnvironment && !item.phase) {
    throw SchemaError(r.path("phase"), "missing");
  }
  item.question = r.String("question");
  const json& options = r.Require("options");
  const std::string opt_path = r.path("options");
  if (!options.is_object()) throw SchemaError(opt_path, "expected object");
  if (options.size() != 4) throw SchemaError(opt_path, "expected 4");
  ObjectReader o(options, opt_path);
  for (Choice c : kAllChoices) {
    const std::string key(1, ChoiceLetter(c));
    item.options[static_cast<std::size_t>(ChoiceLetter(c) - 'a')] =
        o.String(key);
  }
  if (r.Has("answer")) item.answer = ParseChoice(r.Require("answer"),
                                                 r.path("answer"));
  return item;
}

json QAItemToJson(const QAItem& item) {
  json options = json::object();
  for (Choice c : kAllChoices) {
    options[std::string(1, ChoiceLetter(c))] =
        item.options[static_cast<std::size_t>(ChoiceLetter(c) - 'a')];
  }
  json j = {{"qa_id", item.qa_id},
            {"scope", QAScopeName(item.scope)},
            {"question", item.question},
            {"options", std::move(options)}};
  if (item.phase) j["phase"] = PhaseIndex(*item.phase);
  if (item.answer) j["answer"] = std::string(1, ChoiceLetter(*item.answer));
  return j;
}

CaptionRecord CaptionFromJson(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  CaptionRecord c;
  c.phase = r.Phase("phase");
  c.perspective = ParsePerspective(r.String("perspective"),
                                   r.path("perspective"));
  c.text = r.String("text");
  if (r.Has("source_views")) {
    c.source_views =
        ReadStringArray(r.Require("source_views"), r.path("source_views"));
  }
  return c;
}

json CaptionToJson(const CaptionRecord& c) {
  json j = {{"phase", PhaseIndex(c.phase)},
            {"perspective", PerspectiveName(c.perspective)},
            {"text", c.text}};
  if (!c.source_views.empty()) j["source_views"] = StringArray(c.source_views);
  return j;
}

json AnswerToJson(const AnswerRecord& a) {
  json j = {{"qa_id", a.qa_id},
            {"raw_text", a.raw_text},
            {"extracted", a.extracted
                              ? json(std::string(1, ChoiceLetter(*a.extracted)))
                              : json(nullptr)}};
  if (!a.source_views.empty()) j["source_views"] = StringArray(a.source_views);
  return j;
}

AnswerRecord AnswerFromJson(const json& j) {
  ObjectReader r(j, "answer");
  AnswerRecord a;
  a.qa_id = r.String("qa_id");
  a.raw_text = r.String("raw_text", /*non_empty=*/false);
  if (r.Has("extracted")) {
    a.extracted = ParseChoice(r.Require("extracted"), r.path("extracted"));
  }
  if (r.Has("source_views")) {
    a.source_views =
        ReadStringArray(r.Require("source_views"), r.path("source_views"));
  }
  return a;
}

json SegmentationToJson(const PhaseSegmentation& seg) {
  json phases = json::array();
  for (PhaseLabel phase : kAllPhases) {
    if (const auto& iv = seg.get(phase)) {
      phases.push_back({{"phase", PhaseIndex(phase)},
                        {"start_s", Seconds(iv->start_s)},
                        {"end_s", Seconds(iv->end_s)}});
    }
  }
  json violations = json::array();
  for (const auto& v : seg.violations()) violations.push_back(v.ToString());
  return {{"duration_s", Seconds(seg.duration_s())},
          {"phases", std::move(phases)},
          {"violations", std::move(violations)}};
}

PhaseSegmentation SegmentationFromJson(const json& j) {
  ObjectReader r(j, "segmentation");
  const double duration = r.Number("duration_s");
  if (!(duration > 0.0)) throw SchemaError(r.path("duration_s"), "not positive");
  return ValidateSegmentation(
      ReadPhaseArray(r.Array("phases"), r.path("phases")), duration);
}

json AnalysisToJson(const PhaseAnalysis& analysis) {
  json captions = json::array();
  for (const auto& c : analysis.captions) captions.push_back(CaptionToJson(c));
  json answers = json::array();
  for (const auto& qa : analysis.answers) {
    answers.push_back(
        {{"qa", QAItemToJson(qa.item)}, {"answer", AnswerToJson(qa.answer)}});
  }
  json errors = json::array();
  for (const auto& e : analysis.errors) {
    errors.push_back(
        {{"task", e.task == AnalysisTask::kCaption ? "caption" : "vqa"},
         {"item", e.item},
         {"message", e.message}});
  }
  return {{"phase", analysis.phase ? json(PhaseIndex(*analysis.phase))
                                   : json(nullptr)},
          {"captions", std::move(captions)},
          {"answers", std::move(answers)},
          {"errors", std::move(errors)}};
}

PhaseAnalysis AnalysisFromJson(const json& j) {
  ObjectReader r(j, "analysis");
  PhaseAnalysis a;
  if (r.Has("phase")) a.phase = r.Phase("phase");
  const json& captions = r.Array("captions");
  for (std::size_t i = 0; i < captions.size(); ++i) {
    a.captions.push_back(CaptionFromJson(captions[i], Index("captions", i)));
  }
  const json& answers = r.Array("answers");
  for (std::size_t i = 0; i < answers.size(); ++i) {
    ObjectReader qa(answers[i], Index("answers", i));
    a.answers.push_back({QAItemFromJson(qa.Require("qa"), qa.path("qa")),
                         AnswerFromJson(qa.Require("answer"))});
  }
  if (r.Has("errors")) {
    const json& errors = r.Array("errors");
    for (std::size_t i = 0; i < errors.size(); ++i) {
      ObjectReader e(errors[i], Index("errors", i));
      a.errors.push_back(
          {e.String("task") == "caption" ? AnalysisTask::kCaption
                                         : AnalysisTask::kVqa,
           e.String("item", false), e.String("message", false)});
    }
  }
  return a;
}

// ---------------------------------------------------------------------------

MultiViewEvent EventFromJson(const json& j) {
  ObjectReader r(j, "");
  MultiViewEvent event;
  event.event_id = r.String("event_id");
  event.duration_s = r.Number("duration_s");
  if (!(event.duration_s > 0.0)) {
    throw SchemaError("duration_s", "must be positive");
  }
  event.trajectory_uri = r.OptString("trajectory_uri");

  const json& views = r.Array("views");
  if (views.empty()) throw SchemaError("views", "empty");
  std::set<std::string> view_ids;
  for (std::size_t i = 0; i < views.size(); ++i) {
    ObjectReader v(views[i], Index("views", i));
    ViewStream view;
    view.view_id = v.String("view_id");
    if (!view_ids.insert(view.view_id).second) {
      throw SchemaError(v.path("view_id"),
                        "duplicate view id '" + view.view_id + "'");
    }
    view.kind = ParseViewKind(v.String("kind"), v.path("kind"));
    view.video_uri = v.String("video_uri");
    view.motion_energy_uri = v.OptString("motion_energy_uri");
    if (v.Has("offset_s")) view.offset_s = v.Number("offset_s");
    event.views.push_back(std::move(view));
  }

  if (r.Has("annotations")) {
    ObjectReader a(r.Require("annotations"), "annotations");
    GroundTruth gt;
    if (a.Has("phases")) {
      gt.segmentation = ValidateSegmentation(
          ReadPhaseArray(a.Array("phases"), a.path("phases")),
          event.duration_s);
    }
    if (a.Has("captions")) {
      const json& captions = a.Array("captions");
      for (std::size_t i = 0; i < captions.size(); ++i) {
        gt.captions.push_back(
            CaptionFromJson(captions[i], Index(a.path("captions"), i)));
      }
    }
    if (a.Has("qa")) {
      const json& qa = a.Array("qa");
      std::set<std::string> ids;
      for (std::size_t i = 0; i < qa.size(); ++i) {
        QAItem item = QAItemFromJson(qa[i], Index(a.path("qa"), i));
        if (!ids.insert(item.qa_id).second) {
          throw SchemaError(Index(a.path("qa"), i) + ".qa_id",
                            "duplicate id '" + item.qa_id + "'");
        }
        gt.qa.push_back(std::move(item));
      }
    }
    event.ground_truth = std::move(gt);
  }
  return event;
}

json EventToJson(const MultiViewEvent& event) {
  json views = json::array();
  for (const auto& v : event.views) {
    json view = {{"view_id", v.view_id},
                 {"kind", ViewKindName(v.kind)},
                 {"video_uri", v.video_uri},
                 {"offset_s", Seconds(v.offset_s)}};
    if (v.motion_energy_uri) view["motion_energy_uri"] = *v.motion_energy_uri;
    views.push_back(std::move(view));
  }
  json j = {{"event_id", event.event_id},
            {"duration_s", Seconds(event.duration_s)},
            {"views", std::move(views)}};
  if (event.trajectory_uri) j["trajectory_uri"] = *event.trajectory_uri;
  if (event.ground_truth) {
    const GroundTruth& gt = *event.ground_truth;
    json annotations = json::object();
    if (gt.segmentation) {
      annotations["phases"] = SegmentationToJson(*gt.segmentation)["phases"];
    }
    json captions = json::array();
    for (const auto& c : gt.captions) captions.push_back(CaptionToJson(c));
    annotations["captions"] = std::move(captions);
    json qa = json::array();
    for (const auto& q : gt.qa) qa.push_back(QAItemToJson(q));
    annotations["qa"] = std::move(qa);
    j["annotations"] = std::move(annotations);
  }
  return j;
}

MultiViewEvent LoadEvent(const fs::path& path) {
  MultiViewEvent event = EventFromJson(internal::ParseJsonFile(path));
  const fs::path dir = fs::absolute(path).parent_path();
  auto local = [&dir](std::optional<std::string>& uri) {
    if (uri && uri->find("://") == std::string::npos &&
        !fs::path(*uri).is_absolute()) {
      *uri = (dir / *uri).lexically_normal().string();
    }
  };
  local(event.trajectory_uri);
  for (auto& view : event.views) local(view.motion_energy_uri);
  return event;
}

// ---------------------------------------------------------------------------

std::string_view StageName(Stage stage) {
  switch (stage) {
    case Stage::kTrigger: return "trigger";
    case Stage::kSync: return "sync";
    case Stage::kSegmentation: return "segmentation";
    case Stage::kReasoning: return "reasoning";
    case Stage::kSynthesis: return "synthesis";
  }
  return "unknown";
}

ArtifactStore::ArtifactStore(fs::path root) : root_(std::move(root)) {}

fs::path ArtifactStore::PathFor(std::string_view run_id,
                                std::string_view event_id, Stage stage) const {
  return root_ / "runs" / std::string(run_id) / std::string(event_id) /
         (std::string(StageName(stage)) + ".json");
}

std::mutex& ArtifactStore::KeyMutex(const std::string& key) {
  std::lock_guard lock(table_mu_);
  auto& slot = key_mu_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

RunArtifact ArtifactStore::Persist(const std::string& run_id,
                                   const std::string& event_id, Stage stage,
                                   const json& payload) {
  CheckIdComponent(run_id, "run id");
  CheckIdComponent(event_id, "event id");
  RunArtifact artifact{run_id, event_id, stage,
                       PathFor(run_id, event_id, stage),
                       std::chrono::system_clock::now()};
  std::lock_guard lock(KeyMutex(artifact.path.string()));
  internal::WriteFileAtomic(artifact.path, internal::DumpCanonical(payload));
  return artifact;
}

std::optional<json> ArtifactStore::Load(std::string_view run_id,
                                        std::string_view event_id,
                                        Stage stage) const {
  const fs::path path = PathFor(run_id, event_id, stage);
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  return internal::ParseJsonFile(path);
}

}  // namespace pvir
