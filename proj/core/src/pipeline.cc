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

#include "pvir/pipeline.h"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "io_util.h"
#include "pvir/grounding.h"
#include "pvir/http_backend.h"
#include "pvir/reasoning.h"

namespace pvir {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void ConfigFail(const std::string& msg) {
  throw Error(ErrorCode::kConfig, msg);
}

const json* Find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double NumberOr(const json& obj, const char* key, double fallback,
                const std::string& where) {
  const json* v = Find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) ConfigFail(fmt::format("{}.{}: expected number", where, key));
  return v->get<double>();
}

int IntOr(const json& obj, const char* key, int fallback,
          const std::string& where) {
  const json* v = Find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) {
    ConfigFail(fmt::format("{}.{}: expected integer", where, key));
  }
  return v->get<int>();
}

std::string StringOr(const json& obj, const char* key, std::string fallback,
                     const std::string& where) {
  const json* v = Find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) ConfigFail(fmt::format("{}.{}: expected string", where, key));
  return v->get<std::string>();
}

fs::path Resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

BackendConfig BackendFromJson(const json& j, const std::string& where,
                              const fs::path& base_dir) {
  if (!j.is_object()) ConfigFail(where + ": expected object");
  BackendConfig b;
  const std::string kind = StringOr(j, "kind", "", where);
  b.model.model_id = StringOr(j, "model_id", "", where);
  if (const json* p = Find(j, "params")) {
    if (!p->is_object()) ConfigFail(where + ".params: expected object");
    const std::string pw = where + ".params";
    b.model.params.temperature = NumberOr(*p, "temperature", 0.0, pw);
    b.model.params.max_tokens = IntOr(*p, "max_tokens", 1024, pw);
    b.model.params.seed =
        static_cast<std::uint64_t>(IntOr(*p, "seed", 0, pw));
  }
  if (kind == "mock") {
    b.kind = BackendConfig::Kind::kMock;
    const std::string fixtures = StringOr(j, "fixtures", "", where);
    if (fixtures.empty()) ConfigFail(where + ".fixtures: missing");
    b.fixtures = Resolve(base_dir, fixtures);
    if (!fs::is_directory(b.fixtures)) {
      ConfigFail(fmt::format("{}.fixtures: no such directory {}", where,
                             b.fixtures.string()));
    }
  } else if (kind == "http") {
    b.kind = BackendConfig::Kind::kHttp;
    b.url = StringOr(j, "url", "", where);
    if (b.url.empty()) ConfigFail(where + ".url: missing");
    b.timeout_s = NumberOr(j, "timeout_s", 120.0, where);
    b.max_attempts = IntOr(j, "max_attempts", 3, where);
  } else {
    ConfigFail(fmt::format("{}.kind: expected \"mock\" or \"http\", got \"{}\"",
                           where, kind));
  }
  return b;
}

}  // namespace

RunConfig RunConfigFromJson(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) ConfigFail("config: expected object");
  RunConfig c;
  const std::string dataset = StringOr(j, "dataset", "", "config");
  if (dataset.empty()) ConfigFail("config.dataset: missing");
  c.dataset = Resolve(base_dir, dataset);
  if (!fs::is_regular_file(c.dataset)) {
    ConfigFail("config.dataset: no such file " + c.dataset.string());
  }
  const std::string out = StringOr(j, "output_dir", "", "config");
  if (out.empty()) ConfigFail("config.output_dir: missing");
  c.output_dir = Resolve(base_dir, out);
  c.run_id = StringOr(j, "run_id", c.run_id, "config");
  c.max_concurrency = IntOr(j, "max_concurrency", c.max_concurrency, "config");
  if (c.max_concurrency < 1) ConfigFail("config.max_concurrency: must be >= 1");

  const json* backends = Find(j, "backends");
  if (!backends || !backends->is_object()) {
    ConfigFail("config.backends: expected object");
  }
  auto stage_backend = [&](const char* name) {
    const json* b = Find(*backends, name);
    if (!b) ConfigFail(fmt::format("config.backends.{}: missing", name));
    return BackendFromJson(*b, fmt::format("config.backends.{}", name),
                           base_dir);
  };
  c.grounding = stage_backend("grounding");
  c.reasoning = stage_backend("reasoning");
  c.synthesis = stage_backend("synthesis");

  if (const json* t = Find(j, "trigger")) {
    if (!t->is_object()) ConfigFail("config.trigger: expected object");
    TriggerParams& p = c.trigger;
    p.distance_threshold_m = NumberOr(*t, "distance_threshold_m",
                                      p.distance_threshold_m, "config.trigger");
    p.closing_speed_threshold_mps =
        NumberOr(*t, "closing_speed_threshold_mps",
                 p.closing_speed_threshold_mps, "config.trigger");
    p.sustain_samples =
        IntOr(*t, "sustain_samples", p.sustain_samples, "config.trigger");
    p.lookback_s = NumberOr(*t, "lookback_s", p.lookback_s, "config.trigger");
    c.max_lag_s = NumberOr(*t, "max_lag_s", c.max_lag_s, "config.trigger");
  }
  if (const json* r = Find(j, "retry")) {
    if (!r->is_object()) ConfigFail("config.retry: expected object");
    c.retry.max_attempts =
        IntOr(*r, "max_attempts", c.retry.max_attempts, "config.retry");
  }
  try {
    c.trigger.Validate();
    c.retry.Validate();
  } catch (const Error& e) {
    ConfigFail(e.what());
  }
  if (!(c.max_lag_s > 0.0)) ConfigFail("config.trigger.max_lag_s: must be > 0");
  return c;
}

RunConfig LoadRunConfig(const fs::path& path) {
  return RunConfigFromJson(internal::ParseJsonFile(path),
                           fs::absolute(path).parent_path());
}

void OverrideBackendUrl(RunConfig& config, const std::string& url) {
  for (BackendConfig* b :
       {&config.grounding, &config.reasoning, &config.synthesis}) {
    b->kind = BackendConfig::Kind::kHttp;
    b->url = url;
  }
}

std::shared_ptr<Backend> MakeBackend(const BackendConfig& config) {
  if (config.kind == BackendConfig::Kind::kMock) {
    auto mock = std::make_shared<MockBackend>();
    try {
      mock->LoadDirectory(config.fixtures);
    } catch (const Error& e) {
      ConfigFail(e.what());
    }
    return mock;
  }
  HttpBackendOptions options;
  options.base_url = config.url;
  options.timeout_s = config.timeout_s;
  options.max_attempts = config.max_attempts;
  return std::make_shared<HttpBackend>(options);
}

Stage ParseStageArg(std::string_view text) {
  static const std::map<std::string_view, Stage> kNames = {
      {"trigger", Stage::kTrigger},     {"sync", Stage::kSync},
      {"segment", Stage::kSegmentation}, {"segmentation", Stage::kSegmentation},
      {"analyze", Stage::kReasoning},   {"reasoning", Stage::kReasoning},
      {"synthesize", Stage::kSynthesis}, {"synthesis", Stage::kSynthesis},
  };
  auto it = kNames.find(text);
  if (it == kNames.end()) ConfigFail(fmt::format("unknown stage \"{}\"", text));
  return it->second;
}

bool RunSummary::any_failed() const {
  return std::any_of(events.begin(), events.end(), [](const EventOutcome& e) {
    return e.status == EventStatus::kFailed;
  });
}

// ---------------------------------------------------------------------------
// Per-event execution
// ---------------------------------------------------------------------------

namespace {

class StageFailure : public std::runtime_error {
 public:
  StageFailure(Stage stage, const std::string& msg)
      : std::runtime_error(msg), stage(stage) {}
  Stage stage;
};

json WindowToJson(const TriggerWindow& w) {
  return {{"pedestrian_id", w.pedestrian_id},
          {"vehicle_id", w.vehicle_id},
          {"trigger_t_s", internal::RoundMillis(w.trigger_t_s)},
          {"window",
           {{"start_s", internal::RoundMillis(w.window.start_s)},
            {"end_s", internal::RoundMillis(w.window.end_s)}}}};
}

class EventRunner {
 public:
  EventRunner(const RunConfig& config, const RunOptions& options,
              const StageBackends& backends, ArtifactStore& store,
              MultiViewEvent event)
      : config_(config),
        options_(options),
        backends_(backends),
        store_(store),
        event_(std::move(event)),
        recorder_(store, config.run_id, event_.event_id) {}

  EventOutcome Run() {
    EventOutcome outcome;
    outcome.event_id = event_.event_id;
    Stage current = Stage::kTrigger;
    try {
      for (Stage stage : {Stage::kTrigger, Stage::kSync, Stage::kSegmentation,
                          Stage::kReasoning, Stage::kSynthesis}) {
        if (stage > options_.last) break;
        current = stage;
        const bool execute = stage >= options_.first;
        if (RunStage(stage, execute) && execute) {
          outcome.stages_run.push_back(stage);
        }
      }
    } catch (const std::exception& e) {
      outcome.status = EventStatus::kFailed;
      outcome.failed_stage = current;
      outcome.error = e.what();
    }
    outcome.item_errors = item_errors_;
    if (report_) outcome.classification = report_->classification;
    return outcome;
  }

 private:
  // Returns whether the stage applied to this event.
  bool RunStage(Stage stage, bool execute) {
    switch (stage) {
      case Stage::kTrigger:
        return execute && event_.trajectory_uri && Trigger();
      case Stage::kSync:
        return Sync(execute);
      case Stage::kSegmentation:
        Segment(execute);
        return true;
      case Stage::kReasoning:
        Analyze(execute);
        return true;
      case Stage::kSynthesis:
        Synthesize();
        return true;
    }
    return false;
  }

  bool Trigger() {
    const auto samples = LoadTrajectoryCsv(*event_.trajectory_uri);
    const auto windows = DetectTriggers(samples, config_.trigger);
    json list = json::array();
    for (const auto& w : windows) list.push_back(WindowToJson(w));
    recorder_.Record(Stage::kTrigger, {{"windows", list}});
    return true;
  }

  bool Sync(bool execute) {
    if (!execute) {
      // Reuse offsets estimated by an earlier invocation of the run.
      auto stored =
          store_.Load(config_.run_id, event_.event_id, Stage::kSync);
      if (stored) ApplyOffsets((*stored)["offsets"]);
      return stored.has_value();
    }
    if (event_.views.size() < 2) return false;
    for (const auto& v : event_.views) {
      if (!v.motion_energy_uri) return false;
    }
    const ViewStream& ref = event_.views.front();
    const MotionEnergySignal ref_signal = LoadMotionEnergyCsv(*ref.motion_energy_uri);
    json offsets = json::object();
    for (std::size_t i = 1; i < event_.views.size(); ++i) {
      const ViewStream& v = event_.views[i];
      const OffsetEstimate est = EstimateOffset(
          ref_signal, LoadMotionEnergyCsv(*v.motion_energy_uri),
          config_.max_lag_s);
      offsets[v.view_id] = {
          {"offset_s", internal::RoundMillis(ref.offset_s + est.offset_s)},
          {"confidence", internal::RoundMillis(est.confidence)},
          {"lag_samples", est.lag_samples}};
    }
    recorder_.Record(Stage::kSync,
                     {{"reference_view", ref.view_id}, {"offsets", offsets}});
    ApplyOffsets(offsets);
    return true;
  }

  void ApplyOffsets(const json& offsets) {
    for (auto& v : event_.views) {
      if (offsets.contains(v.view_id)) {
        v.offset_s = offsets[v.view_id]["offset_s"].get<double>();
      }
    }
  }

  void Segment(bool execute) {
    if (!execute) {
      auto stored =
          store_.Load(config_.run_id, event_.event_id, Stage::kSegmentation);
      if (!stored || !stored->contains("segmentation")) {
        throw Error(ErrorCode::kIo, "no segmentation artifact for this run");
      }
      segmentation_ = SegmentationFromJson((*stored)["segmentation"]);
      return;
    }
    const PhaseSegmentation seg =
        SegmentEvent(*backends_.grounding, event_,
                     PhaseDefinitionSet::Standard(),
                     config_.grounding.model, &recorder_);
    // Later stages see the persisted (millisecond) boundaries, so a resumed
    // run issues exactly the same requests.
    segmentation_ = SegmentationFromJson(SegmentationToJson(seg));
  }

  void Analyze(bool execute) {
    if (!execute) {
      auto stored =
          store_.Load(config_.run_id, event_.event_id, Stage::kReasoning);
      if (!stored) throw Error(ErrorCode::kIo, "no reasoning artifact for this run");
      for (const auto& a : (*stored)["analyses"]) {
        analyses_.push_back(AnalysisFromJson(a));
      }
      return;
    }
    std::vector<QAItem> qa;
    if (event_.ground_truth) qa = event_.ground_truth->qa;
    for (PhaseLabel phase : kAllPhases) {
      if (!segmentation_->has(phase)) continue;
      std::vector<QAItem> scoped;
      for (const auto& item : qa) {
        if (item.scope != QAScope::kEnvironment && item.phase == phase) {
          scoped.push_back(item);
        }
      }
      analyses_.push_back(AnalyzePhase(*backends_.reasoning, event_,
                                       *segmentation_, phase, scoped,
                                       config_.reasoning.model));
    }
    std::vector<QAItem> environment;
    for (const auto& item : qa) {
      if (item.scope == QAScope::kEnvironment) environment.push_back(item);
    }
    if (!environment.empty()) {
      analyses_.push_back(AnalyzeEnvironment(*backends_.reasoning, event_,
                                             environment,
                                             config_.reasoning.model));
    }
    json list = json::array();
    for (const auto& a : analyses_) {
      item_errors_ += static_cast<int>(a.errors.size());
      list.push_back(AnalysisToJson(a));
    }
    recorder_.Record(Stage::kReasoning, {{"analyses", list}});
  }

  void Synthesize() {
    std::map<std::string, ViewKind> kinds;
    for (const auto& v : event_.views) kinds[v.view_id] = v.kind;
    const EventInfoSet info = AssembleEventInfo(*segmentation_, analyses_);
    report_ = SynthesizeReport(*backends_.synthesis, info, config_.retry,
                               config_.synthesis.model, &recorder_, kinds);
    internal::WriteFileAtomic(
        store_.PathFor(config_.run_id, event_.event_id, Stage::kSynthesis)
                .parent_path() /
            "report.txt",
        RenderReportText(*report_));
  }

  const RunConfig& config_;
  const RunOptions& options_;
  const StageBackends& backends_;
  ArtifactStore& store_;
  MultiViewEvent event_;
  StageRecorder recorder_;

  std::optional<PhaseSegmentation> segmentation_;
  std::vector<PhaseAnalysis> analyses_;
  std::optional<IncidentReport> report_;
  int item_errors_ = 0;
};

void Log(const RunOptions& options, const std::string& line) {
  if (options.log) options.log(line);
}

}  // namespace

RunSummary RunPipeline(const RunConfig& config, const RunOptions& options) {
  StageBackends backends;
  if (options.last >= Stage::kSegmentation && options.first <= Stage::kSegmentation) {
    backends.grounding = MakeBackend(config.grounding);
  }
  if (options.last >= Stage::kReasoning && options.first <= Stage::kReasoning) {
    backends.reasoning = MakeBackend(config.reasoning);
  }
  if (options.last >= Stage::kSynthesis) {
    backends.synthesis = MakeBackend(config.synthesis);
  }
  return RunPipeline(config, options, backends);
}

RunSummary RunPipeline(const RunConfig& config, const RunOptions& options,
                       const StageBackends& backends) {
  if (options.first > options.last) {
    ConfigFail("first stage comes after last stage");
  }
  const DatasetManifest manifest = LoadManifest(config.dataset);

  // Events are loaded up front so filters can be checked before any work.
  struct Slot {
    std::string event_id;
    std::optional<MultiViewEvent> event;
    std::string load_error;
  };
  std::vector<Slot> slots;
  for (const auto& path : manifest.events) {
    Slot slot;
    try {
      slot.event = LoadEvent(path);
      slot.event_id = slot.event->event_id;
    } catch (const std::exception& e) {
      slot.event_id = path.stem().string();
      slot.load_error = e.what();
    }
    slots.push_back(std::move(slot));
  }
  if (!options.event_ids.empty()) {
    std::set<std::string> wanted(options.event_ids.begin(),
                                 options.event_ids.end());
    for (const auto& id : wanted) {
      if (std::none_of(slots.begin(), slots.end(),
                       [&](const Slot& s) { return s.event_id == id; })) {
        ConfigFail(fmt::format("unknown event id \"{}\"", id));
      }
    }
    std::erase_if(slots, [&](const Slot& s) { return !wanted.count(s.event_id); });
  }

  StageBackends limited;
  auto slots_sem = std::make_shared<std::counting_semaphore<>>(
      std::max(1, config.max_concurrency));
  auto limit = [&](const std::shared_ptr<Backend>& b,
                   const char* stage) -> std::shared_ptr<Backend> {
    if (!b) ConfigFail(fmt::format("no backend for the {} stage", stage));
    return std::make_shared<ConcurrencyLimitedBackend>(b, slots_sem);
  };
  if (options.last >= Stage::kSegmentation && options.first <= Stage::kSegmentation) {
    limited.grounding = limit(backends.grounding, "segmentation");
  }
  if (options.last >= Stage::kReasoning && options.first <= Stage::kReasoning) {
    limited.reasoning = limit(backends.reasoning, "reasoning");
  }
  if (options.last >= Stage::kSynthesis) {
    limited.synthesis = limit(backends.synthesis, "synthesis");
  }

  ArtifactStore store(config.output_dir);
  RunSummary summary;
  summary.run_id = config.run_id;
  summary.events.resize(slots.size());
  std::mutex log_mu;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < slots.size(); i = next++) {
      Slot& slot = slots[i];
      EventOutcome outcome;
      if (!slot.event) {
        outcome.event_id = slot.event_id;
        outcome.status = EventStatus::kFailed;
        outcome.error = slot.load_error;
      } else {
        EventRunner runner(config, options, limited, store, *slot.event);
        outcome = runner.Run();
      }
      {
        std::lock_guard lock(log_mu);
        if (outcome.status == EventStatus::kFailed) {
          Log(options, fmt::format("event {} failed{}: {}", outcome.event_id,
                                   outcome.failed_stage
                                       ? fmt::format(" at {}", StageName(*outcome.failed_stage))
                                       : std::string(" to load"),
                                   outcome.error));
        } else {
          Log(options, fmt::format("event {} completed", outcome.event_id));
        }
      }
      summary.events[i] = std::move(outcome);
    }
  };
  const int threads = std::min<int>(config.max_concurrency,
                                    static_cast<int>(slots.size()));
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  internal::WriteFileAtomic(
      config.output_dir / "runs" / config.run_id / "summary.json",
      internal::DumpCanonical(RunSummaryToJson(summary)));
  return summary;
}

json RunSummaryToJson(const RunSummary& summary) {
  json events = json::array();
  for (const auto& e : summary.events) {
    json stages = json::array();
    for (Stage s : e.stages_run) stages.push_back(StageName(s));
    json j = {{"event_id", e.event_id},
              {"status", e.status == EventStatus::kCompleted ? "completed"
                                                             : "failed"},
              {"stages_run", stages},
              {"item_errors", e.item_errors}};
    if (e.failed_stage) j["failed_stage"] = StageName(*e.failed_stage);
    if (!e.error.empty()) j["error"] = e.error;
    if (!e.classification.empty()) j["classification"] = e.classification;
    events.push_back(std::move(j));
  }
  return {{"run_id", summary.run_id}, {"events", events}};
}

std::string RenderRunSummary(const RunSummary& summary) {
  std::size_t width = 8;
  for (const auto& e : summary.events) width = std::max(width, e.event_id.size());
  std::string out = fmt::format("{:<{}}  {:<9}  {:>11}  {}\n", "event", width,
                                "status", "item errors", "detail");
  for (const auto& e : summary.events) {
    std::string detail;
    if (e.status == EventStatus::kFailed) {
      detail = e.failed_stage
                   ? fmt::format("{}: {}", StageName(*e.failed_stage), e.error)
                   : e.error;
    } else {
      detail = e.classification.empty() ? "-" : e.classification;
    }
    out += fmt::format("{:<{}}  {:<9}  {:>11}  {}\n", e.event_id, width,
                       e.status == EventStatus::kCompleted ? "completed"
                                                           : "failed",
                       e.item_errors, detail);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation of stored runs
// ---------------------------------------------------------------------------

std::vector<EventPrediction> LoadRunPredictions(
    const ArtifactStore& store, const std::string& run_id,
    const std::vector<MultiViewEvent>& events) {
  std::vector<EventPrediction> out;
  for (const auto& event : events) {
    EventPrediction p;
    p.event_id = event.event_id;
    if (auto seg = store.Load(run_id, event.event_id, Stage::kSegmentation);
        seg && seg->contains("segmentation")) {
      p.segmentation = SegmentationFromJson((*seg)["segmentation"]);
    }
    if (auto reasoning = store.Load(run_id, event.event_id, Stage::kReasoning)) {
      for (const auto& a : (*reasoning)["analyses"]) {
        PhaseAnalysis analysis = AnalysisFromJson(a);
        p.captions.insert(p.captions.end(), analysis.captions.begin(),
                          analysis.captions.end());
        for (auto& qa : analysis.answers) p.answers.push_back(qa.answer);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

json EvaluationToJson(const EvaluationSummary& summary) {
  json per_phase = json::object();
  for (PhaseLabel phase : kAllPhases) {
    per_phase[std::string(PhaseName(phase))] =
        summary.per_phase_miou()[PhaseIndex(phase)];
  }
  const CaptionMetrics& c = summary.caption();
  json vqa = json::object();
  for (const auto& [scope, m] : summary.vqa()) {
    vqa[std::string(QAScopeName(scope))] = {{"accuracy_pct", m.accuracy_pct},
                                            {"valid_rate_pct", m.valid_rate_pct},
                                            {"items", m.items}};
  }
  return {{"per_phase_miou", per_phase},
          {"overall_miou", summary.overall_miou()},
          {"caption",
           {{"bleu", c.bleu},
            {"meteor", c.meteor},
            {"rouge_l", c.rouge_l},
            {"cider", c.cider},
            {"score", c.score},
            {"pairs", c.pairs}}},
          {"vqa", vqa}};
}

EvaluationSummary EvaluateStoredRun(const RunConfig& config,
                                    const std::vector<std::string>& event_ids) {
  const DatasetManifest manifest = LoadManifest(config.dataset);
  std::vector<MultiViewEvent> events;
  for (const auto& path : manifest.events) {
    MultiViewEvent event = LoadEvent(path);
    if (!event_ids.empty() &&
        std::find(event_ids.begin(), event_ids.end(), event.event_id) ==
            event_ids.end()) {
      continue;
    }
    if (event.ground_truth) events.push_back(std::move(event));
  }
  const ArtifactStore store(config.output_dir);
  const EvaluationSummary summary =
      EvaluateRun(LoadRunPredictions(store, config.run_id, events), events);
  internal::WriteFileAtomic(
      config.output_dir / "runs" / config.run_id / "evaluation.json",
      internal::DumpCanonical(EvaluationToJson(summary)));
  return summary;
}

}  // namespace pvir
