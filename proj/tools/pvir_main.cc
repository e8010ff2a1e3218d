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

// pvir: batch runs, single-stage debugging and evaluation.
//
// Exit codes: 0 success, 1 at least one event failed, 2 config or I/O error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pvir/errors.h"
#include "pvir/ingest.h"
#include "pvir/metrics.h"
#include "pvir/pipeline.h"
#include "pvir/synthesis.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

struct CommonArgs {
  std::string config;
  std::vector<std::string> events;
  std::string run_id;
  std::string backend_url;
};

void Log(std::string_view line) { fmt::print(stderr, "pvir: {}\n", line); }

void AddCommon(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "Run configuration (JSON)")
      ->required();
  cmd->add_option("--events", args.events,
                  "Event ids to process (comma separated; default all)")
      ->delimiter(',');
  cmd->add_option("--run-id", args.run_id, "Overrides the config's run id");
}

pvir::RunConfig LoadConfig(const CommonArgs& args) {
  pvir::RunConfig config = pvir::LoadRunConfig(args.config);
  if (!args.run_id.empty()) config.run_id = args.run_id;
  if (!args.backend_url.empty()) {
    pvir::OverrideBackendUrl(config, args.backend_url);
  }
  return config;
}

int RunStages(const CommonArgs& args, pvir::Stage first, pvir::Stage last) {
  const pvir::RunConfig config = LoadConfig(args);
  pvir::RunOptions options;
  options.first = first;
  options.last = last;
  options.event_ids = args.events;
  options.log = Log;
  Log(fmt::format("run {}: {} .. {}", config.run_id, pvir::StageName(first),
                  pvir::StageName(last)));
  const pvir::RunSummary summary = pvir::RunPipeline(config, options);
  fmt::print("{}", pvir::RenderRunSummary(summary));
  return summary.any_failed() ? kExitPartial : kExitOk;
}

int Evaluate(const CommonArgs& args) {
  const pvir::RunConfig config = LoadConfig(args);
  const pvir::EvaluationSummary summary =
      pvir::EvaluateStoredRun(config, args.events);
  fmt::print("{}", pvir::RenderEvaluationTable(summary));
  return kExitOk;
}

int Validate(const CommonArgs& args, const std::string& report_path) {
  int status = kExitOk;
  if (!report_path.empty()) {
    std::ifstream in(report_path, std::ios::binary);
    if (!in) throw pvir::Error(pvir::ErrorCode::kIo, "cannot read " + report_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto violations = pvir::CheckReport(buffer.str());
    for (const auto& v : violations) fmt::print("{}\n", v.ToString());
    if (!violations.empty()) status = kExitPartial;
    if (args.config.empty()) return status;
  }
  const pvir::RunConfig config = LoadConfig(args);
  const pvir::DatasetManifest manifest = pvir::LoadManifest(config.dataset);
  for (const auto& path : manifest.events) {
    try {
      const pvir::MultiViewEvent event = pvir::LoadEvent(path);
      fmt::print("ok      {}\n", event.event_id);
    } catch (const std::exception& e) {
      fmt::print("invalid {}: {}\n", path.string(), e.what());
      status = kExitPartial;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-aware pedestrian-vehicle incident analysis pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string stage_arg = "synthesize";
  std::string report_path;

  auto* run = app.add_subcommand("run", "Run every stage end to end");
  AddCommon(run, args);
  run->add_option("--stage", stage_arg, "Stop after this stage");
  run->add_option("--backend-url", args.backend_url,
                  "Send every stage to this inference server");

  struct Single {
    const char* name;
    const char* help;
    pvir::Stage stage;
    CLI::App* cmd = nullptr;
  };
  std::vector<Single> singles = {
      {"trigger", "Detect trigger windows from trajectories",
       pvir::Stage::kTrigger},
      {"sync", "Estimate view clock offsets", pvir::Stage::kSync},
      {"segment", "Phase segmentation only", pvir::Stage::kSegmentation},
      {"analyze", "Per-phase captions and answers (needs segmentation)",
       pvir::Stage::kReasoning},
      {"synthesize", "Incident reports (needs reasoning)",
       pvir::Stage::kSynthesis},
  };
  for (auto& s : singles) {
    s.cmd = app.add_subcommand(s.name, s.help);
    AddCommon(s.cmd, args);
    if (s.stage >= pvir::Stage::kSegmentation) {
      s.cmd->add_option("--backend-url", args.backend_url,
                        "Send the stage to this inference server");
    }
  }

  auto* evaluate = app.add_subcommand("evaluate", "Score a persisted run");
  AddCommon(evaluate, args);

  auto* validate =
      app.add_subcommand("validate", "Check a config, its dataset and events");
  validate->add_option("--config", args.config, "Run configuration (JSON)");
  validate->add_option("--report", report_path,
                       "Also validate an incident report JSON file");
  validate->add_option("--run-id", args.run_id);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      return RunStages(args, pvir::Stage::kTrigger,
                       pvir::ParseStageArg(stage_arg));
    }
    for (const auto& s : singles) {
      if (s.cmd->parsed()) return RunStages(args, s.stage, s.stage);
    }
    if (evaluate->parsed()) return Evaluate(args);
    if (validate->parsed()) {
      if (args.config.empty() && report_path.empty()) {
        Log("validate needs --config and/or --report");
        return kExitConfig;
      }
      return Validate(args, report_path);
    }
  } catch (const pvir::Error& e) {
    Log(fmt::format("error [{}]: {}", pvir::ErrorCodeName(e.code()), e.what()));
    return kExitConfig;
  } catch (const std::exception& e) {
    Log(fmt::format("error: {}", e.what()));
    return kExitConfig;
  }
  return kExitConfig;
}
