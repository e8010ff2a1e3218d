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

#include "pvir/synthesis.h"

#include <algorithm>
#include <optional>

#include <fmt/format.h>

#include "io_util.h"

namespace pvir {

using nlohmann::json;

namespace {

int PhaseOrderKey(const std::optional<PhaseLabel>& phase) {
  return phase ? PhaseIndex(*phase) : kPhaseCount;
}

}  // namespace

EventInfoSet AssembleEventInfo(const PhaseSegmentation& segmentation,
                               const std::vector<PhaseAnalysis>& analyses) {
  EventInfoSet info;
  info.segmentation = segmentation;
  for (const PhaseAnalysis& analysis : analyses) {
    if (analysis.phase && !segmentation.has(*analysis.phase)) {
      throw Error(ErrorCode::kUnknownPhase,
                  fmt::format("analysis for phase {} which is not segmented",
                              PhaseIndex(*analysis.phase)));
    }
    info.captions.insert(info.captions.end(), analysis.captions.begin(),
                         analysis.captions.end());
    info.answers.insert(info.answers.end(), analysis.answers.begin(),
                        analysis.answers.end());
  }
  std::stable_sort(info.captions.begin(), info.captions.end(),
                   [](const CaptionRecord& a, const CaptionRecord& b) {
                     return PhaseIndex(a.phase) < PhaseIndex(b.phase);
                   });
  std::stable_sort(info.answers.begin(), info.answers.end(),
                   [](const QAAnswer& a, const QAAnswer& b) {
                     return PhaseOrderKey(a.item.phase) <
                            PhaseOrderKey(b.item.phase);
                   });
  return info;
}

// ---------------------------------------------------------------------------
// Prompt
// ---------------------------------------------------------------------------

std::string SynthesisPrompt::Render() const {
  return role_text + "\n\n" + input_block + "\n\n" + instruction_block +
         "\n\n" + output_schema_text;
}

namespace {

std::string ViewLabel(const std::string& view_id,
                      const std::map<std::string, ViewKind>& view_kinds) {
  auto it = view_kinds.find(view_id);
  if (it == view_kinds.end()) return view_id;
  return fmt::format("{} ({})", view_id,
                     it->second == ViewKind::kVehicle
                         ? "egocentric, vehicle view"
                         : "exocentric, overhead view");
}

std::string SourceList(const std::vector<std::string>& views,
                       const std::map<std::string, ViewKind>& view_kinds) {
  if (views.empty()) return "unspecified";
  std::string out;
  for (const auto& v : views) {
    if (!out.empty()) out += ", ";
    out += ViewLabel(v, view_kinds);
  }
  return out;
}

std::string PhaseTag(const std::optional<PhaseLabel>& phase) {
  if (!phase) return "Environment";
  return fmt::format("Phase {} ({})", PhaseIndex(*phase), PhaseName(*phase));
}

json ReportSkeleton() {
  return json{
      {"scene_understanding", "<weather, lighting, road layout, traffic, "
                              "pedestrian infrastructure>"},
      {"behavior_analysis",
       {{"phase_table",
         json::array({{{"phase", "<Pre-recognition|Recognition|Judgment|"
                                 "Action|Avoidance>"},
                       {"time", "<start-end in seconds>"},
                       {"pedestrian_state", "<text>"},
                       {"vehicle_action", "<text>"},
                       {"risk_level", "<Moderate|High|Critical|Impact>"}}})},
        {"interaction_dynamics",
         {{"initial_separation", "<text>"},
          {"convergence_pattern", "<text>"},
          {"communication", "<text>"},
          {"mutual_awareness", "<text>"},
          {"critical_failure", "<text>"}}}}},
      {"event_diagnosis",
       {{"classification", "<incident type>"},
        {"severity", "<text>"},
        {"causal_chain",
         json::array({{{"phase", "<0-4, ascending>"}, {"factor", "<text>"}}})},
        {"contributing_factors",
         {{"primary", json::array({"<text>"})},
          {"environmental", json::array({"<text>"})}}}}},
      {"summary", "<incident reasoning and prevention strategies>"},
  };
}

}  // namespace

SynthesisPrompt BuildSynthesisPrompt(
    const EventInfoSet& info,
    const std::map<std::string, ViewKind>& view_kinds) {
  if (info.segmentation.present_count() == 0 && info.captions.empty() &&
      info.answers.empty()) {
    throw Error(ErrorCode::kEmptyInfo, "event information set is empty");
  }
  SynthesisPrompt prompt;
  prompt.role_text =
      "ROLE\n"
      "You are a domain expert in pedestrian-vehicle interaction analysis. "
      "You diagnose traffic incidents by reasoning over the behavioral "
      "phases of the encounter within the Perception-Reaction Time "
      "paradigm, comparing what each camera shows about both road users.";

  std::string in =
      "INPUT\n"
      "The observations come from synchronized cameras: egocentric (vehicle "
      "view) and exocentric (overhead view).\n"
      "Mapping definitions:\n"
      "- Phase 0 (Pre-recognition) .. Phase 4 (Avoidance) are consecutive "
      "behavioral phases; times are seconds on the shared event clock.\n"
      "- Each caption and answer names the views it was derived from; a "
      "vehicle view is egocentric, an overhead view is exocentric.\n"
      "- Environment answers cover the whole event rather than one phase.\n"
      "\nPhase timeline:\n";
  for (PhaseLabel phase : kAllPhases) {
    if (const auto& iv = info.segmentation.get(phase)) {
      in += fmt::format("{}: {} - {} s\n", PhaseTag(phase), iv->start_s,
                        iv->end_s);
    } else {
      in += fmt::format("{}: not identified (gap in the timeline)\n",
                        PhaseTag(phase));
    }
  }
  in += "\nCaptions:\n";
  if (info.captions.empty()) in += "(none)\n";
  for (const CaptionRecord& c : info.captions) {
    in += fmt::format("[{}] [{} perspective] [views: {}] {}\n",
                      PhaseTag(c.phase), PerspectiveName(c.perspective),
                      SourceList(c.source_views, view_kinds), c.text);
  }
  in += "\nQuestions and answers:\n";
  if (info.answers.empty()) in += "(none)\n";
  for (const QAAnswer& qa : info.answers) {
    in += fmt::format("[{}] [{}] [views: {}] Q: {}\n", PhaseTag(qa.item.phase),
                      QAScopeName(qa.item.scope),
                      SourceList(qa.answer.source_views, view_kinds),
                      qa.item.question);
    for (std::size_t i = 0; i < kAllChoices.size(); ++i) {
      in += fmt::format("  {}. {}\n", ChoiceLetter(kAllChoices[i]),
                        qa.item.options[i]);
    }
    if (qa.answer.extracted) {
      const auto idx = static_cast<std::size_t>(
          ChoiceLetter(*qa.answer.extracted) - 'a');
      in += fmt::format("  A: {}. {}\n", ChoiceLetter(*qa.answer.extracted),
                        qa.item.options[idx]);
    } else {
      in += "  A: (no valid choice)\n";
    }
  }
  in.pop_back();
  prompt.input_block = std::move(in);

  prompt.instruction_block =
      "TASKS\n"
      "Work through these steps in order:\n"
      "1. Scene comprehension: describe weather, lighting, road layout, "
      "traffic volume and pedestrian infrastructure.\n"
      "2. Behavior interpretation: for every identified phase, compare the "
      "pedestrian state and the vehicle action across the egocentric and "
      "exocentric views, and assign a risk level of Moderate, High, Critical "
      "or Impact.\n"
      "3. Causal inference: treating the phases as a perception-reaction "
      "sequence, reconstruct the causal chain phase by phase and separate "
      "primary from environmental contributing factors.\n"
      "4. Diagnostic synthesis: classify the incident, state its severity, "
      "and summarize the reasoning together with prevention strategies that "
      "target each contributing factor.";

  prompt.output_schema_text =
      "OUTPUT\n"
      "Respond with one JSON object that follows this schema exactly:\n" +
      ReportSkeleton().dump(2);
  return prompt;
}

// ---------------------------------------------------------------------------
// Report (de)serialization and validation
// ---------------------------------------------------------------------------

json ReportToJson(const IncidentReport& report) {
  json table = json::array();
  for (const auto& row : report.phase_table) {
    table.push_back({{"phase", PhaseName(row.phase)},
                     {"time", row.time},
                     {"pedestrian_state", row.pedestrian_state},
                     {"vehicle_action", row.vehicle_action},
                     {"risk_level", RiskLevelName(row.risk_level)}});
  }
  json chain = json::array();
  for (const auto& link : report.causal_chain) {
    chain.push_back({{"phase", std::to_string(PhaseIndex(link.phase))},
                     {"factor", link.factor}});
  }
  const auto& d = report.interaction_dynamics;
  return json{
      {"scene_understanding", report.scene_understanding},
      {"behavior_analysis",
       {{"phase_table", table},
        {"interaction_dynamics",
         {{"initial_separation", d.initial_separation},
          {"convergence_pattern", d.convergence_pattern},
          {"communication", d.communication},
          {"mutual_awareness", d.mutual_awareness},
          {"critical_failure", d.critical_failure}}}}},
      {"event_diagnosis",
       {{"classification", report.classification},
        {"severity", report.severity},
        {"causal_chain", chain},
        {"contributing_factors",
         {{"primary", report.primary_factors},
          {"environmental", report.environmental_factors}}}}},
      {"summary", report.summary},
  };
}

std::string SerializeReport(const IncidentReport& report) {
  return internal::DumpCanonical(ReportToJson(report));
}

namespace {

// Strips a ``` fence and any prose around the outermost object.
std::string_view ExtractJsonText(std::string_view text) {
  const auto fence = text.find("```");
  if (fence != std::string_view::npos) {
    auto body = text.find('\n', fence);
    if (body != std::string_view::npos) {
      const auto close = text.find("```", body);
      text = text.substr(body + 1, close == std::string_view::npos
                                       ? std::string_view::npos
                                       : close - body - 1);
    }
  }
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos ||
      close < open) {
    return {};
  }
  return text.substr(open, close - open + 1);
}

class ReportReader {
 public:
  std::vector<SchemaViolation> violations;

  void Add(const std::string& path, std::string rule) {
    violations.push_back({path, std::move(rule)});
  }

  static std::string Join(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
  }

  const json* Field(const json& obj, const std::string& parent,
                    const std::string& key, json::value_t type,
                    const char* type_rule) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      Add(Join(parent, key), "missing");
      return nullptr;
    }
    if (it->type() != type) {
      Add(Join(parent, key), type_rule);
      return nullptr;
    }
    return &*it;
  }

  const json* Object(const json& obj, const std::string& parent,
                     const std::string& key) {
    return Field(obj, parent, key, json::value_t::object, "expected object");
  }

  const json* Array(const json& obj, const std::string& parent,
                    const std::string& key) {
    return Field(obj, parent, key, json::value_t::array, "expected array");
  }

  std::string Text(const json* obj, const std::string& parent,
                   const std::string& key) {
    if (!obj) return {};
    const json* v =
        Field(*obj, parent, key, json::value_t::string, "expected string");
    if (!v) return {};
    std::string s = v->get<std::string>();
    if (s.empty()) Add(Join(parent, key), "empty");
    return s;
  }

  std::vector<std::string> TextList(const json* obj, const std::string& parent,
                                    const std::string& key) {
    std::vector<std::string> out;
    if (!obj) return out;
    const json* arr = Array(*obj, parent, key);
    if (!arr) return out;
    const std::string path = Join(parent, key);
    if (arr->empty()) Add(path, "empty");
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const json& v = (*arr)[i];
      if (!v.is_string() || v.get<std::string>().empty()) {
        Add(fmt::format("{}[{}]", path, i), "expected non-empty string");
      } else {
        out.push_back(v.get<std::string>());
      }
    }
    return out;
  }

  std::optional<PhaseLabel> Phase(const json& obj, const std::string& path) {
    auto it = obj.find("phase");
    if (it == obj.end()) {
      Add(path + ".phase", "missing");
      return std::nullopt;
    }
    std::optional<PhaseLabel> phase;
    if (it->is_number_integer()) {
      phase = PhaseFromIndex(it->get<int>());
    } else if (it->is_string()) {
      phase = ParsePhase(it->get<std::string>());
    }
    if (!phase) Add(path + ".phase", "unknown phase");
    return phase;
  }
};

std::pair<IncidentReport, std::vector<SchemaViolation>> ReadReport(
    std::string_view text) {
  IncidentReport report;
  ReportReader r;
  const std::string_view body = ExtractJsonText(text);
  json root = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (body.empty() || root.is_discarded()) {
    r.Add("$", "invalid JSON");
    return {report, r.violations};
  }
  if (!root.is_object()) {
    r.Add("$", "expected object");
    return {report, r.violations};
  }

  report.scene_understanding = r.Text(&root, "", "scene_understanding");

  if (const json* behavior = r.Object(root, "", "behavior_analysis")) {
    const std::string bpath = "behavior_analysis";
    if (const json* table = r.Array(*behavior, bpath, "phase_table")) {
      const std::string tpath = bpath + ".phase_table";
      if (table->empty()) r.Add(tpath, "empty");
      for (std::size_t i = 0; i < table->size(); ++i) {
        const std::string rpath = fmt::format("{}[{}]", tpath, i);
        const json& row = (*table)[i];
        if (!row.is_object()) {
          r.Add(rpath, "expected object");
          continue;
        }
        PhaseTableRow out;
        const auto phase = r.Phase(row, rpath);
        out.time = r.Text(&row, rpath, "time");
        out.pedestrian_state = r.Text(&row, rpath, "pedestrian_state");
        out.vehicle_action = r.Text(&row, rpath, "vehicle_action");
        const std::string risk = r.Text(&row, rpath, "risk_level");
        const auto level = ParseRiskLevel(risk);
        if (!risk.empty() && !level) {
          r.Add(rpath + ".risk_level", "unknown risk level");
        }
        if (phase && level) {
          out.phase = *phase;
          out.risk_level = *level;
          report.phase_table.push_back(std::move(out));
        }
      }
    }
    const json* dyn = r.Object(*behavior, bpath, "interaction_dynamics");
    const std::string dpath = bpath + ".interaction_dynamics";
    auto& d = report.interaction_dynamics;
    d.initial_separation = r.Text(dyn, dpath, "initial_separation");
    d.convergence_pattern = r.Text(dyn, dpath, "convergence_pattern");
    d.communication = r.Text(dyn, dpath, "communication");
    d.mutual_awareness = r.Text(dyn, dpath, "mutual_awareness");
    d.critical_failure = r.Text(dyn, dpath, "critical_failure");
  }

  if (const json* diag = r.Object(root, "", "event_diagnosis")) {
    const std::string epath = "event_diagnosis";
    report.classification = r.Text(diag, epath, "classification");
    report.severity = r.Text(diag, epath, "severity");
    if (const json* chain = r.Array(*diag, epath, "causal_chain")) {
      const std::string cpath = epath + ".causal_chain";
      bool ordered = true;
      int last = -1;
      for (std::size_t i = 0; i < chain->size(); ++i) {
        const std::string lpath = fmt::format("{}[{}]", cpath, i);
        const json& link = (*chain)[i];
        if (!link.is_object()) {
          r.Add(lpath, "expected object");
          continue;
        }
        const auto phase = r.Phase(link, lpath);
        const std::string factor = r.Text(&link, lpath, "factor");
        if (!phase) continue;
        if (PhaseIndex(*phase) <= last) ordered = false;
        last = std::max(last, PhaseIndex(*phase));
        report.causal_chain.push_back({*phase, factor});
      }
      if (!ordered) r.Add(cpath, "phase order");
    }
    const json* factors = r.Object(*diag, epath, "contributing_factors");
    const std::string fpath = epath + ".contributing_factors";
    report.primary_factors = r.TextList(factors, fpath, "primary");
    report.environmental_factors = r.TextList(factors, fpath, "environmental");
  }

  report.summary = r.Text(&root, "", "summary");
  return {std::move(report), std::move(r.violations)};
}

}  // namespace

std::vector<SchemaViolation> CheckReport(std::string_view text) {
  return ReadReport(text).second;
}

IncidentReport ValidateReport(std::string_view text) {
  auto [report, violations] = ReadReport(text);
  if (!violations.empty()) throw SchemaViolationsError(std::move(violations));
  return report;
}

std::string RenderReportText(const IncidentReport& report) {
  std::string out = "INCIDENT REPORT\n\nScene understanding\n";
  out += report.scene_understanding + "\n\nPhase-by-phase behavior\n";
  out += fmt::format("{:<16} {:<12} {:<28} {:<28} {}\n", "Phase", "Time (s)",
                     "Pedestrian state", "Vehicle action", "Risk level");
  for (const auto& row : report.phase_table) {
    out += fmt::format("{:<16} {:<12} {:<28} {:<28} {}\n", PhaseName(row.phase),
                       row.time, row.pedestrian_state, row.vehicle_action,
                       RiskLevelName(row.risk_level));
  }
  const auto& d = report.interaction_dynamics;
  out += "\nInteraction dynamics\n";
  out += fmt::format("  Initial separation:  {}\n", d.initial_separation);
  out += fmt::format("  Convergence pattern: {}\n", d.convergence_pattern);
  out += fmt::format("  Communication:       {}\n", d.communication);
  out += fmt::format("  Mutual awareness:    {}\n", d.mutual_awareness);
  out += fmt::format("  Critical failure:    {}\n", d.critical_failure);
  out += fmt::format("\nDiagnosis\n  Classification: {}\n  Severity: {}\n",
                     report.classification, report.severity);
  out += "  Causal chain:\n";
  for (const auto& link : report.causal_chain) {
    out += fmt::format("    {}. {}: {}\n", PhaseIndex(link.phase),
                       PhaseName(link.phase), link.factor);
  }
  out += "  Primary factors:\n";
  for (const auto& f : report.primary_factors) out += "    - " + f + "\n";
  out += "  Environmental factors:\n";
  for (const auto& f : report.environmental_factors) out += "    - " + f + "\n";
  out += "\nSummary\n" + report.summary + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Retry loop
// ---------------------------------------------------------------------------

void RetryPolicy::Validate() const {
  if (max_attempts < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("max_attempts must be >= 1, got {}", max_attempts));
  }
}

std::string RetryPrompt(
    const std::string& base,
    const std::vector<std::vector<SchemaViolation>>& rejected) {
  std::string out = base;
  for (const auto& violations : rejected) {
    out += "\n\n";
    out += kRetryFeedbackHeader;
    for (std::size_t i = 0; i < violations.size(); ++i) {
      out += fmt::format("\n{}. {}", i + 1, violations[i].ToString());
    }
  }
  return out;
}

namespace {

json AttemptToJson(const SynthesisAttempt& a) {
  json violations = json::array();
  for (const auto& v : a.violations) violations.push_back(v.ToString());
  return {{"attempt", a.number},
          {"request_fingerprint", a.request_fingerprint},
          {"raw_response", a.raw_response},
          {"violations", violations}};
}

}  // namespace

IncidentReport SynthesizeReport(
    Backend& backend, const EventInfoSet& info, const RetryPolicy& policy,
    const ModelOptions& model, const StageRecorder* recorder,
    const std::map<std::string, ViewKind>& view_kinds,
    std::vector<SynthesisAttempt>* attempts_out) {
  policy.Validate();
  const std::string base = BuildSynthesisPrompt(info, view_kinds).Render();

  std::vector<SynthesisAttempt> attempts;
  std::vector<std::vector<SchemaViolation>> rejected;
  json payload = {{"attempts", json::array()}};
  auto record = [&] {
    if (recorder) recorder->Record(Stage::kSynthesis, payload);
    if (attempts_out) *attempts_out = attempts;
  };

  for (int n = 1; n <= policy.max_attempts; ++n) {
    GenerateRequest request;
    request.model_id = model.model_id;
    request.params = model.params;
    request.prompt_text = RetryPrompt(base, rejected);

    SynthesisAttempt attempt;
    attempt.number = n;
    attempt.request_fingerprint = Fingerprint(request);
    try {
      attempt.raw_response = backend.Generate(request).text;
    } catch (const Error& e) {
      payload["attempts"].push_back(AttemptToJson(attempt));
      payload["error"] = e.what();
      attempts.push_back(attempt);
      record();
      throw;
    }
    auto [report, violations] = ReadReport(attempt.raw_response);
    attempt.violations = violations;
    attempts.push_back(attempt);
    payload["attempts"].push_back(AttemptToJson(attempt));
    if (violations.empty()) {
      payload["report"] = ReportToJson(report);
      record();
      return report;
    }
    rejected.push_back(std::move(violations));
    record();
  }
  payload["error"] = fmt::format("no valid report after {} attempts",
                                 policy.max_attempts);
  record();
  throw ExhaustedRetriesError(policy.max_attempts, rejected.back());
}

}  // namespace pvir
