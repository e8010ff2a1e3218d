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

#include "pvir/trigger_sync.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "io_util.h"
#include "pvir/errors.h"

namespace pvir {

namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(Trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool ParseDouble(std::string_view field, double& out) {
  const std::string s(field);
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> Lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    lines.push_back(text.substr(start, nl - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

}  // namespace

void TriggerParams::Validate() const {
  if (!(distance_threshold_m > 0.0) || !(closing_speed_threshold_mps > 0.0) ||
      sustain_samples < 1 || !(lookback_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "trigger parameters must all be strictly positive");
  }
}

PairKinematics ComputePairKinematics(
    const std::vector<TrajectorySample>& pedestrian,
    const std::vector<TrajectorySample>& vehicle) {
  PairKinematics k;
  std::size_t i = 0, j = 0;
  while (i < pedestrian.size() && j < vehicle.size()) {
    if (pedestrian[i].t_s < vehicle[j].t_s) {
      ++i;
    } else if (vehicle[j].t_s < pedestrian[i].t_s) {
      ++j;
    } else {
      k.t_s.push_back(pedestrian[i].t_s);
      k.distance_m.push_back(std::hypot(pedestrian[i].x_m - vehicle[j].x_m,
                                        pedestrian[i].y_m - vehicle[j].y_m));
      ++i;
      ++j;
    }
  }
  const std::size_t m = k.t_s.size();
  k.closing_mps.assign(m, 0.0);
  if (m < 2) return k;
  for (std::size_t n = 0; n < m; ++n) {
    const std::size_t lo = n == 0 ? 0 : n - 1;
    const std::size_t hi = n + 1 == m ? n : n + 1;
    k.closing_mps[n] = -(k.distance_m[hi] - k.distance_m[lo]) /
                       (k.t_s[hi] - k.t_s[lo]);
  }
  return k;
}

std::vector<TriggerWindow> DetectTriggers(
    const std::vector<TrajectorySample>& samples, const TriggerParams& params) {
  params.Validate();
  if (samples.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no trajectory samples");
  }
  std::map<std::string, std::vector<TrajectorySample>> pedestrians, vehicles;
  std::map<std::string, ActorClass> classes;
  for (const auto& s : samples) {
    auto [it, inserted] = classes.emplace(s.actor_id, s.actor_class);
    if (!inserted && it->second != s.actor_class) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("actor '{}' changes class", s.actor_id));
    }
    auto& track = s.actor_class == ActorClass::kPedestrian
                      ? pedestrians[s.actor_id]
                      : vehicles[s.actor_id];
    if (!track.empty() && !(s.t_s > track.back().t_s)) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("actor '{}': timestamps not strictly increasing "
                              "at t={}",
                              s.actor_id, s.t_s));
    }
    track.push_back(s);
  }

  std::vector<TriggerWindow> out;
  for (const auto& [ped_id, ped] : pedestrians) {
    for (const auto& [veh_id, veh] : vehicles) {
      const PairKinematics k = ComputePairKinematics(ped, veh);
      const std::size_t m = k.t_s.size();
      std::vector<TriggerWindow> windows;
      std::size_t n = 0;
      while (n < m) {
        auto qualifies = [&](std::size_t idx) {
          return k.distance_m[idx] < params.distance_threshold_m &&
                 k.closing_mps[idx] > params.closing_speed_threshold_mps;
        };
        if (!qualifies(n)) {
          ++n;
          continue;
        }
        std::size_t end = n;
        while (end + 1 < m && qualifies(end + 1)) ++end;
        if (static_cast<int>(end - n + 1) >= params.sustain_samples) {
          const double trigger = k.t_s[n];
          const double close = end + 1 < m ? k.t_s[end + 1] : k.t_s[end];
          windows.push_back(
              {ped_id, veh_id, trigger,
               {std::max(0.0, trigger - params.lookback_s), close}});
        }
        n = end + 1;
      }
      // Starts are non-decreasing, so one pass merges overlaps.
      for (auto& w : windows) {
        if (!out.empty() && out.back().pedestrian_id == ped_id &&
            out.back().vehicle_id == veh_id &&
            w.window.start_s <= out.back().window.end_s) {
          out.back().window.end_s =
              std::max(out.back().window.end_s, w.window.end_s);
        } else {
          out.push_back(std::move(w));
        }
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.trigger_t_s != b.trigger_t_s) return a.trigger_t_s < b.trigger_t_s;
    if (a.pedestrian_id != b.pedestrian_id) {
      return a.pedestrian_id < b.pedestrian_id;
    }
    return a.vehicle_id < b.vehicle_id;
  });
  return out;
}

std::vector<TrajectorySample> ParseTrajectoryCsv(std::string_view text) {
  const auto lines = Lines(text);
  std::vector<TrajectorySample> samples;
  bool header_seen = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = Trim(lines[i]);
    const std::string where = fmt::format("line {}", i + 1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "t_s,actor_id,actor_class,x_m,y_m") {
        throw ParseError(where,
                         "expected header t_s,actor_id,actor_class,x_m,y_m");
      }
      header_seen = true;
      continue;
    }
    const auto fields = SplitCommas(line);
    if (fields.size() != 5) throw ParseError(where, "expected 5 fields");
    TrajectorySample s;
    if (!ParseDouble(fields[0], s.t_s)) throw ParseError(where, "bad t_s");
    s.actor_id = std::string(fields[1]);
    if (s.actor_id.empty()) throw ParseError(where, "empty actor_id");
    if (fields[2] == "pedestrian") {
      s.actor_class = ActorClass::kPedestrian;
    } else if (fields[2] == "vehicle") {
      s.actor_class = ActorClass::kVehicle;
    } else {
      throw ParseError(where, "actor_class must be pedestrian or vehicle");
    }
    if (!ParseDouble(fields[3], s.x_m) || !ParseDouble(fields[4], s.y_m)) {
      throw ParseError(where, "bad coordinate");
    }
    samples.push_back(std::move(s));
  }
  if (!header_seen) throw ParseError("line 1", "missing header");
  return samples;
}

std::vector<TrajectorySample> LoadTrajectoryCsv(
    const std::filesystem::path& path) {
  return ParseTrajectoryCsv(internal::ReadFile(path));
}

// ---------------------------------------------------------------------------

MotionEnergySignal MotionEnergyFromFrameDiffs(std::vector<double> frame_diffs,
                                              double sample_rate_hz) {
  if (frame_diffs.size() < 2) {
    throw Error(ErrorCode::kTooShort,
                fmt::format("motion energy needs at least 2 samples, got {}",
                            frame_diffs.size()));
  }
  if (!(sample_rate_hz > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sample rate must be positive");
  }
  for (double v : frame_diffs) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "motion energy values must be finite and non-negative");
    }
  }
  MotionEnergySignal signal;
  signal.sample_rate_hz = sample_rate_hz;
  const double mean =
      std::accumulate(frame_diffs.begin(), frame_diffs.end(), 0.0) /
      static_cast<double>(frame_diffs.size());
  signal.centered.reserve(frame_diffs.size());
  for (double v : frame_diffs) signal.centered.push_back(v - mean);
  signal.values = std::move(frame_diffs);
  return signal;
}

MotionEnergySignal ParseMotionEnergyCsv(std::string_view text) {
  const auto lines = Lines(text);
  std::optional<double> rate;
  std::vector<double> values;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = Trim(lines[i]);
    const std::string where = fmt::format("line {}", i + 1);
    if (line.empty()) continue;
    if (!rate) {
      const auto fields = SplitCommas(line);
      double r = 0.0;
      if (fields.size() != 2 || fields[0] != "sample_rate_hz" ||
          !ParseDouble(fields[1], r)) {
        throw ParseError(where, "expected header sample_rate_hz,<rate>");
      }
      rate = r;
      continue;
    }
    double v = 0.0;
    if (!ParseDouble(line, v)) throw ParseError(where, "bad value");
    values.push_back(v);
  }
  if (!rate) throw ParseError("line 1", "missing header");
  return MotionEnergyFromFrameDiffs(std::move(values), *rate);
}

MotionEnergySignal LoadMotionEnergyCsv(const std::filesystem::path& path) {
  return ParseMotionEnergyCsv(internal::ReadFile(path));
}

namespace {

// Pearson correlation of (a[n], b[n + lag]) over the overlap; nullopt when
// either side has zero variance there.
std::optional<double> LagCorrelation(const std::vector<double>& a,
                                     const std::vector<double>& b, int lag) {
  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());
  const int lo = std::max(0, -lag);
  const int hi = std::min(na, nb - lag);
  const int count = hi - lo;
  if (count < 2) return std::nullopt;
  double mean_a = 0.0, mean_b = 0.0;
  for (int n = lo; n < hi; ++n) {
    mean_a += a[n];
    mean_b += b[n + lag];
  }
  mean_a /= count;
  mean_b /= count;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (int n = lo; n < hi; ++n) {
    const double da = a[n] - mean_a;
    const double db = b[n + lag] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

bool ZeroVariance(const std::vector<double>& centered) {
  return std::all_of(centered.begin(), centered.end(),
                     [](double v) { return v == 0.0; });
}

}  // namespace

OffsetEstimate EstimateOffset(const MotionEnergySignal& a,
                              const MotionEnergySignal& b, double max_lag_s) {
  if (std::abs(a.sample_rate_hz - b.sample_rate_hz) >
      1e-9 * std::max(a.sample_rate_hz, b.sample_rate_hz)) {
    throw Error(ErrorCode::kRateMismatch,
                fmt::format("sample rates differ: {} vs {} Hz",
                            a.sample_rate_hz, b.sample_rate_hz));
  }
  if (a.values.size() < 2 || b.values.size() < 2) {
    throw Error(ErrorCode::kTooShort, "signals need at least 2 samples");
  }
  if (ZeroVariance(a.centered) || ZeroVariance(b.centered)) {
    throw Error(ErrorCode::kDegenerateSignal, "signal has zero variance");
  }
  if (!(max_lag_s >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "max_lag_s must be >= 0");
  }
  const double rate = a.sample_rate_hz;
  const int max_lag = static_cast<int>(std::floor(max_lag_s * rate + 1e-9));
  const int na = static_cast<int>(a.values.size());
  const int nb = static_cast<int>(b.values.size());
  const int overlap_pos = std::min(na, nb - max_lag);
  const int overlap_neg = std::min(na, nb + max_lag) - max_lag;
  if (overlap_pos < 2 || overlap_neg < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("max lag {} s exceeds the signal extent",
                            max_lag_s));
  }

  std::vector<std::optional<double>> corr(2 * max_lag + 1);
  for (int k = -max_lag; k <= max_lag; ++k) {
    corr[k + max_lag] = LagCorrelation(a.centered, b.centered, k);
  }
  // Search outward from zero so ties resolve to the smallest shift.
  int best = 0;
  double best_r = -2.0;
  for (int step = 0; step <= max_lag; ++step) {
    for (int k : {-step, step}) {
      const auto& r = corr[k + max_lag];
      if (r && *r > best_r) {
        best_r = *r;
        best = k;
      }
      if (step == 0) break;
    }
  }
  if (best_r < -1.5) {
    throw Error(ErrorCode::kDegenerateSignal,
                "no lag with non-zero overlap variance");
  }

  double delta = 0.0;
  if (best > -max_lag && best < max_lag) {
    const auto& left = corr[best - 1 + max_lag];
    const auto& right = corr[best + 1 + max_lag];
    if (left && right) {
      const double denom = *left - 2.0 * best_r + *right;
      if (denom < 0.0) {
        delta = std::clamp(0.5 * (*left - *right) / denom, -0.5, 0.5);
      }
    }
  }
  return {(best + delta) / rate, std::clamp(best_r, 0.0, 1.0), best};
}

MultiViewEvent BuildSynchronizedEvent(
    const std::string& event_id, const std::vector<ViewStream>& raw_views,
    const TriggerWindow& window,
    const std::map<std::string, double>& offsets_s) {
  if (raw_views.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no views to synchronize");
  }
  MultiViewEvent event;
  event.event_id = event_id;
  event.duration_s = window.window.length();
  if (!(event.duration_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "trigger window has no length");
  }
  for (std::size_t i = 0; i < raw_views.size(); ++i) {
    ViewStream view = raw_views[i];
    auto it = offsets_s.find(view.view_id);
    if (it != offsets_s.end()) {
      view.offset_s = it->second;
    } else if (i == 0) {
      view.offset_s = 0.0;
    } else {
      throw Error(ErrorCode::kMissingOffset,
                  fmt::format("no offset for view '{}'", view.view_id));
    }
    event.views.push_back(std::move(view));
  }
  return event;
}

}  // namespace pvir
