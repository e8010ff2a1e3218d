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

#ifndef PVIR_METRICS_H_
#define PVIR_METRICS_H_

// Evaluation metrics for every stage: temporal IoU / per-phase mIoU for
// segmentation, BLEU, ROUGE-L, METEOR and CIDEr for captions, the composite
// caption score, and multiple-choice accuracy with valid-choice rate.
//
// Conventions:
//  * natural logarithm everywhere;
//  * BLEU floors a zero n-gram precision at kBleuPrecisionFloor so that a
//    sentence score is always defined, except that a candidate sharing no
//    unigram with the reference scores 0;
//  * METEOR uses exact unigram matching only (no stemming or synonyms);
//  * CIDEr is the plain TF-IDF cosine form, without the CIDEr-D length
//    penalty or the x10 scaling some toolkits apply.

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pvir/core_model.h"

namespace pvir {

using Tokens = std::vector<std::string>;

// Lowercases ASCII, maps ASCII punctuation to spaces and splits on
// whitespace. Bytes >= 0x80 are kept as-is.
Tokens Tokenize(std::string_view text);

// ---------------------------------------------------------------------------
// Temporal grounding
// ---------------------------------------------------------------------------

// |p ∩ g| / |p ∪ g|. Two zero-length intervals score 1 when identical and 0
// otherwise.
double IntervalIou(const TimeInterval& predicted, const TimeInterval& truth);

struct PhaseMiou {
  std::array<double, kPhaseCount> per_phase{};
  double overall = 0.0;
};

// Index-aligned samples. A phase missing from a prediction scores 0; samples
// whose ground truth lacks a phase are left out of that phase's mean.
// Throws Error(kLengthMismatch) / Error(kEmptyInput).
PhaseMiou ComputePhaseMiou(const std::vector<PhaseSegmentation>& predictions,
                           const std::vector<PhaseSegmentation>& truths);

// Same, but a missing prediction (nullopt) scores 0 on every phase.
PhaseMiou ComputePhaseMiou(
    const std::vector<std::optional<PhaseSegmentation>>& predictions,
    const std::vector<PhaseSegmentation>& truths);

// ---------------------------------------------------------------------------
// Caption metrics (single reference)
// ---------------------------------------------------------------------------

inline constexpr double kBleuPrecisionFloor = 1e-9;

double Bleu(const Tokens& candidate, const Tokens& reference, int max_n = 4);

double RougeL(const Tokens& candidate, const Tokens& reference,
              double beta = 1.0);

struct MeteorAlignment {
  int matches = 0;  // u_m
  int chunks = 0;
  // (candidate index, reference index), sorted by candidate index.
  std::vector<std::pair<int, int>> pairs;
  // False when the input was too large for the exact search and the chunk
  // count comes from the greedy fallback (an upper bound on the optimum).
  bool exact = true;
};

// Exact-unigram alignment with the maximum number of matches and, among
// those, the fewest chunks (earliest positions on ties). Exact while the
// search fits its state budget, which covers caption-length inputs with
// moderate word repetition; beyond that a greedy longest-block-first
// alignment is used. The match count is maximal either way.
MeteorAlignment AlignForMeteor(const Tokens& candidate,
                               const Tokens& reference);

double Meteor(const Tokens& candidate, const Tokens& reference);

struct CiderItem {
  Tokens candidate;
  std::vector<Tokens> references;
};

// Per-item CIDEr over the whole corpus; IDF is computed once from the
// reference sets. Document frequency is floored at 1 so n-grams that occur
// only in candidates get IDF ln|I|. Throws Error(kEmptyCorpus) and
// Error(kInvalidArgument) for an item without references.
std::vector<double> Cider(const std::vector<CiderItem>& corpus,
                          int max_n = 4);

// 100 * (BLEU + ROUGE-L + METEOR + 0.1 * CIDEr) / 4.
double CaptionScore(double bleu, double rouge_l, double meteor, double cider);

struct CaptionPair {
  std::string candidate;
  std::string reference;
};

// Sentence-level BLEU / ROUGE-L / METEOR averaged over pairs, CIDEr over the
// corpus formed by the pairs, combined with CaptionScore. Empty input gives
// all zeros.
CaptionMetrics EvaluateCaptions(const std::vector<CaptionPair>& pairs);

// ---------------------------------------------------------------------------
// Multiple-choice QA
// ---------------------------------------------------------------------------

struct VqaScores {
  double accuracy_pct = 0.0;
  double valid_rate_pct = 0.0;
};

// An answer with no extracted choice is invalid and never correct.
// Throws Error(kEmptyInput).
VqaScores ScoreVqa(
    const std::vector<std::pair<Choice, AnswerRecord>>& items);

// ---------------------------------------------------------------------------
// Run-level evaluation
// ---------------------------------------------------------------------------

// What a pipeline run produced for one event.
struct EventPrediction {
  std::string event_id;
  std::optional<PhaseSegmentation> segmentation;  // absent: stage failed
  std::vector<CaptionRecord> captions;
  std::vector<AnswerRecord> answers;
};

// Scores predictions against the ground truth carried by `events`.
// Segmentation is scored on events with ground-truth boundaries; captions
// are paired by (phase, perspective); answers by qa_id, per scope. A ground
// truth caption or answered question with no prediction counts as an empty
// caption / invalid answer. Throws Error(kEmptyInput) for no predictions and
// Error(kMissingGroundTruth) when a prediction has no annotated event.
EvaluationSummary EvaluateRun(const std::vector<EventPrediction>& predictions,
                              const std::vector<MultiViewEvent>& events);

// Aligned plain-text rendering of a summary.
std::string RenderEvaluationTable(const EvaluationSummary& summary);

}  // namespace pvir

#endif  // PVIR_METRICS_H_
