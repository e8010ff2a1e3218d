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

#include "pvir/metrics.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "oracle/metric_oracle.h"
#include "pvir/errors.h"
#include "pvir/ingest.h"
#include "support/test_support.h"

namespace pvir {
namespace {

using testing::RandomSentence;
using testing::Segmentation;

Tokens T(std::initializer_list<const char*> words) {
  return Tokens(words.begin(), words.end());
}

TEST(TokenizeTest, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(Tokenize("The cat sat."), T({"the", "cat", "sat"}));
  EXPECT_TRUE(Tokenize("").empty());
  EXPECT_EQ(Tokenize("a,b  c"), T({"a", "b", "c"}));
  EXPECT_EQ(Tokenize("  Don't\tSTOP!\n"), T({"don", "t", "stop"}));
}

TEST(IntervalIouTest, Examples) {
  EXPECT_NEAR(IntervalIou({2, 6}, {4, 8}), 1.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(IntervalIou({2, 6}, {2, 6}), 1.0);
  EXPECT_DOUBLE_EQ(IntervalIou({0, 1}, {2, 3}), 0.0);
  EXPECT_DOUBLE_EQ(IntervalIou({1, 1}, {1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(IntervalIou({1, 1}, {2, 2}), 0.0);
}

TEST(IntervalIouTest, SymmetricAndOneOnlyWhenIdentical) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 500; ++i) {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    const TimeInterval p{std::min(a, b), std::max(a, b)};
    const TimeInterval g{std::min(c, d), std::max(c, d)};
    EXPECT_DOUBLE_EQ(IntervalIou(p, g), IntervalIou(g, p));
    if (!(p == g)) EXPECT_LT(IntervalIou(p, g), 1.0);
  }
}

TEST(IntervalIouTest, MatchesSweepOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    if (i % 10 == 0) c = a;  // shared endpoints
    const TimeInterval p{std::min(a, b), std::max(a, b)};
    const TimeInterval g{std::min(c, d), std::max(c, d)};
    EXPECT_NEAR(IntervalIou(p, g),
                oracle::IntervalIou(p.start_s, p.end_s, g.start_s, g.end_s),
                1e-9);
  }
}

TEST(PhaseMiouTest, IdentityGivesOne) {
  std::vector<PhaseSegmentation> segs;
  for (int k = 0; k < 10; ++k) {
    std::map<PhaseLabel, TimeInterval> raw;
    for (PhaseLabel p : kAllPhases) {
      raw[p] = {k + PhaseIndex(p) * 2.0, k + PhaseIndex(p) * 2.0 + 1.5};
    }
    segs.push_back(Segmentation(raw, 30.0));
  }
  const PhaseMiou m = ComputePhaseMiou(segs, segs);
  for (double v : m.per_phase) EXPECT_DOUBLE_EQ(v, 1.0);
  EXPECT_DOUBLE_EQ(m.overall, 1.0);
}

TEST(PhaseMiouTest, ReportedPerPhaseValuesAverageToOverall) {
  const std::array<double, kPhaseCount> per_phase = {0.7887, 0.5091, 0.3662,
                                                     0.4208, 0.3559};
  EXPECT_NEAR(OverallMiou(per_phase), 0.4881, 1e-4);
}

TEST(PhaseMiouTest, MissingPredictionScoresZero) {
  std::map<PhaseLabel, TimeInterval> raw;
  for (PhaseLabel p : kAllPhases) raw[p] = {1.0 * PhaseIndex(p), 1.0 + PhaseIndex(p)};
  const PhaseSegmentation truth = Segmentation(raw, 10.0);
  const PhaseSegmentation empty = Segmentation({}, 10.0);
  const PhaseMiou m = ComputePhaseMiou(std::vector<PhaseSegmentation>{truth, empty},
                                       std::vector<PhaseSegmentation>{truth, truth});
  for (double v : m.per_phase) EXPECT_DOUBLE_EQ(v, 0.5);

  std::vector<std::optional<PhaseSegmentation>> preds = {std::nullopt};
  EXPECT_DOUBLE_EQ(ComputePhaseMiou(preds, {truth}).overall, 0.0);
}

TEST(PhaseMiouTest, LengthMismatchThrows) {
  const PhaseSegmentation s = Segmentation({}, 10.0);
  try {
    ComputePhaseMiou(std::vector<PhaseSegmentation>{s, s},
                     std::vector<PhaseSegmentation>{s});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
}

TEST(PhaseMiouTest, PermutationInvariantAndMeanOfSamples) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  auto random_seg = [&] {
    std::map<PhaseLabel, TimeInterval> raw;
    for (PhaseLabel p : kAllPhases) {
      if (u(rng) < 2.0) continue;
      const double a = u(rng), b = u(rng);
      raw[p] = {std::min(a, b), std::max(a, b)};
    }
    return Segmentation(raw, 20.0);
  };
  std::vector<PhaseSegmentation> preds, truths;
  for (int k = 0; k < 12; ++k) {
    preds.push_back(random_seg());
    truths.push_back(Segmentation(
        {{PhaseLabel::kPreRecognition, {0, 2}},
         {PhaseLabel::kRecognition, {2, 5}},
         {PhaseLabel::kJudgment, {5, 9}},
         {PhaseLabel::kAction, {9, 14}},
         {PhaseLabel::kAvoidance, {14, 20}}},
        20.0));
  }
  const PhaseMiou base = ComputePhaseMiou(preds, truths);

  std::vector<int> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<PhaseSegmentation> p2, t2;
  for (int i : order) {
    p2.push_back(preds[i]);
    t2.push_back(truths[i]);
  }
  const PhaseMiou shuffled = ComputePhaseMiou(p2, t2);
  for (int j = 0; j < kPhaseCount; ++j) {
    EXPECT_NEAR(base.per_phase[j], shuffled.per_phase[j], 1e-12);
    double sum = 0.0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
      const auto& p = preds[k].get(*PhaseFromIndex(j));
      if (p) sum += IntervalIou(*p, *truths[k].get(*PhaseFromIndex(j)));
    }
    EXPECT_NEAR(base.per_phase[j], sum / preds.size(), 1e-12);
  }
}

// ---------------------------------------------------------------------------

TEST(BleuTest, IdentityIsOne) {
  EXPECT_DOUBLE_EQ(Bleu(T({"a", "b", "c", "d"}), T({"a", "b", "c", "d"})),
                   1.0);
}

TEST(BleuTest, NoSharedFourGramsIsBoundedByTheFloor) {
  const Tokens c = T({"the", "cat", "sat", "on", "mat"});
  const Tokens r = T({"the", "cat", "sat", "by", "mat"});
  EXPECT_LE(Bleu(c, r), std::exp(0.25 * std::log(1e-9)));
  EXPECT_GT(Bleu(c, r), 0.0);
}

TEST(BleuTest, NoSharedUnigramIsExactlyZero) {
  EXPECT_EQ(Bleu(T({"a", "b", "c", "d"}), T({"e", "f", "g", "h"})), 0.0);
  EXPECT_EQ(Bleu(T({"a"}), T({"b", "c"})), 0.0);
  // One shared unigram is enough to fall back to the floor.
  EXPECT_GT(Bleu(T({"a", "x"}), T({"a", "y"})), 0.0);
}

TEST(BleuTest, EmptyCandidateIsZero) {
  EXPECT_DOUBLE_EQ(Bleu({}, T({"a"})), 0.0);
}

TEST(BleuTest, BrevityPenaltyForShortCandidates) {
  // Candidate is a prefix: every precision is 1, only BP applies.
  const Tokens r = T({"a", "b", "c", "d", "e", "f", "g", "h"});
  const Tokens c = T({"a", "b", "c", "d"});
  EXPECT_NEAR(Bleu(c, r), std::exp(1.0 - 8.0 / 4.0), 1e-12);
}

TEST(RougeLTest, Examples) {
  EXPECT_NEAR(RougeL(T({"the", "cat"}), T({"the", "cat", "sat"})), 0.8,
              1e-12);
  EXPECT_DOUBLE_EQ(RougeL(T({"x", "y"}), T({"x", "y"})), 1.0);
  EXPECT_DOUBLE_EQ(RougeL(T({"x", "y"}), T({"p", "q"})), 0.0);
  EXPECT_DOUBLE_EQ(RougeL({}, T({"p"})), 0.0);
}

TEST(MeteorTest, IdenticalFourTokens) {
  const Tokens s = T({"a", "b", "c", "d"});
  const MeteorAlignment al = AlignForMeteor(s, s);
  EXPECT_EQ(al.matches, 4);
  EXPECT_EQ(al.chunks, 1);
  EXPECT_DOUBLE_EQ(Meteor(s, s), 0.9921875);
}

TEST(MeteorTest, NoCommonUnigramsIsZero) {
  EXPECT_DOUBLE_EQ(Meteor(T({"a", "b"}), T({"c", "d"})), 0.0);
}

TEST(MeteorTest, SwappedTokensUseMinimalChunks) {
  const Tokens c = T({"a", "c", "b"});
  const Tokens r = T({"a", "b", "c"});
  const MeteorAlignment al = AlignForMeteor(c, r);
  const oracle::MeteorResult o = oracle::Meteor(c, r);
  EXPECT_EQ(al.matches, 3);
  EXPECT_EQ(al.chunks, o.chunks);
  EXPECT_EQ(al.chunks, 3);
  EXPECT_NEAR(Meteor(c, r), o.score, 1e-12);
}

TEST(MeteorTest, RepeatedTokensPreferContiguousAlignment) {
  // "the" occurs twice; aligning the second "the" to the second reference
  // "the" keeps "the mat" in one chunk.
  const Tokens c = T({"the", "cat", "on", "the", "mat"});
  const Tokens r = T({"the", "mat", "and", "the", "cat"});
  const MeteorAlignment al = AlignForMeteor(c, r);
  const oracle::MeteorResult o = oracle::Meteor(c, r);
  EXPECT_EQ(al.matches, o.matches);
  EXPECT_EQ(al.chunks, o.chunks);
  EXPECT_EQ(al.chunks, 2);
}

void ExpectConsistent(const Tokens& c, const Tokens& r,
                      const MeteorAlignment& al) {
  std::map<std::string, int> cc, rc;
  for (const auto& w : c) ++cc[w];
  for (const auto& w : r) ++rc[w];
  int quota = 0;
  for (const auto& [w, n] : cc) quota += std::min(n, rc[w]);
  EXPECT_EQ(al.matches, quota);
  ASSERT_EQ(static_cast<int>(al.pairs.size()), al.matches);
  std::set<int> used;
  int links = 0;
  for (std::size_t k = 0; k < al.pairs.size(); ++k) {
    const auto [ci, ri] = al.pairs[k];
    EXPECT_EQ(c[ci], r[ri]);
    EXPECT_TRUE(used.insert(ri).second);
    if (k > 0) {
      EXPECT_LT(al.pairs[k - 1].first, ci);
      if (al.pairs[k - 1].first + 1 == ci && al.pairs[k - 1].second + 1 == ri) {
        ++links;
      }
    }
  }
  EXPECT_EQ(al.chunks, al.matches - links);
}

TEST(MeteorTest, AlignmentPairsAreConsistent) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Tokens c = RandomSentence(rng, 4, 8);
    const Tokens r = RandomSentence(rng, 4, 8);
    const MeteorAlignment al = AlignForMeteor(c, r);
    EXPECT_TRUE(al.exact);
    ExpectConsistent(c, r, al);
  }
}

TEST(MeteorTest, CaptionLengthInputIsExact) {
  const Tokens c = Tokenize(
      "The pedestrian is standing behind the vehicle and is looking at the "
      "smartphone while the vehicle starts to reverse.");
  const Tokens r = Tokenize(
      "A pedestrian stands behind the car looking at a phone as the car "
      "begins reversing toward the pedestrian.");
  const MeteorAlignment al = AlignForMeteor(c, r);
  EXPECT_TRUE(al.exact);
  ExpectConsistent(c, r, al);
}

TEST(MeteorTest, LargeRepetitiveInputFallsBackWithMaximalMatches) {
  std::mt19937_64 rng(6);
  int fallbacks = 0;
  for (int i = 0; i < 20; ++i) {
    const Tokens c = RandomSentence(rng, 6, 200, 60);
    const Tokens r = RandomSentence(rng, 6, 200, 60);
    const MeteorAlignment al = AlignForMeteor(c, r);
    if (!al.exact) ++fallbacks;
    ExpectConsistent(c, r, al);
    EXPECT_GE(al.chunks, 1);
  }
  EXPECT_GT(fallbacks, 0);
}

TEST(MeteorTest, FallbackKeepsLongCommonBlocksWhole) {
  std::mt19937_64 rng(7);
  const Tokens block = RandomSentence(rng, 5, 300, 300);
  const MeteorAlignment same = AlignForMeteor(block, block);
  EXPECT_FALSE(same.exact);
  EXPECT_EQ(same.chunks, 1);
  // Two halves swapped: two chunks.
  Tokens swapped(block.begin() + 150, block.end());
  swapped.insert(swapped.end(), block.begin(), block.begin() + 150);
  const MeteorAlignment two = AlignForMeteor(swapped, block);
  ExpectConsistent(swapped, block, two);
  EXPECT_EQ(two.chunks, 2);
}

TEST(CiderTest, SingleItemCorpusIsZero) {
  const std::vector<double> s = Cider({{T({"a", "b"}), {T({"a", "b"})}}});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0], 0.0);
}

TEST(CiderTest, EmptyCorpusThrows) {
  try {
    Cider({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCorpus);
  }
}

TEST(CiderTest, DisjointVocabulariesMatchOracleAndAreMaximal) {
  const std::vector<CiderItem> corpus = {
      {T({"a", "b", "c", "d", "e"}), {T({"a", "b", "c", "d", "e"})}},
      {T({"v", "w", "x", "y", "z"}), {T({"v", "w", "x", "y", "z"})}},
  };
  const std::vector<double> s = Cider(corpus);
  const std::vector<double> o = oracle::Cider(
      {{corpus[0].candidate, corpus[0].references},
       {corpus[1].candidate, corpus[1].references}});
  ASSERT_EQ(s.size(), 2u);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(s[i], o[i], 1e-12);
    EXPECT_NEAR(s[i], 1.0, 1e-12);  // cosine 1 for every n
  }
}

TEST(CiderTest, NoSharedNgramsIsZero) {
  const std::vector<double> s =
      Cider({{T({"a", "b"}), {T({"c", "d"})}}, {T({"e"}), {T({"f"})}}});
  EXPECT_DOUBLE_EQ(s[0], 0.0);
}

TEST(CiderTest, InvariantUnderItemRelabeling) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CiderItem> corpus;
    const int n = 2 + trial % 5;
    for (int i = 0; i < n; ++i) {
      corpus.push_back({RandomSentence(rng, 6, 8, 1),
                        {RandomSentence(rng, 6, 8, 1),
                         RandomSentence(rng, 6, 8, 1)}});
    }
    const std::vector<double> base = Cider(corpus);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<CiderItem> permuted;
    for (int i : order) permuted.push_back(corpus[i]);
    // Reference order inside an item and token order inside a reference do
    // not change document frequencies either.
    std::reverse(permuted[0].references.begin(), permuted[0].references.end());
    const std::vector<double> after = Cider(permuted);
    for (int k = 0; k < n; ++k) EXPECT_NEAR(after[k], base[order[k]], 1e-12);
  }
}

TEST(CaptionScoreTest, ReportedRows) {
  // (BLEU-4, ROUGE-L, METEOR, CIDEr) -> reported score.
  struct Row {
    double bleu, rouge, meteor, cider, score, tolerance;
  };
  const Row rows[] = {
      {0.292, 0.513, 0.486, 0.315, 33.063, 0.01},
      {0.276, 0.494, 0.469, 0.273, 31.667, 0.05},
      {0.308, 0.532, 0.503, 0.357, 34.462, 0.05},
      {0.243, 0.439, 0.451, 0.692, 30.03, 0.05},
      {0.221, 0.426, 0.419, 0.867, 28.81, 0.05},
  };
  for (const Row& r : rows) {
    EXPECT_NEAR(CaptionScore(r.bleu, r.rouge, r.meteor, r.cider), r.score,
                r.tolerance);
  }
  EXPECT_DOUBLE_EQ(CaptionScore(0, 0, 0, 0), 0.0);
}

TEST(CaptionScoreTest, AffineInCider) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const double b = u(rng), r = u(rng), m = u(rng), c = u(rng);
    EXPECT_NEAR(CaptionScore(b, r, m, 2 * c) - CaptionScore(b, r, m, c),
                100.0 * 0.1 * c / 4.0, 1e-9);
  }
}

TEST(MetricBoundsTest, SentenceMetricsStayInUnitInterval) {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 300; ++i) {
    const Tokens c = RandomSentence(rng, 5, 8);
    const Tokens r = RandomSentence(rng, 5, 8);
    for (double v : {Bleu(c, r), RougeL(c, r), Meteor(c, r)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

// Randomized equivalence with the brute-force oracles.
class MetricOracleTest : public ::testing::TestWithParam<int> {};

TEST_P(MetricOracleTest, SentenceMetricsMatch) {
  std::mt19937_64 rng(1000 + GetParam());
  for (int i = 0; i < 20; ++i) {
    const int vocab = 2 + (i % 6);
    const Tokens c = RandomSentence(rng, vocab, 8);
    const Tokens r = RandomSentence(rng, vocab, 8);
    EXPECT_NEAR(Bleu(c, r), oracle::Bleu(c, r), 1e-9);
    EXPECT_NEAR(RougeL(c, r), oracle::RougeL(c, r), 1e-9);
    const MeteorAlignment al = AlignForMeteor(c, r);
    const oracle::MeteorResult o = oracle::Meteor(c, r);
    EXPECT_EQ(al.matches, o.matches);
    EXPECT_EQ(al.chunks, o.chunks);
    EXPECT_NEAR(Meteor(c, r), o.score, 1e-9);
  }
}

TEST_P(MetricOracleTest, CiderMatches) {
  std::mt19937_64 rng(2000 + GetParam());
  for (int i = 0; i < 5; ++i) {
    std::uniform_int_distribution<int> items(1, 6), refs(1, 3);
    std::vector<CiderItem> corpus;
    std::vector<oracle::CorpusItem> copy;
    const int n = items(rng);
    for (int k = 0; k < n; ++k) {
      CiderItem item{RandomSentence(rng, 6, 8), {}};
      const int m = refs(rng);
      for (int j = 0; j < m; ++j) item.references.push_back(RandomSentence(rng, 6, 8));
      copy.push_back({item.candidate, item.references});
      corpus.push_back(std::move(item));
    }
    const auto got = Cider(corpus);
    const auto want = oracle::Cider(copy);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_NEAR(got[k], want[k], 1e-9);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, MetricOracleTest, ::testing::Range(0, 10));

// ---------------------------------------------------------------------------

AnswerRecord Answer(std::optional<Choice> c) {
  return AnswerRecord{"q", "", c, {}};
}

TEST(VqaTest, Examples) {
  const VqaScores all = ScoreVqa({{Choice::kA, Answer(Choice::kA)},
                                  {Choice::kB, Answer(Choice::kB)}});
  EXPECT_DOUBLE_EQ(all.accuracy_pct, 100.0);
  EXPECT_DOUBLE_EQ(all.valid_rate_pct, 100.0);

  const VqaScores mixed = ScoreVqa({{Choice::kA, Answer(Choice::kA)},
                                    {Choice::kB, Answer(Choice::kB)},
                                    {Choice::kC, Answer(Choice::kD)},
                                    {Choice::kD, Answer(std::nullopt)}});
  EXPECT_DOUBLE_EQ(mixed.accuracy_pct, 50.0);
  EXPECT_DOUBLE_EQ(mixed.valid_rate_pct, 75.0);

  const VqaScores none = ScoreVqa({{Choice::kA, Answer(std::nullopt)}});
  EXPECT_DOUBLE_EQ(none.accuracy_pct, 0.0);
  EXPECT_DOUBLE_EQ(none.valid_rate_pct, 0.0);
}

TEST(VqaTest, EmptyThrows) {
  try {
    ScoreVqa({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
}

// ---------------------------------------------------------------------------

MultiViewEvent IdentityEvent() {
  MultiViewEvent e;
  e.event_id = "e";
  e.duration_s = 10.0;
  e.views = {{"o", ViewKind::kOverhead, "o.mp4", std::nullopt, 0.0}};
  GroundTruth gt;
  gt.segmentation = Segmentation({{PhaseLabel::kPreRecognition, {0, 2}},
                                  {PhaseLabel::kRecognition, {2, 4}},
                                  {PhaseLabel::kJudgment, {4, 6}},
                                  {PhaseLabel::kAction, {6, 8}},
                                  {PhaseLabel::kAvoidance, {8, 10}}},
                                 10.0);
  gt.captions = {{PhaseLabel::kAction, Perspective::kPedestrian,
                  "the pedestrian steps into the road", {}}};
  QAItem q;
  q.qa_id = "q1";
  q.answer = Choice::kB;
  gt.qa = {q};
  e.ground_truth = gt;
  return e;
}

TEST(EvaluateRunTest, IdentityRun) {
  const MultiViewEvent e = IdentityEvent();
  EventPrediction p{e.event_id, e.ground_truth->segmentation,
                    e.ground_truth->captions,
                    {AnswerRecord{"q1", "b", Choice::kB, {}}}};
  const EvaluationSummary s = EvaluateRun({p}, {e});
  EXPECT_DOUBLE_EQ(s.overall_miou(), 1.0);
  EXPECT_DOUBLE_EQ(s.caption().bleu, 1.0);
  EXPECT_DOUBLE_EQ(s.caption().rouge_l, 1.0);
  EXPECT_DOUBLE_EQ(s.vqa().at(QAScope::kEnvironment).accuracy_pct, 100.0);
}

TEST(EvaluateRunTest, EmptyRunAndMissingGroundTruth) {
  try {
    EvaluateRun({}, {IdentityEvent()});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
  try {
    EvaluateRun({EventPrediction{"other", {}, {}, {}}}, {IdentityEvent()});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingGroundTruth);
  }
}

// Frozen values from tests/oracle/evaluate_run_oracle.py.
TEST(EvaluateRunTest, MatchesScriptedOracleOnFiveEvents) {
  const nlohmann::json doc = nlohmann::json::parse(testing::ReadFile(
      std::filesystem::path(PVIR_ORACLE_FIXTURE_DIR) / "evaluate_run.json"));
  std::vector<MultiViewEvent> events;
  for (const auto& j : doc.at("events")) events.push_back(EventFromJson(j));
  ASSERT_EQ(events.size(), 5u);

  std::vector<EventPrediction> preds;
  for (std::size_t i = 0; i < doc.at("predictions").size(); ++i) {
    const auto& j = doc.at("predictions")[i];
    EventPrediction p;
    p.event_id = j.at("event_id").get<std::string>();
    if (j.contains("phases")) {
      std::map<PhaseLabel, TimeInterval> raw;
      for (const auto& ph : j.at("phases")) {
        raw[*PhaseFromIndex(ph.at("phase").get<int>())] = {
            ph.at("start_s").get<double>(), ph.at("end_s").get<double>()};
      }
      p.segmentation = ValidateSegmentation(raw, events[i].duration_s);
    }
    for (const auto& c : j.at("captions")) {
      p.captions.push_back(CaptionFromJson(c, "caption"));
    }
    for (const auto& a : j.at("answers")) p.answers.push_back(AnswerFromJson(a));
    preds.push_back(std::move(p));
  }

  const EvaluationSummary s = EvaluateRun(preds, events);
  const auto& want = doc.at("expected");
  for (int k = 0; k < kPhaseCount; ++k) {
    EXPECT_NEAR(s.per_phase_miou()[k],
                want.at("per_phase_miou")[k].get<double>(), 1e-9);
  }
  EXPECT_NEAR(s.overall_miou(), want.at("overall_miou").get<double>(), 1e-9);
  const auto& cap = want.at("caption");
  EXPECT_NEAR(s.caption().bleu, cap.at("bleu").get<double>(), 1e-9);
  EXPECT_NEAR(s.caption().rouge_l, cap.at("rouge_l").get<double>(), 1e-9);
  EXPECT_NEAR(s.caption().meteor, cap.at("meteor").get<double>(), 1e-9);
  EXPECT_NEAR(s.caption().cider, cap.at("cider").get<double>(), 1e-9);
  EXPECT_NEAR(s.caption().score, cap.at("score").get<double>(), 1e-7);
  EXPECT_EQ(s.caption().pairs, cap.at("pairs").get<std::size_t>());
  ASSERT_EQ(s.vqa().size(), want.at("vqa").size());
  for (const auto& [scope, m] : s.vqa()) {
    const auto& w = want.at("vqa").at(std::string(QAScopeName(scope)));
    EXPECT_NEAR(m.accuracy_pct, w.at("accuracy_pct").get<double>(), 1e-9);
    EXPECT_NEAR(m.valid_rate_pct, w.at("valid_rate_pct").get<double>(), 1e-9);
    EXPECT_EQ(m.items, w.at("items").get<std::size_t>());
  }
}

TEST(RenderEvaluationTableTest, ListsEveryPhaseAndScope) {
  const MultiViewEvent e = IdentityEvent();
  EventPrediction p{e.event_id, e.ground_truth->segmentation,
                    e.ground_truth->captions, {}};
  const std::string table = RenderEvaluationTable(EvaluateRun({p}, {e}));
  for (PhaseLabel phase : kAllPhases) {
    EXPECT_NE(table.find(PhaseName(phase)), std::string::npos);
  }
  EXPECT_NE(table.find("environment"), std::string::npos);
  EXPECT_NE(table.find("Overall"), std::string::npos);
}

}  // namespace
}  // namespace pvir
