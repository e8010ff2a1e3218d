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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "pvir/errors.h"

namespace pvir {

Tokens Tokenize(std::string_view text) {
  Tokens tokens;
  std::string current;
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (c < 0x80 && (std::isspace(c) || std::ispunct(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    current += c < 0x80 ? static_cast<char>(std::tolower(c)) : raw;
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// ---------------------------------------------------------------------------

double IntervalIou(const TimeInterval& predicted, const TimeInterval& truth) {
  const double inter = std::max(
      0.0, std::min(predicted.end_s, truth.end_s) -
               std::max(predicted.start_s, truth.start_s));
  const double uni = predicted.length() + truth.length() - inter;
  if (uni <= 0.0) return predicted == truth ? 1.0 : 0.0;
  return inter / uni;
}

PhaseMiou ComputePhaseMiou(
    const std::vector<std::optional<PhaseSegmentation>>& predictions,
    const std::vector<PhaseSegmentation>& truths) {
  if (predictions.size() != truths.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{} predictions vs {} ground-truth samples",
                            predictions.size(), truths.size()));
  }
  if (truths.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no samples to score");
  }
  PhaseMiou result;
  for (PhaseLabel phase : kAllPhases) {
    double sum = 0.0;
    std::size_t samples = 0;
    for (std::size_t k = 0; k < truths.size(); ++k) {
      const auto& gt = truths[k].get(phase);
      if (!gt) continue;
      ++samples;
      if (!predictions[k]) continue;
      const auto& pred = predictions[k]->get(phase);
      if (pred) sum += IntervalIou(*pred, *gt);
    }
    result.per_phase[PhaseIndex(phase)] =
        samples == 0 ? 0.0 : sum / static_cast<double>(samples);
  }
  result.overall = OverallMiou(result.per_phase);
  return result;
}

PhaseMiou ComputePhaseMiou(const std::vector<PhaseSegmentation>& predictions,
                           const std::vector<PhaseSegmentation>& truths) {
  std::vector<std::optional<PhaseSegmentation>> wrapped(predictions.begin(),
                                                        predictions.end());
  return ComputePhaseMiou(wrapped, truths);
}

// ---------------------------------------------------------------------------

namespace {

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts CountNgrams(const Tokens& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int j = 1; j < n; ++j) {
      key += ' ';
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double Bleu(const Tokens& candidate, const Tokens& reference, int max_n) {
  if (candidate.empty() || max_n < 1) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const NgramCounts cand = CountNgrams(candidate, n);
    const NgramCounts ref = CountNgrams(reference, n);
    int total = 0;
    int clipped = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      auto it = ref.find(gram);
      if (it != ref.end()) clipped += std::min(count, it->second);
    }
    // No shared unigram means nothing matches at any order.
    if (n == 1 && clipped == 0) return 0.0;
    double precision =
        total > 0 ? static_cast<double>(clipped) / total : 0.0;
    if (precision <= 0.0) precision = kBleuPrecisionFloor;
    log_sum += std::log(precision) / max_n;
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum);
}

double RougeL(const Tokens& candidate, const Tokens& reference, double beta) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const std::size_t m = reference.size();
  std::vector<int> prev(m + 1, 0), cur(m + 1, 0);
  for (const auto& token : candidate) {
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = token == reference[j - 1] ? prev[j - 1] + 1
                                          : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const int lcs = prev[m];
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / candidate.size();
  const double r = static_cast<double>(lcs) / reference.size();
  const double b2 = beta * beta;
  return (1.0 + b2) * r * p / (r + b2 * p);
}

// ---------------------------------------------------------------------------
// METEOR alignment search.
//
// chunks = matches - links, where a link joins candidate positions i, i+1
// mapped to reference positions j, j+1. The match count is fixed at
// sum_w min(count_c(w), count_r(w)), so the search maximises links over all
// alignments reaching that count.
//
// The exact search memoises on (candidate index, previous reference index,
// used reference positions), keeping only what can still affect the result:
// the previous index only when it could extend a chunk at i, and used flags
// only for words that occur again in the candidate. Inputs whose state space
// exceeds the budget get a greedy longest-block-first alignment instead.

namespace {

constexpr std::size_t kMeteorStateBudget = 1u << 13;

struct BudgetExceeded {};

class MeteorSearch {
 public:
  MeteorSearch(const Tokens& candidate, const Tokens& reference) {
    std::unordered_map<std::string, int> ids;
    auto id_of = [&ids](const std::string& w) {
      return ids.emplace(w, static_cast<int>(ids.size())).first->second;
    };
    for (const auto& w : candidate) cand_.push_back(id_of(w));
    for (const auto& w : reference) ref_.push_back(id_of(w));
    const std::size_t vocab = ids.size();
    std::vector<int> cand_count(vocab, 0), ref_count(vocab, 0);
    for (int w : cand_) ++cand_count[w];
    for (int w : ref_) ++ref_count[w];
    quota_.resize(vocab);
    for (std::size_t w = 0; w < vocab; ++w) {
      quota_[w] = std::min(cand_count[w], ref_count[w]);
    }
    positions_.resize(vocab);
    for (int j = 0; j < static_cast<int>(ref_.size()); ++j) {
      if (quota_[ref_[j]] > 0) positions_[ref_[j]].push_back(j);
    }
    later_.assign(cand_.size(), 0);
    last_in_cand_.assign(vocab, -1);
    std::vector<int> seen(vocab, 0);
    for (int i = static_cast<int>(cand_.size()) - 1; i >= 0; --i) {
      later_[i] = seen[cand_[i]]++;
      if (last_in_cand_[cand_[i]] < 0) last_in_cand_[cand_[i]] = i;
    }
    matched_.assign(vocab, 0);
    used_.assign(ref_.size(), false);
  }

  int total_matches() const {
    return std::accumulate(quota_.begin(), quota_.end(), 0);
  }

  // Throws BudgetExceeded.
  MeteorAlignment Exact() {
    MeteorAlignment out;
    out.matches = total_matches();
    if (out.matches == 0) return out;
    int prev = -1;
    for (int i = 0; i < static_cast<int>(cand_.size()); ++i) {
      int best_value = -1;
      int best_j = -2;  // -1 means skip
      ForEachOption(i, prev, [&](int j, int link) {
        const int value = link + Descend(i, j);
        if (value > best_value) {
          best_value = value;
          best_j = j;
        }
      });
      if (best_j >= 0) {
        Take(i, best_j);
        out.pairs.emplace_back(i, best_j);
      }
      prev = best_j;
    }
    out.chunks = CountChunks(out.pairs);
    return out;
  }

  // Repeatedly aligns the longest run of consecutive unaligned tokens common
  // to both sides (earliest candidate, then reference, position on ties).
  // Every word still reaches its quota because a run may be a single token.
  MeteorAlignment Greedy() const {
    MeteorAlignment out;
    out.matches = total_matches();
    out.exact = false;
    const int n = static_cast<int>(cand_.size());
    const int m = static_cast<int>(ref_.size());
    std::vector<bool> cand_used(n, false), ref_used(m, false);
    std::vector<int> run((n + 1) * (m + 1), 0);
    auto at = [m](int i, int j) { return i * (m + 1) + j; };
    for (int placed = 0; placed < out.matches;) {
      int best = 0, bi = -1, bj = -1;
      for (int i = n - 1; i >= 0; --i) {
        for (int j = m - 1; j >= 0; --j) {
          const bool open = !cand_used[i] && !ref_used[j] && cand_[i] == ref_[j];
          run[at(i, j)] = open ? 1 + run[at(i + 1, j + 1)] : 0;
        }
      }
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
          if (run[at(i, j)] > best) {
            best = run[at(i, j)];
            bi = i;
            bj = j;
          }
        }
      }
      if (best == 0) break;
      for (int k = 0; k < best; ++k) {
        cand_used[bi + k] = true;
        ref_used[bj + k] = true;
        out.pairs.emplace_back(bi + k, bj + k);
      }
      placed += best;
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    out.chunks = CountChunks(out.pairs);
    return out;
  }

 private:
  static int CountChunks(const std::vector<std::pair<int, int>>& pairs) {
    int links = 0;
    for (std::size_t k = 1; k < pairs.size(); ++k) {
      if (pairs[k].first == pairs[k - 1].first + 1 &&
          pairs[k].second == pairs[k - 1].second + 1) {
        ++links;
      }
    }
    return static_cast<int>(pairs.size()) - links;
  }

  // Calls fn(j, link) for each admissible move at candidate i: match to a
  // free reference position j (adjacent extension first, then ascending), or
  // skip (j = -1) when enough later occurrences remain to fill the quota.
  template <typename Fn>
  void ForEachOption(int i, int prev, Fn&& fn) {
    const int w = cand_[i];
    const int adjacent = Adjacent(i, prev);
    if (matched_[w] < quota_[w]) {
      if (adjacent >= 0) fn(adjacent, 1);
      for (int j : positions_[w]) {
        if (!used_[j] && j != adjacent) fn(j, 0);
      }
    }
    if (later_[i] >= quota_[w] - matched_[w]) fn(-1, 0);
  }

  // The free reference position right after `prev` when it holds cand_[i].
  int Adjacent(int i, int prev) const {
    const int j = prev + 1;
    if (prev < 0 || j >= static_cast<int>(ref_.size())) return -1;
    return ref_[j] == cand_[i] && !used_[j] ? j : -1;
  }

  void Take(int i, int j) {
    used_[j] = true;
    ++matched_[cand_[i]];
  }
  void Release(int i, int j) {
    used_[j] = false;
    --matched_[cand_[i]];
  }

  // Best links from i+1 onward after choosing j (or skip) at i.
  int Descend(int i, int j) {
    if (j >= 0) Take(i, j);
    const int value = Solve(i + 1, j);
    if (j >= 0) Release(i, j);
    return value;
  }

  int Solve(int i, int prev) {
    if (i == static_cast<int>(cand_.size())) return 0;
    std::string key = StateKey(i, prev);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    if (memo_.size() >= kMeteorStateBudget) throw BudgetExceeded{};
    int best = 0;
    ForEachOption(i, prev, [&](int j, int link) {
      best = std::max(best, link + Descend(i, j));
    });
    memo_.emplace(std::move(key), best);
    return best;
  }

  std::string StateKey(int i, int prev) const {
    const int adjacent = Adjacent(i, prev);
    std::string key;
    key.reserve(8 + used_.size() / 8 + 1);
    key.append(reinterpret_cast<const char*>(&i), sizeof(i));
    key.append(reinterpret_cast<const char*>(&adjacent), sizeof(adjacent));
    unsigned char byte = 0;
    int bits = 0;
    for (std::size_t j = 0; j < used_.size(); ++j) {
      if (last_in_cand_[ref_[j]] < i || quota_[ref_[j]] == 0) continue;
      if (used_[j]) byte |= static_cast<unsigned char>(1u << bits);
      if (++bits == 8) {
        key += static_cast<char>(byte);
        byte = 0;
        bits = 0;
      }
    }
    key += static_cast<char>(byte);
    return key;
  }

  std::vector<int> cand_, ref_;
  std::vector<int> quota_;
  std::vector<std::vector<int>> positions_;
  std::vector<int> later_;         // occurrences of cand_[i] after position i
  std::vector<int> last_in_cand_;  // last candidate index of each word
  std::vector<int> matched_;
  std::vector<bool> used_;
  std::unordered_map<std::string, int> memo_;
};

}  // namespace

MeteorAlignment AlignForMeteor(const Tokens& candidate,
                               const Tokens& reference) {
  MeteorSearch search(candidate, reference);
  try {
    return search.Exact();
  } catch (const BudgetExceeded&) {
    return search.Greedy();
  }
}

double Meteor(const Tokens& candidate, const Tokens& reference) {
  const MeteorAlignment alignment = AlignForMeteor(candidate, reference);
  if (alignment.matches == 0) return 0.0;
  const double um = alignment.matches;
  const double p = um / static_cast<double>(candidate.size());
  const double r = um / static_cast<double>(reference.size());
  const double f_mean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = alignment.chunks / um;
  const double penalty = 0.5 * frag * frag * frag;
  return f_mean * (1.0 - penalty);
}

// ---------------------------------------------------------------------------

namespace {

using Vector = std::unordered_map<std::string, double>;

Vector TfIdf(const NgramCounts& counts,
             const std::unordered_map<std::string, int>& doc_freq,
             double corpus_size) {
  int total = 0;
  for (const auto& [_, c] : counts) total += c;
  Vector vec;
  for (const auto& [gram, c] : counts) {
    auto it = doc_freq.find(gram);
    const double df = it == doc_freq.end() ? 1.0 : std::max(1, it->second);
    vec[gram] = static_cast<double>(c) / total * std::log(corpus_size / df);
  }
  return vec;
}

double Cosine(const Vector& a, const Vector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [gram, v] : a) {
    na += v * v;
    auto it = b.find(gram);
    if (it != b.end()) dot += v * it->second;
  }
  for (const auto& [_, v] : b) nb += v * v;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

std::vector<double> Cider(const std::vector<CiderItem>& corpus, int max_n) {
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "CIDEr needs at least one item");
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].references.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("CIDEr item {} has no references", i));
    }
  }
  const double corpus_size = static_cast<double>(corpus.size());
  std::vector<double> scores(corpus.size(), 0.0);
  for (int n = 1; n <= max_n; ++n) {
    std::vector<std::vector<NgramCounts>> ref_counts(corpus.size());
    std::unordered_map<std::string, int> doc_freq;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      std::unordered_map<std::string, bool> present;
      for (const auto& ref : corpus[i].references) {
        ref_counts[i].push_back(CountNgrams(ref, n));
        for (const auto& [gram, _] : ref_counts[i].back()) {
          present[gram] = true;
        }
      }
      for (const auto& [gram, _] : present) ++doc_freq[gram];
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const Vector cand =
          TfIdf(CountNgrams(corpus[i].candidate, n), doc_freq, corpus_size);
      double sum = 0.0;
      for (const auto& counts : ref_counts[i]) {
        sum += Cosine(cand, TfIdf(counts, doc_freq, corpus_size));
      }
      scores[i] += sum / static_cast<double>(ref_counts[i].size()) / max_n;
    }
  }
  return scores;
}

double CaptionScore(double bleu, double rouge_l, double meteor, double cider) {
  return 100.0 * (bleu + rouge_l + meteor + 0.1 * cider) / 4.0;
}

CaptionMetrics EvaluateCaptions(const std::vector<CaptionPair>& pairs) {
  CaptionMetrics m;
  m.pairs = pairs.size();
  if (pairs.empty()) return m;
  std::vector<CiderItem> corpus;
  corpus.reserve(pairs.size());
  for (const auto& pair : pairs) {
    Tokens cand = Tokenize(pair.candidate);
    Tokens ref = Tokenize(pair.reference);
    m.bleu += Bleu(cand, ref);
    m.rouge_l += RougeL(cand, ref);
    m.meteor += Meteor(cand, ref);
    corpus.push_back({std::move(cand), {std::move(ref)}});
  }
  const double n = static_cast<double>(pairs.size());
  m.bleu /= n;
  m.rouge_l /= n;
  m.meteor /= n;
  const std::vector<double> cider = Cider(corpus);
  m.cider = std::accumulate(cider.begin(), cider.end(), 0.0) / n;
  m.score = CaptionScore(m.bleu, m.rouge_l, m.meteor, m.cider);
  return m;
}

VqaScores ScoreVqa(const std::vector<std::pair<Choice, AnswerRecord>>& items) {
  if (items.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no QA items to score");
  }
  std::size_t correct = 0, valid = 0;
  for (const auto& [truth, answer] : items) {
    if (!answer.extracted) continue;
    ++valid;
    if (*answer.extracted == truth) ++correct;
  }
  const double n = static_cast<double>(items.size());
  return {100.0 * static_cast<double>(correct) / n,
          100.0 * static_cast<double>(valid) / n};
}

// ---------------------------------------------------------------------------

EvaluationSummary EvaluateRun(const std::vector<EventPrediction>& predictions,
                              const std::vector<MultiViewEvent>& events) {
  if (predictions.empty()) {
    throw Error(ErrorCode::kEmptyInput, "run has no event predictions");
  }
  std::map<std::string, const MultiViewEvent*> by_id;
  for (const auto& event : events) by_id[event.event_id] = &event;

  std::vector<std::optional<PhaseSegmentation>> seg_preds;
  std::vector<PhaseSegmentation> seg_truths;
  std::vector<CaptionPair> caption_pairs;
  std::map<QAScope, std::vector<std::pair<Choice, AnswerRecord>>> qa;

  for (const auto& pred : predictions) {
    auto it = by_id.find(pred.event_id);
    if (it == by_id.end() || !it->second->ground_truth) {
      throw Error(ErrorCode::kMissingGroundTruth,
                  fmt::format("no ground truth for event '{}'", pred.event_id));
    }
    const GroundTruth& gt = *it->second->ground_truth;
    if (gt.segmentation) {
      seg_preds.push_back(pred.segmentation);
      seg_truths.push_back(*gt.segmentation);
    }
    for (const auto& ref : gt.captions) {
      auto cand = std::find_if(
          pred.captions.begin(), pred.captions.end(), [&](const auto& c) {
            return c.phase == ref.phase && c.perspective == ref.perspective;
          });
      caption_pairs.push_back(
          {cand == pred.captions.end() ? std::string() : cand->text,
           ref.text});
    }
    for (const auto& item : gt.qa) {
      if (!item.answer) continue;
      auto ans = std::find_if(
          pred.answers.begin(), pred.answers.end(),
          [&](const auto& a) { return a.qa_id == item.qa_id; });
      qa[item.scope].emplace_back(
          *item.answer,
          ans == pred.answers.end() ? AnswerRecord{item.qa_id, "", {}, {}}
                                    : *ans);
    }
  }

  std::array<double, kPhaseCount> per_phase{};
  if (!seg_truths.empty()) {
    per_phase = ComputePhaseMiou(seg_preds, seg_truths).per_phase;
  }
  std::map<QAScope, VqaMetrics> vqa;
  for (const auto& [scope, items] : qa) {
    const VqaScores s = ScoreVqa(items);
    vqa[scope] = {s.accuracy_pct, s.valid_rate_pct, items.size()};
  }
  return EvaluationSummary(per_phase, EvaluateCaptions(caption_pairs),
                           std::move(vqa));
}

std::string RenderEvaluationTable(const EvaluationSummary& summary) {
  std::string out;
  out += "Temporal grounding (mIoU)\n";
  for (PhaseLabel phase : kAllPhases) {
    out += fmt::format("  {:<18}{:>10.4f}\n", PhaseName(phase),
                       summary.per_phase_miou()[PhaseIndex(phase)]);
  }
  out += fmt::format("  {:<18}{:>10.4f}\n", "Overall",
                     summary.overall_miou());
  const CaptionMetrics& c = summary.caption();
  out += fmt::format("\nCaptioning ({} pairs)\n", c.pairs);
  out += fmt::format("  {:<18}{:>10.4f}\n", "BLEU-4", c.bleu);
  out += fmt::format("  {:<18}{:>10.4f}\n", "METEOR", c.meteor);
  out += fmt::format("  {:<18}{:>10.4f}\n", "ROUGE-L", c.rouge_l);
  out += fmt::format("  {:<18}{:>10.4f}\n", "CIDEr", c.cider);
  out += fmt::format("  {:<18}{:>10.3f}\n", "Score", c.score);
  out += "\nQuestion answering\n";
  out += fmt::format("  {:<18}{:>10}{:>12}{:>8}\n", "Scope", "Acc (%)",
                     "Valid (%)", "N");
  for (const auto& [scope, m] : summary.vqa()) {
    out += fmt::format("  {:<18}{:>10.2f}{:>12.2f}{:>8}\n", QAScopeName(scope),
                       m.accuracy_pct, m.valid_rate_pct, m.items);
  }
  return out;
}

}  // namespace pvir
