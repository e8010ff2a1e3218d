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

#ifndef PVIR_TESTS_ORACLE_METRIC_ORACLE_H_
#define PVIR_TESTS_ORACLE_METRIC_ORACLE_H_

// Deliberately naive reference implementations of the caption and interval
// metrics. They share no code with the library and favour obviousness over
// speed: n-grams are compared as token vectors, LCS is plain recursion, and
// METEOR enumerates every one-to-one alignment.

#include <string>
#include <vector>

namespace pvir::oracle {

using Sentence = std::vector<std::string>;

double Bleu(const Sentence& candidate, const Sentence& reference);
double RougeL(const Sentence& candidate, const Sentence& reference);

struct MeteorResult {
  int matches = 0;
  int chunks = 0;
  double score = 0.0;
};
MeteorResult Meteor(const Sentence& candidate, const Sentence& reference);

struct CorpusItem {
  Sentence candidate;
  std::vector<Sentence> references;
};
std::vector<double> Cider(const std::vector<CorpusItem>& corpus);

// Sweep over the sorted endpoints.
double IntervalIou(double p_start, double p_end, double g_start, double g_end);

}  // namespace pvir::oracle

#endif  // PVIR_TESTS_ORACLE_METRIC_ORACLE_H_
