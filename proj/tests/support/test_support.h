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

#ifndef PVIR_TESTS_SUPPORT_TEST_SUPPORT_H_
#define PVIR_TESTS_SUPPORT_TEST_SUPPORT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "pvir/backend.h"
#include "pvir/core_model.h"

namespace pvir::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// Replies with `replies` in order regardless of the request; the last reply
// repeats once the list is exhausted. Requests are kept for inspection.
class SequenceBackend : public Backend {
 public:
  explicit SequenceBackend(std::vector<std::string> replies)
      : replies_(std::move(replies)) {}
  GenerateResponse Generate(const GenerateRequest& request) override;
  std::vector<GenerateRequest> requests() const;
  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> replies_;
  std::vector<GenerateRequest> requests_;
};

std::vector<std::string> RandomSentence(std::mt19937_64& rng,
                                        int vocabulary, int max_len,
                                        int min_len = 0);

PhaseSegmentation Segmentation(
    const std::map<PhaseLabel, TimeInterval>& phases, double duration_s);

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, const std::string& text);

// Relative path -> bytes for every regular file below `root`.
std::map<std::string, std::string> SnapshotTree(
    const std::filesystem::path& root);

}  // namespace pvir::testing

#endif  // PVIR_TESTS_SUPPORT_TEST_SUPPORT_H_
