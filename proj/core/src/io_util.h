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

#ifndef PVIR_SRC_IO_UTIL_H_
#define PVIR_SRC_IO_UTIL_H_

// File helpers shared by the ingest, backend and pipeline sources.

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace pvir::internal {

// Throws Error(kIo).
std::string ReadFile(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over `path`. Parent
// directories are created. Throws Error(kIo).
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents);

// Throws Error(kIo) or ParseError with "line:column" location.
nlohmann::json ParseJsonText(std::string_view text, std::string_view source);
nlohmann::json ParseJsonFile(const std::filesystem::path& path);

// Canonical output: sorted keys, 2-space indent, trailing newline.
std::string DumpCanonical(const nlohmann::json& j);

// Rounds to millisecond precision.
double RoundMillis(double seconds);

}  // namespace pvir::internal

#endif  // PVIR_SRC_IO_UTIL_H_
