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

#include "io_util.h"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "pvir/errors.h"

namespace pvir::internal {

namespace fs = std::filesystem;

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo,
                fmt::format("cannot open '{}' for reading", path.string()));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw Error(ErrorCode::kIo, fmt::format("read failed: '{}'", path.string()));
  }
  return buffer.str();
}

void WriteFileAtomic(const fs::path& path, std::string_view contents) {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw Error(ErrorCode::kIo,
                  fmt::format("cannot create '{}': {}",
                              path.parent_path().string(), ec.message()));
    }
  }
  const fs::path tmp = path.string() + fmt::format(
      ".tmp{}.{}", std::hash<std::thread::id>{}(std::this_thread::get_id()),
      counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIo,
                  fmt::format("cannot open '{}' for writing", tmp.string()));
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw Error(ErrorCode::kIo,
                  fmt::format("write failed: '{}'", tmp.string()));
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIo, fmt::format("cannot rename onto '{}'",
                                            path.string()));
  }
}

nlohmann::json ParseJsonText(std::string_view text, std::string_view source) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into line:column.
    std::size_t line = 1, column = 1;
    const std::size_t limit = std::min(e.byte == 0 ? 0 : e.byte - 1,
                                       text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(fmt::format("{}:{}:{}", source, line, column),
                     "invalid JSON");
  }
}

nlohmann::json ParseJsonFile(const fs::path& path) {
  return ParseJsonText(ReadFile(path), path.string());
}

std::string DumpCanonical(const nlohmann::json& j) {
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) +
         "\n";
}

double RoundMillis(double seconds) {
  return std::round(seconds * 1000.0) / 1000.0;
}

}  // namespace pvir::internal
