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

// pvir-sample: writes the demonstration dataset, fixtures and config.

#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pvir/errors.h"
#include "sample/sample_scenario.h"

int main(int argc, char** argv) {
  CLI::App app{"Write the sample dataset with recorded mock fixtures"};
  std::string dir;
  pvir::sample::SampleOptions options;
  bool single = false;
  app.add_option("dir", dir, "Output directory")->required();
  app.add_flag("--single", single, "Only the collision event");
  app.add_option("--unparseable", options.unparseable_grounding,
                 "Event ids whose grounding reply has no timestamps");
  CLI11_PARSE(app, argc, argv);
  options.include_crossing_event = !single;
  try {
    const auto layout = pvir::sample::WriteSampleDataset(dir, options);
    fmt::print("{}\n", layout.config.string());
  } catch (const std::exception& e) {
    fmt::print(stderr, "pvir-sample: {}\n", e.what());
    return 2;
  }
  return 0;
}
