// Copyright 2026 The mlmrc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MLMRC_TESTS_PIPELINE_UTIL_H_
#define MLMRC_TESTS_PIPELINE_UTIL_H_

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include "test_util.h"

namespace mlmrc::testing {

// Copies the bundled fixture so runs never write into the source tree.
inline std::filesystem::path CopyFixture(const std::filesystem::path& into) {
  const auto dest = into / "fixture";
  std::filesystem::copy(MLMRC_FIXTURE_DIR, dest,
                        std::filesystem::copy_options::recursive);
  return dest;
}

// Relative path -> file bytes for every regular file under `root`.
inline std::map<std::string, std::string> Snapshot(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    files[std::filesystem::relative(entry.path(), root).generic_string()] =
        ReadFile(entry.path());
  }
  return files;
}

// Runs the CLI through the shell; returns its exit status. Output goes to
// `log` when given.
inline int RunCli(const std::string& args, const std::filesystem::path& log = {}) {
  std::string cmd = std::string("'") + MLMRC_CLI_PATH + "' " + args;
  cmd += log.empty() ? " >/dev/null 2>&1" : " >'" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace mlmrc::testing

#endif  // MLMRC_TESTS_PIPELINE_UTIL_H_
