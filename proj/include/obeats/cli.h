/*
 * Copyright 2026 The obeats Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Command-line front end. Run() takes the arguments after the program name
// and returns the process exit code: 0 on success, 2 for invalid
// configuration or input, 3 for data and file errors, 4 for internal
// invariant violations.

#ifndef OBEATS_CLI_H_
#define OBEATS_CLI_H_

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace obeats::cli {

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// OEMB file name used for a clip inside an embedding directory:
// "speech/yodas_00.wav" becomes "speech_yodas_00.oemb".
std::string EmbeddingFileName(const std::string& clip_path);

}  // namespace obeats::cli

#endif  // OBEATS_CLI_H_
