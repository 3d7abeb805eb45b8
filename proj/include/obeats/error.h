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

#ifndef OBEATS_ERROR_H_
#define OBEATS_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace obeats {

// Every failure raised by the library carries one of these kinds. The CLI
// maps them onto its exit-code contract (see ExitCodeFor).
enum class ErrorKind {
  kDimension,
  kIndex,
  kConfig,
  kValidation,
  kContract,
  kFormat,
  kData,
  kDataInsufficient,
  kCapacity,
  kClipTooShort,
  kEmptyPool,
  kEmptyInput,
  kDownsampleNotSupported,
  kIncompatibleCheckpoint,
  kCorruption,
  kIo,
  kInvariant,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// 2 = configuration/validation, 3 = data, 4 = internal invariant.
int ExitCodeFor(ErrorKind kind);

namespace internal {

inline void Append(std::ostringstream&) {}

template <typename T, typename... Rest>
void Append(std::ostringstream& os, const T& first, const Rest&... rest) {
  os << first;
  Append(os, rest...);
}

}  // namespace internal

template <typename... Args>
[[noreturn]] void Fail(ErrorKind kind, const Args&... args) {
  std::ostringstream os;
  internal::Append(os, args...);
  throw Error(kind, os.str());
}

}  // namespace obeats

#endif  // OBEATS_ERROR_H_
