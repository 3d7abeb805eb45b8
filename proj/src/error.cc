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

#include "obeats/error.h"

namespace obeats {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension:
      return "dimension error";
    case ErrorKind::kIndex:
      return "index error";
    case ErrorKind::kConfig:
      return "configuration error";
    case ErrorKind::kValidation:
      return "validation error";
    case ErrorKind::kContract:
      return "contract error";
    case ErrorKind::kFormat:
      return "format error";
    case ErrorKind::kData:
      return "data error";
    case ErrorKind::kDataInsufficient:
      return "data-insufficiency error";
    case ErrorKind::kCapacity:
      return "capacity error";
    case ErrorKind::kClipTooShort:
      return "clip-too-short error";
    case ErrorKind::kEmptyPool:
      return "empty-pool error";
    case ErrorKind::kEmptyInput:
      return "empty-input error";
    case ErrorKind::kDownsampleNotSupported:
      return "downsample-not-supported error";
    case ErrorKind::kIncompatibleCheckpoint:
      return "incompatible-checkpoint error";
    case ErrorKind::kCorruption:
      return "corruption error";
    case ErrorKind::kIo:
      return "io error";
    case ErrorKind::kInvariant:
      return "invariant violation";
  }
  return "error";
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension:
    case ErrorKind::kIndex:
    case ErrorKind::kConfig:
    case ErrorKind::kValidation:
    case ErrorKind::kDownsampleNotSupported:
    case ErrorKind::kEmptyInput:
      return 2;
    case ErrorKind::kFormat:
    case ErrorKind::kData:
    case ErrorKind::kDataInsufficient:
    case ErrorKind::kCapacity:
    case ErrorKind::kClipTooShort:
    case ErrorKind::kEmptyPool:
    case ErrorKind::kIncompatibleCheckpoint:
    case ErrorKind::kCorruption:
    case ErrorKind::kIo:
      return 3;
    case ErrorKind::kContract:
    case ErrorKind::kInvariant:
      return 4;
  }
  return 4;
}

}  // namespace obeats
