//
// Copyright 2026 The bsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef BSYNTH_STATUS_H_
#define BSYNTH_STATUS_H_

#include <string>
#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define BSYNTH_STATUS_CONCAT_INNER_(a, b) a##b
#define BSYNTH_STATUS_CONCAT_(a, b) BSYNTH_STATUS_CONCAT_INNER_(a, b)

#define BSYNTH_RETURN_IF_ERROR(expr)        \
  do {                                      \
    ::absl::Status _bsynth_status = (expr); \
    if (!_bsynth_status.ok()) {             \
      return _bsynth_status;                \
    }                                       \
  } while (0)

#define BSYNTH_ASSIGN_OR_RETURN_IMPL_(statusor, lhs, rexpr) \
  auto statusor = (rexpr);                                  \
  if (!statusor.ok()) {                                     \
    return std::move(statusor).status();                    \
  }                                                         \
  lhs = *std::move(statusor)

// Evaluates `rexpr` (an absl::StatusOr<T>) and either assigns the value to
// `lhs` or returns the error from the enclosing function.
#define BSYNTH_ASSIGN_OR_RETURN(lhs, rexpr) \
  BSYNTH_ASSIGN_OR_RETURN_IMPL_(            \
      BSYNTH_STATUS_CONCAT_(_bsynth_statusor_, __LINE__), lhs, rexpr)

namespace bsynth {

// Prefixes the message of a non-OK status with `context`.
inline absl::Status Annotate(const absl::Status& status,
                             const std::string& context) {
  if (status.ok()) return status;
  return absl::Status(status.code(),
                      context + ": " + std::string(status.message()));
}

}  // namespace bsynth

#endif  // BSYNTH_STATUS_H_
