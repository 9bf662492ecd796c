// Copyright 2026 The gom-l2o Authors.
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

#ifndef GOML2O_COMMON_HPP
#define GOML2O_COMMON_HPP

#include <stdexcept>
#include <string>

namespace goml2o {

inline constexpr const char* kToolName = "gom-l2o";
inline constexpr const char* kToolVersion = "0.1.0";

// Misuse of an API or CLI (bad arguments, missing files, malformed config).
// Maps to process exit code 1.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// A numeric failure (non-finite value, non-convergence, domain violation).
// Maps to process exit code 2.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Formats a double so that parsing the text recovers the exact same bits.
// Used for every value written to CSV so reruns are byte-identical.
std::string format_double(double v);

}  // namespace goml2o

#endif  // GOML2O_COMMON_HPP
