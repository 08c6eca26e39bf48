// Copyright 2026 The dpaudit Authors
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

#ifndef DPAUDIT_COMMON_HPP_
#define DPAUDIT_COMMON_HPP_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dpaudit {

// Error taxonomy. ConfigError: the caller asked for something structurally
// invalid (bad dimensions, inconsistent budgets, head/loss mismatch).
// InputError: a data value is out of range. TrainingError: an optimization
// run produced a non-finite state.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// FNV-1a, used for release hashes and the run-directory manifest.
inline std::uint64_t Fnv1a64(const void* data, std::size_t len,
                             std::uint64_t state = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    state ^= p[i];
    state *= 1099511628211ull;
  }
  return state;
}

inline std::uint64_t Fnv1a64(const std::string& s) {
  return Fnv1a64(s.data(), s.size());
}

}  // namespace dpaudit

#endif  // DPAUDIT_COMMON_HPP_
