// Copyright 2026 The mclt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MCLT_ERROR_HPP
#define MCLT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace mclt {

/// Named failure categories. The CLI maps each one to a distinct exit status.
enum class ErrorCode {
  precondition = 10,
  invalid_config = 11,
  degenerate_variance = 12,
  horizon_too_short = 13,
  support_cap_exceeded = 14,
  internal = 15,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, const std::string& message,
                    ErrorCode code = ErrorCode::precondition) {
  if (!condition) throw Error(code, message);
}

}  // namespace mclt

#endif  // MCLT_ERROR_HPP
