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

#include "mclt/error.hpp"

namespace mclt {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::invalid_config: return "invalid_config";
    case ErrorCode::degenerate_variance: return "degenerate_variance";
    case ErrorCode::horizon_too_short: return "horizon_too_short";
    case ErrorCode::support_cap_exceeded: return "support_cap_exceeded";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

}  // namespace mclt
