// common.hpp: shared constants and error types for the hlc library.
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

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace hlc {

inline constexpr double kPi = 3.14159265358979323846;

/// Bad data passed by the caller (shapes, ranges, malformed files).
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent or unusable configuration.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A computation that cannot proceed numerically (singular system, stall).
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 20.0); }

inline double linear_to_db(double gain) { return 20.0 * std::log10(gain); }

}  // namespace hlc
