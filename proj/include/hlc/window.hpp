// window.hpp: analysis windows shared by the FIR designer and Welch
// estimator.
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
#include <string>

#include <Eigen/Dense>

#include "hlc/common.hpp"

namespace hlc {

/// Symmetric window of the given length. Supported names: "hann",
/// "hamming", "blackman", "rect".
inline Eigen::VectorXd make_window(const std::string& name, int length) {
  if (length < 1) throw input_error("window: length must be >= 1");
  Eigen::VectorXd w(length);
  if (length == 1) {
    w[0] = 1.0;
    return w;
  }
  const double denom = static_cast<double>(length - 1);
  for (int n = 0; n < length; ++n) {
    const double t = 2.0 * kPi * static_cast<double>(n) / denom;
    if (name == "hann") {
      w[n] = 0.5 - 0.5 * std::cos(t);
    } else if (name == "hamming") {
      w[n] = 0.54 - 0.46 * std::cos(t);
    } else if (name == "blackman") {
      w[n] = 0.42 - 0.5 * std::cos(t) + 0.08 * std::cos(2.0 * t);
    } else if (name == "rect") {
      w[n] = 1.0;
    } else {
      throw input_error("window: unknown window name '" + name + "'");
    }
  }
  return w;
}

}  // namespace hlc
