// gain_curve.hpp: long-term linear magnitude gain over a frequency grid.
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

#include <Eigen/Dense>

#include "hlc/common.hpp"

namespace hlc {

struct GainCurve {
  Eigen::VectorXd freqs;  // Hz
  Eigen::VectorXd gains;  // linear magnitude, >= 0

  void validate() const {
    if (freqs.size() != gains.size())
      throw input_error("gain curve: freqs/gains length mismatch");
    for (int i = 0; i < gains.size(); ++i) {
      if (!std::isfinite(gains[i]) || gains[i] < 0.0)
        throw input_error("gain curve: gains must be finite and >= 0");
    }
  }
};

}  // namespace hlc
