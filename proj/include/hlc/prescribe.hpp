// prescribe.hpp: conventional linear prescriptions: NAL-R insertion gain and
// the half-gain audiogram transform.
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
#include <vector>

#include <Eigen/Dense>

#include "hlc/common.hpp"
#include "hlc/gain_curve.hpp"
#include "hlc/model.hpp"

namespace hlc {

/// Linear insertion gain at standard audiometric frequencies, in dB.
struct PrescriptionGain {
  Eigen::VectorXd freqs;
  Eigen::VectorXd insertion_gain_db;

  void validate() const {
    if (freqs.size() != insertion_gain_db.size() || freqs.size() == 0)
      throw input_error("prescription: bad shape");
    for (int i = 0; i < freqs.size(); ++i) {
      if (!(freqs[i] > 0.0)) throw input_error("prescription: bad frequency");
      if (!std::isfinite(insertion_gain_db[i]) || insertion_gain_db[i] < 0.0)
        throw input_error("prescription: gains must be finite and >= 0");
    }
  }
};

/// The per-frequency additive constants k(f) of the NAL-R rule. Shipped as a
/// data file (see data/nalr_constants.csv) whose checksum is pinned at build
/// time; the values come from Byrne & Dillon (1986).
struct NalrConstants {
  std::vector<double> freqs_hz;
  std::vector<double> k_db;

  void validate() const {
    if (freqs_hz.size() != k_db.size() || freqs_hz.empty())
      throw input_error("NAL-R constants: bad table");
    double prev = 0.0;
    for (double f : freqs_hz) {
      if (f <= prev)
        throw input_error("NAL-R constants: frequencies must increase");
      prev = f;
    }
  }
};

/// NAL-R linear insertion gain:
///   X = 0.05 (HL500 + HL1000 + HL2000),  IG(f) = X + 0.31 HL(f) + k(f),
/// clamped to 0 dB from below. The audiogram's measured range must reach the
/// 500-2000 Hz region; flat extrapolation covers the rest.
inline PrescriptionGain nalr_gain(const Audiogram& a,
                                  const NalrConstants& constants) {
  a.validate();
  constants.validate();
  if (a.max_freq() < 500.0 || a.min_freq() > 2000.0)
    throw input_error(
        "nalr_gain: audiogram does not cover the 500-2000 Hz region");
  const double x3 =
      0.05 * (a.hl_at(500.0) + a.hl_at(1000.0) + a.hl_at(2000.0));
  const int n = static_cast<int>(constants.freqs_hz.size());
  PrescriptionGain p;
  p.freqs.resize(n);
  p.insertion_gain_db.resize(n);
  for (int i = 0; i < n; ++i) {
    const double f = constants.freqs_hz[static_cast<std::size_t>(i)];
    const double ig =
        x3 + 0.31 * a.hl_at(f) + constants.k_db[static_cast<std::size_t>(i)];
    p.freqs[i] = f;
    p.insertion_gain_db[i] = std::max(ig, 0.0);
  }
  return p;
}

/// The pilot adjustment: halve every hearing level.
inline Audiogram half_gain(const Audiogram& a) {
  a.validate();
  Audiogram out = a;
  for (auto& pt : out.points) pt.hl_db *= 0.5;
  return out;
}

/// Resample a prescription onto a frequency grid as linear magnitude: dB
/// values are interpolated linearly in log-frequency with flat extrapolation.
inline GainCurve prescription_to_gaincurve(const PrescriptionGain& p,
                                           const Eigen::VectorXd& grid) {
  p.validate();
  if (grid.size() == 0) throw input_error("prescription_to_gaincurve: empty grid");
  auto db_at = [&p](double f) -> double {
    const int n = static_cast<int>(p.freqs.size());
    if (f <= p.freqs[0]) return p.insertion_gain_db[0];
    if (f >= p.freqs[n - 1]) return p.insertion_gain_db[n - 1];
    for (int i = 1; i < n; ++i) {
      if (f <= p.freqs[i]) {
        const double t =
            std::log(f / p.freqs[i - 1]) / std::log(p.freqs[i] / p.freqs[i - 1]);
        return p.insertion_gain_db[i - 1] +
               t * (p.insertion_gain_db[i] - p.insertion_gain_db[i - 1]);
      }
    }
    return p.insertion_gain_db[n - 1];
  };
  GainCurve curve;
  curve.freqs = grid;
  curve.gains.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i]))
      throw input_error("prescription_to_gaincurve: bad grid frequency");
    curve.gains[i] = db_to_linear(db_at(grid[i]));
  }
  return curve;
}

}  // namespace hlc
